#include "poolcast/error.hpp"
#include "poolcast/fitting.hpp"
#include "poolcast/io.hpp"
#include "poolcast/pit.hpp"
#include "poolcast/sim.hpp"
#include "poolcast/study.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace poolcast;

namespace {

enum Exit { kOk = 0, kNumerical = 1, kInput = 2 };

struct Options {
    std::string method;
    std::string link;
    std::string input;
    std::string params;
    std::string out;
    std::uint64_t seed = 1;
    std::size_t bins = 10;
    std::size_t n = 500;
    std::string dgp = "regression";
    double a1 = 1.0;
    double a2 = 1.0;
    double a3 = 1.1;
    double sigma = 1.0;
};

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw Error(ErrorCode::InvalidArgument, std::string(flag) + " is required");
    if (!fs::exists(path)) throw Error(ErrorCode::IoError, "input '" + path + "' does not exist");
}

sim::DgpKind make_dgp(const Options& o) {
    if (o.dgp == "regression") return sim::Regression{o.a1, o.a2, o.a3};
    if (o.dgp == "fsigma") return sim::FSigma{o.sigma};
    if (o.dgp == "binary-probit") return sim::BinaryProbit{o.sigma, o.sigma};
    if (o.dgp == "gbr-quartet") return sim::GbrQuartet{};
    if (o.dgp == "ternary") return sim::TernaryFixture{};
    throw Error(ErrorCode::InvalidConfig, "unknown dgp '" + o.dgp + "'");
}

std::string resolve_method(const Options& o) {
    if (o.method == "glp") {
        if (o.link.empty()) throw Error(ErrorCode::InvalidArgument, "--method glp needs --link");
        return "glp-" + o.link;
    }
    if (o.method.empty()) throw Error(ErrorCode::InvalidArgument, "--method is required");
    return o.method;
}

int cmd_simulate(const Options& o) {
    if (o.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    const sim::DgpConfig config{make_dgp(o), o.n, o.seed};
    sim::validate(config);
    const auto data = sim::simulate(config);
    io::atomic_write(o.out, io::format_simulation_csv(data));
    const auto latents = io::sibling(o.out, "_latents.csv");
    io::atomic_write(latents, io::format_latents_csv(data));
    std::cout << "wrote " << data.cases.size() << " cases of " << sim::dgp_name(config.kind) << " to " << o.out
              << " (latents in " << latents.string() << ")\n";
    return kOk;
}

int cmd_fit(const Options& o) {
    require_file(o.input, "--input");
    const auto method = resolve_method(o);
    const auto data = io::read_gaussian_csv(o.input);
    const auto result = fit::fit_method(data, method);
    const auto record = io::to_record(result);
    if (!o.out.empty()) io::atomic_write(o.out, io::format_params(record));
    std::cout << io::format_estimate_table(record);
    if (result.flat_direction) std::cout << "note: the objective is flat in some direction at the optimum\n";
    return kOk;
}

int cmd_evaluate(const Options& o) {
    require_file(o.params, "--params");
    require_file(o.input, "--input");
    const auto record = io::parse_params(io::read_file(o.params));
    const auto data = io::read_gaussian_csv(o.input);
    io::EvaluationOutput out{pool_method(record.spec), data.size(), o.seed,
                             fit::evaluate(record.spec, data, o.seed, o.bins)};
    const auto json = io::format_evaluation_json(out);
    if (!o.out.empty()) {
        io::atomic_write(o.out, json);
        io::atomic_write(io::sibling(o.out, "_histogram.csv"), io::format_histogram_csv(out.report.histogram));
        io::atomic_write(io::sibling(o.out, "_histogram.svg"),
                         io::histogram_svg(out.report.histogram, "PIT histogram, " + out.method));
    }
    std::cout << json;
    return kOk;
}

void print_calibration(const std::string& name, const std::vector<PredictiveDist>& forecasts,
                       const std::vector<double>& y, const Options& o) {
    const auto sample = pit::pit_sample(forecasts, y, o.seed);
    const auto grid = pit::range_grid(y, 201);
    const auto cal = pit::calibration_report(forecasts, y, sample, grid, o.bins);
    const auto disp = pit::dispersion_report(sample);
    const double threshold = sim::marginal_gap_threshold(y.size());
    std::printf("%-10s KS %.4f (p=%.4f) %s  var(PIT) %.4f +- %.4f %s  marginal gap %.4f (band %.4f) %s\n",
                name.c_str(), cal.ks_statistic, cal.ks_p_value, cal.ks_p_value >= 0.01 ? "pass" : "fail",
                disp.pit_variance, disp.ci_halfwidth, std::string(pit::to_string(disp.classification)).c_str(),
                cal.marginal_gap, threshold, cal.marginal_gap <= threshold ? "pass" : "fail");
    if (!o.out.empty()) {
        io::atomic_write(io::sibling(o.out, "_" + name + "_histogram.csv"), io::format_histogram_csv(cal.histogram));
    }
}

int cmd_diagnose(const Options& o) {
    require_file(o.input, "--input");
    const auto text = io::read_file(o.input);
    switch (io::detect_schema(text)) {
        case io::Schema::Binary: {
            const auto table = io::parse_binary_csv(text);
            for (std::size_t i = 0; i < table.p.size(); ++i) {
                const auto check = sim::check_binary_forecast(table.p[i], table.y, o.seed, o.bins);
                std::printf("p_%zu KS %.4f (p=%.4f) %s  reliability max|z| %.3f (critical %.3f) %s  mean log score %.4f\n",
                            i + 1, check.ks_statistic, check.ks_p_value, check.ks_accept ? "pass" : "fail",
                            check.reliability_max_z, check.reliability_critical,
                            check.reliability_accept ? "pass" : "fail", check.mean_log_score);
                if (!o.out.empty()) {
                    io::atomic_write(io::sibling(o.out, "_p_" + std::to_string(i + 1) + "_reliability.csv"),
                                     io::format_reliability_csv(check.bins));
                }
            }
            return kOk;
        }
        case io::Schema::Gaussian: {
            const auto data = io::parse_gaussian_csv(text);
            std::vector<double> y;
            for (const auto& c : data) y.push_back(c.y);
            const std::size_t k = fit::component_count(data);
            for (std::size_t i = 0; i < k; ++i) {
                std::vector<PredictiveDist> f;
                for (const auto& c : data) f.push_back(c.components[i]);
                print_calibration("f" + std::to_string(i + 1), f, y, o);
            }
            if (!o.params.empty()) {
                require_file(o.params, "--params");
                const auto record = io::parse_params(io::read_file(o.params));
                std::vector<PredictiveDist> f;
                for (const auto& c : data) f.push_back(pool(record.spec, c.components));
                print_calibration(pool_method(record.spec), f, y, o);
            }
            return kOk;
        }
        case io::Schema::Unknown: break;
    }
    throw Error(ErrorCode::SchemaError, "header has neither 'mu_1' nor 'p_1'");
}

int cmd_study(const Options& o) {
    if (o.n < 10) throw Error(ErrorCode::InvalidArgument, "--n must be at least 10");
    const auto report = study::run_sim_study(o.seed, o.n, sim::Regression{o.a1, o.a2, o.a3});
    const auto text = study::format_report(report);
    if (!o.out.empty()) io::atomic_write(o.out, text);
    std::cout << text;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forecast combination: simulate, fit, evaluate and diagnose pooled predictive distributions"};
    app.require_subcommand(1);
    Options o;

    auto* simulate = app.add_subcommand("simulate", "Simulate forecast cases from a data generating process");
    simulate->add_option("--dgp", o.dgp, "regression, fsigma, binary-probit, gbr-quartet or ternary")
        ->check(CLI::IsMember({"regression", "fsigma", "binary-probit", "gbr-quartet", "ternary"}));
    simulate->add_option("--n", o.n, "Number of cases");
    simulate->add_option("--seed", o.seed, "Random seed");
    simulate->add_option("--a1", o.a1, "Regression coefficient a1");
    simulate->add_option("--a2", o.a2, "Regression coefficient a2");
    simulate->add_option("--a3", o.a3, "Regression coefficient a3");
    simulate->add_option("--sigma", o.sigma, "Forecast scale (fsigma) or signal scale (binary-probit)");
    simulate->add_option("--out", o.out, "Output CSV")->required();

    auto* fitcmd = app.add_subcommand("fit", "Fit a combination formula by maximizing the mean log score");
    fitcmd->add_option("--method", o.method, "tlp, slp, blp, glp-<link> or glp with --link")->required();
    fitcmd->add_option("--link", o.link, "Link for glp: identity, reciprocal, log or probit");
    fitcmd->add_option("--input", o.input, "Training CSV")->required();
    fitcmd->add_option("--out", o.out, "Parameter record");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate fitted parameters on a test CSV");
    evaluate->add_option("--params", o.params, "Parameter record")->required();
    evaluate->add_option("--input", o.input, "Test CSV")->required();
    evaluate->add_option("--out", o.out, "Report JSON; histogram CSV and SVG are written next to it");
    evaluate->add_option("--seed", o.seed, "Seed of the PIT randomization");
    evaluate->add_option("--bins", o.bins, "Histogram bins")->check(CLI::PositiveNumber);

    auto* diagnose = app.add_subcommand("diagnose", "Calibration diagnostics for components and an optional pool");
    diagnose->add_option("--input", o.input, "Gaussian or binary CSV")->required();
    diagnose->add_option("--params", o.params, "Parameter record of a pool to diagnose");
    diagnose->add_option("--out", o.out, "Prefix path for histogram or reliability CSVs");
    diagnose->add_option("--seed", o.seed, "Seed of the PIT randomization");
    diagnose->add_option("--bins", o.bins, "Histogram or reliability bins")->check(CLI::PositiveNumber);

    auto* study_cmd = app.add_subcommand("reproduce-sim-study", "Regression simulation study with reference comparisons");
    study_cmd->add_option("--seed", o.seed, "Training seed; the test seed is derived from it");
    study_cmd->add_option("--n", o.n, "Training and test sample size J");
    study_cmd->add_option("--a1", o.a1, "Regression coefficient a1");
    study_cmd->add_option("--a2", o.a2, "Regression coefficient a2");
    study_cmd->add_option("--a3", o.a3, "Regression coefficient a3");
    study_cmd->add_option("--out", o.out, "Report file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInput;
    }

    try {
        if (*simulate) return cmd_simulate(o);
        if (*fitcmd) return cmd_fit(o);
        if (*evaluate) return cmd_evaluate(o);
        if (*diagnose) return cmd_diagnose(o);
        if (*study_cmd) return cmd_study(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_input_error() ? kInput : kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kInput;
}
