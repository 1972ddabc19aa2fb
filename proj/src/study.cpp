#include "poolcast/study.hpp"

#include "poolcast/error.hpp"
#include "poolcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace poolcast::study {

namespace {

struct Reference {
    const char* name;
    double value;
    double se;
};

// Estimates with standard errors at J = 500; the acceptance band is 3 SE.
constexpr Reference kEstimates[] = {
    {"TLP w_1", 0.212, 0.083}, {"TLP w_2", 0.254, 0.084}, {"TLP w_3", 0.534, 0.080},
    {"SLP w_1", 0.257, 0.060}, {"SLP w_2", 0.283, 0.061}, {"SLP w_3", 0.460, 0.059},
    {"SLP c", 0.783, 0.030},   {"BLP w_1", 0.256, 0.057}, {"BLP w_2", 0.293, 0.057},
    {"BLP w_3", 0.451, 0.054}, {"BLP alpha", 1.492, 0.062}, {"BLP beta", 1.440, 0.059},
};

constexpr double kPitVar[] = {0.081, 0.086, 0.085, 0.066, 0.081, 0.084};
constexpr double kRmv[] = {1.79, 1.79, 1.73, 1.94, 1.62, 1.57};
constexpr double kTrainScore[] = {-2.025, -2.017, -1.956, -1.907, -1.871, -1.865};
constexpr double kTestScore[] = {-2.018, -2.022, -1.992, -1.922, -1.892, -1.886};
constexpr const char* kRowNames[] = {"f1", "f2", "f3", "TLP", "SLP", "BLP"};

constexpr double kPitVarBand = 0.010;
constexpr double kRmvBand = 0.10;
constexpr double kScoreBand = 0.025;

Check make_check(std::string name, double obtained, double reference, double band) {
    return Check{std::move(name), obtained, reference, band, std::fabs(obtained - reference) <= band};
}

std::vector<double> estimates_in_table_order(const StudyReport& r) {
    const auto& t = std::get<pools::Tlp>(r.tlp.spec);
    const auto& s = std::get<pools::Slp>(r.slp.spec);
    const auto& b = std::get<pools::Blp>(r.blp.spec);
    return {t.w[0], t.w[1], t.w[2], s.w[0], s.w[1], s.w[2], s.c, b.w[0], b.w[1], b.w[2], b.alpha, b.beta};
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::string estimate_cell(double value, std::optional<double> se) {
    std::string s = fmt("%.3f", value);
    if (se) s += " (" + fmt("%.3f", *se) + ")";
    return s;
}

}  // namespace

std::uint64_t test_seed_for(std::uint64_t seed) noexcept { return mix64(seed ^ 0x5445535453455421ULL); }

StudyReport run_sim_study(std::uint64_t seed, std::size_t J, const sim::Regression& dgp) {
    StudyReport r;
    r.seed = seed;
    r.test_seed = test_seed_for(seed);
    r.J = J;
    r.dgp = dgp;
    r.small_sample_warning = J < 500;

    const auto train = sim::simulate(sim::DgpConfig{dgp, J, seed});
    const auto test = sim::simulate(sim::DgpConfig{dgp, J, r.test_seed});

    r.tlp = fit::fit_tlp(train.cases);
    r.slp = fit::fit_slp(train.cases);
    r.blp = fit::fit_blp(train.cases);

    for (std::size_t i = 0; i < 3; ++i) {
        auto& row = r.rows[i];
        row.name = kRowNames[i];
        row.train_log_score = fit::evaluate_component(train.cases, i, seed).mean_log_score;
        row.test = fit::evaluate_component(test.cases, i, r.test_seed);
    }
    const fit::FitResult* fits[] = {&r.tlp, &r.slp, &r.blp};
    for (std::size_t m = 0; m < 3; ++m) {
        auto& row = r.rows[3 + m];
        row.name = kRowNames[3 + m];
        row.train_log_score = fits[m]->mean_log_score_train;
        row.test = fit::evaluate(fits[m]->spec, test.cases, r.test_seed);
    }

    const auto est = estimates_in_table_order(r);
    for (std::size_t i = 0; i < est.size(); ++i) {
        r.estimate_checks.push_back(make_check(kEstimates[i].name, est[i], kEstimates[i].value, 3.0 * kEstimates[i].se));
    }
    for (std::size_t i = 3; i < 6; ++i) {
        r.dispersion_checks.push_back(
            make_check(std::string(kRowNames[i]) + " var(PIT)", r.rows[i].test.pit_variance, kPitVar[i], kPitVarBand));
    }
    for (std::size_t i = 3; i < 6; ++i) {
        r.dispersion_checks.push_back(
            make_check(std::string(kRowNames[i]) + " RMV", r.rows[i].test.rmv, kRmv[i], kRmvBand));
    }
    for (std::size_t i : {2, 3, 4, 5}) {
        r.score_checks.push_back(make_check(std::string(kRowNames[i]) + " test log score",
                                            r.rows[i].test.mean_log_score, kTestScore[i], kScoreBand));
    }

    const double best_component = std::max({r.rows[0].test.mean_log_score, r.rows[1].test.mean_log_score,
                                            r.rows[2].test.mean_log_score});
    const double tlp = r.rows[3].test.mean_log_score;
    const double slp = r.rows[4].test.mean_log_score;
    const double blp = r.rows[5].test.mean_log_score;
    r.ordering_pass = blp >= slp && slp > tlp && tlp > best_component;

    auto all = [](const std::vector<Check>& v) {
        return std::all_of(v.begin(), v.end(), [](const Check& c) { return c.pass; });
    };
    r.all_pass = all(r.estimate_checks) && all(r.dispersion_checks) && all(r.score_checks) && r.ordering_pass;
    return r;
}

std::string format_report(const StudyReport& r) {
    std::ostringstream os;
    os << "simulation study: regression model a1=" << fmt("%g", r.dgp.a1) << " a2=" << fmt("%g", r.dgp.a2)
       << " a3=" << fmt("%g", r.dgp.a3) << ", J=" << r.J << ", seed=" << r.seed << ", test seed=" << r.test_seed
       << "\n";
    if (r.small_sample_warning) {
        os << "WARNING: J=" << r.J << " is below 500; reference bands assume J=500 and uncertainty is wider\n";
    }

    os << "\nestimates (standard errors)\n";
    os << "method  w_1             w_2             w_3             c               "
          "alpha           beta\n";
    const fit::FitResult* fits[] = {&r.tlp, &r.slp, &r.blp};
    const char* names[] = {"TLP", "SLP", "BLP"};
    for (std::size_t m = 0; m < 3; ++m) {
        const auto& f = *fits[m];
        const auto& w = pool_weights(f.spec);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%-8s", names[m]);
        os << buf;
        for (std::size_t i = 0; i < w.size(); ++i) {
            std::optional<double> se;
            if (f.std_errors && i < f.std_errors->w.size()) se = f.std_errors->w[i];
            std::snprintf(buf, sizeof buf, "%-16s", estimate_cell(w[i], se).c_str());
            os << buf;
        }
        std::string c = "---", a = "---", b = "---";
        if (const auto* s = std::get_if<pools::Slp>(&f.spec)) {
            c = estimate_cell(s->c, f.std_errors ? f.std_errors->c : std::nullopt);
        }
        if (const auto* bl = std::get_if<pools::Blp>(&f.spec)) {
            a = estimate_cell(bl->alpha, f.std_errors ? f.std_errors->alpha : std::nullopt);
            b = estimate_cell(bl->beta, f.std_errors ? f.std_errors->beta : std::nullopt);
        }
        std::snprintf(buf, sizeof buf, "%-16s", c.c_str());
        os << buf;
        std::snprintf(buf, sizeof buf, "%-16s", a.c_str());
        os << buf << b << "\n";
    }

    os << "\ntest set dispersion and sharpness, mean log scores (reference values in brackets)\n";
    os << "        var(PIT)         class                 RMV            train score        test score\n";
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        char buf[200];
        std::snprintf(buf, sizeof buf, "%-8s%.3f (%.3f)    %-22s%.2f (%.2f)    %.3f (%.3f)    %.3f (%.3f)\n",
                      row.name.c_str(), row.test.pit_variance, kPitVar[i],
                      std::string(pit::to_string(row.test.dispersion.classification)).c_str(), row.test.rmv, kRmv[i],
                      row.train_log_score, kTrainScore[i], row.test.mean_log_score, kTestScore[i]);
        os << buf;
    }

    auto print_checks = [&os](const char* title, const std::vector<Check>& checks) {
        os << "\n" << title << "\n";
        for (const auto& c : checks) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "  %-4s %-20s obtained %9.4f  reference %9.4f  band %.4f\n",
                          c.pass ? "PASS" : "FAIL", c.name.c_str(), c.obtained, c.reference, c.band);
            os << buf;
        }
    };
    print_checks("estimate checks (3 SE)", r.estimate_checks);
    print_checks("dispersion and sharpness checks", r.dispersion_checks);
    print_checks("log score checks", r.score_checks);
    os << "\n  " << (r.ordering_pass ? "PASS" : "FAIL") << " ordering BLP >= SLP > TLP > best component\n";
    os << "\noverall: " << (r.all_pass ? "PASS" : "FAIL") << "\n";
    return os.str();
}

}  // namespace poolcast::study
