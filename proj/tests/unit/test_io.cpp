#include "poolcast/error.hpp"
#include "poolcast/fitting.hpp"
#include "poolcast/io.hpp"
#include "poolcast/sim.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

using namespace poolcast;
namespace fs = std::filesystem;

namespace {

std::string schema_message(std::string_view text) {
    try {
        (void)io::parse_gaussian_csv(text);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SchemaError);
        return e.what();
    }
    FAIL("expected SchemaError");
    return {};
}

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / ("poolcast_io_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("Gaussian CSV round trip keeps every bit") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    fit::Dataset data;
    for (int j = 0; j < 200; ++j) {
        const double scale = std::pow(10.0, 40.0 * u(rng));
        data.push_back({{PredictiveDist::gaussian(scale * u(rng), scale * (1.5 + u(rng))),
                         PredictiveDist::gaussian(u(rng) / 3.0, 1e-300 + std::fabs(u(rng)))},
                        scale * u(rng)});
    }
    const auto back = io::parse_gaussian_csv(io::format_gaussian_csv(data));
    REQUIRE(back.size() == data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        CHECK(back[j].y == data[j].y);
        for (std::size_t i = 0; i < 2; ++i) {
            const auto& a = std::get<dist::Gaussian>(data[j].components[i].kind());
            const auto& b = std::get<dist::Gaussian>(back[j].components[i].kind());
            CHECK(a.mu == b.mu);
            CHECK(a.sigma == b.sigma);
        }
    }
}

TEST_CASE("Gaussian CSV parsing") {
    const auto data = io::parse_gaussian_csv("# comment line\n"
                                             "sd_1,y,mu_1\n"
                                             "\n"
                                             "2,0.5,1\n"
                                             "  # indented comment\n"
                                             "1e-1,+3,-2.5\n");
    REQUIRE(data.size() == 2);
    CHECK(data[0].y == 0.5);
    CHECK(data[0].components[0].mean() == 1.0);
    CHECK(data[0].components[0].variance() == 4.0);
    CHECK(data[1].y == 3.0);
    CHECK(data[1].components[0].mean() == -2.5);

    const auto windows = io::parse_gaussian_csv("y,mu_1,sd_1\r\n1,2,3\r\n");
    CHECK(windows.size() == 1);
}

TEST_CASE("Gaussian CSV schema errors name the column and line") {
    CHECK(schema_message("y,mu_1,sd_1,mu_2\n1,2,3,4\n").find("missing column 'sd_2'") != std::string::npos);
    CHECK(schema_message("mu_1,sd_1\n1,2\n").find("missing column 'y'") != std::string::npos);
    const auto bad = schema_message("y,mu_1,sd_1\n1,2,3\n1,abc,3\n");
    CHECK(bad.find("line 3") != std::string::npos);
    CHECK(bad.find("column 'mu_1'") != std::string::npos);
    CHECK(schema_message("y,mu_1,sd_1\n1,2\n").find("line 2") != std::string::npos);
    CHECK(schema_message("y,mu_1,sd_1\n1,2,-3\n").find("sd_1") != std::string::npos);
    CHECK(schema_message("y,mu_1,sd_1\n1,2,nan\n").find("sd_1") != std::string::npos);
    CHECK(schema_message("y,mu_1,sd_1,extra\n1,2,3,4\n").find("extra") != std::string::npos);
    CHECK(schema_message("y,y,mu_1,sd_1\n1,1,2,3\n").find("duplicate") != std::string::npos);
    try {
        (void)io::parse_gaussian_csv("y,mu_1,sd_1\n# nothing\n");
        FAIL("expected EmptyInput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyInput);
    }
}

TEST_CASE("binary CSV") {
    const auto t = io::parse_binary_csv("y,p_1,p_2\n0,0.25,0.5\n1,0.75,1\n");
    REQUIRE(t.y.size() == 2);
    CHECK(t.y[1] == 1);
    CHECK(t.p[0][1] == 0.75);
    CHECK(t.p[1][0] == 0.5);
    const auto back = io::parse_binary_csv(io::format_binary_csv(t));
    CHECK(back.y == t.y);
    CHECK(back.p == t.p);
    CHECK_THROWS_AS(io::parse_binary_csv("y,p_1\n2,0.5\n"), Error);
    CHECK_THROWS_AS(io::parse_binary_csv("y,p_1\n1,1.5\n"), Error);
    CHECK(io::detect_schema("y,p_1\n") == io::Schema::Binary);
    CHECK(io::detect_schema("# c\ny,mu_1,sd_1\n") == io::Schema::Gaussian);
    CHECK(io::detect_schema("a,b\n") == io::Schema::Unknown);
}

TEST_CASE("simulation output schemas") {
    const auto reg = sim::simulate({sim::Regression{}, 5, 1});
    CHECK(io::format_simulation_csv(reg).rfind("y,mu_1,sd_1,mu_2,sd_2,mu_3,sd_3\n", 0) == 0);
    CHECK(io::format_latents_csv(reg).rfind("y,x0,x1,x2,x3,eps\n", 0) == 0);
    const auto bin = sim::simulate({sim::BinaryProbit{}, 5, 1});
    const auto text = io::format_simulation_csv(bin);
    CHECK(text.rfind("y,p_1,p_2\n", 0) == 0);
    const auto t = io::parse_binary_csv(text);
    for (std::size_t j = 0; j < 5; ++j) CHECK(t.p[0][j] == bin.cases[j].components[0].cdf(0.0));
    CHECK(io::format_simulation_csv(sim::simulate({sim::TernaryFixture{}, 5, 1})).rfind("y\n", 0) == 0);
}

TEST_CASE("parameter record round trip") {
    const auto data = io::read_gaussian_csv(POOLCAST_TEST_DATA "/regression60.csv");
    for (const char* method : {"tlp", "slp", "blp", "glp-log", "glp-reciprocal", "glp-probit"}) {
        CAPTURE(method);
        const auto fitted = fit::fit_method(data, method);
        const auto rec = io::to_record(fitted);
        const auto text = io::format_params(rec);
        const auto back = io::parse_params(text);
        CHECK(pool_method(back.spec) == method);
        const auto wa = pool_weights(rec.spec);
        const auto wb = pool_weights(back.spec);
        REQUIRE(wa.size() == wb.size());
        for (std::size_t i = 0; i < wa.size(); ++i) CHECK(std::fabs(wa[i] - wb[i]) <= 1e-15);
        if (const auto* s = std::get_if<pools::Slp>(&rec.spec)) CHECK(std::get<pools::Slp>(back.spec).c == s->c);
        if (const auto* b = std::get_if<pools::Blp>(&rec.spec)) {
            CHECK(std::get<pools::Blp>(back.spec).alpha == b->alpha);
            CHECK(std::get<pools::Blp>(back.spec).beta == b->beta);
        }
        CHECK(back.converged == rec.converged);
        CHECK(back.iterations == rec.iterations);
        CHECK(back.mean_log_score == rec.mean_log_score);
        CHECK(back.std_errors.has_value() == rec.std_errors.has_value());
        // Writing the parsed record again reproduces the file.
        CHECK(io::format_params(back) == text);
    }
}

TEST_CASE("parameter record layout and errors") {
    io::ParamRecord rec;
    rec.spec = pools::Blp{{0.25, 0.75}, 1.5, 0.5};
    rec.std_errors = fit::StdErrors{{0.1, 0.1}, std::nullopt, 0.2, 0.3};
    rec.converged = true;
    rec.iterations = 7;
    rec.mean_log_score = -1.25;
    const auto j = nlohmann::json::parse(io::format_params(rec));
    CHECK(j["method"] == "blp");
    CHECK(j["k"] == 2);
    CHECK(j["w_2"] == 0.75);
    CHECK(j["alpha"] == 1.5);
    CHECK(j["se_beta"] == 0.3);
    CHECK_FALSE(j.contains("c"));
    CHECK(j["converged"] == true);

    auto code_of = [](const std::string& text) {
        try {
            (void)io::parse_params(text);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    CHECK(code_of(R"({"k": 2, "w_1": 0.5, "w_2": 0.5})") == ErrorCode::SchemaError);
    CHECK(code_of(R"({"method": "tlp", "k": 2, "w_1": 0.5})") == ErrorCode::SchemaError);
    CHECK(code_of(R"({"method": "slp", "k": 1, "w_1": 1})") == ErrorCode::SchemaError);
    CHECK(code_of(R"({"method": "tlp", "k": 2, "w_1": "x", "w_2": 0.5})") == ErrorCode::SchemaError);
    CHECK(code_of("not json") == ErrorCode::SchemaError);
    CHECK(code_of(R"({"method": "tlp", "k": 2, "w_1": 0.9, "w_2": 0.5})") == ErrorCode::WeightConstraintViolation);
}

TEST_CASE("estimate table and evaluation output") {
    io::ParamRecord rec;
    rec.spec = pools::Slp{{0.4, 0.6}, 0.8};
    rec.std_errors = fit::StdErrors{{0.05, 0.05}, 0.02, std::nullopt, std::nullopt};
    const auto table = io::format_estimate_table(rec);
    CHECK(table.find("w_1") != std::string::npos);
    CHECK(table.find("0.8") != std::string::npos);
    CHECK(table.find("0.02") != std::string::npos);

    io::EvaluationOutput out;
    out.method = "slp";
    out.n = 10;
    out.report.mean_log_score = -1.5;
    out.report.pit_variance = 0.08;
    out.report.rmv = 1.6;
    out.report.histogram = {{0.0, 0.5, 4}, {0.5, 1.0, 6}};
    const auto j = nlohmann::json::parse(io::format_evaluation_json(out));
    CHECK(j["method"] == "slp");
    CHECK(j["mean_log_score"] == -1.5);
    CHECK(j["rmv"] == 1.6);
    CHECK(j["bins"] == 2);
    CHECK(j.contains("dispersion"));

    const auto csv = io::format_histogram_csv(out.report.histogram);
    CHECK(csv.find("0.5,1,6") != std::string::npos);
    const auto svg = io::histogram_svg(out.report.histogram, "PIT <test>");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<test>") == std::string::npos);
    std::size_t rects = 0;
    for (std::size_t pos = svg.find("<rect"); pos != std::string::npos; pos = svg.find("<rect", pos + 1)) ++rects;
    CHECK(rects == 2);
}

TEST_CASE("atomic write and sibling paths") {
    const auto dir = scratch_dir();
    const auto path = dir / "out.csv";
    io::atomic_write(path, "first\n");
    io::atomic_write(path, "second\n");
    CHECK(io::read_file(path) == "second\n");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
    CHECK(entries == 1);
    CHECK(io::sibling(path, "_latents.csv") == dir / "out_latents.csv");
    CHECK(io::sibling(dir / "report.json", "_histogram.svg") == dir / "report_histogram.svg");
    CHECK_THROWS_AS(io::read_file(dir / "missing.csv"), Error);
    CHECK_THROWS_AS(io::atomic_write(dir / "no_such_dir" / "x.csv", "x"), Error);
    fs::remove_all(dir);
}
