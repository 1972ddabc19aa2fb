#include "poolcast/error.hpp"
#include "poolcast/pit.hpp"
#include "poolcast/pools.hpp"
#include "poolcast/rng.hpp"
#include "poolcast/sim.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace poolcast;

namespace {

pit::PitSample component_pit(const sim::SimulatedData& data, std::size_t i, std::uint64_t seed) {
    std::vector<PredictiveDist> f;
    std::vector<double> y;
    for (const auto& c : data.cases) {
        f.push_back(c.components[i]);
        y.push_back(c.y);
    }
    return pit::pit_sample(f, y, seed);
}

// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

}  // namespace

TEST_CASE("regression components have the stated predictive variances") {
    const auto data = sim::simulate({sim::Regression{1.0, 1.0, 1.1}, 500, 1});
    REQUIRE(data.cases.size() == 500);
    CHECK(data.component_names == std::vector<std::string>{"f1", "f2", "f3"});
    for (const auto& c : data.cases) {
        CHECK(c.components[0].variance() == doctest::Approx(3.21).epsilon(1e-14));
        CHECK(c.components[1].variance() == doctest::Approx(3.21).epsilon(1e-14));
        CHECK(c.components[2].variance() == doctest::Approx(3.00).epsilon(1e-14));
    }
    // Latents reproduce the observation and the component means.
    for (std::size_t j = 0; j < 20; ++j) {
        const auto& l = data.latents[j];
        CHECK(data.cases[j].y == doctest::Approx(l[0] + l[1] + l[2] + 1.1 * l[3] + l[4]).epsilon(1e-14));
        CHECK(data.cases[j].components[0].mean() == doctest::Approx(l[0] + l[1]).epsilon(1e-14));
    }
}

TEST_CASE("simulation is deterministic and prefix-stable") {
    const auto a = sim::simulate({sim::Regression{}, 200, 7});
    const auto b = sim::simulate({sim::Regression{}, 200, 7});
    const auto c = sim::simulate({sim::Regression{}, 50, 7});
    for (std::size_t j = 0; j < 200; ++j) {
        CHECK(a.cases[j].y == b.cases[j].y);
        CHECK(a.latents[j] == b.latents[j]);
    }
    for (std::size_t j = 0; j < 50; ++j) CHECK(a.cases[j].y == c.cases[j].y);
    const auto d = sim::simulate({sim::Regression{}, 200, 8});
    CHECK(a.cases[0].y != d.cases[0].y);
}

TEST_CASE("different seeds give PIT samples consistent with independence") {
    const std::size_t n = 10000;
    const auto a = sim::simulate({sim::Regression{}, n, 11});
    const auto b = sim::simulate({sim::Regression{}, n, 12});
    const double d = ks_two_sample(component_pit(a, 0, 1).z, component_pit(b, 0, 1).z);
    CHECK(d < 1.63 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("regression components are calibrated") {
    const auto data = sim::simulate({sim::Regression{}, 100000, 1});
    for (std::size_t i = 0; i < 3; ++i) {
        CAPTURE(i);
        const auto ks = pit::ks_uniform(component_pit(data, i, 1).z);
        CHECK(ks.p_value > 0.01);
    }
}

TEST_CASE("ideal forecast is neutrally dispersed") {
    const auto data = sim::simulate({sim::FSigma{1.0}, 100000, 1});
    const auto rep = pit::dispersion_report(component_pit(data, 0, 1));
    CHECK(rep.classification == pit::Dispersion::Neutral);
    CHECK(std::fabs(rep.pit_variance - 1.0 / 12.0) <= rep.ci_halfwidth);
}

TEST_CASE("linear pool of ideal components is overdispersed") {
    const auto rep = sim::verify_linear_pool_overdispersion(100000, 1);
    CHECK(rep.overdispersed);
    CHECK(rep.ci_upper < 1.0 / 12.0);
    CHECK(rep.pit_variance == doctest::Approx(0.066).epsilon(0.1));
}

TEST_CASE("pooling identical components keeps neutral dispersion") {
    const auto data = sim::simulate({sim::Regression{}, 100000, 2});
    std::vector<PredictiveDist> pooled;
    std::vector<double> y;
    for (const auto& c : data.cases) {
        const auto& f = c.components[0];
        pooled.push_back(pool(pools::Tlp{{0.25, 0.25, 0.5}}, {f, f, f}));
        y.push_back(c.y);
    }
    const auto rep = pit::dispersion_report(pit::pit_sample(pooled, y, 1));
    CHECK(std::fabs(rep.pit_variance - 1.0 / 12.0) <= rep.ci_halfwidth);
}

TEST_CASE("overdispersed components stay overdispersed under every pool weight") {
    const std::size_t n = 100000;
    std::vector<double> y(n);
    for (std::size_t j = 0; j < n; ++j) y[j] = StreamRng(41, j).normal();
    const std::vector<PredictiveDist> comps{PredictiveDist::gaussian(0.0, std::sqrt(2.0)),
                                            PredictiveDist::gaussian(0.0, std::sqrt(3.0)),
                                            PredictiveDist::gaussian(0.0, 2.0)};
    std::size_t tried = 0;
    for (int a = 0; a <= 13; ++a) {
        for (int b = 0; a + b <= 13; ++b) {
            const auto g = pool(pools::Tlp{{a / 13.0, b / 13.0, (13 - a - b) / 13.0}}, comps);
            std::vector<double> z(n);
            for (std::size_t j = 0; j < n; ++j) z[j] = g.cdf(y[j]);
            const auto rep = pit::dispersion_report(z);
            CHECK(rep.pit_variance + rep.ci_halfwidth < 1.0 / 12.0);
            ++tried;
        }
    }
    CHECK(tried >= 100);
}

// A single run of a level-0.01 test rejects a true hypothesis one time in a
// hundred, so the statistical claims are checked over seeds 1..10: at most two
// false rejections (probability about 1e-4 under the null), while the
// deliberately miscalibrated forecasts must be rejected every time.
constexpr std::uint64_t kSeeds = 10;
constexpr int kAllowedFalseRejections = 2;

TEST_CASE("binary forecasts: calibration tests accept and reject as expected") {
    int calibrated_rejections = 0;
    int coherent_rejections = 0;
    // Per-bin z-scores of the coherent pool pooled into one chi-square statistic.
    double bin_chi2 = 0.0;
    int bin_dof = 0;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        CAPTURE(seed);
        const auto rep = sim::verify_binary_equivalence(100000, seed);
        calibrated_rejections += !(rep.calibrated.ks_accept && rep.calibrated.reliability_accept);
        coherent_rejections += !(rep.coherent.ks_accept && rep.coherent.reliability_accept);
        CHECK_FALSE(rep.miscalibrated.ks_accept);
        CHECK_FALSE(rep.miscalibrated.reliability_accept);
        CHECK(rep.coherent.mean_log_score > rep.tlp_mean_log_score);
        CHECK(rep.passed == (rep.calibrated.ks_accept && rep.calibrated.reliability_accept && !rep.miscalibrated.ks_accept &&
                             !rep.miscalibrated.reliability_accept && rep.coherent.ks_accept &&
                             rep.coherent.reliability_accept && rep.coherent.mean_log_score > rep.tlp_mean_log_score));
        for (const auto& b : rep.coherent.bins) {
            const double z = (b.freq - b.mean_forecast) / b.freq_se;
            bin_chi2 += z * z;
            ++bin_dof;
        }
    }
    CHECK(calibrated_rejections <= kAllowedFalseRejections);
    CHECK(coherent_rejections <= kAllowedFalseRejections);
    CHECK(bin_chi2 < boost::math::quantile(boost::math::chi_squared(bin_dof), 0.999));
}

TEST_CASE("binary simulation emits success probabilities") {
    const auto data = sim::simulate({sim::BinaryProbit{}, 1000, 3});
    for (std::size_t j = 0; j < data.cases.size(); ++j) {
        const double w1 = data.latents[j][0];
        const double p1 = data.cases[j].components[0].cdf(0.0);
        CHECK(p1 == doctest::Approx(special::normal_cdf(w1 / std::sqrt(2.0))).epsilon(1e-14));
        CHECK((data.cases[j].y == 0.0 || data.cases[j].y == 1.0));
    }
}

TEST_CASE("quartet classification") {
    int false_rejections = 0;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        CAPTURE(seed);
        const auto rep = sim::classify_gbr_quartet(100000, seed);
        CHECK(rep.gap_threshold == doctest::Approx(3.0 * std::sqrt(std::log(200.0) / 200000.0)).epsilon(1e-14));
        const auto& f = rep.forecasters;
        CHECK(f[0].name == "perfect");
        CHECK(f[3].name == "sign_reversed");
        // Gap failures and the sign-reversed KS failure are large effects.
        CHECK(f[0].gap_pass);
        CHECK(f[1].gap_pass);
        CHECK_FALSE(f[2].gap_pass);
        CHECK(f[3].gap_pass);
        CHECK_FALSE(f[3].ks_pass);
        for (int i = 0; i < 3; ++i) false_rejections += !f[static_cast<std::size_t>(i)].ks_pass;
        CHECK(rep.matches_expected == (f[0].ks_pass && f[1].ks_pass && f[2].ks_pass));
    }
    // Three true hypotheses per seed.
    CHECK(false_rejections <= kAllowedFalseRejections + 1);
}

TEST_CASE("ternary fixture: uniform PIT without auto-calibration") {
    using R = sim::Rational;
    const auto a = sim::ternary_exact();
    CHECK(a.pit_uniform);
    CHECK_FALSE(a.auto_calibrated);
    REQUIRE_FALSE(a.pit_density.empty());
    CHECK(a.pit_density.front().lo == R(0));
    CHECK(a.pit_density.back().hi == R(1));
    for (std::size_t i = 0; i < a.pit_density.size(); ++i) {
        CHECK(a.pit_density[i].density == R(1));
        if (i > 0) CHECK(a.pit_density[i].lo == a.pit_density[i - 1].hi);
    }
    for (const auto& s : a.scenarios) CHECK(s.forecast_mass != s.outcome_prob);
    // Each forecast is marginally consistent with its outcome law at the first atom.
    CHECK(a.scenarios[0].forecast_mass[0] + a.scenarios[1].forecast_mass[0] ==
          a.scenarios[0].outcome_prob[0] + a.scenarios[1].outcome_prob[0]);

    const auto data = sim::simulate({sim::TernaryFixture{}, 100000, 1});
    CHECK(pit::ks_uniform(component_pit(data, 0, 1).z).p_value > 0.01);
}

TEST_CASE("Monte Carlo helpers") {
    const auto v = sim::variance_with_se({1.0, 2.0, 3.0, 4.0});
    CHECK(v.variance == doctest::Approx(5.0 / 3.0));
    CHECK(v.standard_error > 0.0);
    for (double sigma : {0.75, 1.25}) {
        const auto mc = sim::var_z_sigma_mc(sigma, 1000000, 5);
        CHECK(std::fabs(mc.variance - pit::var_z_sigma(sigma)) < 3.0 * mc.standard_error);
    }
    const auto f0 = PredictiveDist::gaussian(0.0, 1.0);
    const auto wide = sim::slp_pit_variance_mc(f0, {PredictiveDist::gaussian(0.3, 1.0)}, {1.0}, 1e3, 100000, 6);
    CHECK(wide.variance < 1e-3);
}

TEST_CASE("invalid configurations") {
    auto code_of = [](const sim::DgpConfig& c) {
        try {
            sim::validate(c);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    CHECK(code_of({sim::Regression{}, 0, 1}) == ErrorCode::InvalidConfig);
    CHECK(code_of({sim::FSigma{0.0}, 10, 1}) == ErrorCode::InvalidConfig);
    CHECK(code_of({sim::FSigma{-1.0}, 10, 1}) == ErrorCode::InvalidConfig);
    CHECK(code_of({sim::BinaryProbit{1.0, 0.0}, 10, 1}) == ErrorCode::InvalidConfig);
    CHECK(code_of({sim::Regression{NAN, 1.0, 1.0}, 10, 1}) == ErrorCode::InvalidConfig);
    CHECK_THROWS_AS(sim::simulate({sim::FSigma{0.0}, 10, 1}), Error);
    CHECK(sim::dgp_name(sim::GbrQuartet{}) == "gbr-quartet");
}
