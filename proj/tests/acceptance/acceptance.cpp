// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include "poolcast/fitting.hpp"
#include "poolcast/pit.hpp"
#include "poolcast/pools.hpp"
#include "poolcast/rng.hpp"
#include "poolcast/sim.hpp"
#include "poolcast/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace poolcast;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

const study::StudyReport& sim_study() {
    static const study::StudyReport report = study::run_sim_study(kSeed, 500);
    return report;
}

Outcome band_checks(const std::vector<study::Check>& checks) {
    Outcome o{true, ""};
    std::size_t passed = 0;
    for (const auto& c : checks) {
        if (c.pass) {
            ++passed;
        } else {
            o.pass = false;
            o.detail += fmt(" [%s %.4f vs %.4f +- %.4f]", c.name.c_str(), c.obtained, c.reference, c.band);
        }
    }
    o.detail = fmt("%zu of %zu within band", passed, checks.size()) + o.detail;
    return o;
}

Outcome criterion1() { return band_checks(sim_study().estimate_checks); }

Outcome criterion2() { return band_checks(sim_study().dispersion_checks); }

Outcome criterion3() {
    const auto& r = sim_study();
    Outcome o = band_checks(r.score_checks);
    const double best_component = std::max({r.rows[0].test.mean_log_score, r.rows[1].test.mean_log_score,
                                            r.rows[2].test.mean_log_score});
    o.detail += fmt("; ordering BLP %.4f, SLP %.4f, TLP %.4f, best component %.4f: %s", r.rows[5].test.mean_log_score,
                    r.rows[4].test.mean_log_score, r.rows[3].test.mean_log_score, best_component,
                    r.ordering_pass ? "reproduced" : "not reproduced");
    o.pass = o.pass && r.ordering_pass;
    return o;
}

Outcome criterion4() {
    const double at_one = pit::var_z_sigma(1.0);
    bool ok = std::fabs(at_one - 1.0 / 12.0) <= 1e-9;
    std::string detail = fmt("var_z_sigma(1) - 1/12 = %.2e", at_one - 1.0 / 12.0);

    bool decreasing = true;
    double prev = pit::var_z_sigma(0.25);
    for (int i = 1; i <= 300; ++i) {
        const double v = pit::var_z_sigma(0.25 + 3.75 * i / 300.0);
        decreasing = decreasing && v < prev;
        prev = v;
    }
    ok = ok && decreasing;
    detail += decreasing ? "; strictly decreasing on [0.25, 4]" : "; NOT decreasing on [0.25, 4]";

    for (double sigma : {0.75, 1.25}) {
        const auto mc = sim::var_z_sigma_mc(sigma, 10000000, kSeed);
        const double q = pit::var_z_sigma(sigma);
        const double z = (mc.variance - q) / mc.standard_error;
        ok = ok && std::fabs(z) < 3.0;
        detail += fmt("; sigma %.2f quadrature %.6f MC %.6f (%.2f SE)", sigma, q, mc.variance, z);
    }
    return {ok, detail};
}

Outcome criterion5() {
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t violations = 0;
    double worst = -1.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t k = 2 + rep % 4;
        const std::size_t n = 5 + static_cast<std::size_t>(u(rng) * 200.0);
        std::vector<double> w(k);
        double ws = 0.0;
        for (auto& wi : w) ws += (wi = -std::log(u(rng)));
        for (auto& wi : w) wi /= ws;
        std::vector<std::vector<double>> zi(k, std::vector<double>(n));
        std::vector<double> z(n);
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<PredictiveDist> comps;
            for (std::size_t i = 0; i < k; ++i) comps.push_back(PredictiveDist::gaussian(4.0 * u(rng) - 2.0, 0.2 + 3.0 * u(rng)));
            const double y = 6.0 * u(rng) - 3.0;
            for (std::size_t i = 0; i < k; ++i) zi[i][j] = comps[i].cdf(y);
            z[j] = pool(pools::Tlp{w}, comps).cdf(y);
        }
        double max_component = 0.0;
        for (const auto& col : zi) max_component = std::max(max_component, pit::sample_variance(col));
        const double pooled = pit::sample_variance(z);
        // Rounding slack of a few ulps; the inequality itself is exact.
        if (pooled > max_component * (1.0 + 1e-12)) ++violations;
        worst = std::max(worst, pooled - max_component);
    }
    return {violations == 0, fmt("%zu violations in 1000 datasets; largest var(Z_TLP) - max var(Z_i) = %.3e", violations, worst)};
}

Outcome criterion6() {
    const auto r = sim::verify_linear_pool_overdispersion(100000, kSeed);
    return {r.overdispersed && r.ci_upper < 1.0 / 12.0,
            fmt("var(PIT) %.5f, 95%% CI upper %.5f vs 1/12 = %.5f", r.pit_variance, r.ci_upper, 1.0 / 12.0)};
}

Outcome criterion7() {
    const auto data = sim::simulate({sim::Regression{}, 300, kSeed}).cases;
    const auto table = fit::tabulate(data);
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double h = 1e-6;
    double worst_grad = 0.0;
    double worst_hess = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> w{0.05 + 0.4 * u(rng), 0.05 + 0.4 * u(rng)};
        w.push_back(1.0 - w[0] - w[1]);
        const double a = 0.4 + 3.0 * u(rng);
        const double b = 0.4 + 3.0 * u(rng);
        const auto d = fit::blp_objective_and_derivatives(w, a, b, table);
        auto at = [&](int idx, double step) {
            auto ws = w;
            double as = a, bs = b;
            if (idx < 2) {
                ws[static_cast<std::size_t>(idx)] += step;
                ws[2] -= step;
            } else if (idx == 2) {
                as += step;
            } else {
                bs += step;
            }
            return std::make_tuple(ws, as, bs);
        };
        for (int i = 0; i < 4; ++i) {
            const auto [wp, ap, bp] = at(i, h);
            const auto [wm, am, bm] = at(i, -h);
            const double fd = (fit::blp_loglik(wp, ap, bp, table) - fit::blp_loglik(wm, am, bm, table)) / (2.0 * h);
            worst_grad = std::max(worst_grad, std::fabs(d.gradient(i) - fd) / std::max(1.0, std::fabs(fd)));
            const auto gp = fit::blp_objective_and_derivatives(wp, ap, bp, table).gradient;
            const auto gm = fit::blp_objective_and_derivatives(wm, am, bm, table).gradient;
            for (int j = 0; j < 4; ++j) {
                const double fdh = (gp(j) - gm(j)) / (2.0 * h);
                worst_hess = std::max(worst_hess, std::fabs(d.hessian(j, i) - fdh) / std::max(1.0, std::fabs(fdh)));
            }
        }
    }

    bool monotone = true;
    double nesting_gap = std::numeric_limits<double>::infinity();
    auto check_fit = [&](const fit::FitResult& r) {
        for (const auto& trace : r.traces)
            for (std::size_t t = 1; t < trace.size(); ++t) monotone = monotone && trace[t] >= trace[t - 1];
    };
    std::size_t fits = 0;
    auto nest = [&](const fit::Dataset& train) {
        const auto tlp = fit::fit_tlp(train);
        const auto slp = fit::fit_slp(train);
        const auto blp = fit::fit_blp(train);
        for (const auto* r : {&tlp, &slp, &blp}) check_fit(*r);
        check_fit(fit::fit_glp(train, LinkFunction{LinkKind::Log}));
        fits += 4;
        nesting_gap = std::min({nesting_gap, blp.mean_log_score_train - tlp.mean_log_score_train,
                                slp.mean_log_score_train - tlp.mean_log_score_train});
    };
    const auto& s = sim_study();
    for (const auto* r : {&s.tlp, &s.slp, &s.blp}) check_fit(*r);
    nesting_gap = std::min({s.blp.mean_log_score_train - s.tlp.mean_log_score_train,
                            s.slp.mean_log_score_train - s.tlp.mean_log_score_train});
    fits += 3;
    nest(data);
    for (std::uint64_t extra = 2; extra <= 6; ++extra) nest(sim::simulate({sim::Regression{}, 200, extra}).cases);

    const bool ok = worst_grad < 1e-6 && worst_hess < 1e-4 && monotone && nesting_gap >= -1e-9;
    return {ok, fmt("200 points: max gradient rel. error %.2e, max Hessian rel. error %.2e; %zu fit traces %s; "
                    "min nesting margin %.3e",
                    worst_grad, worst_hess, fits, monotone ? "monotone" : "NOT monotone", nesting_gap)};
}

Outcome criterion8() {
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t k = 1 + rep % 5;
        std::vector<PredictiveDist> comps;
        std::vector<double> w(k);
        double ws = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            comps.push_back(PredictiveDist::gaussian(6.0 * u(rng) - 3.0, 0.2 + 3.0 * u(rng)));
            ws += (w[i] = -std::log(u(rng)));
        }
        for (auto& wi : w) wi /= ws;
        const auto tlp = pool(pools::Tlp{w}, comps);
        const auto blp = pool(pools::Blp{w, 1.0, 1.0}, comps);
        const auto slp = pool(pools::Slp{w, 1.0}, comps);
        for (int g = 0; g < 1000; ++g) {
            const double y = -12.0 + 24.0 * g / 999.0;
            const double t = tlp.cdf(y);
            worst = std::max({worst, std::fabs(blp.cdf(y) - t), std::fabs(slp.cdf(y) - t)});
        }
    }
    return {worst <= 1e-12, fmt("50 component sets x 1000 grid points: max |difference| %.2e", worst)};
}

Outcome criterion9() {
    const auto f0 = PredictiveDist::gaussian(0.0, 1.0);
    const std::vector<PredictiveDist> comps{PredictiveDist::gaussian(-1.0, 1.0), PredictiveDist::gaussian(0.3, 2.0),
                                            PredictiveDist::gaussian(1.2, 0.5)};
    const std::vector<double> w{0.2, 0.5, 0.3};
    const double limit = slp_limit_variance(f0, comps, w);
    const auto tight = sim::slp_pit_variance_mc(f0, comps, w, 1e-3, 1000000, kSeed);
    const auto wide = sim::slp_pit_variance_mc(f0, comps, w, 1e3, 1000000, kSeed);
    const double z = (tight.variance - limit) / tight.standard_error;
    return {std::fabs(z) < 3.0 && wide.variance < 1e-3,
            fmt("c=1e-3: MC %.6f vs limit %.6f (%.2f SE); c=1e3: var %.2e", tight.variance, limit, z, wide.variance)};
}

Outcome criterion10() {
    const auto r = sim::verify_binary_equivalence(100000, kSeed);
    const bool ok = r.passed && r.coherent_max_bin_z < 3.0;
    return {ok, fmt("calibrated KS p %.4f reliability z %.2f/%.2f; squared KS p %.2e reliability z %.1f; "
                    "coherent KS p %.4f max bin z %.2f, log score %.4f vs TLP %.4f",
                    r.calibrated.ks_p_value, r.calibrated.reliability_max_z, r.calibrated.reliability_critical,
                    r.miscalibrated.ks_p_value, r.miscalibrated.reliability_max_z, r.coherent.ks_p_value,
                    r.coherent_max_bin_z, r.coherent.mean_log_score, r.tlp_mean_log_score)};
}

Outcome criterion11() {
    const auto a = sim::ternary_exact();
    return {a.pit_uniform && !a.auto_calibrated,
            fmt("exact PIT law %s; forecasts %s", a.pit_uniform ? "uniform" : "NOT uniform",
                a.auto_calibrated ? "auto-calibrated" : "not auto-calibrated")};
}

Outcome criterion12() {
    const auto r = sim::classify_gbr_quartet(100000, kSeed);
    std::string detail = fmt("gap threshold %.4f;", r.gap_threshold);
    for (const auto& f : r.forecasters) {
        detail += fmt(" %s KS p %.3g %s gap %.4f %s;", f.name.c_str(), f.ks_p_value, f.ks_pass ? "pass" : "fail",
                      f.marginal_gap, f.gap_pass ? "pass" : "fail");
    }
    return {r.matches_expected, detail};
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IOLBF, 0);
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"simulation-study estimates within 3 reference SEs", criterion1},
        {"test-set var(PIT) and RMV within bands", criterion2},
        {"test-set log scores within bands and ordering", criterion3},
        {"var_z_sigma quadrature, monotonicity and Monte Carlo", criterion4},
        {"sample variance invariant of the linear pool", criterion5},
        {"linear pool of ideal components overdispersed", criterion6},
        {"BLP derivatives, monotone traces, nesting dominance", criterion7},
        {"identity nesting of BLP and SLP", criterion8},
        {"SLP spread limits", criterion9},
        {"binary calibration equivalence and coherent pool", criterion10},
        {"ternary fixture exact", criterion11},
        {"calibration quartet classification", criterion12},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s criterion %2zu: %s -- %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
