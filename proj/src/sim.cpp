#include "poolcast/sim.hpp"

#include "poolcast/error.hpp"
#include "poolcast/pools.hpp"
#include "poolcast/rng.hpp"
#include "poolcast/special.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace poolcast::sim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_config(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

bool positive(double x) { return x > 0.0 && std::isfinite(x); }

int draw_binary(StreamRng& rng, double p_success) { return rng.uniform() < p_success ? 0 : 1; }

// Outcome index drawn from a discrete law over {0, 1, 2}.
int draw_ternary(StreamRng& rng, const std::array<Rational, 3>& probs) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (int i = 0; i < 2; ++i) {
        cum += boost::rational_cast<double>(probs[static_cast<std::size_t>(i)]);
        if (u < cum) return i;
    }
    return 2;
}

double binary_log_score(double p, int y) {
    const double mass = y == 0 ? p : 1.0 - p;
    return std::log(std::max(mass, fit::kDensityFloor));
}

}  // namespace

void validate(const DgpConfig& config) {
    require_config(config.n >= 1, "n must be at least 1");
    std::visit(overloaded{
        [](const Regression& r) {
            require_config(std::isfinite(r.a1) && std::isfinite(r.a2) && std::isfinite(r.a3), "regression coefficients must be finite");
        },
        [](const FSigma& f) { require_config(positive(f.sigma), "sigma must be positive"); },
        [](const BinaryProbit& b) { require_config(positive(b.sigma1) && positive(b.sigma2), "sigma1 and sigma2 must be positive"); },
        [](const GbrQuartet&) {},
        [](const TernaryFixture&) {},
    }, config.kind);
}

std::string dgp_name(const DgpKind& kind) {
    return std::visit(overloaded{
        [](const Regression&) { return std::string("regression"); },
        [](const FSigma&) { return std::string("fsigma"); },
        [](const BinaryProbit&) { return std::string("binary-probit"); },
        [](const GbrQuartet&) { return std::string("gbr-quartet"); },
        [](const TernaryFixture&) { return std::string("ternary"); },
    }, kind);
}

std::vector<TernaryScenario> ternary_scenarios() {
    const Rational half(1, 2);
    return {
        TernaryScenario{half, {Rational(1, 2), Rational(1, 2), Rational(0)}, {Rational(3, 4), Rational(1, 4), Rational(0)}},
        TernaryScenario{half, {Rational(1, 2), Rational(1, 4), Rational(1, 4)}, {Rational(1, 4), Rational(3, 8), Rational(3, 8)}},
    };
}

SimulatedData simulate(const DgpConfig& config) {
    validate(config);
    SimulatedData out;
    out.cases.resize(config.n);
    out.latents.resize(config.n);

    std::visit(overloaded{
        [&](const Regression& r) {
            out.component_names = {"f1", "f2", "f3"};
            out.latent_names = {"x0", "x1", "x2", "x3", "eps"};
            const double sd1 = std::sqrt(1.0 + r.a2 * r.a2 + r.a3 * r.a3);
            const double sd2 = std::sqrt(1.0 + r.a1 * r.a1 + r.a3 * r.a3);
            const double sd3 = std::sqrt(1.0 + r.a1 * r.a1 + r.a2 * r.a2);
            for (std::size_t j = 0; j < config.n; ++j) {
                StreamRng rng(config.seed, j);
                const double x0 = rng.normal();
                const double x1 = rng.normal();
                const double x2 = rng.normal();
                const double x3 = rng.normal();
                const double eps = rng.normal();
                auto& c = out.cases[j];
                c.y = x0 + r.a1 * x1 + r.a2 * x2 + r.a3 * x3 + eps;
                c.components = {PredictiveDist::gaussian(x0 + r.a1 * x1, sd1), PredictiveDist::gaussian(x0 + r.a2 * x2, sd2),
                                PredictiveDist::gaussian(x0 + r.a3 * x3, sd3)};
                out.latents[j] = {x0, x1, x2, x3, eps};
            }
        },
        [&](const FSigma& f) {
            out.component_names = {"f_sigma"};
            out.latent_names = {"x", "eps"};
            for (std::size_t j = 0; j < config.n; ++j) {
                StreamRng rng(config.seed, j);
                const double x = rng.normal();
                const double eps = rng.normal();
                out.cases[j] = {{PredictiveDist::gaussian(x, f.sigma)}, x + eps};
                out.latents[j] = {x, eps};
            }
        },
        [&](const BinaryProbit& b) {
            out.component_names = {"p1", "p2"};
            out.latent_names = {"omega1", "omega2"};
            const double d1 = std::sqrt(1.0 + b.sigma2 * b.sigma2);
            const double d2 = std::sqrt(1.0 + b.sigma1 * b.sigma1);
            for (std::size_t j = 0; j < config.n; ++j) {
                StreamRng rng(config.seed, j);
                const double w1 = rng.normal(0.0, b.sigma1);
                const double w2 = rng.normal(0.0, b.sigma2);
                const int y = draw_binary(rng, special::normal_cdf(w1 + w2));
                out.cases[j] = {{PredictiveDist::bernoulli(special::normal_cdf(w1 / d1)),
                                 PredictiveDist::bernoulli(special::normal_cdf(w2 / d2))},
                                static_cast<double>(y)};
                out.latents[j] = {w1, w2};
            }
        },
        [&](const GbrQuartet&) {
            out.component_names = {"perfect", "climatological", "unfocused", "sign_reversed"};
            out.latent_names = {"mu", "tau"};
            const double clim_sd = std::sqrt(2.0);
            for (std::size_t j = 0; j < config.n; ++j) {
                StreamRng rng(config.seed, j);
                const double mu = rng.normal();
                const double tau = rng.uniform() < 0.5 ? -1.0 : 1.0;
                const double y = rng.normal(mu, 1.0);
                out.cases[j] = {{PredictiveDist::gaussian(mu, 1.0), PredictiveDist::gaussian(0.0, clim_sd),
                                 PredictiveDist::mixture({PredictiveDist::gaussian(mu, 1.0), PredictiveDist::gaussian(mu + tau, 1.0)},
                                                         {0.5, 0.5}),
                                 PredictiveDist::gaussian(-mu, 1.0)},
                                y};
                out.latents[j] = {mu, tau};
            }
        },
        [&](const TernaryFixture&) {
            out.component_names = {"f"};
            out.latent_names = {"scenario"};
            const auto scenarios = ternary_scenarios();
            std::array<PredictiveDist, 2> forecasts{
                PredictiveDist::discrete({0.0, 1.0, 2.0}, {0.5, 0.5, 0.0}),
                PredictiveDist::discrete({0.0, 1.0, 2.0}, {0.5, 0.25, 0.25}),
            };
            for (std::size_t j = 0; j < config.n; ++j) {
                StreamRng rng(config.seed, j);
                const std::size_t s = rng.uniform() < 0.5 ? 0 : 1;
                const int y = draw_ternary(rng, scenarios[s].outcome_prob);
                out.cases[j] = {{forecasts[s]}, static_cast<double>(y)};
                out.latents[j] = {static_cast<double>(s + 1)};
            }
        },
    }, config.kind);
    return out;
}

double marginal_gap_threshold(std::size_t n) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "threshold needs n >= 1");
    return 3.0 * std::sqrt(std::log(2.0 / 0.01) / (2.0 * static_cast<double>(n)));
}

OverdispersionReport verify_linear_pool_overdispersion(std::size_t n, std::uint64_t seed, const Regression& dgp) {
    const auto data = simulate({dgp, n, seed});
    const PoolSpec spec = pools::Tlp{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
    std::vector<PredictiveDist> pooled;
    std::vector<double> obs;
    pooled.reserve(n);
    obs.reserve(n);
    for (const auto& c : data.cases) {
        pooled.push_back(pool(spec, c.components));
        obs.push_back(c.y);
    }
    const auto report = pit::dispersion_report(pit::pit_sample(pooled, obs, seed));
    OverdispersionReport out;
    out.n = n;
    out.pit_variance = report.pit_variance;
    out.ci_halfwidth = report.ci_halfwidth;
    out.ci_upper = report.pit_variance + report.ci_halfwidth;
    out.overdispersed = out.ci_upper < 1.0 / 12.0;
    return out;
}

BinaryCheck check_binary_forecast(const std::vector<double>& p, const std::vector<int>& y, std::uint64_t seed,
                                  std::size_t bins) {
    if (p.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "probabilities and outcomes differ in length");
    std::vector<PredictiveDist> forecasts;
    std::vector<double> obs;
    forecasts.reserve(p.size());
    obs.reserve(p.size());
    BinaryCheck out;
    for (std::size_t j = 0; j < p.size(); ++j) {
        forecasts.push_back(PredictiveDist::bernoulli(p[j]));
        obs.push_back(static_cast<double>(y[j]));
        out.mean_log_score += binary_log_score(p[j], y[j]);
    }
    out.mean_log_score /= static_cast<double>(p.size());
    const auto ks = pit::ks_uniform(pit::pit_sample(forecasts, obs, seed).z);
    out.ks_statistic = ks.statistic;
    out.ks_p_value = ks.p_value;
    out.ks_accept = ks.p_value >= 0.01;
    out.bins = pit::reliability_bins(p, y, bins);
    const auto rel = pit::reliability_test(out.bins, 0.01);
    out.reliability_max_z = rel.max_abs_z;
    out.reliability_critical = rel.critical;
    out.reliability_accept = rel.accept;
    return out;
}

BinaryEquivalenceReport verify_binary_equivalence(std::size_t n, std::uint64_t seed, const BinaryProbit& dgp) {
    const auto data = simulate({dgp, n, seed});
    std::vector<double> p1(n);
    std::vector<double> p1_sq(n);
    std::vector<double> coherent(n);
    std::vector<int> y(n);
    BinaryEquivalenceReport out;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& c = data.cases[j];
        const double a = c.components[0].cdf(0.0);
        const double b = c.components[1].cdf(0.0);
        y[j] = static_cast<int>(c.y);
        p1[j] = a;
        p1_sq[j] = a * a;
        coherent[j] = coherent_probit_pool(a, b, dgp.sigma1, dgp.sigma2);
        out.tlp_mean_log_score += binary_log_score(0.5 * (a + b), y[j]);
    }
    out.tlp_mean_log_score /= static_cast<double>(n);
    out.calibrated = check_binary_forecast(p1, y, seed);
    out.miscalibrated = check_binary_forecast(p1_sq, y, seed);
    out.coherent = check_binary_forecast(coherent, y, seed);
    for (const auto& b : out.coherent.bins) {
        const double z = b.freq_se > 0.0 ? std::fabs(b.freq - b.mean_forecast) / b.freq_se : 0.0;
        out.coherent_max_bin_z = std::max(out.coherent_max_bin_z, z);
    }
    out.passed = out.calibrated.ks_accept && out.calibrated.reliability_accept && !out.miscalibrated.ks_accept &&
                 !out.miscalibrated.reliability_accept && out.coherent.ks_accept && out.coherent.reliability_accept &&
                 out.coherent.mean_log_score > out.tlp_mean_log_score;
    return out;
}

GbrReport classify_gbr_quartet(std::size_t n, std::uint64_t seed) {
    const auto data = simulate({GbrQuartet{}, n, seed});
    std::vector<double> obs(n);
    for (std::size_t j = 0; j < n; ++j) obs[j] = data.cases[j].y;
    const auto grid = pit::range_grid(obs, 201);

    GbrReport out;
    out.gap_threshold = marginal_gap_threshold(n);
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<PredictiveDist> forecasts;
        forecasts.reserve(n);
        for (const auto& c : data.cases) forecasts.push_back(c.components[i]);
        const auto ks = pit::ks_uniform(pit::pit_sample(forecasts, obs, seed).z);
        auto& f = out.forecasters[i];
        f.name = data.component_names[i];
        f.ks_statistic = ks.statistic;
        f.ks_p_value = ks.p_value;
        f.ks_pass = ks.p_value >= 0.01;
        f.marginal_gap = pit::marginal_calibration_gap(forecasts, obs, grid);
        f.gap_pass = f.marginal_gap < out.gap_threshold;
    }
    const auto& fs = out.forecasters;
    out.matches_expected = fs[0].ks_pass && fs[0].gap_pass && fs[1].ks_pass && fs[1].gap_pass && fs[2].ks_pass &&
                           !fs[2].gap_pass && !fs[3].ks_pass && fs[3].gap_pass;
    return out;
}

TernaryAnalysis ternary_exact() {
    TernaryAnalysis out;
    out.scenarios = ternary_scenarios();

    // Breakpoints of every scenario's CDF partition (0, 1) into pieces on
    // which each conditional PIT density is constant.
    std::set<Rational> cuts{Rational(0), Rational(1)};
    for (const auto& s : out.scenarios) {
        Rational cum(0);
        for (const auto& m : s.forecast_mass) {
            cum += m;
            cuts.insert(cum);
        }
    }
    const std::vector<Rational> points(cuts.begin(), cuts.end());
    out.pit_uniform = true;
    for (std::size_t p = 0; p + 1 < points.size(); ++p) {
        const Rational lo = points[p];
        const Rational hi = points[p + 1];
        Rational density(0);
        for (const auto& s : out.scenarios) {
            // Given outcome i, the PIT is uniform on [F(i-), F(i)) with mass P(Y = i | F).
            Rational left(0);
            for (std::size_t i = 0; i < 3; ++i) {
                const Rational right = left + s.forecast_mass[i];
                if (s.forecast_mass[i] > 0 && left <= lo && hi <= right) {
                    density += s.probability * s.outcome_prob[i] / s.forecast_mass[i];
                }
                left = right;
            }
        }
        out.pit_density.push_back({lo, hi, density});
        if (density != Rational(1)) out.pit_uniform = false;
    }

    out.auto_calibrated = true;
    for (const auto& s : out.scenarios) {
        for (std::size_t i = 0; i < 3; ++i) {
            if (s.outcome_prob[i] != s.forecast_mass[i]) out.auto_calibrated = false;
        }
    }
    return out;
}

MonteCarloVariance variance_with_se(const std::vector<double>& x) {
    if (x.size() < 2) throw Error(ErrorCode::TooFewSamples, "variance needs at least two values");
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : x) {
        const double d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    MonteCarloVariance out;
    out.variance = m2 / (n - 1.0);
    m2 /= n;
    m4 /= n;
    out.standard_error = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
    return out;
}

MonteCarloVariance slp_pit_variance_mc(const PredictiveDist& f0, const std::vector<PredictiveDist>& components,
                                       const std::vector<double>& w, double c, std::size_t n, std::uint64_t seed) {
    const auto g = pool(pools::Slp{w, c}, components);
    std::vector<double> z(n);
    for (std::size_t j = 0; j < n; ++j) {
        StreamRng rng(seed, j);
        z[j] = g.cdf(f0.quantile(rng.uniform()));
    }
    return variance_with_se(z);
}

MonteCarloVariance var_z_sigma_mc(double sigma, std::size_t n, std::uint64_t seed) {
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
    std::vector<double> z(n);
    for (std::size_t j = 0; j < n; ++j) {
        StreamRng rng(seed, j);
        const double x = rng.normal();
        const double y = x + rng.normal();
        z[j] = special::normal_cdf((y - x) / sigma);
    }
    return variance_with_se(z);
}

}  // namespace poolcast::sim
