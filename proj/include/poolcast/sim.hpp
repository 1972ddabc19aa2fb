#pragma once

#include "poolcast/fitting.hpp"

#include <boost/rational.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace poolcast::sim {

/// Y = X0 + a1 X1 + a2 X2 + a3 X3 + eps with three partially informed Gaussian forecasts.
struct Regression {
    double a1 = 1.0;
    double a2 = 1.0;
    double a3 = 1.1;
};

/// Y = X + eps with forecast N(X, sigma^2).
struct FSigma {
    double sigma = 1.0;
};

/// Binary outcome (success coded 0) with P(Y = 0 | w1, w2) = Phi(w1 + w2).
struct BinaryProbit {
    double sigma1 = 1.0;
    double sigma2 = 1.0;
};

/// Perfect, climatological, unfocused and sign-reversed forecasts of Y ~ N(mu, 1).
struct GbrQuartet {};

/// Two equally likely discrete forecasts of a ternary outcome that are
/// probabilistically calibrated but not auto-calibrated.
struct TernaryFixture {};

using DgpKind = std::variant<Regression, FSigma, BinaryProbit, GbrQuartet, TernaryFixture>;

struct DgpConfig {
    DgpKind kind;
    std::size_t n = 500;
    std::uint64_t seed = 1;
};

/// Throws InvalidConfig.
void validate(const DgpConfig& config);
std::string dgp_name(const DgpKind& kind);

struct SimulatedData {
    fit::Dataset cases;
    std::vector<std::string> component_names;
    std::vector<std::string> latent_names;
    std::vector<std::vector<double>> latents;  // one row per case
};

/// Case j draws from its own stream of the seed, so datasets are identical
/// for equal seeds regardless of n beyond j.
SimulatedData simulate(const DgpConfig& config);

/// Distribution-free band for the marginal calibration gap at level 0.01.
double marginal_gap_threshold(std::size_t n);

struct OverdispersionReport {
    std::size_t n = 0;
    double pit_variance = 0.0;
    double ci_halfwidth = 0.0;
    double ci_upper = 0.0;
    bool overdispersed = false;  // whole CI below 1/12
};

/// Equal-weight TLP of the ideal regression components.
OverdispersionReport verify_linear_pool_overdispersion(std::size_t n, std::uint64_t seed, const Regression& dgp = {});

struct BinaryCheck {
    double ks_statistic = 0.0;
    double ks_p_value = 0.0;
    bool ks_accept = false;
    double reliability_max_z = 0.0;
    double reliability_critical = 0.0;
    bool reliability_accept = false;
    double mean_log_score = 0.0;
    std::vector<pit::ReliabilityBin> bins;
};

/// KS test of the randomized PIT and a Bonferroni reliability test, both at level 0.01.
BinaryCheck check_binary_forecast(const std::vector<double>& p, const std::vector<int>& y, std::uint64_t seed,
                                  std::size_t bins = 10);

struct BinaryEquivalenceReport {
    BinaryCheck calibrated;    // p1
    BinaryCheck miscalibrated; // p1 squared
    BinaryCheck coherent;      // probit pool of (p1, p2)
    double tlp_mean_log_score = 0.0;
    /// Largest per-bin |freq - mean forecast| / binomial SE for the coherent pool.
    double coherent_max_bin_z = 0.0;
    bool passed = false;
};

BinaryEquivalenceReport verify_binary_equivalence(std::size_t n, std::uint64_t seed, const BinaryProbit& dgp = {});

struct GbrForecaster {
    std::string name;
    double ks_statistic = 0.0;
    double ks_p_value = 0.0;
    bool ks_pass = false;
    double marginal_gap = 0.0;
    bool gap_pass = false;
};

struct GbrReport {
    std::array<GbrForecaster, 4> forecasters;
    double gap_threshold = 0.0;
    /// Perfect and climatological pass both; unfocused passes KS only;
    /// sign-reversed passes the marginal gap only.
    bool matches_expected = false;
};

GbrReport classify_gbr_quartet(std::size_t n, std::uint64_t seed);

using Rational = boost::rational<std::int64_t>;

struct TernaryPiece {
    Rational lo;
    Rational hi;
    Rational density;
};

struct TernaryScenario {
    Rational probability;
    std::array<Rational, 3> forecast_mass;   // masses of F at 0, 1, 2
    std::array<Rational, 3> outcome_prob;    // P(Y = i | F)
};

struct TernaryAnalysis {
    std::vector<TernaryScenario> scenarios;
    std::vector<TernaryPiece> pit_density;  // piecewise-constant density of the PIT on (0, 1)
    bool pit_uniform = false;
    bool auto_calibrated = false;
};

/// The two fixture scenarios.
std::vector<TernaryScenario> ternary_scenarios();
/// Exact rational computation of the PIT law and the auto-calibration check.
TernaryAnalysis ternary_exact();

struct MonteCarloVariance {
    double variance = 0.0;
    double standard_error = 0.0;
};

/// Variance of the SLP PIT G_c(Y) with fixed components and Y drawn from f0.
MonteCarloVariance slp_pit_variance_mc(const PredictiveDist& f0, const std::vector<PredictiveDist>& components,
                                       const std::vector<double>& w, double c, std::size_t n, std::uint64_t seed);

/// var(Phi(eps / sigma)) by Monte Carlo: the PIT of N(X, sigma^2) for Y = X + eps.
MonteCarloVariance var_z_sigma_mc(double sigma, std::size_t n, std::uint64_t seed);

/// Sample variance and its standard error sqrt((m4 - m2^2) / n).
MonteCarloVariance variance_with_se(const std::vector<double>& x);

}  // namespace poolcast::sim
