#pragma once

#include "poolcast/distributions.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace poolcast::pit {

/// PIT values and the auxiliary uniforms that produced them.
struct PitSample {
    std::vector<double> z;
    std::vector<double> v;
};

/// cdf_left(y) + v * (cdf(y) - cdf_left(y)); v must lie in (0, 1).
double randomized_pit(const PredictiveDist& d, double y, double v);

/// Auxiliary uniform for case j. Streams are split per case, so the value does
/// not depend on evaluation order and is shared by every forecaster scored
/// with the same seed.
double auxiliary_uniform(std::uint64_t seed, std::size_t j) noexcept;

PitSample pit_sample(std::span<const PredictiveDist> forecasts, std::span<const double> obs, std::uint64_t seed);

/// Unbiased sample variance (n >= 2).
double sample_variance(std::span<const double> x);

enum class Dispersion { Underdispersed, Neutral, Overdispersed };

std::string_view to_string(Dispersion d) noexcept;

struct DispersionReport {
    double pit_variance = 0.0;
    Dispersion classification = Dispersion::Neutral;
    std::size_t n = 0;
    double ci_halfwidth = 0.0;  // normal-approximation 95% half-width
};

/// Variance above 1/12 means underdispersed forecasts (U-shaped PIT), below
/// means overdispersed; within the CI half-width counts as neutral.
DispersionReport dispersion_report(std::span<const double> z);
inline DispersionReport dispersion_report(const PitSample& s) { return dispersion_report(s.z); }

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function P(K > t).
double kolmogorov_sf(double t);
/// One-sample KS test of z against the standard uniform.
KsResult ks_uniform(std::span<const double> z);

struct HistogramBin {
    double lo;
    double hi;
    std::size_t count;
};

/// Equal-width bins on [0, 1]; a value of exactly 1 goes into the last bin.
std::vector<HistogramBin> pit_histogram(std::span<const double> z, std::size_t bins = 10);

/// var(Z_sigma) for the forecast N(X, sigma^2) of Y = X + eps, X, eps iid N(0, 1).
double var_z_sigma(double sigma);

/// max over the grid of |mean_j F_j(y) - empirical CDF of obs at y|.
double marginal_calibration_gap(std::span<const PredictiveDist> forecasts, std::span<const double> obs,
                                std::span<const double> grid);
/// `points` equally spaced values from min(obs) to max(obs).
std::vector<double> range_grid(std::span<const double> obs, std::size_t points = 201);

struct CalibrationReport {
    double ks_statistic = 0.0;
    double ks_p_value = 1.0;
    double marginal_gap = 0.0;
    std::vector<HistogramBin> histogram;
};

CalibrationReport calibration_report(std::span<const PredictiveDist> forecasts, std::span<const double> obs,
                                     const PitSample& sample, std::span<const double> grid, std::size_t bins = 10);

struct ReliabilityBin {
    double bin_center;
    double freq;            // relative frequency of the success outcome y = 0
    std::size_t count;
    double mean_forecast;   // mean forecast probability within the bin
    double freq_se;         // binomial standard error of freq given the forecasts
};

/// Equal-width bins of the success probabilities p; outcomes coded 0 = success, 1 = failure.
std::vector<ReliabilityBin> reliability_bins(std::span<const double> p, std::span<const int> y01,
                                             std::size_t bins = 10);

struct ReliabilityTest {
    double max_abs_z = 0.0;
    double critical = 0.0;
    bool accept = true;
};

/// Bonferroni-corrected per-bin z-test of freq against mean_forecast at `level`.
ReliabilityTest reliability_test(std::span<const ReliabilityBin> bins, double level = 0.01);

void write_histogram_csv(std::ostream& os, std::span<const HistogramBin> bins);
void write_reliability_csv(std::ostream& os, std::span<const ReliabilityBin> bins);

}  // namespace poolcast::pit
