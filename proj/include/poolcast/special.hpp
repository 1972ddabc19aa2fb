#pragma once

// Special functions used throughout the pooling and fitting code.

namespace poolcast::special {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;

double normal_pdf(double x) noexcept;
double normal_cdf(double x) noexcept;
/// Upper tail 1 - Phi(x), accurate for large positive x.
double normal_sf(double x) noexcept;
/// Inverse of the standard normal CDF. Returns -inf/+inf at p = 0/1 and NaN
/// outside [0, 1].
double normal_quantile(double p) noexcept;

/// Digamma for x > 0 (recurrence shift to x >= 10, then asymptotic series).
double digamma(double x);
/// Trigamma for x > 0.
double trigamma(double x);

double log_beta(double a, double b);

/// Density of the Beta(a, b) law at x in [0, 1].
double beta_pdf(double x, double a, double b);
/// Regularized incomplete beta I_x(a, b), continued fraction with modified Lentz.
double incomplete_beta(double x, double a, double b);
/// Inverse of incomplete_beta in x; Newton iteration with a bisection safeguard.
double incomplete_beta_inverse(double p, double a, double b);

/// Log-moments of Y ~ Beta(a, b), needed by the scoring iteration.
struct BetaLogMoments {
    double mean_log;          // E[log Y]
    double mean_log1m;        // E[log(1 - Y)]
    double var_log;           // var(log Y)
    double var_log1m;         // var(log(1 - Y))
    double cov_log_log1m;     // cov(log Y, log(1 - Y))
};

BetaLogMoments beta_log_moments(double a, double b);

}  // namespace poolcast::special
