#include "poolcast/special.hpp"

#include "poolcast/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace poolcast::special {

namespace {

constexpr double kInvSqrt2 = 0.707106781186547524400844362105;

template <std::size_t N>
double horner(const std::array<double, N>& c, double x) noexcept {
    double acc = c[N - 1];
    for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
    return acc;
}

// Wichura (1988), algorithm AS 241 (PPND16).
double quantile_as241(double p) noexcept {
    static constexpr std::array<double, 8> a{
        3.387132872796366608,    133.14166789178437745, 1971.5909503065514427,
        13731.693765509461125,   45921.953931549871457, 67265.770927008700853,
        33430.575583588128105,   2509.0809287301226727};
    static constexpr std::array<double, 8> b{
        1.0,                     42.313330701600911252, 687.1870074920579083,
        5394.1960214247511077,   21213.794301586595867, 39307.89580009271061,
        28729.085735721942674,   5226.495278852545925};
    static constexpr std::array<double, 8> c{
        1.42343711074968357734,  4.6303378461565452959,  5.7694972214606914055,
        3.64784832476320460504,  1.27045825245236838258, 0.24178072517745061177,
        0.0227238449892691845833, 7.7454501427834140764e-4};
    static constexpr std::array<double, 8> d{
        1.0,                     2.05319162663775882187, 1.6763848301838038494,
        0.68976733498510000455,  0.14810397642748007459, 0.0151986665636164571966,
        5.475938084995344946e-4, 1.05075007164441684324e-9};
    static constexpr std::array<double, 8> e{
        6.6579046435011037772,   5.4637849111641143699,   1.7848265399172913358,
        0.29656057182850489123,  0.026532189526576123093, 0.0012426609473880784386,
        2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr std::array<double, 8> f{
        1.0,                     0.59983220655588793769,  0.13692988092273580531,
        0.0148753612908506148525, 7.868691311456132591e-4, 1.8463183175100546818e-5,
        1.4215117583164458887e-7, 2.04426310338993978564e-15};

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * horner(a, r) / horner(b, r);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = horner(c, r) / horner(d, r);
    } else {
        r -= 5.0;
        val = horner(e, r) / horner(f, r);
    }
    return q < 0.0 ? -val : val;
}

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    constexpr int max_iter = 20000;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw Error(ErrorCode::NoConvergence, "incomplete beta continued fraction");
}

}  // namespace

double normal_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_sf(double x) noexcept { return 0.5 * std::erfc(x * kInvSqrt2); }

double normal_quantile(double p) noexcept {
    if (std::isnan(p) || p < 0.0 || p > 1.0) return std::numeric_limits<double>::quiet_NaN();
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    double x = quantile_as241(p);
    // One Newton step, on whichever tail keeps the residual accurate.
    const double dens = normal_pdf(x);
    if (dens > 0.0 && std::isfinite(x)) {
        const double resid = p < 0.5 ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
        x -= resid / dens;
    }
    return x;
}

double digamma(double x) {
    if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "digamma requires x > 0");
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli-number tail: -sum B_2n / (2n x^2n)
    const double series =
        inv2 * (1.0 / 12.0 -
        inv2 * (1.0 / 120.0 -
        inv2 * (1.0 / 252.0 -
        inv2 * (1.0 / 240.0 -
        inv2 * (1.0 / 132.0 -
        inv2 * (691.0 / 32760.0 -
        inv2 * (1.0 / 12.0)))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
    if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "trigamma requires x > 0");
    double acc = 0.0;
    while (x < 10.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv * (1.0 +
        inv * (0.5 +
        inv * (1.0 / 6.0 -
        inv2 * (1.0 / 30.0 -
        inv2 * (1.0 / 42.0 -
        inv2 * (1.0 / 30.0 -
        inv2 * (5.0 / 66.0 -
        inv2 * (691.0 / 2730.0 -
        inv2 * (7.0 / 6.0)))))))));
    return acc + series;
}

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_pdf(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta parameters must be positive");
    if (x < 0.0 || x > 1.0) return 0.0;
    if (x == 0.0) {
        if (a < 1.0) return std::numeric_limits<double>::infinity();
        return a == 1.0 ? std::exp(-log_beta(a, b)) : 0.0;
    }
    if (x == 1.0) {
        if (b < 1.0) return std::numeric_limits<double>::infinity();
        return b == 1.0 ? std::exp(-log_beta(a, b)) : 0.0;
    }
    return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
}

double incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta parameters must be positive");
    if (std::isnan(x)) return x;
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
    return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double incomplete_beta_inverse(double p, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta parameters must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "probability outside [0, 1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    double lo = 0.0;
    double hi = 1.0;
    double x = a / (a + b);
    for (int iter = 0; iter < 400; ++iter) {
        const double resid = incomplete_beta(x, a, b) - p;
        if (resid == 0.0) return x;
        if (resid < 0.0) lo = x; else hi = x;
        const double dens = beta_pdf(x, a, b);
        double next = (dens > 0.0 && std::isfinite(dens)) ? x - resid / dens : lo - 1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        // Relative stopping rule so tiny quantiles keep full precision.
        if (std::fabs(next - x) <= 4e-16 * next || hi - lo <= 4e-16 * hi) return next;
        x = next;
    }
    return x;
}

BetaLogMoments beta_log_moments(double a, double b) {
    const double dab = digamma(a + b);
    const double tab = trigamma(a + b);
    return BetaLogMoments{
        digamma(a) - dab,
        digamma(b) - dab,
        trigamma(a) - tab,
        trigamma(b) - tab,
        -tab,
    };
}

}  // namespace poolcast::special
