#include "poolcast/pit.hpp"

#include "poolcast/error.hpp"
#include "poolcast/kernels.hpp"
#include "poolcast/quadrature.hpp"
#include "poolcast/rng.hpp"
#include "poolcast/special.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace poolcast::pit {

double randomized_pit(const PredictiveDist& d, double y, double v) {
    if (!(v > 0.0 && v < 1.0)) throw Error(ErrorCode::InvalidArgument, "auxiliary uniform must lie in (0, 1)");
    const double hi = d.cdf(y);
    const double lo = d.cdf_left(y);
    return std::clamp(lo + v * (hi - lo), 0.0, 1.0);
}

double auxiliary_uniform(std::uint64_t seed, std::size_t j) noexcept {
    // Offset keeps PIT streams apart from simulation streams under the same seed.
    return StreamRng(seed ^ 0x5049545049545049ULL, j).uniform();
}

PitSample pit_sample(std::span<const PredictiveDist> forecasts, std::span<const double> obs, std::uint64_t seed) {
    if (forecasts.size() != obs.size()) throw Error(ErrorCode::LengthMismatch, "forecasts and observations differ in length");
    PitSample out;
    out.z.resize(obs.size());
    out.v.resize(obs.size());
    for (std::size_t j = 0; j < obs.size(); ++j) {
        out.v[j] = auxiliary_uniform(seed, j);
        out.z[j] = randomized_pit(forecasts[j], obs[j], out.v[j]);
    }
    return out;
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw Error(ErrorCode::TooFewSamples, "variance needs at least two values");
    const double n = static_cast<double>(x.size());
    const double mean = kernels::sum(x) / n;
    return kernels::sum_sq_dev(x, mean) / (n - 1.0);
}

std::string_view to_string(Dispersion d) noexcept {
    switch (d) {
        case Dispersion::Underdispersed: return "underdispersed";
        case Dispersion::Neutral: return "neutrally_dispersed";
        case Dispersion::Overdispersed: return "overdispersed";
    }
    return "neutrally_dispersed";
}

DispersionReport dispersion_report(std::span<const double> z) {
    if (z.size() < 2) throw Error(ErrorCode::TooFewSamples, "dispersion report needs at least two PIT values");
    for (double zj : z) {
        if (!(zj >= 0.0 && zj <= 1.0)) throw Error(ErrorCode::InvalidArgument, "PIT values must lie in [0, 1]");
    }
    const double n = static_cast<double>(z.size());
    const double mean = kernels::sum(z) / n;
    const double var = kernels::sum_sq_dev(z, mean) / (n - 1.0);
    double m2 = 0.0;
    double m4 = 0.0;
    for (double zj : z) {
        const double d2 = (zj - mean) * (zj - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    constexpr double z975 = 1.959963984540054;
    const double hw = z975 * std::sqrt(std::max(0.0, m4 - m2 * m2) / n);

    DispersionReport r;
    r.pit_variance = var;
    r.n = z.size();
    r.ci_halfwidth = hw;
    constexpr double neutral = 1.0 / 12.0;
    if (std::fabs(var - neutral) <= hw) {
        r.classification = Dispersion::Neutral;
    } else {
        r.classification = var > neutral ? Dispersion::Underdispersed : Dispersion::Overdispersed;
    }
    return r;
}

double kolmogorov_sf(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 1.18) {
        // Small-t series for the CDF.
        constexpr double pi2_8 = 1.2337005501361698;  // pi^2 / 8
        const double w = std::sqrt(2.0 * 3.141592653589793) / t;
        double cdf = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double m = 2.0 * k - 1.0;
            cdf += std::exp(-m * m * pi2_8 / (t * t));
        }
        return std::clamp(1.0 - w * cdf, 0.0, 1.0);
    }
    double sf = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        sf += sign * term;
        if (term < 1e-18) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sf, 0.0, 1.0);
}

KsResult ks_uniform(std::span<const double> z) {
    if (z.empty()) throw Error(ErrorCode::EmptyInput, "KS test on an empty sample");
    std::vector<double> sorted(z.begin(), z.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double zi = std::clamp(sorted[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - zi, zi - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return KsResult{d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

std::vector<HistogramBin> pit_histogram(std::span<const double> z, std::size_t bins) {
    if (bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
    std::vector<HistogramBin> out(bins);
    const double width = 1.0 / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b] = HistogramBin{static_cast<double>(b) * width, static_cast<double>(b + 1) * width, 0};
    }
    out.back().hi = 1.0;
    for (double zj : z) {
        if (!(zj >= 0.0 && zj <= 1.0)) throw Error(ErrorCode::InvalidArgument, "PIT values must lie in [0, 1]");
        auto b = static_cast<std::size_t>(zj * static_cast<double>(bins));
        ++out[std::min(b, bins - 1)].count;
    }
    return out;
}

double var_z_sigma(double sigma) {
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
    // With z = Phi(t) the endpoint singularities of Phi^{-1} disappear:
    //   E[Z]   = int (1 - Phi(sigma t)) phi(t) dt
    //   E[Z^2] = 2 int Phi(t) (1 - Phi(sigma t)) phi(t) dt
    auto first = [sigma](double t) { return special::normal_sf(sigma * t) * special::normal_pdf(t); };
    auto second = [sigma](double t) {
        return special::normal_cdf(t) * special::normal_sf(sigma * t) * special::normal_pdf(t);
    };
    const double m1 = quad::integrate(first, -quad::kInf, quad::kInf, 1e-13).value;
    const double m2 = quad::integrate(second, -quad::kInf, quad::kInf, 1e-13).value;
    return 2.0 * m2 - m1 * m1;
}

double marginal_calibration_gap(std::span<const PredictiveDist> forecasts, std::span<const double> obs,
                                std::span<const double> grid) {
    if (forecasts.size() != obs.size()) throw Error(ErrorCode::LengthMismatch, "forecasts and observations differ in length");
    if (obs.empty() || grid.empty()) throw Error(ErrorCode::EmptyInput, "marginal calibration gap needs data and a grid");
    std::vector<double> sorted(obs.begin(), obs.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(obs.size());
    std::vector<double> values(forecasts.size());
    double gap = 0.0;
    for (double y : grid) {
        for (std::size_t j = 0; j < forecasts.size(); ++j) values[j] = forecasts[j].cdf(y);
        const double mean_cdf = kernels::sum(values) / n;
        const auto below = std::upper_bound(sorted.begin(), sorted.end(), y) - sorted.begin();
        gap = std::max(gap, std::fabs(mean_cdf - static_cast<double>(below) / n));
    }
    return gap;
}

std::vector<double> range_grid(std::span<const double> obs, std::size_t points) {
    if (obs.empty()) throw Error(ErrorCode::EmptyInput, "grid needs observations");
    const auto [mn, mx] = std::minmax_element(obs.begin(), obs.end());
    std::vector<double> grid(std::max<std::size_t>(points, 2));
    const double step = (*mx - *mn) / static_cast<double>(grid.size() - 1);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = *mn + step * static_cast<double>(i);
    grid.back() = *mx;
    return grid;
}

CalibrationReport calibration_report(std::span<const PredictiveDist> forecasts, std::span<const double> obs,
                                     const PitSample& sample, std::span<const double> grid, std::size_t bins) {
    if (sample.z.size() != obs.size()) throw Error(ErrorCode::LengthMismatch, "PIT sample and observations differ in length");
    CalibrationReport r;
    const auto ks = ks_uniform(sample.z);
    r.ks_statistic = ks.statistic;
    r.ks_p_value = ks.p_value;
    r.marginal_gap = marginal_calibration_gap(forecasts, obs, grid);
    r.histogram = pit_histogram(sample.z, bins);
    return r;
}

std::vector<ReliabilityBin> reliability_bins(std::span<const double> p, std::span<const int> y01, std::size_t bins) {
    if (p.size() != y01.size()) throw Error(ErrorCode::LengthMismatch, "probabilities and outcomes differ in length");
    if (bins == 0) throw Error(ErrorCode::InvalidArgument, "reliability diagram needs at least one bin");
    std::vector<std::size_t> count(bins, 0);
    std::vector<double> successes(bins, 0.0);
    std::vector<double> psum(bins, 0.0);
    std::vector<double> pvar(bins, 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (!(p[j] >= 0.0 && p[j] <= 1.0)) throw Error(ErrorCode::InvalidArgument, "probabilities must lie in [0, 1]");
        if (y01[j] != 0 && y01[j] != 1) throw Error(ErrorCode::InvalidArgument, "binary outcomes must be 0 or 1");
        const auto b = std::min(static_cast<std::size_t>(p[j] * static_cast<double>(bins)), bins - 1);
        ++count[b];
        successes[b] += y01[j] == 0 ? 1.0 : 0.0;
        psum[b] += p[j];
        pvar[b] += p[j] * (1.0 - p[j]);
    }
    std::vector<ReliabilityBin> out;
    const double width = 1.0 / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double nb = static_cast<double>(count[b]);
        out.push_back(ReliabilityBin{(static_cast<double>(b) + 0.5) * width, successes[b] / nb, count[b],
                                     psum[b] / nb, std::sqrt(pvar[b]) / nb});
    }
    return out;
}

ReliabilityTest reliability_test(std::span<const ReliabilityBin> bins, double level) {
    ReliabilityTest t;
    if (bins.empty()) return t;
    t.critical = special::normal_quantile(1.0 - level / (2.0 * static_cast<double>(bins.size())));
    for (const auto& b : bins) {
        const double diff = std::fabs(b.freq - b.mean_forecast);
        double z;
        if (b.freq_se > 0.0) z = diff / b.freq_se;
        else z = diff > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
        t.max_abs_z = std::max(t.max_abs_z, z);
    }
    t.accept = t.max_abs_z <= t.critical;
    return t;
}

void write_histogram_csv(std::ostream& os, std::span<const HistogramBin> bins) {
    os << "bin_lo,bin_hi,count\n";
    for (const auto& b : bins) os << b.lo << ',' << b.hi << ',' << b.count << '\n';
}

void write_reliability_csv(std::ostream& os, std::span<const ReliabilityBin> bins) {
    os << "bin_center,freq,count\n";
    for (const auto& b : bins) os << b.bin_center << ',' << b.freq << ',' << b.count << '\n';
}

}  // namespace poolcast::pit
