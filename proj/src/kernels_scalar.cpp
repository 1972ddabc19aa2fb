#include "kernels_impl.hpp"

#include <algorithm>

namespace poolcast::kernels::detail {

namespace {

void weighted_sum_scalar(const double* m, std::size_t k, std::size_t n, const double* w, double* out) {
    std::fill(out, out + n, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const double wi = w[i];
        const double* row = m + i * n;
        for (std::size_t j = 0; j < n; ++j) out[j] += wi * row[j];
    }
}

void ratio_sums_scalar(const double* m, std::size_t k, std::size_t n, const double* denom, double* out) {
    for (std::size_t i = 0; i < k; ++i) {
        const double* row = m + i * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] / denom[j];
        out[i] = acc;
    }
}

void blp_sums_scalar(const double* cdfs, const double* pdfs, std::size_t k, std::size_t n,
                     const double* u, const double* s, double* out) {
    const std::size_t r = k - 1;
    double* a = out;
    double* b = a + r;
    double* c = b + r;
    double* d = c + r;
    double* e = d + r * r;
    double* g = e + r * r;
    std::fill(out, out + 3 * r + 3 * r * r, 0.0);
    const double* last_cdf = cdfs + r * n;
    const double* last_pdf = pdfs + r * n;
    for (std::size_t j = 0; j < n; ++j) {
        const double inv_u = 1.0 / u[j];
        const double inv_1mu = 1.0 / (1.0 - u[j]);
        const double inv_s = 1.0 / s[j];
        for (std::size_t p = 0; p < r; ++p) {
            const double dcp = cdfs[p * n + j] - last_cdf[j];
            const double dfp = pdfs[p * n + j] - last_pdf[j];
            a[p] += dcp * inv_u;
            b[p] += dcp * inv_1mu;
            c[p] += dfp * inv_s;
            for (std::size_t q = 0; q <= p; ++q) {
                const double dcq = cdfs[q * n + j] - last_cdf[j];
                const double dfq = pdfs[q * n + j] - last_pdf[j];
                d[p * r + q] += dfp * dfq * inv_s * inv_s;
                e[p * r + q] += dcp * dcq * inv_u * inv_u;
                g[p * r + q] += dcp * dcq * inv_1mu * inv_1mu;
            }
        }
    }
    for (std::size_t p = 0; p < r; ++p) {
        for (std::size_t q = 0; q < p; ++q) {
            d[q * r + p] = d[p * r + q];
            e[q * r + p] = e[p * r + q];
            g[q * r + p] = g[p * r + q];
        }
    }
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += x[j];
    return acc;
}

double sum_sq_dev_scalar(const double* x, std::size_t n, double centre) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double dv = x[j] - centre;
        acc += dv * dv;
    }
    return acc;
}

}  // namespace

const KernelTable kScalarTable{
    weighted_sum_scalar, ratio_sums_scalar, blp_sums_scalar, sum_scalar, sum_sq_dev_scalar,
};

}  // namespace poolcast::kernels::detail
