// Compiled with -mavx2 -mfma; only entered after a CPUID check.
#include "kernels_impl.hpp"

#include <immintrin.h>

#include <algorithm>
#include <vector>

namespace poolcast::kernels::detail {

namespace {

// Wrapper so vectors of registers keep their alignment attribute.
struct Lane {
    __m256d v;
};

inline double hsum(__m256d v) noexcept {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void weighted_sum_avx2(const double* m, std::size_t k, std::size_t n, const double* w, double* out) {
    const std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t j = 0; j < n4; j += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t i = 0; i < k; ++i) {
            acc = _mm256_fmadd_pd(_mm256_set1_pd(w[i]), _mm256_loadu_pd(m + i * n + j), acc);
        }
        _mm256_storeu_pd(out + j, acc);
    }
    for (std::size_t j = n4; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += w[i] * m[i * n + j];
        out[j] = acc;
    }
}

void ratio_sums_avx2(const double* m, std::size_t k, std::size_t n, const double* denom, double* out) {
    const std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t i = 0; i < k; ++i) {
        const double* row = m + i * n;
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t j = 0; j < n4; j += 4) {
            acc = _mm256_add_pd(acc, _mm256_div_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(denom + j)));
        }
        double tail = 0.0;
        for (std::size_t j = n4; j < n; ++j) tail += row[j] / denom[j];
        out[i] = hsum(acc) + tail;
    }
}

void blp_sums_avx2(const double* cdfs, const double* pdfs, std::size_t k, std::size_t n,
                   const double* u, const double* s, double* out) {
    const std::size_t r = k - 1;
    const std::size_t nvec = 3 * r;
    const std::size_t nmat = r * r;
    std::vector<Lane> acc(nvec + 3 * nmat, Lane{_mm256_setzero_pd()});
    std::vector<Lane> dc(r);
    std::vector<Lane> df(r);
    const double* last_cdf = cdfs + r * n;
    const double* last_pdf = pdfs + r * n;
    const __m256d one = _mm256_set1_pd(1.0);

    const std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t j = 0; j < n4; j += 4) {
        const __m256d uv = _mm256_loadu_pd(u + j);
        const __m256d inv_u = _mm256_div_pd(one, uv);
        const __m256d inv_1mu = _mm256_div_pd(one, _mm256_sub_pd(one, uv));
        const __m256d inv_s = _mm256_div_pd(one, _mm256_loadu_pd(s + j));
        const __m256d inv_u2 = _mm256_mul_pd(inv_u, inv_u);
        const __m256d inv_1mu2 = _mm256_mul_pd(inv_1mu, inv_1mu);
        const __m256d inv_s2 = _mm256_mul_pd(inv_s, inv_s);
        const __m256d lc = _mm256_loadu_pd(last_cdf + j);
        const __m256d lf = _mm256_loadu_pd(last_pdf + j);
        for (std::size_t p = 0; p < r; ++p) {
            dc[p].v = _mm256_sub_pd(_mm256_loadu_pd(cdfs + p * n + j), lc);
            df[p].v = _mm256_sub_pd(_mm256_loadu_pd(pdfs + p * n + j), lf);
            acc[p].v = _mm256_fmadd_pd(dc[p].v, inv_u, acc[p].v);
            acc[r + p].v = _mm256_fmadd_pd(dc[p].v, inv_1mu, acc[r + p].v);
            acc[2 * r + p].v = _mm256_fmadd_pd(df[p].v, inv_s, acc[2 * r + p].v);
        }
        for (std::size_t p = 0; p < r; ++p) {
            for (std::size_t q = 0; q <= p; ++q) {
                const std::size_t idx = nvec + p * r + q;
                const __m256d cc = _mm256_mul_pd(dc[p].v, dc[q].v);
                acc[idx].v = _mm256_fmadd_pd(_mm256_mul_pd(df[p].v, df[q].v), inv_s2, acc[idx].v);
                acc[idx + nmat].v = _mm256_fmadd_pd(cc, inv_u2, acc[idx + nmat].v);
                acc[idx + 2 * nmat].v = _mm256_fmadd_pd(cc, inv_1mu2, acc[idx + 2 * nmat].v);
            }
        }
    }

    for (std::size_t t = 0; t < acc.size(); ++t) out[t] = hsum(acc[t].v);

    double* a = out;
    double* b = a + r;
    double* c = b + r;
    double* d = c + r;
    double* e = d + nmat;
    double* g = e + nmat;
    for (std::size_t j = n4; j < n; ++j) {
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

double sum_avx2(const double* x, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < n4; j += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + j));
    double tail = 0.0;
    for (std::size_t j = n4; j < n; ++j) tail += x[j];
    return hsum(acc) + tail;
}

double sum_sq_dev_avx2(const double* x, std::size_t n, double centre) {
    const std::size_t n4 = n & ~std::size_t{3};
    const __m256d c = _mm256_set1_pd(centre);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < n4; j += 4) {
        const __m256d dv = _mm256_sub_pd(_mm256_loadu_pd(x + j), c);
        acc = _mm256_fmadd_pd(dv, dv, acc);
    }
    double tail = 0.0;
    for (std::size_t j = n4; j < n; ++j) tail += (x[j] - centre) * (x[j] - centre);
    return hsum(acc) + tail;
}

const KernelTable kAvx2Table{
    weighted_sum_avx2, ratio_sums_avx2, blp_sums_avx2, sum_avx2, sum_sq_dev_avx2,
};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kAvx2Table; }

}  // namespace poolcast::kernels::detail
