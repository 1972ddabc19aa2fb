#pragma once

// Data-parallel inner loops over forecast cases. Each kernel has a scalar
// reference implementation and an AVX2 variant; the backend is chosen once at
// startup from CPUID and may be overridden with POOLCAST_SIMD=scalar or
// set_backend(). Results agree to rounding, not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace poolcast::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b) noexcept;
bool backend_available(Backend b) noexcept;
Backend active_backend() noexcept;
/// Throws Error(InvalidArgument) if the backend is not available on this CPU.
void set_backend(Backend b);

/// Read-only k x n matrix stored component-major: entry (i, j) is data[i * n + j].
struct ComponentMatrix {
    std::span<const double> data;
    std::size_t k = 0;
    std::size_t n = 0;

    const double* row(std::size_t i) const noexcept { return data.data() + i * n; }
};

/// out[j] = sum_i w[i] * M(i, j)
void weighted_sum(ComponentMatrix m, std::span<const double> w, std::span<double> out);

/// out[i] = sum_j M(i, j) / denom[j]
void ratio_sums(ComponentMatrix m, std::span<const double> denom, std::span<double> out);

/// Case sums needed by the beta-transformed pool's derivatives, with the last
/// component eliminated (d_i = M(i, .) - M(k-1, .), i < k-1). Matrices are
/// (k-1) x (k-1), row-major, symmetric.
struct BlpSums {
    std::vector<double> cdf_over_u;       // sum_j dF_ij / u_j
    std::vector<double> cdf_over_1mu;     // sum_j dF_ij / (1 - u_j)
    std::vector<double> pdf_over_s;       // sum_j df_ij / s_j
    std::vector<double> pdf_outer;        // sum_j df_aj df_bj / s_j^2
    std::vector<double> cdf_outer_u;      // sum_j dF_aj dF_bj / u_j^2
    std::vector<double> cdf_outer_1mu;    // sum_j dF_aj dF_bj / (1 - u_j)^2
};

/// u and s are the pooled CDF and density values per case.
BlpSums blp_sums(ComponentMatrix cdfs, ComponentMatrix pdfs, std::span<const double> u,
                 std::span<const double> s);

double sum(std::span<const double> x);
/// sum_j (x_j - centre)^2
double sum_sq_dev(std::span<const double> x, double centre);

}  // namespace poolcast::kernels
