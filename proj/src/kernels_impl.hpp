#pragma once

#include <cstddef>

namespace poolcast::kernels::detail {

// Raw-pointer entry points shared by every backend. Matrices are
// component-major with row length n.
struct KernelTable {
    void (*weighted_sum)(const double* m, std::size_t k, std::size_t n, const double* w, double* out);
    void (*ratio_sums)(const double* m, std::size_t k, std::size_t n, const double* denom, double* out);
    // out holds 3*(k-1) vector sums followed by 3*(k-1)^2 matrix sums.
    void (*blp_sums)(const double* cdfs, const double* pdfs, std::size_t k, std::size_t n,
                     const double* u, const double* s, double* out);
    double (*sum)(const double* x, std::size_t n);
    double (*sum_sq_dev)(const double* x, std::size_t n, double centre);
};

extern const KernelTable kScalarTable;
// Null when the build has no AVX2 translation unit.
const KernelTable* avx2_table() noexcept;

}  // namespace poolcast::kernels::detail
