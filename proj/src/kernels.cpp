#include "poolcast/kernels.hpp"

#include "kernels_impl.hpp"
#include "poolcast/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace poolcast::kernels {

namespace detail {
#ifndef POOLCAST_HAVE_AVX2
const KernelTable* avx2_table() noexcept { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() noexcept {
#if defined(POOLCAST_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend initial_backend() noexcept {
    if (const char* env = std::getenv("POOLCAST_SIMD")) {
        if (std::string(env) == "scalar") return Backend::Scalar;
    }
    return backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& active() noexcept {
    static std::atomic<Backend> backend{initial_backend()};
    return backend;
}

const detail::KernelTable& table() noexcept {
    if (active().load(std::memory_order_relaxed) == Backend::Avx2) return *detail::avx2_table();
    return detail::kScalarTable;
}

void check_matrix(const ComponentMatrix& m) {
    if (m.k == 0 || m.data.size() != m.k * m.n) throw Error(ErrorCode::LengthMismatch, "component matrix shape");
}

}  // namespace

std::string_view backend_name(Backend b) noexcept { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool backend_available(Backend b) noexcept {
    if (b == Backend::Scalar) return true;
    static const bool avx2 = detail::avx2_table() != nullptr && cpu_has_avx2();
    return avx2;
}

Backend active_backend() noexcept { return active().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (!backend_available(b)) {
        throw Error(ErrorCode::InvalidArgument, std::string("SIMD backend not available: ") + std::string(backend_name(b)));
    }
    active().store(b, std::memory_order_relaxed);
}

void weighted_sum(ComponentMatrix m, std::span<const double> w, std::span<double> out) {
    check_matrix(m);
    if (w.size() != m.k || out.size() != m.n) throw Error(ErrorCode::LengthMismatch, "weighted_sum operand sizes");
    table().weighted_sum(m.data.data(), m.k, m.n, w.data(), out.data());
}

void ratio_sums(ComponentMatrix m, std::span<const double> denom, std::span<double> out) {
    check_matrix(m);
    if (denom.size() != m.n || out.size() != m.k) throw Error(ErrorCode::LengthMismatch, "ratio_sums operand sizes");
    table().ratio_sums(m.data.data(), m.k, m.n, denom.data(), out.data());
}

BlpSums blp_sums(ComponentMatrix cdfs, ComponentMatrix pdfs, std::span<const double> u,
                 std::span<const double> s) {
    check_matrix(cdfs);
    check_matrix(pdfs);
    if (cdfs.k != pdfs.k || cdfs.n != pdfs.n || u.size() != cdfs.n || s.size() != cdfs.n) {
        throw Error(ErrorCode::LengthMismatch, "blp_sums operand sizes");
    }
    const std::size_t r = cdfs.k - 1;
    BlpSums out;
    if (r == 0) return out;
    std::vector<double> raw(3 * r + 3 * r * r);
    table().blp_sums(cdfs.data.data(), pdfs.data.data(), cdfs.k, cdfs.n, u.data(), s.data(), raw.data());
    auto take = [&raw](std::size_t offset, std::size_t len) {
        return std::vector<double>(raw.begin() + static_cast<std::ptrdiff_t>(offset),
                                   raw.begin() + static_cast<std::ptrdiff_t>(offset + len));
    };
    out.cdf_over_u = take(0, r);
    out.cdf_over_1mu = take(r, r);
    out.pdf_over_s = take(2 * r, r);
    out.pdf_outer = take(3 * r, r * r);
    out.cdf_outer_u = take(3 * r + r * r, r * r);
    out.cdf_outer_1mu = take(3 * r + 2 * r * r, r * r);
    return out;
}

double sum(std::span<const double> x) { return table().sum(x.data(), x.size()); }

double sum_sq_dev(std::span<const double> x, double centre) {
    return table().sum_sq_dev(x.data(), x.size(), centre);
}

}  // namespace poolcast::kernels
