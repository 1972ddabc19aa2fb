#pragma once

#include <span>
#include <string>
#include <string_view>

namespace poolcast {

/// Link functions for generalized linear pools, h(G(y)) = sum_i w_i h(F_i(y)).
enum class LinkKind {
    Identity,        // type A: h(x) = x, defined on [0, 1]
    Reciprocal,      // type B: h(x) = 1/x (harmonic pool)
    Log,             // type C: h(x) = log x (geometric pool)
    ProbitQuantile,  // type D: h(x) = Phi^{-1}(x)
};

struct LinkFunction {
    LinkKind kind = LinkKind::Identity;

    /// CDF values fed to links B-D are clamped to [kClamp, 1 - kClamp].
    static constexpr double kClamp = 1e-12;

    /// False only for Identity; open-interval links need clamping.
    bool open_domain() const noexcept { return kind != LinkKind::Identity; }
    /// Types C and D accept weights with any positive sum; A and B need sum one.
    bool requires_unit_sum() const noexcept {
        return kind == LinkKind::Identity || kind == LinkKind::Reciprocal;
    }

    double apply(double x) const;
    double inverse(double s) const;
    double derivative(double x) const;

    std::string_view name() const noexcept;

    /// h^{-1}(sum_i w_i h(F_i)) with the clamp policy: exact 0 (1) when every
    /// F_i is 0 (1), otherwise F_i clamped into [kClamp, 1 - kClamp].
    double pool_cdf(std::span<const double> w, std::span<const double> cdfs) const;
    /// Density of the pooled CDF, sum_i w_i h'(F_i) f_i / h'(G); clamped components contribute nothing.
    double pool_density(std::span<const double> w, std::span<const double> cdfs,
                        std::span<const double> pdfs) const;
};

/// Parses "identity", "reciprocal", "log", "probit" (case-sensitive).
LinkFunction parse_link(std::string_view name);

}  // namespace poolcast
