#pragma once

#include <functional>
#include <limits>

namespace poolcast::quad {

struct Result {
    double value;
    double error_estimate;
};

/// Adaptive Gauss-Kronrod (7/15) quadrature on [a, b]; either bound may be
/// infinite. Throws Error(MomentUnavailable) when the estimate is not finite.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, unsigned max_depth = 30);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace poolcast::quad
