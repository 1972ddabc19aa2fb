#include "poolcast/quadrature.hpp"

#include "poolcast/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace poolcast::quad {

Result integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, unsigned max_depth) {
    double err = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, max_depth, rel_tol, &err);
    if (!std::isfinite(value)) throw Error(ErrorCode::MomentUnavailable, "quadrature produced a non-finite value");
    return Result{value, err};
}

}  // namespace poolcast::quad
