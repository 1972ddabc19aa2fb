#include "optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace poolcast::optim {

namespace {

NelderMeadResult nelder_mead_once(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                                  double ftol, std::size_t max_iter) {
    const auto n = x0.size();
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), x0);
    std::vector<double> vals(static_cast<std::size_t>(n + 1));
    for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)][i] += step[i];
    for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = f(pts[i]);

    std::vector<std::size_t> order(pts.size());
    NelderMeadResult out;
    const auto sort_vertices = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    };
    sort_vertices();
    for (; out.iterations < max_iter; ++out.iterations) {
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[order.size() - 2];
        double diam = 0.0;
        for (const auto& p : pts) diam = std::max(diam, (p - pts[best]).lpNorm<Eigen::Infinity>());
        if (std::isfinite(vals[worst]) && vals[best] - vals[worst] <= ftol && diam < 1e-7) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += pts[order[i]];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
        const double fr = f(xr);
        if (fr > vals[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = f(xe);
            if (fe > fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
        } else if (fr > vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
        } else {
            const bool outside = fr > vals[worst];
            const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                               : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
            const double fc = f(xc);
            if (fc > (outside ? fr : vals[worst])) {
                pts[worst] = xc;
                vals[worst] = fc;
            } else {
                for (std::size_t i = 1; i < order.size(); ++i) {
                    auto& p = pts[order[i]];
                    p = pts[best] + 0.5 * (p - pts[best]);
                    vals[order[i]] = f(p);
                }
            }
        }
        sort_vertices();
        out.trace.push_back(vals[order.front()]);
    }
    out.x = pts[order.front()];
    out.value = vals[order.front()];
    return out;
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             double ftol, std::size_t max_iter) {
    NelderMeadResult total;
    total.x = x0;
    total.value = f(x0);
    total.trace.push_back(total.value);
    Eigen::VectorXd scale = step;
    for (int restart = 0; restart < 20; ++restart) {
        auto run = nelder_mead_once(f, total.x, scale, ftol, max_iter - std::min(max_iter, total.iterations));
        total.iterations += run.iterations;
        for (double v : run.trace) total.trace.push_back(std::max(v, total.trace.back()));
        const double gain = run.value - total.value;
        if (run.value > total.value) {
            total.x = run.x;
            total.value = run.value;
        }
        total.converged = run.converged;
        if (!run.converged || gain < ftol) break;
        scale *= 0.5;
    }
    return total;
}

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x, double h) {
    // Fourth-order central stencil.
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        auto at = [&](double s) {
            Eigen::VectorXd y = x;
            y[i] += s * h;
            return f(y);
        };
        g[i] = (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h);
    }
    return g;
}

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, double h) {
    const auto n = x.size();
    Eigen::MatrixXd hess(n, n);
    const double f0 = f(x);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd a = x;
        Eigen::VectorXd b = x;
        a[i] += h;
        b[i] -= h;
        hess(i, i) = (f(a) - 2.0 * f0 + f(b)) / (h * h);
        for (Eigen::Index j = 0; j < i; ++j) {
            Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
            pp[i] += h; pp[j] += h;
            pm[i] += h; pm[j] -= h;
            mp[i] -= h; mp[j] += h;
            mm[i] -= h; mm[j] -= h;
            hess(i, j) = hess(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
        }
    }
    return hess;
}

PolishResult fd_newton_polish(const Objective& f, const Eigen::VectorXd& x0, double f0, std::size_t max_iter) {
    PolishResult out;
    out.x = x0;
    out.value = f0;
    out.trace.push_back(f0);
    for (; out.iterations < max_iter; ++out.iterations) {
        const Eigen::VectorXd g = fd_gradient(f, out.x, 1e-3);
        if (!g.allFinite()) break;
        if (g.lpNorm<Eigen::Infinity>() < 1e-10) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd hess = fd_hessian(f, out.x, 1e-4);
        Eigen::LLT<Eigen::MatrixXd> llt(-hess);
        if (llt.info() != Eigen::Success || !hess.allFinite()) break;
        const Eigen::VectorXd d = llt.solve(g);
        double t = 1.0;
        bool accepted = false;
        for (int k = 0; k < 40; ++k, t *= 0.5) {
            const Eigen::VectorXd xn = out.x + t * d;
            const double fn = f(xn);
            if (!std::isfinite(fn)) continue;
            // Near the optimum the objective is flat to rounding; a full step
            // that shrinks the gradient is taken but not recorded as a gain.
            const bool take = fn >= out.value ||
                              (k == 0 && fn >= out.value - 8.0 * std::numeric_limits<double>::epsilon() * std::fabs(out.value) &&
                               fd_gradient(f, xn, 1e-3).lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>());
            if (take) {
                const double moved = (xn - out.x).lpNorm<Eigen::Infinity>();
                out.x = xn;
                out.value = fn;
                if (fn >= out.trace.back()) out.trace.push_back(fn);
                accepted = true;
                if (moved < 1e-13) out.converged = true;
                break;
            }
        }
        if (!accepted) {
            // No representable improvement along the Newton direction.
            out.converged = true;
            break;
        }
        if (out.converged) break;
    }
    return out;
}

bool inverse_negative(const Eigen::MatrixXd& h, Eigen::MatrixXd& cov) {
    if (h.size() == 0 || !h.allFinite()) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-h);
    if (eig.info() != Eigen::Success) return false;
    const double top = eig.eigenvalues().maxCoeff();
    const double bottom = eig.eigenvalues().minCoeff();
    if (!(top > 0.0) || bottom <= 1e-10 * top) return false;
    cov = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return true;
}

}  // namespace poolcast::optim
