#include "poolcast/fitting.hpp"

#include "optim.hpp"
#include "poolcast/error.hpp"
#include "poolcast/kernels.hpp"
#include "poolcast/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace poolcast::fit {

namespace {

constexpr double kBoundaryWeight = 1e-6;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

kernels::ComponentMatrix cdf_matrix(const ComponentTable& t) { return {t.cdf, t.k, t.n}; }
kernels::ComponentMatrix pdf_matrix(const ComponentTable& t) { return {t.pdf, t.k, t.n}; }

struct Pooled {
    std::vector<double> u;
    std::vector<double> s;
    std::size_t clamped = 0;
};

Pooled pooled_values(const std::vector<double>& w, const ComponentTable& t) {
    Pooled p;
    p.u.resize(t.n);
    p.s.resize(t.n);
    kernels::weighted_sum(cdf_matrix(t), w, p.u);
    kernels::weighted_sum(pdf_matrix(t), w, p.s);
    for (std::size_t j = 0; j < t.n; ++j) {
        if (p.u[j] < kCdfClamp || p.u[j] > 1.0 - kCdfClamp) ++p.clamped;
        p.u[j] = std::clamp(p.u[j], kCdfClamp, 1.0 - kCdfClamp);
        p.s[j] = std::max(p.s[j], kDensityFloor);
    }
    return p;
}

void require_cases(std::size_t n, std::size_t needed, const char* method) {
    if (n < needed) {
        throw Error(ErrorCode::TooFewSamples, std::string(method) + " fit needs at least " + std::to_string(needed) +
                                                  " cases, got " + std::to_string(n));
    }
}

std::vector<double> equal_weights(std::size_t k) { return std::vector<double>(k, 1.0 / static_cast<double>(k)); }

// w_k = 1 - sum of the first k-1 entries of x.
std::vector<double> eliminated_weights(const Eigen::VectorXd& x, std::size_t k) {
    std::vector<double> w(k);
    double rest = 1.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        w[i] = x[static_cast<Eigen::Index>(i)];
        rest -= w[i];
    }
    w[k - 1] = rest;
    return w;
}

// Additive log-ratio coordinates relative to the last weight.
std::vector<double> alr_weights(const Eigen::VectorXd& eta, std::size_t k) {
    double top = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) top = std::max(top, eta[static_cast<Eigen::Index>(i)]);
    std::vector<double> w(k);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        w[i] = std::exp(eta[static_cast<Eigen::Index>(i)] - top);
        total += w[i];
    }
    w[k - 1] = std::exp(-top);
    total += w[k - 1];
    for (double& wi : w) wi /= total;
    return w;
}

bool all_positive(const std::vector<double>& w) {
    return std::all_of(w.begin(), w.end(), [](double wi) { return wi > 0.0; });
}

std::vector<bool> boundary_flags(const std::vector<double>& w) {
    std::vector<bool> flags(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) flags[i] = w[i] < kBoundaryWeight;
    return flags;
}

// SEs of weights with w_k eliminated: the first k-1 from the covariance
// diagonal, the last as the standard error of 1 - sum of the others.
std::vector<double> eliminated_weight_se(const Eigen::MatrixXd& cov, std::size_t k) {
    std::vector<double> se(k, 0.0);
    const auto r = static_cast<Eigen::Index>(k - 1);
    for (Eigen::Index i = 0; i < r; ++i) se[static_cast<std::size_t>(i)] = std::sqrt(cov(i, i));
    if (r > 0) se[k - 1] = std::sqrt(std::max(0.0, cov.topLeftCorner(r, r).sum()));
    return se;
}

double tlp_loglik(const std::vector<double>& w, const ComponentTable& t, std::vector<double>& s) {
    s.resize(t.n);
    kernels::weighted_sum(pdf_matrix(t), w, s);
    double ll = 0.0;
    for (double& sj : s) {
        sj = std::max(sj, kDensityFloor);
        ll += std::log(sj);
    }
    return ll;
}

// Gradient and Hessian of the TLP sum log score in (w_1, ..., w_{k-1}).
void tlp_derivatives(const ComponentTable& t, const std::vector<double>& s, Eigen::VectorXd& g, Eigen::MatrixXd& h) {
    const std::size_t r = t.k - 1;
    g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r));
    h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
    const double* last = t.pdf.data() + r * t.n;
    std::vector<double> d(r);
    for (std::size_t j = 0; j < t.n; ++j) {
        for (std::size_t a = 0; a < r; ++a) d[a] = (t.pdf[a * t.n + j] - last[j]) / s[j];
        for (std::size_t a = 0; a < r; ++a) {
            g[static_cast<Eigen::Index>(a)] += d[a];
            for (std::size_t b = 0; b <= a; ++b) h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) -= d[a] * d[b];
        }
    }
    h = h.selfadjointView<Eigen::Lower>();
}

// Largest t in (0, 1] keeping every weight of w + t dw strictly positive.
double max_interior_step(const std::vector<double>& w, const std::vector<double>& dw) {
    double t = 1.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (dw[i] < 0.0) t = std::min(t, 0.99 * w[i] / -dw[i]);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Beta-transformed pool: Newton in (w_1..w_{k-1}, log alpha, log beta), with
// an optional log barrier mu * sum_i log w_i on the mean log score.

struct BlpNewtonOutcome {
    bool converged = false;
    bool hit_boundary = false;
    bool used_gradient = false;
    std::size_t iterations = 0;
};

struct BlpPoint {
    std::vector<double> w;
    double alpha;
    double beta;
};

BlpPoint blp_point(const Eigen::VectorXd& x, std::size_t k) {
    const auto r = static_cast<Eigen::Index>(k - 1);
    return {eliminated_weights(x, k), std::exp(x[r]), std::exp(x[r + 1])};
}

double blp_phi(const Eigen::VectorXd& x, const ComponentTable& t, double mu) {
    const BlpPoint p = blp_point(x, t.k);
    if (!all_positive(p.w) || !std::isfinite(p.alpha) || !std::isfinite(p.beta) || p.alpha <= 0.0 || p.beta <= 0.0) {
        return kNegInf;
    }
    double phi = blp_loglik(p.w, p.alpha, p.beta, t) / static_cast<double>(t.n);
    if (mu > 0.0) {
        for (double wi : p.w) phi += mu * std::log(wi);
    }
    return std::isfinite(phi) ? phi : kNegInf;
}

// Mean gradient and Hessian in (w_1..w_{k-1}, log alpha, log beta), barrier included.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> blp_scaled_derivatives(const Eigen::VectorXd& x, const ComponentTable& t,
                                                                   double mu) {
    const std::size_t k = t.k;
    const auto r = static_cast<Eigen::Index>(k - 1);
    const double n = static_cast<double>(t.n);
    const BlpPoint p = blp_point(x, k);
    const BlpDerivatives d = blp_objective_and_derivatives(p.w, p.alpha, p.beta, t);

    Eigen::VectorXd g = d.gradient / n;
    Eigen::MatrixXd h = d.hessian / n;
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(r + 2);
    scale[r] = p.alpha;
    scale[r + 1] = p.beta;
    h = scale.asDiagonal() * h * scale.asDiagonal();
    h(r, r) += p.alpha * g[r];
    h(r + 1, r + 1) += p.beta * g[r + 1];
    g = g.cwiseProduct(scale);
    if (mu > 0.0) {
        const double wk = p.w[k - 1];
        for (Eigen::Index a = 0; a < r; ++a) {
            const double wa = p.w[static_cast<std::size_t>(a)];
            g[a] += mu * (1.0 / wa - 1.0 / wk);
            for (Eigen::Index b = 0; b < r; ++b) h(a, b) -= mu * ((a == b ? 1.0 / (wa * wa) : 0.0) + 1.0 / (wk * wk));
        }
    }
    return {g, h};
}

BlpNewtonOutcome blp_newton(const ComponentTable& t, Eigen::VectorXd& x, double mu, std::size_t max_iter, double gtol,
                            double ftol, std::vector<double>& trace) {
    const std::size_t k = t.k;
    const auto r = static_cast<Eigen::Index>(k - 1);
    BlpNewtonOutcome out;
    double phi = blp_phi(x, t, mu);
    if (trace.empty() || phi >= trace.back()) trace.push_back(phi);

    for (; out.iterations < max_iter;) {
        const BlpPoint p = blp_point(x, k);
        const auto [g, h] = blp_scaled_derivatives(x, t, mu);
        Eigen::LLT<Eigen::MatrixXd> llt(-h);
        const bool newton = llt.info() == Eigen::Success;
        if (g.lpNorm<Eigen::Infinity>() < gtol) {
            out.converged = true;
            // One last full Newton step; quadratic convergence takes the
            // iterate from the gradient tolerance to rounding level.
            if (newton) {
                const Eigen::VectorXd x_new = x + llt.solve(g);
                double phi_new = kNegInf;
                double g_new = kInf;
                try {
                    if (mu > 0.0 || k == 1 || all_positive(eliminated_weights(x_new, k))) {
                        phi_new = blp_phi(x_new, t, mu);
                        g_new = blp_scaled_derivatives(x_new, t, mu).first.lpNorm<Eigen::Infinity>();
                    }
                } catch (const Error&) {
                }
                // At this distance the objective is flat to rounding, so a
                // smaller gradient decides; the trace only records increases.
                const double ulps = 8.0 * std::numeric_limits<double>::epsilon() * std::fabs(phi);
                if (phi_new >= phi || (phi_new >= phi - ulps && g_new < g.lpNorm<Eigen::Infinity>())) {
                    x = x_new;
                    if (phi_new >= phi) trace.push_back(phi_new);
                    phi = phi_new;
                }
            }
            break;
        }

        Eigen::VectorXd dir;
        if (newton) {
            dir = llt.solve(g);
        } else {
            out.used_gradient = true;
            dir = g;
        }

        std::vector<double> dw(k, 0.0);
        for (Eigen::Index i = 0; i < r; ++i) {
            dw[static_cast<std::size_t>(i)] = dir[i];
            dw[k - 1] -= dir[i];
        }
        double step = max_interior_step(p.w, dw);
        const double log_move = std::max(std::fabs(dir[r]), std::fabs(dir[r + 1]));
        if (step * log_move > 2.0) step = 2.0 / log_move;

        const double slope = g.dot(dir);
        bool accepted = false;
        double phi_new = phi;
        Eigen::VectorXd x_new;
        for (int attempt = 0; attempt < 60; ++attempt, step *= 0.5) {
            x_new = x + step * dir;
            try {
                phi_new = blp_phi(x_new, t, mu);
            } catch (const Error&) {
                phi_new = kNegInf;
            }
            if (phi_new >= phi + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No improvement representable along an ascent direction.
            out.converged = newton;
            break;
        }
        const double gain = phi_new - phi;
        x = x_new;
        phi = phi_new;
        trace.push_back(phi);
        ++out.iterations;

        if (mu == 0.0 && k > 1) {
            const auto w = eliminated_weights(x, k);
            if (*std::min_element(w.begin(), w.end()) < kBoundaryWeight) {
                out.hit_boundary = true;
                break;
            }
        }
        if (newton && std::fabs(gain) < ftol) {
            // Re-enter once more so the final full Newton step below is taken.
            out.converged = true;
            ftol = -1.0;
            gtol = kInf;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared pieces of the derivative-free fits.

struct DerivativeFreeFit {
    Eigen::VectorXd theta;
    double value = kNegInf;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<std::vector<double>> traces;
};

DerivativeFreeFit maximize_from_starts(const optim::Objective& f, const std::vector<Eigen::VectorXd>& starts,
                                       const Eigen::VectorXd& step) {
    DerivativeFreeFit best;
    for (const auto& x0 : starts) {
        auto nm = optim::nelder_mead(f, x0, step, 1e-9);
        best.iterations += nm.iterations;
        if (nm.value > best.value) {
            best.theta = nm.x;
            best.value = nm.value;
            best.converged = nm.converged;
            best.traces = {std::move(nm.trace)};
        }
    }
    if (!std::isfinite(best.value)) throw Error(ErrorCode::NoConvergence, "objective is not finite at any start");
    auto polish = optim::fd_newton_polish(f, best.theta, best.value);
    best.iterations += polish.iterations;
    best.theta = polish.x;
    best.value = polish.value;
    best.traces.push_back(std::move(polish.trace));
    return best;
}

}  // namespace

std::size_t component_count(const Dataset& data) {
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no cases");
    const std::size_t k = data.front().components.size();
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "cases need at least one component");
    for (std::size_t j = 0; j < data.size(); ++j) {
        if (data[j].components.size() != k) {
            throw Error(ErrorCode::LengthMismatch, "case " + std::to_string(j) + " has " +
                                                       std::to_string(data[j].components.size()) +
                                                       " components, expected " + std::to_string(k));
        }
    }
    return k;
}

ComponentTable tabulate(const Dataset& data) {
    ComponentTable t;
    t.k = component_count(data);
    t.n = data.size();
    t.cdf.resize(t.k * t.n);
    t.pdf.resize(t.k * t.n);
    for (std::size_t j = 0; j < t.n; ++j) {
        const double y = data[j].y;
        if (!std::isfinite(y)) throw Error(ErrorCode::InvalidArgument, "observation " + std::to_string(j) + " is not finite");
        for (std::size_t i = 0; i < t.k; ++i) {
            const auto& f = data[j].components[i];
            if (!f.has_density()) {
                throw Error(ErrorCode::DensityUnavailable, "component " + std::to_string(i + 1) + " of case " +
                                                               std::to_string(j) + " has no density");
            }
            t.cdf[i * t.n + j] = f.cdf(y);
            t.pdf[i * t.n + j] = f.density(y);
        }
    }
    return t;
}

double log_score(const PredictiveDist& d, double y) { return std::log(std::max(d.density(y), kDensityFloor)); }

double blp_loglik(const std::vector<double>& w, double alpha, double beta, const ComponentTable& t) {
    const Pooled p = pooled_values(w, t);
    double ll = 0.0;
    for (std::size_t j = 0; j < t.n; ++j) {
        ll += (alpha - 1.0) * std::log(p.u[j]) + (beta - 1.0) * std::log1p(-p.u[j]) + std::log(p.s[j]);
    }
    return ll - static_cast<double>(t.n) * special::log_beta(alpha, beta);
}

BlpDerivatives blp_objective_and_derivatives(const std::vector<double>& w, double alpha, double beta,
                                             const ComponentTable& t) {
    if (w.size() != t.k) throw Error(ErrorCode::LengthMismatch, "weight vector does not match component count");
    check_simplex(w, 1e-9);
    if (!(alpha > 0.0) || !(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha and beta must be positive");

    const Pooled p = pooled_values(w, t);
    if (static_cast<double>(p.clamped) > 0.01 * static_cast<double>(t.n)) {
        throw Error(ErrorCode::DomainViolation, std::to_string(p.clamped) + " of " + std::to_string(t.n) +
                                                    " pooled CDF values at the clamp boundary");
    }
    const double n = static_cast<double>(t.n);
    double sum_log_u = 0.0;
    double sum_log_1mu = 0.0;
    double sum_log_s = 0.0;
    for (std::size_t j = 0; j < t.n; ++j) {
        sum_log_u += std::log(p.u[j]);
        sum_log_1mu += std::log1p(-p.u[j]);
        sum_log_s += std::log(p.s[j]);
    }
    const auto m = special::beta_log_moments(alpha, beta);
    const std::size_t r = t.k - 1;
    const auto ri = static_cast<Eigen::Index>(r);

    BlpDerivatives out;
    out.loglik = (alpha - 1.0) * sum_log_u + (beta - 1.0) * sum_log_1mu + sum_log_s - n * special::log_beta(alpha, beta);
    out.gradient = Eigen::VectorXd::Zero(ri + 2);
    out.hessian = Eigen::MatrixXd::Zero(ri + 2, ri + 2);

    out.gradient[ri] = sum_log_u - n * m.mean_log;
    out.gradient[ri + 1] = sum_log_1mu - n * m.mean_log1m;
    out.hessian(ri, ri) = -n * m.var_log;
    out.hessian(ri + 1, ri + 1) = -n * m.var_log1m;
    // d2/dalpha dbeta of -n log B(alpha, beta) is n * trigamma(alpha + beta) = -n * cov(log Y, log(1 - Y)).
    out.hessian(ri, ri + 1) = out.hessian(ri + 1, ri) = -n * m.cov_log_log1m;

    if (r > 0) {
        const auto sums = kernels::blp_sums(cdf_matrix(t), pdf_matrix(t), p.u, p.s);
        for (std::size_t a = 0; a < r; ++a) {
            const auto ai = static_cast<Eigen::Index>(a);
            out.gradient[ai] = (alpha - 1.0) * sums.cdf_over_u[a] - (beta - 1.0) * sums.cdf_over_1mu[a] + sums.pdf_over_s[a];
            out.hessian(ai, ri) = out.hessian(ri, ai) = sums.cdf_over_u[a];
            out.hessian(ai, ri + 1) = out.hessian(ri + 1, ai) = -sums.cdf_over_1mu[a];
            for (std::size_t b = 0; b < r; ++b) {
                out.hessian(ai, static_cast<Eigen::Index>(b)) = -sums.pdf_outer[a * r + b] -
                                                                (alpha - 1.0) * sums.cdf_outer_u[a * r + b] -
                                                                (beta - 1.0) * sums.cdf_outer_1mu[a * r + b];
            }
        }
    }
    return out;
}

BlpDerivatives blp_objective_and_derivatives(const std::vector<double>& w, double alpha, double beta,
                                             const Dataset& data) {
    return blp_objective_and_derivatives(w, alpha, beta, tabulate(data));
}

FitResult fit_blp(const Dataset& data, const std::optional<BlpInit>& init) {
    const ComponentTable t = tabulate(data);
    const std::size_t k = t.k;
    require_cases(t.n, k + 2, "BLP");
    const auto r = static_cast<Eigen::Index>(k - 1);

    BlpInit start{equal_weights(k), 1.0, 1.0};
    if (init) {
        if (init->w.size() != k) throw Error(ErrorCode::LengthMismatch, "initial weights do not match component count");
        check_simplex(init->w);
        if (!all_positive(init->w)) throw Error(ErrorCode::InvalidArgument, "initial weights must be interior");
        if (!(init->alpha > 0.0) || !(init->beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial alpha and beta must be positive");
        start = *init;
    }
    Eigen::VectorXd x(r + 2);
    for (Eigen::Index i = 0; i < r; ++i) x[i] = start.w[static_cast<std::size_t>(i)];
    x[r] = std::log(start.alpha);
    x[r + 1] = std::log(start.beta);

    FitResult result;
    std::vector<double> newton_trace;
    const auto newton = blp_newton(t, x, 0.0, 500, 1e-8, 1e-10, newton_trace);
    result.traces.push_back(std::move(newton_trace));
    result.iterations = newton.iterations;
    result.converged = newton.converged && !newton.hit_boundary;
    result.singular_hessian = newton.used_gradient;

    Eigen::VectorXd best = x;
    double best_ll = blp_loglik(blp_point(x, k).w, std::exp(x[r]), std::exp(x[r + 1]), t);

    if (k > 1 && (newton.hit_boundary || !newton.converged)) {
        // Restart from a strictly interior point and follow the barrier path.
        Eigen::VectorXd xb = x;
        auto w = eliminated_weights(x, k);
        for (double& wi : w) wi = (std::max(wi, 0.0) + 1e-3) / (1.0 + 1e-3 * static_cast<double>(k));
        for (Eigen::Index i = 0; i < r; ++i) xb[i] = w[static_cast<std::size_t>(i)];

        std::vector<double> barrier_trace;
        bool inner_converged = false;
        for (double mu = 1e-2; mu >= 1e-8; mu *= 0.5) {
            const auto inner = blp_newton(t, xb, mu, 100, 1e-10, 1e-14, barrier_trace);
            result.iterations += inner.iterations;
            result.singular_hessian = result.singular_hessian || inner.used_gradient;
            inner_converged = inner.converged;
        }
        result.traces.push_back(std::move(barrier_trace));
        const BlpPoint pb = blp_point(xb, k);
        const double ll_b = blp_loglik(pb.w, pb.alpha, pb.beta, t);
        if (ll_b >= best_ll || !all_positive(eliminated_weights(best, k))) {
            best = xb;
            best_ll = ll_b;
        }
        result.converged = inner_converged;
    }

    const BlpPoint p = blp_point(best, k);
    result.spec = pools::Blp{p.w, p.alpha, p.beta};
    result.mean_log_score_train = best_ll / static_cast<double>(t.n);
    result.boundary_active = boundary_flags(p.w);

    try {
        const auto d = blp_objective_and_derivatives(p.w, p.alpha, p.beta, t);
        Eigen::MatrixXd cov;
        if (optim::inverse_negative(d.hessian, cov)) {
            StdErrors se;
            se.w = eliminated_weight_se(cov, k);
            se.alpha = std::sqrt(cov(r, r));
            se.beta = std::sqrt(cov(r + 1, r + 1));
            result.std_errors = se;
        } else {
            result.flat_direction = true;
        }
    } catch (const Error&) {
        result.flat_direction = true;
    }
    return result;
}

FitResult fit_tlp(const Dataset& data) {
    const ComponentTable t = tabulate(data);
    const std::size_t k = t.k;
    require_cases(t.n, k + 1, "TLP");
    const double n = static_cast<double>(t.n);

    FitResult result;
    std::vector<double> w = equal_weights(k);
    std::vector<double> s;
    double ll = tlp_loglik(w, t, s);
    std::vector<double> em_trace{ll / n};

    if (k == 1) {
        result.spec = pools::Tlp{w};
        result.mean_log_score_train = ll / n;
        result.converged = true;
        result.boundary_active = {false};
        result.std_errors = StdErrors{{0.0}, std::nullopt, std::nullopt, std::nullopt};
        result.traces.push_back(std::move(em_trace));
        return result;
    }

    // Expectation-maximization: w_i <- w_i * mean_j f_ij / s_j never lowers the score.
    std::vector<double> ratios(k);
    std::vector<double> s_new;
    for (std::size_t it = 0; it < 100000; ++it) {
        kernels::ratio_sums(pdf_matrix(t), s, ratios);
        std::vector<double> w_new(k);
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            w_new[i] = w[i] * ratios[i] / n;
            total += w_new[i];
        }
        for (double& wi : w_new) wi /= total;
        const double ll_new = tlp_loglik(w_new, t, s_new);
        if (!(ll_new >= ll)) {
            result.converged = true;
            break;
        }
        const double gain = (ll_new - ll) / n;
        w = std::move(w_new);
        s.swap(s_new);
        ll = ll_new;
        em_trace.push_back(ll / n);
        ++result.iterations;
        if (gain < 1e-10) {
            result.converged = true;
            break;
        }
    }
    result.traces.push_back(std::move(em_trace));

    // Newton refinement of the interior optimum.
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    if (*std::min_element(w.begin(), w.end()) > kBoundaryWeight) {
        std::vector<double> newton_trace{ll / n};
        for (int it = 0; it < 50; ++it) {
            tlp_derivatives(t, s, g, h);
            if (g.lpNorm<Eigen::Infinity>() / n < 1e-12) break;
            Eigen::LLT<Eigen::MatrixXd> llt(-h);
            if (llt.info() != Eigen::Success) break;
            const Eigen::VectorXd dir = llt.solve(g);
            std::vector<double> dw(k, 0.0);
            for (std::size_t i = 0; i + 1 < k; ++i) {
                dw[i] = dir[static_cast<Eigen::Index>(i)];
                dw[k - 1] -= dw[i];
            }
            double step = max_interior_step(w, dw);
            bool accepted = false;
            for (int attempt = 0; attempt < 40; ++attempt, step *= 0.5) {
                std::vector<double> w_new(k);
                for (std::size_t i = 0; i < k; ++i) w_new[i] = w[i] + step * dw[i];
                if (!all_positive(w_new)) continue;
                const double ll_new = tlp_loglik(w_new, t, s_new);
                if (ll_new >= ll) {
                    accepted = ll_new > ll;
                    w = std::move(w_new);
                    s.swap(s_new);
                    ll = ll_new;
                    newton_trace.push_back(ll / n);
                    ++result.iterations;
                    break;
                }
            }
            if (!accepted) break;
        }
        result.traces.push_back(std::move(newton_trace));
    }

    result.spec = pools::Tlp{w};
    result.mean_log_score_train = ll / n;
    result.boundary_active = boundary_flags(w);
    tlp_derivatives(t, s, g, h);
    Eigen::MatrixXd cov;
    if (optim::inverse_negative(h, cov)) {
        result.std_errors = StdErrors{eliminated_weight_se(cov, k), std::nullopt, std::nullopt, std::nullopt};
    } else {
        result.flat_direction = true;
    }
    return result;
}

FitResult fit_slp(const Dataset& data) {
    const std::size_t k = component_count(data);
    const std::size_t n = data.size();
    require_cases(n, k + 2, "SLP");
    std::vector<double> medians(k * n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < k; ++i) {
            const auto& f = data[j].components[i];
            if (!f.has_density()) throw Error(ErrorCode::DensityUnavailable, "SLP components need densities");
            medians[i * n + j] = f.median();
        }
    }

    const auto mean_ll = [&](const std::vector<double>& w, double c) {
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double g = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                if (w[i] == 0.0) continue;
                const double mu = medians[i * n + j];
                g += w[i] * data[j].components[i].density(mu + (data[j].y - mu) / c);
            }
            total += std::log(std::max(g / c, kDensityFloor));
        }
        return total / static_cast<double>(n);
    };

    const auto r = static_cast<Eigen::Index>(k - 1);
    const optim::Objective objective = [&](const Eigen::VectorXd& theta) {
        const double c = std::exp(theta[r]);
        if (!std::isfinite(c) || c <= 0.0) return kNegInf;
        const double v = mean_ll(alr_weights(theta, k), c);
        return std::isfinite(v) ? v : kNegInf;
    };

    std::vector<Eigen::VectorXd> starts;
    for (double c0 : {0.5, 1.0, 1.5}) {
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(r + 1);
        x0[r] = std::log(c0);
        starts.push_back(x0);
    }
    Eigen::VectorXd step = Eigen::VectorXd::Constant(r + 1, 0.5);
    step[r] = 0.2;
    auto best = maximize_from_starts(objective, starts, step);

    const auto w = alr_weights(best.theta, k);
    const double c = std::exp(best.theta[r]);

    FitResult result;
    result.spec = pools::Slp{w, c};
    result.mean_log_score_train = mean_ll(w, c);
    result.iterations = best.iterations;
    result.converged = best.converged;
    result.boundary_active = boundary_flags(w);
    result.traces = std::move(best.traces);

    // Standard errors from a finite-difference Hessian of the sum log score in (w_1..w_{k-1}, c).
    constexpr double h = 1e-4;
    if (*std::min_element(w.begin(), w.end()) > 10.0 * h && c > 10.0 * h) {
        const optim::Objective natural = [&](const Eigen::VectorXd& v) {
            const auto wn = eliminated_weights(v, k);
            if (!all_positive(wn) || v[r] <= 0.0) return kNegInf;
            return static_cast<double>(n) * mean_ll(wn, v[r]);
        };
        Eigen::VectorXd v(r + 1);
        for (Eigen::Index i = 0; i < r; ++i) v[i] = w[static_cast<std::size_t>(i)];
        v[r] = c;
        Eigen::MatrixXd cov;
        if (optim::inverse_negative(optim::fd_hessian(natural, v, h), cov)) {
            StdErrors se;
            se.w = eliminated_weight_se(cov, k);
            se.c = std::sqrt(cov(r, r));
            result.std_errors = se;
        } else {
            result.flat_direction = true;
        }
    }
    return result;
}

FitResult fit_glp(const Dataset& data, LinkFunction link) {
    const ComponentTable t = tabulate(data);
    const std::size_t k = t.k;
    const std::size_t n = t.n;
    require_cases(n, k + 2, "GLP");
    const bool unit_sum = link.requires_unit_sum();

    std::vector<double> cdfs(k);
    std::vector<double> pdfs(k);
    const auto mean_ll = [&](const std::vector<double>& w) {
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < k; ++i) {
                cdfs[i] = t.cdf[i * n + j];
                pdfs[i] = t.pdf[i * n + j];
            }
            total += std::log(std::max(link.pool_density(w, cdfs, pdfs), kDensityFloor));
        }
        return total / static_cast<double>(n);
    };
    const auto weights_of = [&](const Eigen::VectorXd& theta) {
        if (unit_sum) return alr_weights(theta, k);
        std::vector<double> w(k);
        for (std::size_t i = 0; i < k; ++i) w[i] = std::exp(theta[static_cast<Eigen::Index>(i)]);
        return w;
    };
    const optim::Objective objective = [&](const Eigen::VectorXd& theta) {
        const auto w = weights_of(theta);
        if (!all_positive(w) || std::any_of(w.begin(), w.end(), [](double wi) { return !std::isfinite(wi); })) return kNegInf;
        const double v = mean_ll(w);
        return std::isfinite(v) ? v : kNegInf;
    };

    const auto dim = static_cast<Eigen::Index>(unit_sum ? k - 1 : k);
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(dim, unit_sum ? 0.0 : std::log(1.0 / static_cast<double>(k)));
    FitResult result;
    std::vector<double> w;
    if (dim == 0) {
        w = {1.0};
        result.converged = true;
        result.traces.push_back({mean_ll(w)});
    } else {
        auto best = maximize_from_starts(objective, {x0}, Eigen::VectorXd::Constant(dim, 0.5));
        w = weights_of(best.theta);
        result.iterations = best.iterations;
        result.converged = best.converged;
        result.traces = std::move(best.traces);
    }
    result.spec = pools::Glp{w, link};
    result.mean_log_score_train = mean_ll(w);
    result.boundary_active = boundary_flags(w);

    constexpr double h = 1e-4;
    if (dim > 0 && *std::min_element(w.begin(), w.end()) > 10.0 * h) {
        Eigen::VectorXd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v[i] = w[static_cast<std::size_t>(i)];
        const optim::Objective natural = [&](const Eigen::VectorXd& p) {
            std::vector<double> wn;
            if (unit_sum) {
                wn = eliminated_weights(p, k);
            } else {
                wn.assign(p.data(), p.data() + p.size());
            }
            if (!all_positive(wn)) return kNegInf;
            return static_cast<double>(n) * mean_ll(wn);
        };
        Eigen::MatrixXd cov;
        if (optim::inverse_negative(optim::fd_hessian(natural, v, h), cov)) {
            StdErrors se;
            if (unit_sum) {
                se.w = eliminated_weight_se(cov, k);
            } else {
                se.w.resize(k);
                for (std::size_t i = 0; i < k; ++i) se.w[i] = std::sqrt(cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
            }
            result.std_errors = se;
        } else {
            result.flat_direction = true;
        }
    } else if (dim == 0) {
        result.std_errors = StdErrors{{0.0}, std::nullopt, std::nullopt, std::nullopt};
    }
    return result;
}

FitResult fit_method(const Dataset& data, std::string_view method) {
    if (method == "tlp") return fit_tlp(data);
    if (method == "slp") return fit_slp(data);
    if (method == "blp") return fit_blp(data);
    if (method.substr(0, 4) == "glp-") return fit_glp(data, parse_link(method.substr(4)));
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(method) + "'");
}

ComponentRegression fit_gaussian_component(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "x and y differ in length");
    if (x.size() < 3) throw Error(ErrorCode::TooFewSamples, "regression needs at least three points");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) throw Error(ErrorCode::DegenerateDesign, "predictor is constant");
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    ComponentRegression out;
    out.b = sxy / sxx;
    out.a = my - out.b * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - out.a - out.b * x[i];
        rss += e * e;
    }
    out.sigma = std::sqrt(rss / n);
    return out;
}

double mean_log_score(const PoolSpec& spec, const Dataset& data) {
    component_count(data);
    double total = 0.0;
    for (const auto& c : data) total += log_score(pool(spec, c.components), c.y);
    return total / static_cast<double>(data.size());
}

EvaluationReport evaluate(const PoolSpec& spec, const Dataset& data, std::uint64_t seed, std::size_t bins) {
    const std::size_t k = component_count(data);
    if (pool_size(spec) != k) throw Error(ErrorCode::LengthMismatch, "parameters are for a different number of components");
    std::vector<PredictiveDist> pooled;
    std::vector<double> obs;
    pooled.reserve(data.size());
    obs.reserve(data.size());
    double score = 0.0;
    double var = 0.0;
    for (const auto& c : data) {
        pooled.push_back(pool(spec, c.components));
        obs.push_back(c.y);
        score += log_score(pooled.back(), c.y);
        var += pooled.back().variance();
    }
    const double n = static_cast<double>(data.size());
    EvaluationReport report;
    report.mean_log_score = score / n;
    report.rmv = std::sqrt(var / n);
    const auto sample = pit::pit_sample(pooled, obs, seed);
    report.histogram = pit::pit_histogram(sample.z, bins);
    if (data.size() >= 2) {
        report.dispersion = pit::dispersion_report(sample);
        report.pit_variance = report.dispersion.pit_variance;
    }
    return report;
}

EvaluationReport evaluate_component(const Dataset& data, std::size_t i, std::uint64_t seed, std::size_t bins) {
    const std::size_t k = component_count(data);
    if (i >= k) throw Error(ErrorCode::InvalidArgument, "component index out of range");
    std::vector<double> w(k, 0.0);
    w[i] = 1.0;
    return evaluate(pools::Tlp{w}, data, seed, bins);
}

}  // namespace poolcast::fit
