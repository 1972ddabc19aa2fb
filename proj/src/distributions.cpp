#include "poolcast/distributions.hpp"

#include "poolcast/error.hpp"
#include "poolcast/quadrature.hpp"
#include "poolcast/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace poolcast {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double clamp01(double x) noexcept { return std::clamp(x, 0.0, 1.0); }

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

// Link-pool combination of component CDF values, including the clamp policy.
template <class ValueAt>
double link_combine(const dist::LinkPool& lp, ValueAt&& value_at) {
    std::vector<double> values(lp.components.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = value_at(i);
    return lp.link.pool_cdf(lp.weights, values);
}

}  // namespace

void check_simplex(const std::vector<double>& w, double tol) {
    if (w.empty()) throw Error(ErrorCode::WeightConstraintViolation, "empty weight vector");
    double sum = 0.0;
    for (double wi : w) {
        if (!(wi >= 0.0) || !std::isfinite(wi))
            throw Error(ErrorCode::WeightConstraintViolation, "weights must be finite and nonnegative");
        sum += wi;
    }
    if (std::fabs(sum - 1.0) > tol) {
        std::ostringstream os;
        os.precision(17);
        os << "weights sum to " << sum << ", expected 1";
        throw Error(ErrorCode::WeightConstraintViolation, os.str());
    }
}

// ---------------------------------------------------------------------------
// Construction

PredictiveDist PredictiveDist::gaussian(double mu, double sigma) {
    require(std::isfinite(mu), "gaussian mean must be finite");
    require(sigma > 0.0 && std::isfinite(sigma), "gaussian sigma must be positive");
    return PredictiveDist(std::make_shared<const DistKind>(dist::Gaussian{mu, sigma}));
}

PredictiveDist PredictiveDist::uniform(double lo, double hi) {
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "uniform requires lo < hi");
    return PredictiveDist(std::make_shared<const DistKind>(dist::Uniform{lo, hi}));
}

PredictiveDist PredictiveDist::bernoulli(double p) {
    require(p >= 0.0 && p <= 1.0, "bernoulli probability outside [0, 1]");
    return PredictiveDist(std::make_shared<const DistKind>(dist::TwoPointBernoulli{p}));
}

PredictiveDist PredictiveDist::discrete(std::vector<double> atoms, std::vector<double> masses) {
    if (atoms.size() != masses.size()) throw Error(ErrorCode::LengthMismatch, "atoms and masses differ in length");
    require(!atoms.empty(), "discrete distribution needs at least one atom");
    for (std::size_t i = 1; i < atoms.size(); ++i) require(atoms[i - 1] < atoms[i], "atoms must be strictly ascending");
    check_simplex(masses);
    return PredictiveDist(std::make_shared<const DistKind>(dist::FiniteDiscrete{std::move(atoms), std::move(masses)}));
}

PredictiveDist PredictiveDist::mixture(std::vector<PredictiveDist> components, std::vector<double> weights) {
    if (components.size() != weights.size()) throw Error(ErrorCode::LengthMismatch, "components and weights differ in length");
    check_simplex(weights);
    return PredictiveDist(std::make_shared<const DistKind>(dist::Mixture{std::move(components), std::move(weights)}));
}

PredictiveDist PredictiveDist::beta_transformed(PredictiveDist base, double alpha, double beta) {
    require(alpha > 0.0 && beta > 0.0 && std::isfinite(alpha) && std::isfinite(beta),
            "beta transform parameters must be positive");
    return PredictiveDist(std::make_shared<const DistKind>(dist::Transformed{std::move(base), BetaTransform{alpha, beta}}));
}

PredictiveDist PredictiveDist::spread_adjusted(PredictiveDist base, double c, double median) {
    require(c > 0.0 && std::isfinite(c), "spread adjustment must be positive");
    require(std::isfinite(median), "median must be finite");
    return PredictiveDist(std::make_shared<const DistKind>(dist::Transformed{std::move(base), SpreadAdjust{c, median}}));
}

PredictiveDist PredictiveDist::spread_adjusted(PredictiveDist base, double c) {
    const double m = base.median();
    return spread_adjusted(std::move(base), c, m);
}

PredictiveDist PredictiveDist::link_pool(std::vector<PredictiveDist> components, std::vector<double> weights,
                                         LinkFunction link) {
    if (components.size() != weights.size()) throw Error(ErrorCode::LengthMismatch, "components and weights differ in length");
    if (components.empty()) throw Error(ErrorCode::WeightConstraintViolation, "empty weight vector");
    if (link.requires_unit_sum()) {
        check_simplex(weights);
    } else {
        double sum = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w))
                throw Error(ErrorCode::WeightConstraintViolation, "weights must be finite and nonnegative");
            sum += w;
        }
        if (!(sum > 0.0)) throw Error(ErrorCode::WeightConstraintViolation, "weights must have a positive sum");
    }
    return PredictiveDist(std::make_shared<const DistKind>(dist::LinkPool{std::move(components), std::move(weights), link}));
}

// ---------------------------------------------------------------------------
// CDF evaluations

double PredictiveDist::cdf(double y) const {
    return std::visit(overloaded{
        [y](const dist::Gaussian& g) { return special::normal_cdf((y - g.mu) / g.sigma); },
        [y](const dist::Uniform& u) { return clamp01((y - u.lo) / (u.hi - u.lo)); },
        [y](const dist::TwoPointBernoulli& b) { return y < 0.0 ? 0.0 : (y < 1.0 ? b.p : 1.0); },
        [y](const dist::FiniteDiscrete& d) {
            double s = 0.0;
            for (std::size_t i = 0; i < d.atoms.size() && d.atoms[i] <= y; ++i) s += d.masses[i];
            return clamp01(s);
        },
        [y](const dist::Mixture& m) {
            double s = 0.0;
            for (std::size_t i = 0; i < m.components.size(); ++i) s += m.weights[i] * m.components[i].cdf(y);
            return clamp01(s);
        },
        [y](const dist::Transformed& t) {
            return std::visit(overloaded{
                [&](const BetaTransform& bt) { return special::incomplete_beta(t.base.cdf(y), bt.alpha, bt.beta); },
                [&](const SpreadAdjust& sa) { return t.base.cdf(sa.median + (y - sa.median) / sa.c); },
            }, t.transform);
        },
        [y](const dist::LinkPool& lp) {
            return link_combine(lp, [&](std::size_t i) { return lp.components[i].cdf(y); });
        },
    }, *kind_);
}

double PredictiveDist::cdf_left(double y) const {
    return std::visit(overloaded{
        [this, y](const dist::Gaussian&) { return cdf(y); },
        [this, y](const dist::Uniform&) { return cdf(y); },
        [y](const dist::TwoPointBernoulli& b) { return y <= 0.0 ? 0.0 : (y <= 1.0 ? b.p : 1.0); },
        [y](const dist::FiniteDiscrete& d) {
            double s = 0.0;
            for (std::size_t i = 0; i < d.atoms.size() && d.atoms[i] < y; ++i) s += d.masses[i];
            return clamp01(s);
        },
        [y](const dist::Mixture& m) {
            double s = 0.0;
            for (std::size_t i = 0; i < m.components.size(); ++i) s += m.weights[i] * m.components[i].cdf_left(y);
            return clamp01(s);
        },
        [y](const dist::Transformed& t) {
            return std::visit(overloaded{
                [&](const BetaTransform& bt) { return special::incomplete_beta(t.base.cdf_left(y), bt.alpha, bt.beta); },
                [&](const SpreadAdjust& sa) { return t.base.cdf_left(sa.median + (y - sa.median) / sa.c); },
            }, t.transform);
        },
        [y](const dist::LinkPool& lp) {
            return link_combine(lp, [&](std::size_t i) { return lp.components[i].cdf_left(y); });
        },
    }, *kind_);
}

// ---------------------------------------------------------------------------
// Density

bool PredictiveDist::has_density() const noexcept {
    return std::visit(overloaded{
        [](const dist::Gaussian&) { return true; },
        [](const dist::Uniform&) { return true; },
        [](const dist::TwoPointBernoulli&) { return false; },
        [](const dist::FiniteDiscrete&) { return false; },
        [](const dist::Mixture& m) {
            return std::all_of(m.components.begin(), m.components.end(),
                               [](const PredictiveDist& c) { return c.has_density(); });
        },
        [](const dist::Transformed& t) { return t.base.has_density(); },
        [](const dist::LinkPool& lp) {
            return std::all_of(lp.components.begin(), lp.components.end(),
                               [](const PredictiveDist& c) { return c.has_density(); });
        },
    }, *kind_);
}

double PredictiveDist::density(double y) const {
    if (!has_density()) throw Error(ErrorCode::DensityUnavailable, describe() + " has point masses");
    return std::visit(overloaded{
        [y](const dist::Gaussian& g) { return special::normal_pdf((y - g.mu) / g.sigma) / g.sigma; },
        [y](const dist::Uniform& u) { return (y >= u.lo && y < u.hi) ? 1.0 / (u.hi - u.lo) : 0.0; },
        [](const dist::TwoPointBernoulli&) { return 0.0; },
        [](const dist::FiniteDiscrete&) { return 0.0; },
        [y](const dist::Mixture& m) {
            double s = 0.0;
            for (std::size_t i = 0; i < m.components.size(); ++i) {
                if (m.weights[i] > 0.0) s += m.weights[i] * m.components[i].density(y);
            }
            return s;
        },
        [y](const dist::Transformed& t) {
            return std::visit(overloaded{
                [&](const BetaTransform& bt) {
                    const double g0 = t.base.density(y);
                    if (g0 == 0.0) return 0.0;
                    // The base cdf can round to exactly 0 or 1 while g0 > 0.
                    const double u = std::clamp(t.base.cdf(y), std::numeric_limits<double>::min(), 1.0 - 0x1.0p-53);
                    return special::beta_pdf(u, bt.alpha, bt.beta) * g0;
                },
                [&](const SpreadAdjust& sa) { return t.base.density(sa.median + (y - sa.median) / sa.c) / sa.c; },
            }, t.transform);
        },
        [y](const dist::LinkPool& lp) {
            const std::size_t k = lp.components.size();
            std::vector<double> cdfs(k);
            std::vector<double> pdfs(k);
            for (std::size_t i = 0; i < k; ++i) {
                cdfs[i] = lp.components[i].cdf(y);
                pdfs[i] = lp.components[i].density(y);
            }
            return lp.link.pool_density(lp.weights, cdfs, pdfs);
        },
    }, *kind_);
}

// ---------------------------------------------------------------------------
// Quantiles and moments

double PredictiveDist::location_hint() const {
    return std::visit(overloaded{
        [](const dist::Gaussian& g) { return g.mu; },
        [](const dist::Uniform& u) { return 0.5 * (u.lo + u.hi); },
        [](const dist::TwoPointBernoulli&) { return 0.5; },
        [](const dist::FiniteDiscrete& d) { return 0.5 * (d.atoms.front() + d.atoms.back()); },
        [](const dist::Mixture& m) {
            double s = 0.0;
            for (std::size_t i = 0; i < m.components.size(); ++i) s += m.weights[i] * m.components[i].location_hint();
            return s;
        },
        [](const dist::Transformed& t) {
            return std::visit(overloaded{
                [&](const BetaTransform&) { return t.base.location_hint(); },
                [&](const SpreadAdjust& sa) { return sa.median + sa.c * (t.base.location_hint() - sa.median); },
            }, t.transform);
        },
        [](const dist::LinkPool& lp) {
            double s = 0.0;
            for (const auto& c : lp.components) s += c.location_hint();
            return s / static_cast<double>(lp.components.size());
        },
    }, *kind_);
}

double PredictiveDist::scale_hint() const {
    const double s = std::visit(overloaded{
        [](const dist::Gaussian& g) { return g.sigma; },
        [](const dist::Uniform& u) { return 0.5 * (u.hi - u.lo); },
        [](const dist::TwoPointBernoulli&) { return 1.0; },
        [](const dist::FiniteDiscrete& d) { return std::max(1.0, d.atoms.back() - d.atoms.front()); },
        [this](const dist::Mixture& m) {
            const double loc = location_hint();
            double s = 0.0;
            for (const auto& c : m.components) s = std::max(s, c.scale_hint() + std::fabs(c.location_hint() - loc));
            return s;
        },
        [](const dist::Transformed& t) {
            return std::visit(overloaded{
                [&](const BetaTransform&) { return t.base.scale_hint(); },
                [&](const SpreadAdjust& sa) { return sa.c * t.base.scale_hint(); },
            }, t.transform);
        },
        [this](const dist::LinkPool& lp) {
            const double loc = location_hint();
            double s = 0.0;
            for (const auto& c : lp.components) s = std::max(s, c.scale_hint() + std::fabs(c.location_hint() - loc));
            return s;
        },
    }, *kind_);
    return s > 0.0 ? s : 1.0;
}

double PredictiveDist::bisect_quantile(double p) const {
    const double loc = location_hint();
    const double scale = scale_hint();
    double step = scale;
    double lo = loc - step;
    for (int i = 0; i < 2000 && cdf(lo) >= p; ++i) {
        step *= 2.0;
        lo = loc - step;
    }
    step = scale;
    double hi = loc + step;
    for (int i = 0; i < 2000 && cdf(hi) < p; ++i) {
        step *= 2.0;
        hi = loc + step;
    }
    while (hi - lo > 1e-10) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (cdf(mid) >= p) hi = mid; else lo = mid;
    }
    // The generalized inverse lands exactly on an atom when one is bracketed.
    for (double a : atoms()) {
        if (a > lo && a <= hi && cdf(a) >= p) return a;
    }
    return hi;
}

double PredictiveDist::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile level must lie in (0, 1)");
    return std::visit(overloaded{
        [p](const dist::Gaussian& g) { return g.mu + g.sigma * special::normal_quantile(p); },
        [p](const dist::Uniform& u) { return u.lo + p * (u.hi - u.lo); },
        [p](const dist::TwoPointBernoulli& b) { return p <= b.p ? 0.0 : 1.0; },
        [p](const dist::FiniteDiscrete& d) {
            double s = 0.0;
            for (std::size_t i = 0; i < d.atoms.size(); ++i) {
                s += d.masses[i];
                if (s >= p && d.masses[i] > 0.0) return d.atoms[i];
            }
            return d.atoms.back();
        },
        [this, p](const dist::Mixture&) { return bisect_quantile(p); },
        [this, p](const dist::Transformed& t) {
            return std::visit(overloaded{
                [&](const BetaTransform&) { return bisect_quantile(p); },
                [&](const SpreadAdjust& sa) { return sa.median + sa.c * (t.base.quantile(p) - sa.median); },
            }, t.transform);
        },
        [this, p](const dist::LinkPool&) { return bisect_quantile(p); },
    }, *kind_);
}

double PredictiveDist::median() const {
    if (const auto* g = std::get_if<dist::Gaussian>(kind_.get())) return g->mu;
    const double m = quantile(0.5);
    const double h = 1e-7 * std::max({1.0, std::fabs(m), scale_hint()});
    if (cdf(m) <= 0.5 + 1e-15 && cdf(m + h) <= 0.5 + 1e-15) {
        throw Error(ErrorCode::MedianUndefined, describe() + " is flat at probability 1/2");
    }
    return m;
}

double PredictiveDist::moment_by_quadrature(int order, double centre) const {
    const double loc = location_hint();
    const double scale = scale_hint();
    double lo = loc - scale;
    for (int i = 0; i < 200 && cdf(lo) > 1e-16; ++i) lo -= scale * std::pow(2.0, i);
    double hi = loc + scale;
    for (int i = 0; i < 200 && cdf(hi) < 1.0 - 1e-16; ++i) hi += scale * std::pow(2.0, i);

    auto integrand = [&](double y) {
        const double d = y - centre;
        double p = 1.0;
        for (int i = 0; i < order; ++i) p *= d;
        return p * density(y);
    };
    // One adaptive pass so the tolerance is relative to the whole integral,
    // not to the negligible tail pieces.
    const auto r = quad::integrate(integrand, lo, hi, 1e-11, 18);
    const double total = r.value;
    const double err = r.error_estimate;
    const double scale_abs = std::fabs(total);
    if (err > 1e-8 * std::max(1.0, scale_abs)) {
        throw Error(ErrorCode::MomentUnavailable, "moment quadrature did not converge for " + describe());
    }
    return total;
}

double PredictiveDist::mean() const {
    return std::visit(overloaded{
        [](const dist::Gaussian& g) { return g.mu; },
        [](const dist::Uniform& u) { return 0.5 * (u.lo + u.hi); },
        [](const dist::TwoPointBernoulli& b) { return 1.0 - b.p; },
        [](const dist::FiniteDiscrete& d) {
            return std::inner_product(d.atoms.begin(), d.atoms.end(), d.masses.begin(), 0.0);
        },
        [](const dist::Mixture& m) {
            double s = 0.0;
            for (std::size_t i = 0; i < m.components.size(); ++i) s += m.weights[i] * m.components[i].mean();
            return s;
        },
        [this](const dist::Transformed& t) {
            return std::visit(overloaded{
                [&](const BetaTransform&) {
                    if (!has_density()) throw Error(ErrorCode::MomentUnavailable, "mean requires a density");
                    return moment_by_quadrature(1, 0.0);
                },
                [&](const SpreadAdjust& sa) { return sa.median + sa.c * (t.base.mean() - sa.median); },
            }, t.transform);
        },
        [this](const dist::LinkPool&) {
            if (!has_density()) throw Error(ErrorCode::MomentUnavailable, "mean requires a density");
            return moment_by_quadrature(1, 0.0);
        },
    }, *kind_);
}

double PredictiveDist::variance() const {
    return std::visit(overloaded{
        [](const dist::Gaussian& g) { return g.sigma * g.sigma; },
        [](const dist::Uniform& u) { return (u.hi - u.lo) * (u.hi - u.lo) / 12.0; },
        [](const dist::TwoPointBernoulli& b) { return b.p * (1.0 - b.p); },
        [](const dist::FiniteDiscrete& d) {
            const double m = std::inner_product(d.atoms.begin(), d.atoms.end(), d.masses.begin(), 0.0);
            double v = 0.0;
            for (std::size_t i = 0; i < d.atoms.size(); ++i) v += d.masses[i] * (d.atoms[i] - m) * (d.atoms[i] - m);
            return v;
        },
        [this](const dist::Mixture& m) {
            const double mu = mean();
            double v = 0.0;
            for (std::size_t i = 0; i < m.components.size(); ++i) {
                if (m.weights[i] == 0.0) continue;
                const double d = m.components[i].mean() - mu;
                v += m.weights[i] * (m.components[i].variance() + d * d);
            }
            return v;
        },
        [this](const dist::Transformed& t) {
            return std::visit(overloaded{
                [&](const BetaTransform&) {
                    if (!has_density()) throw Error(ErrorCode::MomentUnavailable, "variance requires a density");
                    return std::max(0.0, moment_by_quadrature(2, mean()));
                },
                [&](const SpreadAdjust& sa) { return sa.c * sa.c * t.base.variance(); },
            }, t.transform);
        },
        [this](const dist::LinkPool&) {
            if (!has_density()) throw Error(ErrorCode::MomentUnavailable, "variance requires a density");
            return std::max(0.0, moment_by_quadrature(2, mean()));
        },
    }, *kind_);
}

std::vector<double> PredictiveDist::atoms() const {
    auto merge = [](const std::vector<PredictiveDist>& comps) {
        std::vector<double> out;
        for (const auto& c : comps) {
            auto a = c.atoms();
            out.insert(out.end(), a.begin(), a.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    };
    return std::visit(overloaded{
        [](const dist::Gaussian&) { return std::vector<double>{}; },
        [](const dist::Uniform&) { return std::vector<double>{}; },
        [](const dist::TwoPointBernoulli& b) {
            std::vector<double> out;
            if (b.p > 0.0) out.push_back(0.0);
            if (b.p < 1.0) out.push_back(1.0);
            return out;
        },
        [](const dist::FiniteDiscrete& d) {
            std::vector<double> out;
            for (std::size_t i = 0; i < d.atoms.size(); ++i) if (d.masses[i] > 0.0) out.push_back(d.atoms[i]);
            return out;
        },
        [&](const dist::Mixture& m) { return merge(m.components); },
        [](const dist::Transformed& t) {
            auto a = t.base.atoms();
            if (const auto* sa = std::get_if<SpreadAdjust>(&t.transform)) {
                for (double& x : a) x = sa->median + sa->c * (x - sa->median);
            }
            return a;
        },
        [&](const dist::LinkPool& lp) { return merge(lp.components); },
    }, *kind_);
}

std::string PredictiveDist::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
        [&](const dist::Gaussian& g) { os << "N(" << g.mu << ", " << g.sigma << "^2)"; },
        [&](const dist::Uniform& u) { os << "U(" << u.lo << ", " << u.hi << ")"; },
        [&](const dist::TwoPointBernoulli& b) { os << "Bernoulli(p=" << b.p << ")"; },
        [&](const dist::FiniteDiscrete& d) { os << "Discrete(" << d.atoms.size() << " atoms)"; },
        [&](const dist::Mixture& m) { os << "Mixture(" << m.components.size() << " components)"; },
        [&](const dist::Transformed& t) {
            std::visit(overloaded{
                [&](const BetaTransform& bt) { os << "Beta[" << bt.alpha << ", " << bt.beta << "]"; },
                [&](const SpreadAdjust& sa) { os << "Spread[c=" << sa.c << "]"; },
            }, t.transform);
            os << "(" << t.base.describe() << ")";
        },
        [&](const dist::LinkPool& lp) { os << "LinkPool[" << lp.link.name() << "](" << lp.components.size() << " components)"; },
    }, *kind_);
    return os.str();
}

}  // namespace poolcast
