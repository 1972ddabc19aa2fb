#include "poolcast/pools.hpp"

#include "poolcast/error.hpp"
#include "poolcast/special.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace poolcast {

namespace {

void check_positive(double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
}

void check_glp_weights(const std::vector<double>& w, const LinkFunction& link) {
    if (w.empty()) throw Error(ErrorCode::WeightConstraintViolation, "pool needs at least one weight");
    if (link.requires_unit_sum()) {
        check_simplex(w);
        return;
    }
    double total = 0.0;
    for (double wi : w) {
        if (!(wi >= 0.0) || !std::isfinite(wi)) throw Error(ErrorCode::WeightConstraintViolation, "weights must be nonnegative");
        total += wi;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::WeightConstraintViolation, "weights must have a positive sum");
}

}  // namespace

const std::vector<double>& pool_weights(const PoolSpec& spec) noexcept {
    return std::visit([](const auto& s) -> const std::vector<double>& { return s.w; }, spec);
}

std::size_t pool_size(const PoolSpec& spec) noexcept { return pool_weights(spec).size(); }

std::string pool_method(const PoolSpec& spec) {
    struct Visitor {
        std::string operator()(const pools::Tlp&) const { return "tlp"; }
        std::string operator()(const pools::Slp&) const { return "slp"; }
        std::string operator()(const pools::Blp&) const { return "blp"; }
        std::string operator()(const pools::Glp& g) const { return "glp-" + std::string(g.link.name()); }
    };
    return std::visit(Visitor{}, spec);
}

void validate(const PoolSpec& spec) {
    struct Visitor {
        void operator()(const pools::Tlp& s) const { check_simplex(s.w); }
        void operator()(const pools::Slp& s) const {
            check_simplex(s.w);
            check_positive(s.c, "spread adjustment c");
        }
        void operator()(const pools::Blp& s) const {
            check_simplex(s.w);
            check_positive(s.alpha, "alpha");
            check_positive(s.beta, "beta");
        }
        void operator()(const pools::Glp& s) const { check_glp_weights(s.w, s.link); }
    };
    std::visit(Visitor{}, spec);
}

PredictiveDist pool(const PoolSpec& spec, const std::vector<PredictiveDist>& components) {
    validate(spec);
    if (components.size() != pool_size(spec)) {
        throw Error(ErrorCode::LengthMismatch, "pool has " + std::to_string(pool_size(spec)) + " weights but " +
                                                   std::to_string(components.size()) + " components");
    }
    struct Visitor {
        const std::vector<PredictiveDist>& comps;

        PredictiveDist operator()(const pools::Tlp& s) const { return PredictiveDist::mixture(comps, s.w); }
        PredictiveDist operator()(const pools::Slp& s) const {
            std::vector<PredictiveDist> adjusted;
            adjusted.reserve(comps.size());
            for (const auto& f : comps) adjusted.push_back(PredictiveDist::spread_adjusted(f, s.c));
            return PredictiveDist::mixture(std::move(adjusted), s.w);
        }
        PredictiveDist operator()(const pools::Blp& s) const {
            return PredictiveDist::beta_transformed(PredictiveDist::mixture(comps, s.w), s.alpha, s.beta);
        }
        PredictiveDist operator()(const pools::Glp& s) const { return PredictiveDist::link_pool(comps, s.w, s.link); }
    };
    return std::visit(Visitor{components}, spec);
}

double coherent_probit_pool(double p1, double p2, double sigma1, double sigma2) {
    check_positive(sigma1, "sigma1");
    check_positive(sigma2, "sigma2");
    if (!(p1 > 0.0 && p1 < 1.0) || !(p2 > 0.0 && p2 < 1.0)) {
        throw Error(ErrorCode::DomainViolation, "probit pool needs probabilities strictly inside (0, 1)");
    }
    const double s = std::sqrt(1.0 + sigma2 * sigma2) * special::normal_quantile(p1) +
                     std::sqrt(1.0 + sigma1 * sigma1) * special::normal_quantile(p2);
    return special::normal_cdf(s);
}

double slp_limit_variance_from_medians(const PredictiveDist& f0, std::vector<double> medians,
                                       const std::vector<double>& w) {
    if (medians.size() != w.size()) throw Error(ErrorCode::LengthMismatch, "medians and weights differ in length");
    check_simplex(w);
    const std::size_t k = w.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return medians[a] < medians[b]; });

    // Atoms v_0..v_k at cumulative weights, masses p_i = F0 increments between sorted medians.
    std::vector<double> v(k + 1, 0.0);
    std::vector<double> p(k + 1, 0.0);
    std::vector<double> f(k);
    for (std::size_t i = 0; i < k; ++i) f[i] = f0.cdf(medians[order[i]]);
    double cum = 0.0;
    for (std::size_t i = 1; i < k; ++i) {
        cum += w[order[i - 1]];
        v[i] = cum;
    }
    v[k] = 1.0;
    p[0] = f[0];
    for (std::size_t i = 1; i < k; ++i) p[i] = f[i] - f[i - 1];
    p[k] = 1.0 - f[k - 1];

    double mean = 0.0;
    for (std::size_t i = 0; i <= k; ++i) mean += p[i] * v[i];
    double var = 0.0;
    for (std::size_t i = 0; i <= k; ++i) var += p[i] * (v[i] - mean) * (v[i] - mean);
    return var;
}

double slp_limit_variance(const PredictiveDist& f0, const std::vector<PredictiveDist>& components,
                          const std::vector<double>& w) {
    std::vector<double> medians;
    medians.reserve(components.size());
    for (const auto& c : components) medians.push_back(c.median());
    return slp_limit_variance_from_medians(f0, std::move(medians), w);
}

}  // namespace poolcast
