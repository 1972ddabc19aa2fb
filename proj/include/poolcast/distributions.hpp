#pragma once

#include "poolcast/link.hpp"

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace poolcast {

class PredictiveDist;

struct BetaTransform {
    double alpha;
    double beta;
};

/// Re-scales a distribution about `median` by the factor c.
struct SpreadAdjust {
    double c;
    double median;
};

using CdfTransform = std::variant<BetaTransform, SpreadAdjust>;

namespace dist {
struct Gaussian;
struct Uniform;
struct TwoPointBernoulli;
struct FiniteDiscrete;
struct Mixture;
struct Transformed;
struct LinkPool;
}  // namespace dist

using DistKind = std::variant<dist::Gaussian, dist::Uniform, dist::TwoPointBernoulli,
                              dist::FiniteDiscrete, dist::Mixture, dist::Transformed,
                              dist::LinkPool>;

/// An immutable predictive distribution, identified with its right-continuous
/// CDF. Copies share the underlying representation.
class PredictiveDist {
public:
    static PredictiveDist gaussian(double mu, double sigma);
    static PredictiveDist uniform(double lo, double hi);
    /// Binary outcome with success coded as 0: cdf(y) = p 1(y >= 0) + (1 - p) 1(y >= 1).
    static PredictiveDist bernoulli(double p);
    static PredictiveDist discrete(std::vector<double> atoms, std::vector<double> masses);
    static PredictiveDist mixture(std::vector<PredictiveDist> components, std::vector<double> weights);
    static PredictiveDist beta_transformed(PredictiveDist base, double alpha, double beta);
    static PredictiveDist spread_adjusted(PredictiveDist base, double c, double median);
    /// Uses the base's unique median; throws MedianUndefined when the CDF is flat at 1/2.
    static PredictiveDist spread_adjusted(PredictiveDist base, double c);
    static PredictiveDist link_pool(std::vector<PredictiveDist> components, std::vector<double> weights,
                                    LinkFunction link);

    double cdf(double y) const;
    /// Left limit lim_{t -> y-} cdf(t).
    double cdf_left(double y) const;
    double point_mass(double y) const { return cdf(y) - cdf_left(y); }

    /// Lebesgue density; throws DensityUnavailable for kinds with atoms.
    double density(double y) const;
    bool has_density() const noexcept;
    bool is_continuous() const noexcept { return has_density(); }

    /// Generalized inverse inf{y : cdf(y) >= p} for p in (0, 1).
    double quantile(double p) const;
    /// Unique median; throws MedianUndefined if the CDF is flat at 1/2.
    double median() const;
    double mean() const;
    double variance() const;

    /// Locations of point masses (empty for continuous kinds).
    std::vector<double> atoms() const;

    const DistKind& kind() const noexcept;
    std::string describe() const;

private:
    explicit PredictiveDist(std::shared_ptr<const DistKind> kind) : kind_(std::move(kind)) {}

    // Rough centre and width used to bracket quantile searches and quadrature.
    double location_hint() const;
    double scale_hint() const;
    double bisect_quantile(double p) const;
    double moment_by_quadrature(int order, double centre) const;

    std::shared_ptr<const DistKind> kind_;
};

namespace dist {

struct Gaussian {
    double mu;
    double sigma;
};

struct Uniform {
    double lo;
    double hi;
};

struct TwoPointBernoulli {
    double p;
};

struct FiniteDiscrete {
    std::vector<double> atoms;   // strictly ascending
    std::vector<double> masses;  // nonnegative, summing to one
};

struct Mixture {
    std::vector<PredictiveDist> components;
    std::vector<double> weights;
};

struct Transformed {
    PredictiveDist base;
    CdfTransform transform;
};

struct LinkPool {
    std::vector<PredictiveDist> components;
    std::vector<double> weights;
    LinkFunction link;
};

}  // namespace dist

inline const DistKind& PredictiveDist::kind() const noexcept { return *kind_; }

/// Throws WeightConstraintViolation unless w is on the unit simplex within tol.
void check_simplex(const std::vector<double>& w, double tol = 1e-12);

}  // namespace poolcast
