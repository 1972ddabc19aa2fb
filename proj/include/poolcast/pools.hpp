#pragma once

#include "poolcast/distributions.hpp"
#include "poolcast/link.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace poolcast {

namespace pools {

/// Traditional linear pool: sum_i w_i F_i.
struct Tlp {
    std::vector<double> w;
};

/// Spread-adjusted linear pool: sum_i w_i F_i(mu_i + (y - mu_i) / c), mu_i the median of F_i.
struct Slp {
    std::vector<double> w;
    double c = 1.0;
};

/// Beta-transformed linear pool: B_{alpha,beta}(sum_i w_i F_i).
struct Blp {
    std::vector<double> w;
    double alpha = 1.0;
    double beta = 1.0;
};

/// Generalized linear pool: h^{-1}(sum_i w_i h(F_i)).
struct Glp {
    std::vector<double> w;
    LinkFunction link;
};

}  // namespace pools

using PoolSpec = std::variant<pools::Tlp, pools::Slp, pools::Blp, pools::Glp>;

const std::vector<double>& pool_weights(const PoolSpec& spec) noexcept;
std::size_t pool_size(const PoolSpec& spec) noexcept;

/// "tlp", "slp", "blp", "glp-identity", "glp-reciprocal", "glp-log", "glp-probit".
std::string pool_method(const PoolSpec& spec);

/// Throws WeightConstraintViolation or InvalidArgument when the parameters are invalid.
void validate(const PoolSpec& spec);

/// Combined predictive distribution. SLP medians are computed here once.
PredictiveDist pool(const PoolSpec& spec, const std::vector<PredictiveDist>& components);

/// Combined success probability of two probit forecasts whose information
/// sets carry independent N(0, sigma1^2) and N(0, sigma2^2) signals.
double coherent_probit_pool(double p1, double p2, double sigma1, double sigma2);

/// Variance of the limiting discrete law of the SLP PIT as c -> 0 when the
/// observation has law f0. Medians are sorted and weights permuted with them.
double slp_limit_variance(const PredictiveDist& f0, const std::vector<PredictiveDist>& components,
                          const std::vector<double>& w);
/// Same, with the component medians given directly.
double slp_limit_variance_from_medians(const PredictiveDist& f0, std::vector<double> medians,
                                       const std::vector<double>& w);

}  // namespace poolcast
