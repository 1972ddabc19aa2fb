#pragma once

#include "poolcast/distributions.hpp"
#include "poolcast/pit.hpp"
#include "poolcast/pools.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace poolcast::fit {

/// One training or test case: k component forecasts and the realized value.
struct ForecastCase {
    std::vector<PredictiveDist> components;
    double y = 0.0;
};

using Dataset = std::vector<ForecastCase>;

/// Number of components; throws EmptyInput or LengthMismatch for ragged data.
std::size_t component_count(const Dataset& data);

/// Component CDF and density values at the observations, stored component-major.
struct ComponentTable {
    std::size_t k = 0;
    std::size_t n = 0;
    std::vector<double> cdf;
    std::vector<double> pdf;
};

ComponentTable tabulate(const Dataset& data);

/// log density(y), with the density floored at 1e-300.
double log_score(const PredictiveDist& d, double y);

/// Pooled CDF values are clamped to [kCdfClamp, 1 - kCdfClamp] and densities
/// floored at kDensityFloor inside the objectives.
inline constexpr double kCdfClamp = 1e-12;
inline constexpr double kDensityFloor = 1e-300;

/// Sum log score of the beta-transformed pool and its derivatives with
/// respect to (w_1, ..., w_{k-1}, alpha, beta); w_k = 1 - sum of the others.
struct BlpDerivatives {
    double loglik = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

/// Throws DomainViolation when more than 1% of pooled CDF values hit the clamp.
BlpDerivatives blp_objective_and_derivatives(const std::vector<double>& w, double alpha, double beta,
                                             const ComponentTable& table);
BlpDerivatives blp_objective_and_derivatives(const std::vector<double>& w, double alpha, double beta,
                                             const Dataset& data);

/// Sum log score only (no clamp-count check).
double blp_loglik(const std::vector<double>& w, double alpha, double beta, const ComponentTable& table);

struct StdErrors {
    std::vector<double> w;  // last entry by the delta method when weights sum to one
    std::optional<double> c;
    std::optional<double> alpha;
    std::optional<double> beta;
};

struct FitResult {
    PoolSpec spec;
    std::optional<StdErrors> std_errors;
    double mean_log_score_train = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<bool> boundary_active;
    /// Objective is flat in some direction at the optimum (no unique maximizer).
    bool flat_direction = false;
    /// The Hessian was not negative definite at some iterate; gradient steps were used.
    bool singular_hessian = false;
    /// Objective values of accepted iterates, one vector per optimization phase.
    /// Each is nondecreasing.
    std::vector<std::vector<double>> traces;
};

struct BlpInit {
    std::vector<double> w;
    double alpha = 1.0;
    double beta = 1.0;
};

FitResult fit_blp(const Dataset& data, const std::optional<BlpInit>& init = std::nullopt);
FitResult fit_tlp(const Dataset& data);
FitResult fit_slp(const Dataset& data);
FitResult fit_glp(const Dataset& data, LinkFunction link);

/// Dispatches on the method name used by the parameter record.
FitResult fit_method(const Dataset& data, std::string_view method);

struct ComponentRegression {
    double a = 0.0;
    double b = 0.0;
    double sigma = 0.0;
};

/// Least squares intercept and slope, sigma = sqrt(RSS / n).
ComponentRegression fit_gaussian_component(const std::vector<double>& x, const std::vector<double>& y);

struct EvaluationReport {
    double mean_log_score = 0.0;
    double pit_variance = 0.0;
    double rmv = 0.0;
    pit::DispersionReport dispersion;
    std::vector<pit::HistogramBin> histogram;
};

EvaluationReport evaluate(const PoolSpec& spec, const Dataset& data, std::uint64_t seed = 1, std::size_t bins = 10);
/// Report for component i alone (a degenerate TLP).
EvaluationReport evaluate_component(const Dataset& data, std::size_t i, std::uint64_t seed = 1,
                                    std::size_t bins = 10);

/// Mean log score of the pooled forecasts over the dataset.
double mean_log_score(const PoolSpec& spec, const Dataset& data);

}  // namespace poolcast::fit
