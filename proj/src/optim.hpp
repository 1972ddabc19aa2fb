#pragma once

// Derivative-free and finite-difference helpers shared by the fitters.
// All routines maximize; infeasible points should evaluate to -infinity.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace poolcast::optim {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> trace;  // best value after each iteration
};

/// Restarts from the best vertex until a restart improves by less than ftol.
NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             double ftol, std::size_t max_iter = 20000);

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x, double h);
Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, double h);

struct PolishResult {
    Eigen::VectorXd x;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> trace;
};

/// Newton iteration on finite-difference derivatives, accepting only
/// nondecreasing steps. Stops when the Hessian is not negative definite.
PolishResult fd_newton_polish(const Objective& f, const Eigen::VectorXd& x0, double f0, std::size_t max_iter = 50);

/// Inverse of -H when -H is positive definite relative to its scale.
bool inverse_negative(const Eigen::MatrixXd& h, Eigen::MatrixXd& cov);

}  // namespace poolcast::optim
