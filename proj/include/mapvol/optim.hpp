#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mapvol::optim {

/// Objective to minimize. Returning a non-finite value rejects the point.
using Objective = std::function<double(std::span<const double>)>;

/// Central-difference gradient with step cbrt(eps) * max(|x_i|, 1).
/// Returns false if any probe point was rejected.
bool central_gradient(const Objective& f, std::span<const double> x, std::span<double> grad);

struct BfgsOptions {
    int max_iterations = 500;
    double gradient_tolerance = 1e-6;  // sup-norm
    double max_step = 2.0;             // cap on the search-direction length
};

struct NelderMeadOptions {
    int max_evaluations = 20000;
    double initial_step = 0.25;
    double value_tolerance = 1e-11;
    double size_tolerance = 1e-9;
};

struct OptimResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    double gradient_norm = 0.0;  // sup-norm at x
    bool converged = false;
    std::string method;
    std::string message;
};

/// Quasi-Newton with numerical gradients and a backtracking line search that
/// treats rejected points as failed trial steps.
OptimResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& options = {});

/// Derivative-free simplex search; convergence here means the simplex collapsed.
OptimResult minimize_nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options = {});

/// Per-observation log-likelihood contributions at theta; false if theta is rejected.
using Contributions = std::function<bool(std::span<const double> theta, std::vector<double>& out)>;

struct SandwichResult {
    Eigen::MatrixXd hessian;  // Hessian of the mean log-likelihood
    Eigen::MatrixXd outer;    // mean outer product of per-observation scores
    Eigen::MatrixXd robust_covariance;
    Eigen::MatrixXd hessian_covariance;
    std::vector<double> robust_se;
    std::vector<double> hessian_se;
    std::vector<double> gradient;  // gradient of the mean log-likelihood at theta
};

/// Thrown when the negative Hessian is not positive definite.
struct SingularCurvature {
    std::size_t direction = 0;  // parameter with the largest weight in the flattest eigenvector
    double eigenvalue = 0.0;
};

/**
 * @brief QML sandwich covariance H^-1 S H^-1 / n.
 *
 * H is the central-difference Hessian of the mean contribution (step
 * cbrt(eps) * max(|theta_i|, 1)), S the mean outer product of central-difference
 * per-observation scores. Throws SingularCurvature when -H is not positive definite,
 * and mapvol::NumericalError if a probe point is rejected.
 */
SandwichResult sandwich(const Contributions& contributions, std::span<const double> theta);

}  // namespace mapvol::optim
