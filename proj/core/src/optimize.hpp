#pragma once

// Box-constrained minimiser used for GP hyperparameter training.

#include <functional>

#include <Eigen/Dense>

namespace saptune::detail {

/// Returns f(x) and writes the gradient; +inf signals an infeasible point.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct BoxResult {
  Eigen::VectorXd x;
  double value;
  int iterations;
};

/// Spectral projected gradient with a non-monotone Armijo line search.
BoxResult minimize_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                       const Eigen::VectorXd& upper, int max_iterations = 200, double tolerance = 1e-6);

}  // namespace saptune::detail
