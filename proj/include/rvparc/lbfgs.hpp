#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>

namespace rvparc {

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 2000;
  double relative_gradient_tol = 1e-8;  // on the inf-norm, relative to the initial gradient
  double absolute_gradient_tol = 0.0;
  double c1 = 1e-4;                     // strong Wolfe constants
  double c2 = 0.9;
  int max_line_search = 40;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double gradient_inf = 0.0;
  double initial_gradient_inf = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

// Returns f(x) and writes the gradient into g.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& g)>;

// Limited-memory BFGS with a strong-Wolfe line search. On line-search failure
// the best iterate found so far is returned with converged = false.
LbfgsResult lbfgs_minimize(const Objective& fn, Eigen::VectorXd x0, const LbfgsOptions& opt = {});

}  // namespace rvparc
