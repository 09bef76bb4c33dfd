#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mivabo/domain.hpp"

namespace mivabo {

/// Smooth objective over the unit box [0,1]^dim.
struct BoxProblem {
  using Objective = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

  int dim = 0;
  Objective objective;  // x -> (value, gradient)

  [[nodiscard]] double value(const Eigen::VectorXd& x) const { return objective(x).first; }
};

struct MinimizeOptions {
  int restarts = 10;
  double tol = 1e-6;  // projected-gradient norm
  int max_iters = 500;
  double armijo_c = 1e-4;
  int max_backtracks = 60;
  /// Evaluated before the box center and the random starts.
  std::vector<Eigen::VectorXd> extra_starts;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  long evaluations = 0;
};

/// Multi-start projected gradient descent with Armijo backtracking. The
/// first regular start is the box center, the rest are uniform.
MinimizeResult minimize(const BoxProblem& p, Rng& rng, const MinimizeOptions& opts = {});

/// One projected-gradient descent run. When `trajectory` is given, every
/// accepted iterate is appended.
MinimizeResult descend_from(const BoxProblem& p, Eigen::VectorXd x, const MinimizeOptions& opts,
                            std::vector<Eigen::VectorXd>* trajectory = nullptr);

/// Clamp onto [0,1]^n.
Eigen::VectorXd project_unit_box(const Eigen::VectorXd& x);

}  // namespace mivabo
