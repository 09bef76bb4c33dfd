#include "mivabo/continuous_opt.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mivabo/errors.hpp"

namespace mivabo {

Eigen::VectorXd project_unit_box(const Eigen::VectorXd& x) { return x.cwiseMax(0.0).cwiseMin(1.0); }

MinimizeResult descend_from(const BoxProblem& p, Eigen::VectorXd x, const MinimizeOptions& opts,
                            std::vector<Eigen::VectorXd>* trajectory) {
  if (x.size() != p.dim) throw DimensionError("descend_from: start point has the wrong size");
  x = project_unit_box(x);
  auto [fx, grad] = p.objective(x);
  long evals = 1;
  if (trajectory) trajectory->push_back(x);
  double step = 1.0;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const Eigen::VectorXd pg = x - project_unit_box(x - grad);
    if (pg.norm() < opts.tol) break;

    bool accepted = false;
    double t = std::min(1e6, 2.0 * step);
    for (int bt = 0; bt < opts.max_backtracks; ++bt, t *= 0.5) {
      Eigen::VectorXd cand = project_unit_box(x - t * grad);
      const Eigen::VectorXd d = cand - x;
      if (d.squaredNorm() == 0.0) break;
      auto [fc, gc] = p.objective(cand);
      ++evals;
      if (fc <= fx + opts.armijo_c * grad.dot(d)) {
        x = std::move(cand);
        fx = fc;
        grad = std::move(gc);
        step = t;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (trajectory) trajectory->push_back(x);
  }
  return {std::move(x), fx, evals};
}

MinimizeResult minimize(const BoxProblem& p, Rng& rng, const MinimizeOptions& opts) {
  if (opts.restarts < 1) throw ConfigError("minimize: restarts must be >= 1");
  if (!(opts.tol > 0.0)) throw ConfigError("minimize: tol must be positive");
  MinimizeResult best;
  best.value = std::numeric_limits<double>::infinity();
  long evals = 0;
  auto consider = [&](const Eigen::VectorXd& start) {
    MinimizeResult r = descend_from(p, start, opts);
    evals += r.evaluations;
    if (r.value < best.value) best = std::move(r);
  };
  if (p.dim == 0) {
    Eigen::VectorXd empty(0);
    return {empty, p.value(empty), 1};
  }
  for (const auto& s : opts.extra_starts) consider(s);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int r = 0; r < opts.restarts; ++r) {
    Eigen::VectorXd start(p.dim);
    if (r == 0) {
      start.setConstant(0.5);
    } else {
      for (int i = 0; i < p.dim; ++i) start[i] = unit(rng);
    }
    consider(start);
  }
  best.evaluations = evals;
  return best;
}

}  // namespace mivabo
