#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mivabo/domain.hpp"

namespace mivabo {

/// Simulated annealing schedule over a mixed domain.
struct MixedAnnealSchedule {
  double t0 = 1.0;
  double decay = 0.995;  // geometric, per step
  long steps = 2000;
  double cont_step = 0.1;  // std of the Gaussian move on a continuous coordinate
  double penalty = 1e9;    // energy added to states that violate known constraints

  [[nodiscard]] nlohmann::json to_json() const;
  static MixedAnnealSchedule from_json(const nlohmann::json& j);
};

struct MixedPoint {
  Bits x_disc;
  Eigen::VectorXd x_cont;
};

/// Neighbor of `p`: a single bit flip with probability D_d / (D_d + D_c),
/// otherwise a clamped Gaussian step on one continuous coordinate.
MixedPoint propose_mixed_move(const MixedPoint& p, double cont_step, Rng& rng);

/// Metropolis acceptance test; at zero temperature only non-increasing moves pass.
bool metropolis_accept(double delta, double temperature, Rng& rng);

struct MixedAnnealResult {
  MixedPoint best;
  double best_value = std::numeric_limits<double>::infinity();
  bool found_feasible = false;
};

/// Minimizes `energy` over the domain. When `respect_constraints` is set,
/// infeasible states carry the schedule penalty and are never returned.
MixedAnnealResult mixed_anneal(const MixedDomain& domain,
                               const std::function<double(const MixedPoint&)>& energy,
                               const MixedAnnealSchedule& schedule, Rng& rng, MixedPoint start,
                               bool respect_constraints = true,
                               std::vector<double>* energies = nullptr);

}  // namespace mivabo
