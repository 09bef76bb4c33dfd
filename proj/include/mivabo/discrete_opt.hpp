#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mivabo/domain.hpp"

namespace mivabo {

/// c0 + sum_i lin_i x_i + sum_{i<j} quad(i,j) x_i x_j over binary x.
/// Only the strict upper triangle of `quad` is read.
struct QuadraticForm {
  double c0 = 0.0;
  Eigen::VectorXd lin;
  Eigen::MatrixXd quad;

  QuadraticForm() = default;
  explicit QuadraticForm(int n)
      : lin(Eigen::VectorXd::Zero(n)), quad(Eigen::MatrixXd::Zero(n, n)) {}

  [[nodiscard]] int dim() const { return static_cast<int>(lin.size()); }
  [[nodiscard]] double value(BitsView x) const;
  [[nodiscard]] double max_abs_coefficient() const;
};

enum class SolveMode { Auto, Exhaustive, BranchAndBound, Anneal };

SolveMode parse_solve_mode(const std::string& s);

/// Mode used by SolveMode::Auto for a given dimension.
SolveMode default_solve_mode(int dim);

struct AnnealSchedule {
  double t0 = -1.0;      // <= 0: max coefficient magnitude
  double decay = 0.999;  // geometric, per step
  long steps = 0;        // 0: 20 * D^2
  double penalty = 1e9;  // energy added to infeasible states
};

struct SolveOptions {
  SolveMode mode = SolveMode::Auto;
  int exhaustive_cap = 25;
  long node_budget = 0;  // 0: the 2^(D+1) sanity cap
  AnnealSchedule anneal;
  std::uint64_t seed = 0;
};

struct SolveResult {
  Bits x;
  double value = 0.0;
  long nodes = 0;
  bool proven_optimal = false;
};

/// Minimize qf over the feasible binary vectors of cs. Exhaustive and
/// branch-and-bound return the lexicographically smallest global minimizer.
/// Throws Infeasible when no binary vector is feasible and BudgetExhausted
/// when a truncated search has no feasible incumbent.
SolveResult solve(const QuadraticForm& qf, const ConstraintSet& cs, const SolveOptions& opts = {});

SolveResult solve_exhaustive(const QuadraticForm& qf, const ConstraintSet& cs, int cap = 25);
SolveResult solve_branch_and_bound(const QuadraticForm& qf, const ConstraintSet& cs,
                                   long node_budget = 0,
                                   std::vector<double>* incumbent_history = nullptr);

/// Admissible bound over all completions of a partial assignment. `fixed`
/// holds 0/1 for assigned variables and -1 for free ones.
double lower_bound(const QuadraticForm& qf, std::span<const std::int8_t> fixed);

struct AnnealResult {
  Bits x;
  double value = std::numeric_limits<double>::infinity();
  bool found_feasible = false;
};

/// Metropolis single-bit-flip chain. Infeasible states carry an energy
/// penalty; only feasible states are eligible as the result. When `energies`
/// is given, the energy after every step is appended.
AnnealResult anneal_run(const QuadraticForm& qf, const ConstraintSet& cs,
                        const AnnealSchedule& schedule, Rng& rng,
                        std::optional<Bits> start = std::nullopt,
                        std::vector<double>* energies = nullptr);

/// Text dump of an instance for debugging.
std::string dump_instance(const QuadraticForm& qf, const ConstraintSet& cs);

}  // namespace mivabo
