#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "mivabo/discrete_opt.hpp"
#include "mivabo/domain.hpp"
#include "mivabo/features.hpp"

namespace mivabo::dd {

// Everything in this namespace uses the maximization convention.

/// weight * amplitude * cos(omega^T x + phase), x restricted to the term's
/// continuous scope.
struct CosineTerm {
  double weight = 0.0;
  double amplitude = 1.0;
  double phase = 0.0;
  Eigen::VectorXd omega;
};

/// Local objective of a mixed factor:
///   sum_t [prod_{i in monomial_t} x_d[i]] * cosine_t(x_c)
/// with monomials and frequencies indexed by the factor's local variables.
struct MixedFactor {
  std::vector<int> disc_vars;  // global binary slots
  std::vector<int> cont_vars;  // global continuous coordinates
  struct Term {
    std::vector<int> monomial;  // local discrete positions
    CosineTerm cosine;          // omega over local continuous positions
  };
  std::vector<Term> terms;

  [[nodiscard]] double value(BitsView local_disc, const Eigen::VectorXd& local_cont) const;
  [[nodiscard]] Eigen::VectorXd grad(BitsView local_disc, const Eigen::VectorXd& local_cont) const;
};

struct FactorGraph {
  static constexpr int kMaxDiscScope = 4;
  static constexpr int kMaxContScope = 2;

  int d_disc = 0;
  int d_cont = 0;
  QuadraticForm discrete_factor;
  double continuous_constant = 0.0;
  std::vector<CosineTerm> continuous_terms;  // omega over all continuous coordinates
  std::vector<MixedFactor> mixed;
  ConstraintSet constraints;
  /// Local discrete patterns of each mixed factor that extend to a globally
  /// feasible binary vector.
  std::vector<std::vector<Bits>> allowed_patterns;

  /// Validates scope caps, moves discrete and continuous terms into the
  /// first mixed factor whose scope contains them (same objective, tighter
  /// dual), and enumerates the allowed local patterns.
  void finalize();
  void absorb_local_terms();

  [[nodiscard]] double continuous_value(const Eigen::VectorXd& x_cont) const;
  [[nodiscard]] Eigen::VectorXd continuous_grad(const Eigen::VectorXd& x_cont) const;
  [[nodiscard]] double value(BitsView x_disc, const Eigen::VectorXd& x_cont) const;

  [[nodiscard]] FactorGraph negated() const;
};

/// Factor graph of -w^T phi(x), so that maximizing it minimizes the sampled
/// acquisition. Mixed features are grouped by (discrete monomial, RFF
/// scope). Throws ScopeTooLarge when a group exceeds the caps.
FactorGraph graph_from_weights(const FeatureExpansion& fe, const Eigen::VectorXd& w,
                               const ConstraintSet& cs);

struct DualOptions {
  double eta0 = 1.0;  // step size eta0 / sqrt(t)
  int grid_points = 101;
  int refine_steps = 20;
  int cont_restarts = 10;
  double gap_tol = 1e-12;
  std::uint64_t seed = 0;
};

struct SlaveSolution {
  Bits disc;                             // discrete slave argmax
  Eigen::VectorXd cont;                  // continuous slave argmax
  std::vector<Bits> mixed_disc;          // per factor, local
  std::vector<Eigen::VectorXd> mixed_cont;  // per factor, local
  double disc_value = 0.0;
  double cont_value = 0.0;
  std::vector<double> mixed_values;
  [[nodiscard]] double dual() const;
};

struct DualState {
  std::vector<Eigen::VectorXd> lambda_disc;  // per factor, per local discrete variable
  std::vector<Eigen::VectorXd> lambda_cont;  // per factor, per local continuous variable
  double best_dual = std::numeric_limits<double>::infinity();
  double last_dual = std::numeric_limits<double>::infinity();
  double best_primal = -std::numeric_limits<double>::infinity();
  Bits best_disc;
  Eigen::VectorXd best_cont;
  SlaveSolution slaves;
  int t = 0;
};

/// Zero multipliers for every mixed factor.
DualState initial_state(const FactorGraph& fg);

/// L(lambda) and the slave maximizers.
SlaveSolution dual_value(const FactorGraph& fg, const DualState& state, const DualOptions& opts);

/// Scores the primal assignment stitched from the discrete and continuous
/// slaves (and its continuous polish) and folds it into the state.
void record_primal(const FactorGraph& fg, DualState& state, const DualOptions& opts);

/// One projected-subgradient step with size eta; recomputes the dual value.
void subgradient_step(DualState& state, const FactorGraph& fg, double eta, const DualOptions& opts);

struct DualTracePoint {
  int t;
  double dual;
  double best_dual;
  double best_primal;
};

struct DualResult {
  Bits x_disc;
  Eigen::VectorXd x_cont;
  double value = 0.0;  // best primal, maximization convention
  double gap = 0.0;    // best dual - best primal
  std::vector<DualTracePoint> history;
};

DualResult optimize(const FactorGraph& fg, int budget, const DualOptions& opts = {});

/// optimize() on the negated graph, reported in the minimization convention.
DualResult minimize(const FactorGraph& fg, int budget, const DualOptions& opts = {});

void write_history_csv(std::ostream& os, const std::vector<DualTracePoint>& history);

}  // namespace mivabo::dd
