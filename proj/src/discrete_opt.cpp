#include "mivabo/discrete_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mivabo/errors.hpp"

namespace mivabo {

double QuadraticForm::value(BitsView x) const {
  const int n = dim();
  if (static_cast<int>(x.size()) != n) throw DimensionError("QuadraticForm::value: size mismatch");
  double v = c0;
  for (int i = 0; i < n; ++i) {
    if (!x[i]) continue;
    v += lin[i];
    for (int j = i + 1; j < n; ++j) {
      if (x[j]) v += quad(i, j);
    }
  }
  return v;
}

double QuadraticForm::max_abs_coefficient() const {
  double m = std::abs(c0);
  const int n = dim();
  for (int i = 0; i < n; ++i) {
    m = std::max(m, std::abs(lin[i]));
    for (int j = i + 1; j < n; ++j) m = std::max(m, std::abs(quad(i, j)));
  }
  return m;
}

SolveMode parse_solve_mode(const std::string& s) {
  if (s == "auto") return SolveMode::Auto;
  if (s == "exhaustive") return SolveMode::Exhaustive;
  if (s == "branch_and_bound" || s == "bnb") return SolveMode::BranchAndBound;
  if (s == "anneal") return SolveMode::Anneal;
  throw ConfigError("unknown discrete solver mode '" + s + "'");
}

SolveMode default_solve_mode(int dim) {
  if (dim <= 16) return SolveMode::Exhaustive;
  if (dim <= 40) return SolveMode::BranchAndBound;
  return SolveMode::Anneal;
}

namespace {

void check_instance(const QuadraticForm& qf, const ConstraintSet& cs) {
  if (qf.quad.rows() != qf.dim() || qf.quad.cols() != qf.dim()) {
    throw DimensionError("QuadraticForm: quad must be D x D");
  }
  if (cs.num_slots() != qf.dim()) {
    throw DimensionError("constraint set and quadratic form disagree on the dimension");
  }
}

bool lex_less(BitsView a, BitsView b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// Objective or constraint in the upper-triangular binary form, with the
/// incremental bookkeeping used by the branch-and-bound search.
struct BoundedForm {
  Eigen::VectorXd lin;
  Eigen::MatrixXd pair;  // symmetric, zero diagonal
  double constant = 0.0;
  double rhs = 0.0;  // constraints only
};

BoundedForm from_objective(const QuadraticForm& qf) {
  const int n = qf.dim();
  BoundedForm f;
  f.lin = qf.lin;
  f.constant = qf.c0;
  f.pair = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) f.pair(i, j) = f.pair(j, i) = qf.quad(i, j);
  }
  return f;
}

BoundedForm from_quadratic_constraint(const QuadraticConstraint& c) {
  const int n = static_cast<int>(c.q.size());
  BoundedForm f;
  f.lin = c.q + c.Q.diagonal();
  f.pair = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) f.pair(i, j) = f.pair(j, i) = c.Q(i, j) + c.Q(j, i);
  }
  f.rhs = c.b;
  return f;
}

class BranchAndBound {
 public:
  BranchAndBound(const QuadraticForm& qf, const ConstraintSet& cs, long budget,
                 std::vector<double>* history)
      : qf_(qf), cs_(cs), n_(qf.dim()), budget_(budget), history_(history) {
    objective_ = from_objective(qf);
    for (const auto& q : cs.quadratic()) quad_cons_.push_back(from_quadratic_constraint(q));

    // impact ordering; a zero objective falls back to index order so the
    // first feasible leaf is the lexicographically smallest one
    std::vector<double> impact(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      impact[i] = std::abs(objective_.lin[i]) + objective_.pair.row(i).cwiseAbs().sum();
    }
    stop_at_first_ = std::all_of(impact.begin(), impact.end(), [](double v) { return v == 0.0; });
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](int a, int b) { return impact[a] > impact[b]; });

    // pair-term suffix sums over order positions
    obj_pair_suffix_ = pair_suffix(objective_.pair);
    for (const auto& qc : quad_cons_) quad_pair_suffix_.push_back(pair_suffix(qc.pair));
    for (const auto& lc : cs.linear()) {
      std::vector<double> s(n_ + 1, 0.0);
      for (int p = n_ - 1; p >= 0; --p) s[p] = s[p + 1] + std::min(0.0, lc.a[order_[p]]);
      lin_suffix_.push_back(std::move(s));
    }
  }

  SolveResult run() {
    assign_.assign(n_, -1);
    eff_obj_ = objective_.lin;
    eff_quad_.clear();
    for (const auto& qc : quad_cons_) eff_quad_.push_back(qc.lin);
    quad_fixed_.assign(quad_cons_.size(), 0.0);
    lin_fixed_.assign(cs_.linear().size(), 0.0);
    fixed_obj_ = objective_.constant;
    best_x_.clear();
    best_value_ = std::numeric_limits<double>::infinity();
    nodes_ = 0;
    exhausted_ = false;
    done_ = false;

    descend(0);

    if (best_x_.empty()) {
      if (exhausted_ && !done_) throw BudgetExhausted("branch and bound: node budget exhausted without a feasible point");
      throw Infeasible("no binary vector satisfies the constraint set");
    }
    return {best_x_, qf_.value(best_x_), nodes_, done_ || !exhausted_};
  }

 private:
  std::vector<double> pair_suffix(const Eigen::MatrixXd& pair) const {
    std::vector<double> s(n_ + 1, 0.0);
    for (int p = n_ - 1; p >= 0; --p) {
      double add = 0.0;
      for (int r = p + 1; r < n_; ++r) add += std::min(0.0, pair(order_[p], order_[r]));
      s[p] = s[p + 1] + add;
    }
    return s;
  }

  double slack(double v) const { return 1e-9 * std::max(1.0, std::abs(v)); }

  // bound on the objective after positions [0, depth) are fixed
  double objective_bound(int depth) const {
    double b = fixed_obj_ + obj_pair_suffix_[depth];
    for (int p = depth; p < n_; ++p) b += std::min(0.0, eff_obj_[order_[p]]);
    return b;
  }

  bool constraints_may_hold(int depth) const {
    for (std::size_t c = 0; c < lin_suffix_.size(); ++c) {
      const double rhs = cs_.linear()[c].b;
      if (lin_fixed_[c] + lin_suffix_[c][depth] > rhs + ConstraintSet::kFeasibilityTol) return false;
    }
    for (std::size_t c = 0; c < quad_cons_.size(); ++c) {
      double b = quad_fixed_[c] + quad_pair_suffix_[c][depth];
      for (int p = depth; p < n_; ++p) b += std::min(0.0, eff_quad_[c][order_[p]]);
      if (b > quad_cons_[c].rhs + ConstraintSet::kFeasibilityTol) return false;
    }
    return true;
  }

  void set_one(int v, double sign) {
    fixed_obj_ += sign * eff_obj_[v];
    for (int u = 0; u < n_; ++u) eff_obj_[u] += sign * objective_.pair(v, u);
    for (std::size_t c = 0; c < lin_fixed_.size(); ++c) lin_fixed_[c] += sign * cs_.linear()[c].a[v];
    for (std::size_t c = 0; c < quad_cons_.size(); ++c) {
      quad_fixed_[c] += sign * eff_quad_[c][v];
      for (int u = 0; u < n_; ++u) eff_quad_[c][u] += sign * quad_cons_[c].pair(v, u);
    }
  }

  void offer_leaf() {
    Bits x(n_);
    for (int i = 0; i < n_; ++i) x[i] = static_cast<std::uint8_t>(assign_[i]);
    if (!cs_.satisfied(x)) return;
    const double v = qf_.value(x);
    if (v < best_value_ || (v == best_value_ && lex_less(x, best_x_))) {
      best_value_ = v;
      best_x_ = std::move(x);
      if (history_) history_->push_back(best_value_);
    }
  }

  void descend(int depth) {
    if (exhausted_) return;
    if (++nodes_ > budget_) {
      exhausted_ = true;
      return;
    }
    if (depth == n_) {
      offer_leaf();
      if (stop_at_first_ && !best_x_.empty()) exhausted_ = done_ = true;
      return;
    }
    const int v = order_[depth];

    // bounds of both children
    double child_bound[2];
    bool child_ok[2];
    assign_[v] = 0;
    child_bound[0] = objective_bound(depth + 1);
    child_ok[0] = constraints_may_hold(depth + 1);
    set_one(v, +1.0);
    assign_[v] = 1;
    child_bound[1] = objective_bound(depth + 1);
    child_ok[1] = constraints_may_hold(depth + 1);
    set_one(v, -1.0);
    assign_[v] = -1;

    const int first = child_bound[1] < child_bound[0] ? 1 : 0;
    for (int k = 0; k < 2; ++k) {
      const int val = k == 0 ? first : 1 - first;
      if (!child_ok[val]) continue;
      if (!best_x_.empty() && child_bound[val] > best_value_ + slack(best_value_)) continue;
      assign_[v] = val;
      if (val == 1) set_one(v, +1.0);
      descend(depth + 1);
      if (val == 1) set_one(v, -1.0);
      assign_[v] = -1;
      if (exhausted_) return;
    }
  }

  const QuadraticForm& qf_;
  const ConstraintSet& cs_;
  int n_;
  long budget_;
  std::vector<double>* history_;

  BoundedForm objective_;
  std::vector<BoundedForm> quad_cons_;
  std::vector<int> order_;
  std::vector<double> obj_pair_suffix_;
  std::vector<std::vector<double>> quad_pair_suffix_;
  std::vector<std::vector<double>> lin_suffix_;

  std::vector<int> assign_;
  Eigen::VectorXd eff_obj_;
  std::vector<Eigen::VectorXd> eff_quad_;
  std::vector<double> quad_fixed_;
  std::vector<double> lin_fixed_;
  double fixed_obj_ = 0.0;

  Bits best_x_;
  double best_value_ = 0.0;
  long nodes_ = 0;
  bool exhausted_ = false;
  bool done_ = false;
  // constant objective: the first feasible leaf in index order is the answer
  bool stop_at_first_ = false;
};

long sanity_cap(int n) {
  return n >= 60 ? std::numeric_limits<long>::max() : (2L << n);
}

}  // namespace

double lower_bound(const QuadraticForm& qf, std::span<const std::int8_t> fixed) {
  const int n = qf.dim();
  if (static_cast<int>(fixed.size()) != n) throw DimensionError("lower_bound: size mismatch");
  double bound = qf.c0;
  for (int i = 0; i < n; ++i) {
    if (fixed[i] == 1) {
      bound += qf.lin[i];
      for (int j = i + 1; j < n; ++j) {
        if (fixed[j] == 1) bound += qf.quad(i, j);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (fixed[i] >= 0) continue;
    double eff = qf.lin[i];
    for (int j = 0; j < n; ++j) {
      if (fixed[j] != 1) continue;
      eff += i < j ? qf.quad(i, j) : qf.quad(j, i);
    }
    bound += std::min(0.0, eff);
    for (int j = i + 1; j < n; ++j) {
      if (fixed[j] < 0) bound += std::min(0.0, qf.quad(i, j));
    }
  }
  return bound;
}

SolveResult solve_exhaustive(const QuadraticForm& qf, const ConstraintSet& cs, int cap) {
  check_instance(qf, cs);
  const int n = qf.dim();
  if (n > cap) {
    throw ConfigError("exhaustive solve over " + std::to_string(n) + " variables exceeds the cap of " +
                      std::to_string(cap));
  }
  SolveResult best;
  best.value = std::numeric_limits<double>::infinity();
  Bits x(n, 0);
  const std::uint64_t count = std::uint64_t{1} << n;
  // x[0] is the most significant bit, so codes run in lexicographic order
  for (std::uint64_t code = 0; code < count; ++code) {
    for (int i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((code >> (n - 1 - i)) & 1U);
    ++best.nodes;
    if (!cs.satisfied(x)) continue;
    const double v = qf.value(x);
    if (v < best.value) {
      best.value = v;
      best.x = x;
    }
  }
  if (best.x.empty() && n > 0) throw Infeasible("no binary vector satisfies the constraint set");
  if (n == 0) {
    best.x = {};
    best.value = qf.c0;
  }
  best.proven_optimal = true;
  return best;
}

SolveResult solve_branch_and_bound(const QuadraticForm& qf, const ConstraintSet& cs, long node_budget,
                                   std::vector<double>* incumbent_history) {
  check_instance(qf, cs);
  const long cap = sanity_cap(qf.dim());
  const long budget = node_budget > 0 ? std::min(node_budget, cap) : cap;
  BranchAndBound bb(qf, cs, budget, incumbent_history);
  return bb.run();
}

AnnealResult anneal_run(const QuadraticForm& qf, const ConstraintSet& cs, const AnnealSchedule& schedule,
                        Rng& rng, std::optional<Bits> start, std::vector<double>* energies) {
  check_instance(qf, cs);
  const int n = qf.dim();
  AnnealResult result;
  if (n == 0) {
    result.value = qf.c0;
    result.found_feasible = cs.satisfied(result.x);
    return result;
  }
  const long steps = schedule.steps > 0 ? schedule.steps : 20L * n * n;
  double temp = schedule.t0 > 0.0 ? schedule.t0 : std::max(qf.max_abs_coefficient(), 1e-12);
  if (schedule.t0 == 0.0) temp = 0.0;

  Bits x;
  if (start) {
    x = *start;
    if (static_cast<int>(x.size()) != n) throw DimensionError("anneal_run: start has wrong size");
  } else {
    x.assign(n, 0);
    if (!cs.satisfied(x)) {
      std::bernoulli_distribution coin(0.5);
      for (auto& b : x) b = coin(rng) ? 1 : 0;
    }
  }

  // symmetric pair matrix for O(n) flip deltas
  Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pair(i, j) = pair(j, i) = qf.quad(i, j);
  }
  double value = qf.value(x);
  bool feasible = cs.satisfied(x);
  auto energy_of = [&](double v, bool ok) { return v + (ok ? 0.0 : schedule.penalty); };
  double energy = energy_of(value, feasible);
  if (feasible) {
    result.x = x;
    result.value = value;
    result.found_feasible = true;
  }

  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (long step = 0; step < steps; ++step) {
    const int i = pick(rng);
    double field = qf.lin[i];
    for (int j = 0; j < n; ++j) {
      if (j != i && x[j]) field += pair(i, j);
    }
    const double delta_value = x[i] ? -field : field;
    x[i] ^= 1U;
    const bool cand_ok = cs.satisfied(x);
    const double cand_value = value + delta_value;
    const double cand_energy = energy_of(cand_value, cand_ok);
    const double delta = cand_energy - energy;
    bool accept;
    if (delta <= 0.0) {
      accept = true;
    } else if (temp <= 0.0) {
      accept = false;
    } else {
      accept = unit(rng) < std::exp(-delta / temp);
    }
    if (accept) {
      value = cand_value;
      feasible = cand_ok;
      energy = cand_energy;
      if (feasible && (!result.found_feasible || value < result.value)) {
        result.x = x;
        result.value = value;
        result.found_feasible = true;
      }
    } else {
      x[i] ^= 1U;
    }
    if (energies) energies->push_back(energy);
    temp *= schedule.decay;
  }
  if (result.found_feasible) result.value = qf.value(result.x);
  return result;
}

SolveResult solve(const QuadraticForm& qf, const ConstraintSet& cs, const SolveOptions& opts) {
  check_instance(qf, cs);
  SolveMode mode = opts.mode == SolveMode::Auto ? default_solve_mode(qf.dim()) : opts.mode;
  switch (mode) {
    case SolveMode::Exhaustive:
      return solve_exhaustive(qf, cs, opts.exhaustive_cap);
    case SolveMode::BranchAndBound:
      return solve_branch_and_bound(qf, cs, opts.node_budget);
    case SolveMode::Anneal: {
      Rng rng(opts.seed);
      AnnealResult r = anneal_run(qf, cs, opts.anneal, rng);
      if (!r.found_feasible) throw BudgetExhausted("annealing visited no feasible state");
      return {std::move(r.x), r.value, 0, false};
    }
    case SolveMode::Auto:
      break;
  }
  throw ConfigError("unreachable solve mode");
}

std::string dump_instance(const QuadraticForm& qf, const ConstraintSet& cs) {
  std::ostringstream os;
  os.precision(17);
  const int n = qf.dim();
  os << "dim " << n << "\nc0 " << qf.c0 << "\nlin";
  for (int i = 0; i < n; ++i) os << ' ' << qf.lin[i];
  os << '\n';
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (qf.quad(i, j) != 0.0) os << "quad " << i << ' ' << j << ' ' << qf.quad(i, j) << '\n';
    }
  }
  for (const auto& c : cs.linear()) {
    os << "linear";
    for (int i = 0; i < n; ++i) os << ' ' << c.a[i];
    os << " <= " << c.b << '\n';
  }
  for (const auto& c : cs.quadratic()) {
    os << "quadratic Q";
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) os << ' ' << c.Q(i, j);
    }
    os << " q";
    for (int i = 0; i < n; ++i) os << ' ' << c.q[i];
    os << " <= " << c.b << '\n';
  }
  return os.str();
}

}  // namespace mivabo
