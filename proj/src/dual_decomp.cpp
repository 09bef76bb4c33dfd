#include "mivabo/dual_decomp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "mivabo/continuous_opt.hpp"
#include "mivabo/errors.hpp"

namespace mivabo::dd {

namespace {

double cosine_value(const CosineTerm& t, const Eigen::VectorXd& x) {
  return t.weight * t.amplitude * std::cos(t.omega.dot(x) + t.phase);
}

void add_cosine_grad(const CosineTerm& t, const Eigen::VectorXd& x, double scale, Eigen::VectorXd& g) {
  g -= (scale * t.weight * t.amplitude * std::sin(t.omega.dot(x) + t.phase)) * t.omega;
}

bool monomial_on(const std::vector<int>& monomial, BitsView bits) {
  for (int i : monomial) {
    if (!bits[i]) return false;
  }
  return true;
}

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = x[idx[i]];
  return out;
}

Bits gather(BitsView x, const std::vector<int>& idx) {
  Bits out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = x[idx[i]];
  return out;
}

/// Maximizes `f` over [0,1]^dim: a full grid when dim <= 2, multi-start
/// otherwise, then a short projected-gradient refinement. `candidates`
/// are always scored.
std::pair<Eigen::VectorXd, double> maximize_box(const BoxProblem& f, const DualOptions& opts,
                                                int refine_steps,
                                                const std::vector<Eigen::VectorXd>& candidates,
                                                Rng* rng) {
  BoxProblem neg{f.dim, [&f](const Eigen::VectorXd& x) {
                   auto [v, g] = f.objective(x);
                   return std::pair<double, Eigen::VectorXd>{-v, -g};
                 }};
  MinimizeOptions refine;
  refine.max_iters = refine_steps;
  refine.tol = 1e-12;

  Eigen::VectorXd best_x = Eigen::VectorXd::Constant(f.dim, 0.5);
  double best = -std::numeric_limits<double>::infinity();
  auto offer = [&](const Eigen::VectorXd& x, double v) {
    if (v > best) {
      best = v;
      best_x = x;
    }
  };
  if (f.dim == 0) {
    Eigen::VectorXd e(0);
    return {e, f.value(e)};
  }
  for (const auto& c : candidates) offer(c, f.value(c));

  if (f.dim <= 2) {
    const int g = std::max(2, opts.grid_points);
    Eigen::VectorXd x(f.dim);
    Eigen::VectorXd grid_best = best_x;
    double grid_value = -std::numeric_limits<double>::infinity();
    const int total = f.dim == 1 ? g : g * g;
    for (int idx = 0; idx < total; ++idx) {
      x[0] = static_cast<double>(idx % g) / (g - 1);
      if (f.dim == 2) x[1] = static_cast<double>(idx / g) / (g - 1);
      const double v = f.value(x);
      if (v > grid_value) {
        grid_value = v;
        grid_best = x;
      }
    }
    offer(grid_best, grid_value);
    MinimizeResult r = descend_from(neg, grid_best, refine);
    offer(r.x, -r.value);
  } else {
    MinimizeOptions ms;
    ms.restarts = opts.cont_restarts;
    ms.extra_starts = candidates;
    Rng local(opts.seed);
    MinimizeResult r = minimize(neg, rng ? *rng : local, ms);
    offer(r.x, -r.value);
  }
  if (refine_steps > 0) {
    MinimizeResult r = descend_from(neg, best_x, refine);
    offer(r.x, -r.value);
  }
  return {best_x, best};
}

}  // namespace

// ---------------------------------------------------------------------------

double MixedFactor::value(BitsView local_disc, const Eigen::VectorXd& local_cont) const {
  double v = 0.0;
  for (const Term& t : terms) {
    if (monomial_on(t.monomial, local_disc)) v += cosine_value(t.cosine, local_cont);
  }
  return v;
}

Eigen::VectorXd MixedFactor::grad(BitsView local_disc, const Eigen::VectorXd& local_cont) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(local_cont.size());
  for (const Term& t : terms) {
    if (monomial_on(t.monomial, local_disc)) add_cosine_grad(t.cosine, local_cont, 1.0, g);
  }
  return g;
}

namespace {

int local_position(const std::vector<int>& vars, int v) {
  auto it = std::find(vars.begin(), vars.end(), v);
  return it == vars.end() ? -1 : static_cast<int>(it - vars.begin());
}

}  // namespace

void FactorGraph::absorb_local_terms() {
  if (mixed.empty()) return;
  auto absorb_disc = [&](std::vector<int> vars, double coef) {
    for (MixedFactor& f : mixed) {
      MixedFactor::Term t;
      for (int v : vars) {
        const int p = local_position(f.disc_vars, v);
        if (p < 0) break;
        t.monomial.push_back(p);
      }
      if (t.monomial.size() != vars.size()) continue;
      t.cosine.weight = coef;
      t.cosine.phase = 0.0;  // cos(0) = 1: a constant in x_c
      t.cosine.omega = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.cont_vars.size()));
      f.terms.push_back(std::move(t));
      return true;
    }
    return false;
  };
  for (int i = 0; i < d_disc; ++i) {
    if (discrete_factor.lin[i] != 0.0 && absorb_disc({i}, discrete_factor.lin[i])) discrete_factor.lin[i] = 0.0;
    for (int j = i + 1; j < d_disc; ++j) {
      if (discrete_factor.quad(i, j) != 0.0 && absorb_disc({i, j}, discrete_factor.quad(i, j))) {
        discrete_factor.quad(i, j) = 0.0;
      }
    }
  }
  std::vector<CosineTerm> kept;
  for (CosineTerm& c : continuous_terms) {
    bool moved = false;
    if (c.omega.size() == d_cont && c.omega.cwiseAbs().maxCoeff() > 0.0) {
      for (MixedFactor& f : mixed) {
        bool covered = true;
        for (int k = 0; k < d_cont && covered; ++k) {
          if (c.omega[k] != 0.0 && local_position(f.cont_vars, k) < 0) covered = false;
        }
        if (!covered) continue;
        MixedFactor::Term t;
        t.cosine = c;
        t.cosine.omega = gather(c.omega, f.cont_vars);
        f.terms.push_back(std::move(t));
        moved = true;
        break;
      }
    }
    if (!moved) kept.push_back(std::move(c));
  }
  continuous_terms = std::move(kept);
}

void FactorGraph::finalize() {
  if (constraints.num_slots() != d_disc) constraints = ConstraintSet(d_disc);
  allowed_patterns.clear();
  for (const MixedFactor& f : mixed) {
    if (static_cast<int>(f.disc_vars.size()) > kMaxDiscScope ||
        static_cast<int>(f.cont_vars.size()) > kMaxContScope) {
      throw ScopeTooLarge("mixed factor scope (" + std::to_string(f.disc_vars.size()) + " discrete, " +
                          std::to_string(f.cont_vars.size()) + " continuous) exceeds the caps");
    }
  }
  absorb_local_terms();
  for (const MixedFactor& f : mixed) {
    std::vector<Bits> allowed;
    const int nd = static_cast<int>(f.disc_vars.size());
    for (int code = 0; code < (1 << nd); ++code) {
      Bits pattern(nd);
      for (int i = 0; i < nd; ++i) pattern[i] = static_cast<std::uint8_t>((code >> i) & 1);
      bool ok = true;
      if (!constraints.empty()) {
        ConstraintSet fixed = constraints;
        for (int i = 0; i < nd; ++i) {
          Eigen::VectorXd a = Eigen::VectorXd::Zero(d_disc);
          a[f.disc_vars[i]] = pattern[i] ? -1.0 : 1.0;
          fixed.add_linear({a, pattern[i] ? -1.0 : 0.0});
        }
        try {
          (void)solve_branch_and_bound(QuadraticForm(d_disc), fixed);
        } catch (const Infeasible&) {
          ok = false;
        }
      }
      if (ok) allowed.push_back(std::move(pattern));
    }
    if (allowed.empty()) throw Infeasible("no binary vector satisfies the constraint set");
    allowed_patterns.push_back(std::move(allowed));
  }
}

double FactorGraph::continuous_value(const Eigen::VectorXd& x_cont) const {
  double v = continuous_constant;
  for (const auto& t : continuous_terms) v += cosine_value(t, x_cont);
  return v;
}

Eigen::VectorXd FactorGraph::continuous_grad(const Eigen::VectorXd& x_cont) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d_cont);
  for (const auto& t : continuous_terms) add_cosine_grad(t, x_cont, 1.0, g);
  return g;
}

double FactorGraph::value(BitsView x_disc, const Eigen::VectorXd& x_cont) const {
  double v = discrete_factor.value(x_disc) + continuous_value(x_cont);
  for (const MixedFactor& f : mixed) v += f.value(gather(x_disc, f.disc_vars), gather(x_cont, f.cont_vars));
  return v;
}

FactorGraph FactorGraph::negated() const {
  FactorGraph g = *this;
  g.discrete_factor.c0 = -g.discrete_factor.c0;
  g.discrete_factor.lin = -g.discrete_factor.lin;
  g.discrete_factor.quad = -g.discrete_factor.quad;
  g.continuous_constant = -g.continuous_constant;
  for (auto& t : g.continuous_terms) t.weight = -t.weight;
  for (auto& f : g.mixed) {
    for (auto& t : f.terms) t.cosine.weight = -t.cosine.weight;
  }
  return g;
}

FactorGraph graph_from_weights(const FeatureExpansion& fe, const Eigen::VectorXd& w, const ConstraintSet& cs) {
  if (w.size() != fe.total()) throw DimensionError("graph_from_weights: weight vector has the wrong size");
  const int dd = fe.d_disc();
  const int mc = fe.m_cont();
  const auto& mask = fe.mixed_mask();
  auto mixed_weight = [&](int k, int j) {
    const int idx = fe.mixed_index(k, j);
    if (!mask.empty() && !mask[idx]) return 0.0;
    return w[fe.mixed_offset() + idx];
  };

  FactorGraph g;
  g.d_disc = dd;
  g.d_cont = fe.d_cont();
  g.constraints = cs.num_slots() == dd ? cs : ConstraintSet(dd);
  g.discrete_factor = QuadraticForm(dd);
  g.discrete_factor.c0 = -w[0];
  for (int k = 1; k < fe.m_disc(); ++k) {
    const auto& mono = fe.monomial(k);
    if (mono.size() == 1) {
      g.discrete_factor.lin[mono[0]] = -w[k];
    } else {
      g.discrete_factor.quad(mono[0], mono[1]) = -w[k];
    }
  }
  for (int j = 0; j < mc; ++j) {
    CosineTerm t;
    t.weight = -(w[fe.cont_offset() + j] + mixed_weight(0, j));
    t.amplitude = fe.amplitude();
    t.phase = fe.phases()[j];
    t.omega = fe.frequencies().row(j).transpose();
    if (t.weight != 0.0) g.continuous_terms.push_back(std::move(t));
  }

  // monomials sharing an RFF scope are packed first-fit into factors whose
  // discrete union stays within the cap; fewer, larger factors give a tighter dual
  std::map<std::vector<int>, std::vector<std::size_t>> by_scope;
  for (int k = 1; k < fe.m_disc(); ++k) {
    const auto& mono = fe.monomial(k);
    for (int j = 0; j < mc; ++j) {
      const double coef = -mixed_weight(k, j);
      if (coef == 0.0) continue;
      const auto& scope = fe.rff_scope(j);
      if (scope.empty()) {
        // constant RFF: a purely discrete term
        const double c = coef * fe.amplitude() * std::cos(fe.phases()[j]);
        if (mono.size() == 1) {
          g.discrete_factor.lin[mono[0]] += c;
        } else {
          g.discrete_factor.quad(mono[0], mono[1]) += c;
        }
        continue;
      }
      auto union_size = [&](const MixedFactor& f) {
        std::size_t n = f.disc_vars.size();
        for (int v : mono) n += std::find(f.disc_vars.begin(), f.disc_vars.end(), v) == f.disc_vars.end();
        return n;
      };
      auto& candidates = by_scope[scope];
      MixedFactor* target = nullptr;
      for (std::size_t idx : candidates) {
        if (union_size(g.mixed[idx]) <= static_cast<std::size_t>(FactorGraph::kMaxDiscScope)) {
          target = &g.mixed[idx];
          break;
        }
      }
      if (!target) {
        MixedFactor f;
        f.cont_vars = scope;
        g.mixed.push_back(std::move(f));
        candidates.push_back(g.mixed.size() - 1);
        target = &g.mixed.back();
      }
      MixedFactor::Term term;
      for (int v : mono) {
        auto it = std::find(target->disc_vars.begin(), target->disc_vars.end(), v);
        if (it == target->disc_vars.end()) {
          target->disc_vars.push_back(v);
          it = target->disc_vars.end() - 1;
        }
        term.monomial.push_back(static_cast<int>(it - target->disc_vars.begin()));
      }
      term.cosine.weight = coef;
      term.cosine.amplitude = fe.amplitude();
      term.cosine.phase = fe.phases()[j];
      term.cosine.omega = gather(fe.frequencies().row(j).transpose(), scope);
      target->terms.push_back(std::move(term));
    }
  }
  g.finalize();
  return g;
}

// ---------------------------------------------------------------------------

double SlaveSolution::dual() const {
  double v = disc_value + cont_value;
  for (double m : mixed_values) v += m;
  return v;
}

DualState initial_state(const FactorGraph& fg) {
  DualState s;
  for (const auto& f : fg.mixed) {
    s.lambda_disc.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.disc_vars.size())));
    s.lambda_cont.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.cont_vars.size())));
  }
  return s;
}

SlaveSolution dual_value(const FactorGraph& fg, const DualState& state, const DualOptions& opts) {
  if (fg.allowed_patterns.size() != fg.mixed.size()) {
    throw ConfigError("dual_value: factor graph is not finalized");
  }
  SlaveSolution sol;

  // discrete slave: theta_d + sum_f lambda_d^f . x_d|f, maximized exactly
  QuadraticForm neg = fg.discrete_factor;
  for (std::size_t f = 0; f < fg.mixed.size(); ++f) {
    const auto& vars = fg.mixed[f].disc_vars;
    for (std::size_t i = 0; i < vars.size(); ++i) neg.lin[vars[i]] += state.lambda_disc[f][i];
  }
  neg.c0 = -neg.c0;
  neg.lin = -neg.lin;
  neg.quad = -neg.quad;
  SolveResult ds = solve(neg, fg.constraints);
  sol.disc = ds.x;
  sol.disc_value = -ds.value;

  // continuous slave: theta_c + sum_f lambda_c^f . x_c|f
  Eigen::VectorXd lin_cont = Eigen::VectorXd::Zero(fg.d_cont);
  for (std::size_t f = 0; f < fg.mixed.size(); ++f) {
    const auto& vars = fg.mixed[f].cont_vars;
    for (std::size_t j = 0; j < vars.size(); ++j) lin_cont[vars[j]] += state.lambda_cont[f][j];
  }
  BoxProblem cont{fg.d_cont, [&](const Eigen::VectorXd& x) {
                    return std::pair<double, Eigen::VectorXd>{fg.continuous_value(x) + lin_cont.dot(x),
                                                              fg.continuous_grad(x) + lin_cont};
                  }};
  std::vector<Eigen::VectorXd> cont_candidates;
  if (state.slaves.cont.size() == fg.d_cont) cont_candidates.push_back(state.slaves.cont);
  if (state.best_cont.size() == fg.d_cont) cont_candidates.push_back(state.best_cont);
  Rng rng(opts.seed + static_cast<std::uint64_t>(state.t));
  auto [xc, vc] = maximize_box(cont, opts, opts.refine_steps, cont_candidates, &rng);
  sol.cont = xc;
  sol.cont_value = vc;

  // mixed slaves: enumerate allowed local patterns, grid plus refine on the
  // continuous scope; the continuous slave's coordinates are always scored
  for (std::size_t fi = 0; fi < fg.mixed.size(); ++fi) {
    const MixedFactor& f = fg.mixed[fi];
    const Eigen::VectorXd& ld = state.lambda_disc[fi];
    const Eigen::VectorXd& lc = state.lambda_cont[fi];
    std::vector<Eigen::VectorXd> candidates{gather(sol.cont, f.cont_vars)};
    double best = -std::numeric_limits<double>::infinity();
    Bits best_d;
    Eigen::VectorXd best_c;
    // the best primal's local assignment is always scored, so L stays above it
    if (!state.best_disc.empty() && state.best_cont.size() == fg.d_cont) {
      best_d = gather(state.best_disc, f.disc_vars);
      best_c = gather(state.best_cont, f.cont_vars);
      double disc_shift = 0.0;
      for (std::size_t i = 0; i < best_d.size(); ++i) disc_shift += ld[i] * best_d[i];
      best = f.value(best_d, best_c) - disc_shift - lc.dot(best_c);
    }
    for (const Bits& pattern : fg.allowed_patterns[fi]) {
      double disc_shift = 0.0;
      for (std::size_t i = 0; i < pattern.size(); ++i) disc_shift += ld[i] * pattern[i];
      BoxProblem local{static_cast<int>(f.cont_vars.size()), [&](const Eigen::VectorXd& x) {
                         return std::pair<double, Eigen::VectorXd>{
                             f.value(pattern, x) - disc_shift - lc.dot(x), f.grad(pattern, x) - lc};
                       }};
      auto [x, v] = maximize_box(local, opts, opts.refine_steps, candidates, nullptr);
      if (v > best) {
        best = v;
        best_d = pattern;
        best_c = x;
      }
    }
    sol.mixed_disc.push_back(std::move(best_d));
    sol.mixed_cont.push_back(std::move(best_c));
    sol.mixed_values.push_back(best);
  }
  return sol;
}

void record_primal(const FactorGraph& fg, DualState& state, const DualOptions& opts) {
  const Bits& xd = state.slaves.disc;
  if (!fg.constraints.satisfied(xd)) return;
  auto offer = [&](const Eigen::VectorXd& xc) {
    const double v = fg.value(xd, xc);
    if (v > state.best_primal) {
      state.best_primal = v;
      state.best_disc = xd;
      state.best_cont = xc;
    }
  };
  offer(state.slaves.cont);

  // continuous polish of the full objective with x_d held fixed
  std::vector<Bits> local_bits;
  for (const auto& f : fg.mixed) local_bits.push_back(gather(xd, f.disc_vars));
  BoxProblem conditioned{fg.d_cont, [&](const Eigen::VectorXd& x) {
                           double v = fg.continuous_value(x);
                           Eigen::VectorXd g = fg.continuous_grad(x);
                           for (std::size_t fi = 0; fi < fg.mixed.size(); ++fi) {
                             const auto& f = fg.mixed[fi];
                             const Eigen::VectorXd lx = gather(x, f.cont_vars);
                             v += f.value(local_bits[fi], lx);
                             const Eigen::VectorXd lg = f.grad(local_bits[fi], lx);
                             for (std::size_t j = 0; j < f.cont_vars.size(); ++j) g[f.cont_vars[j]] += lg[j];
                           }
                           return std::pair<double, Eigen::VectorXd>{v, g};
                         }};
  Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  auto [xc, v] = maximize_box(conditioned, opts, opts.refine_steps, {state.slaves.cont}, &rng);
  offer(xc);
}

namespace {

// The polish can find a primal point the approximate slave maxima missed;
// re-solving the slaves with it as a candidate restores L >= best primal.
void refresh_if_below(const FactorGraph& fg, DualState& state, const DualOptions& opts) {
  if (state.best_primal <= state.last_dual) return;
  state.slaves = dual_value(fg, state, opts);
  state.last_dual = state.slaves.dual();
}

}  // namespace

void subgradient_step(DualState& state, const FactorGraph& fg, double eta, const DualOptions& opts) {
  if (!(eta > 0.0)) throw ConfigError("subgradient_step: eta must be positive");
  const SlaveSolution& s = state.slaves;
  for (std::size_t fi = 0; fi < fg.mixed.size(); ++fi) {
    const auto& f = fg.mixed[fi];
    for (std::size_t i = 0; i < f.disc_vars.size(); ++i) {
      const double g = static_cast<double>(s.disc[f.disc_vars[i]]) - s.mixed_disc[fi][i];
      state.lambda_disc[fi][i] -= eta * g;
    }
    for (std::size_t j = 0; j < f.cont_vars.size(); ++j) {
      const double g = s.cont[f.cont_vars[j]] - s.mixed_cont[fi][j];
      state.lambda_cont[fi][j] -= eta * g;
    }
  }
  ++state.t;
  state.slaves = dual_value(fg, state, opts);
  state.last_dual = state.slaves.dual();
  record_primal(fg, state, opts);
  refresh_if_below(fg, state, opts);
  state.best_dual = std::min(state.best_dual, state.last_dual);
}

DualResult optimize(const FactorGraph& fg, int budget, const DualOptions& opts) {
  DualState state = initial_state(fg);
  state.slaves = dual_value(fg, state, opts);
  state.last_dual = state.slaves.dual();
  record_primal(fg, state, opts);
  refresh_if_below(fg, state, opts);
  state.best_dual = state.last_dual;

  DualResult out;
  out.history.push_back({0, state.last_dual, state.best_dual, state.best_primal});
  for (int t = 1; t <= budget; ++t) {
    const double gap = state.best_dual - state.best_primal;
    if (gap <= opts.gap_tol * std::max(1.0, std::abs(state.best_dual))) break;
    subgradient_step(state, fg, opts.eta0 / std::sqrt(static_cast<double>(t)), opts);
    out.history.push_back({state.t, state.last_dual, state.best_dual, state.best_primal});
  }
  if (state.best_disc.empty() && fg.d_disc > 0) {
    throw Infeasible("dual decomposition found no feasible primal assignment");
  }
  out.x_disc = state.best_disc;
  out.x_cont = state.best_cont;
  out.value = state.best_primal;
  out.gap = state.best_dual - state.best_primal;
  return out;
}

DualResult minimize(const FactorGraph& fg, int budget, const DualOptions& opts) {
  DualResult r = optimize(fg.negated(), budget, opts);
  r.value = -r.value;
  for (auto& h : r.history) {
    h.dual = -h.dual;
    h.best_dual = -h.best_dual;
    h.best_primal = -h.best_primal;
  }
  return r;
}

void write_history_csv(std::ostream& os, const std::vector<DualTracePoint>& history) {
  os.precision(17);
  os << "t,dual,best_dual,best_primal,gap\n";
  for (const auto& h : history) {
    os << h.t << ',' << h.dual << ',' << h.best_dual << ',' << h.best_primal << ','
       << (h.best_dual - h.best_primal) << '\n';
  }
}

}  // namespace mivabo::dd
