#include "mivabo/acquisition.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "mivabo/errors.hpp"

namespace mivabo {

WeightView::WeightView(const FeatureExpansion& fe, const Eigen::VectorXd& w)
    : w_(w), m_disc_(fe.m_disc()), m_cont_(fe.m_cont()) {
  if (w.size() != fe.total()) {
    throw DimensionError("weight vector has " + std::to_string(w.size()) + " entries, expansion has " +
                         std::to_string(fe.total()));
  }
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> WeightView::mixed()
    const {
  return {w_.data() + m_disc_ + m_cont_, m_disc_, m_cont_};
}

Eigen::VectorXd WeightView::concat() const {
  Eigen::VectorXd out(w_.size());
  out << disc(), cont(), Eigen::Map<const Eigen::VectorXd>(mixed().data(), m_disc_ * m_cont_);
  return out;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix masked_mixed(const FeatureExpansion& fe, const WeightView& view) {
  RowMatrix m = view.mixed();
  const auto& mask = fe.mixed_mask();
  if (!mask.empty()) {
    for (int k = 0; k < fe.m_disc(); ++k) {
      for (int j = 0; j < fe.m_cont(); ++j) {
        if (!mask[fe.mixed_index(k, j)]) m(k, j) = 0.0;
      }
    }
  }
  return m;
}

}  // namespace

QuadraticForm reduce_discrete(const FeatureExpansion& fe, const Eigen::VectorXd& w,
                              const Eigen::VectorXd& x_cont_fixed) {
  const WeightView view(fe, w);
  const Eigen::VectorXd pc = fe.eval_continuous(x_cont_fixed);
  const Eigen::VectorXd u = view.disc() + masked_mixed(fe, view) * pc;

  const int dd = fe.d_disc();
  QuadraticForm qf(dd);
  qf.c0 = u[0] + view.cont().dot(pc);
  for (int i = 0; i < dd; ++i) qf.lin[i] = u[1 + i];
  int k = 1 + dd;
  for (int i = 0; i < dd; ++i) {
    for (int j = i + 1; j < dd; ++j) qf.quad(i, j) = u[k++];
  }
  return qf;
}

BoxProblem reduce_continuous(const FeatureExpansion& fe, const Eigen::VectorXd& w, BitsView x_disc_fixed) {
  const WeightView view(fe, w);
  const Eigen::VectorXd pd = fe.eval_discrete(x_disc_fixed);
  const Eigen::VectorXd v = view.cont() + masked_mixed(fe, view).transpose() * pd;
  const double constant = view.disc().dot(pd);
  const FeatureExpansion* fp = &fe;
  return {fe.d_cont(), [fp, v, constant](const Eigen::VectorXd& x) {
            auto [val, grad] = fp->weighted_continuous(x, v);
            return std::pair<double, Eigen::VectorXd>{constant + val, std::move(grad)};
          }};
}

double acquisition_value(const FeatureExpansion& fe, const Eigen::VectorXd& w, BitsView x_disc,
                         const Eigen::VectorXd& x_cont) {
  return w.dot(fe.eval_full(x_disc, x_cont));
}

AcquisitionOptimizer parse_acquisition_optimizer(const std::string& s) {
  if (s == "alternate") return AcquisitionOptimizer::Alternate;
  if (s == "anneal" || s == "sa") return AcquisitionOptimizer::Anneal;
  if (s == "dual_decomposition" || s == "dual") return AcquisitionOptimizer::DualDecomposition;
  throw ConfigError("unknown acquisition optimizer '" + s + "'");
}

std::string to_string(AcquisitionOptimizer a) {
  switch (a) {
    case AcquisitionOptimizer::Alternate:
      return "alternate";
    case AcquisitionOptimizer::Anneal:
      return "anneal";
    case AcquisitionOptimizer::DualDecomposition:
      return "dual_decomposition";
  }
  return "?";
}

void BoLoopConfig::validate() const {
  if (n_init < 1) throw ConfigError("n_init must be >= 1");
  if (T < n_init) throw ConfigError("T must be >= n_init");
  if (alt_restarts < 1) throw ConfigError("alt_restarts must be >= 1");
  if (alt_max_rounds < 1) throw ConfigError("alt_max_rounds must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must be in (0,1)");
}

nlohmann::json BoLoopConfig::to_json() const {
  return {{"T", T},
          {"n_init", n_init},
          {"alt_max_rounds", alt_max_rounds},
          {"alt_tol", alt_tol},
          {"alt_restarts", alt_restarts},
          {"scaling", to_string(scaling)},
          {"delta", delta},
          {"alpha", alpha},
          {"beta", beta},
          {"optimizer", to_string(optimizer)},
          {"discrete_mode", discrete.mode == SolveMode::Auto             ? "auto"
                            : discrete.mode == SolveMode::Exhaustive     ? "exhaustive"
                            : discrete.mode == SolveMode::BranchAndBound ? "branch_and_bound"
                                                                         : "anneal"},
          {"cont_restarts", continuous.restarts},
          {"cont_tol", continuous.tol},
          {"cont_max_iters", continuous.max_iters},
          {"anneal", anneal.to_json()},
          {"dual_budget", dual_budget},
          {"seed", seed}};
}

BoLoopConfig BoLoopConfig::from_json(const nlohmann::json& j) {
  BoLoopConfig c;
  try {
    c.T = j.value("T", c.T);
    c.n_init = j.value("n_init", c.n_init);
    c.alt_max_rounds = j.value("alt_max_rounds", c.alt_max_rounds);
    c.alt_tol = j.value("alt_tol", c.alt_tol);
    c.alt_restarts = j.value("alt_restarts", c.alt_restarts);
    c.scaling = parse_scaling_mode(j.value("scaling", std::string("unit")));
    c.delta = j.value("delta", c.delta);
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.optimizer = parse_acquisition_optimizer(j.value("optimizer", std::string("alternate")));
    c.discrete.mode = parse_solve_mode(j.value("discrete_mode", std::string("auto")));
    c.continuous.restarts = j.value("cont_restarts", c.continuous.restarts);
    c.continuous.tol = j.value("cont_tol", c.continuous.tol);
    c.continuous.max_iters = j.value("cont_max_iters", c.continuous.max_iters);
    if (j.contains("anneal")) c.anneal = MixedAnnealSchedule::from_json(j.at("anneal"));
    c.dual_budget = j.value("dual_budget", c.dual_budget);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("BO loop config: ") + e.what());
  }
  return c;
}

std::pair<Bits, Eigen::VectorXd> random_feasible_start(const MixedDomain& domain, Rng& rng, int max_tries) {
  try {
    return domain.sample_feasible(rng, max_tries);
  } catch (const NoFeasibleSample&) {
    // tight region: ask the discrete solver for any feasible vector
    SolveResult r = solve_branch_and_bound(QuadraticForm(domain.d_disc()), domain.constraints());
    auto [unused, cont] = domain.sample_box(rng);
    return {std::move(r.x), std::move(cont)};
  }
}

AlternationResult alternate(const FeatureExpansion& fe, const Eigen::VectorXd& w, const MixedDomain& domain,
                            const BoLoopConfig& cfg, Rng& rng) {
  if (fe.d_disc() != domain.d_disc() || fe.d_cont() != domain.d_cont()) {
    throw DimensionError("feature expansion and domain disagree on dimensions");
  }
  AlternationResult best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<double> start_values;

  for (int r = 0; r < cfg.alt_restarts; ++r) {
    auto [xd, xc] = random_feasible_start(domain, rng, cfg.max_sample_tries);
    double current = acquisition_value(fe, w, xd, xc);
    start_values.push_back(current);
    int rounds = 0;
    for (int round = 0; round < cfg.alt_max_rounds; ++round) {
      ++rounds;
      const double before = current;
      if (domain.d_disc() > 0) {
        const QuadraticForm qf = reduce_discrete(fe, w, xc);
        SolveOptions so = cfg.discrete;
        so.seed = rng();
        SolveResult sr = solve(qf, domain.constraints(), so);
        if (sr.value <= qf.value(xd)) xd = std::move(sr.x);
        current = qf.value(xd);
      }
      if (domain.d_cont() > 0) {
        const BoxProblem bp = reduce_continuous(fe, w, xd);
        MinimizeOptions mo = cfg.continuous;
        mo.extra_starts.push_back(xc);
        MinimizeResult mr = minimize(bp, rng, mo);
        if (mr.value <= bp.value(xc)) xc = std::move(mr.x);
        current = bp.value(xc);
      }
      if (before - current < cfg.alt_tol) break;
    }
    if (current < best.value) {
      best.x_disc = xd;
      best.x_cont = xc;
      best.value = current;
      best.rounds = rounds;
    }
  }
  best.start_values = std::move(start_values);
  return best;
}

AlternationResult optimize_acquisition(const FeatureExpansion& fe, const Eigen::VectorXd& w,
                                       const MixedDomain& domain, const BoLoopConfig& cfg, Rng& rng) {
  switch (cfg.optimizer) {
    case AcquisitionOptimizer::Alternate:
      return alternate(fe, w, domain, cfg, rng);
    case AcquisitionOptimizer::Anneal: {
      auto [xd, xc] = random_feasible_start(domain, rng, cfg.max_sample_tries);
      MixedPoint start{std::move(xd), std::move(xc)};
      auto energy = [&](const MixedPoint& p) { return acquisition_value(fe, w, p.x_disc, p.x_cont); };
      MixedAnnealResult r = mixed_anneal(domain, energy, cfg.anneal, rng, start, true);
      if (!r.found_feasible) throw BudgetExhausted("acquisition annealing found no feasible point");
      AlternationResult out;
      out.x_disc = std::move(r.best.x_disc);
      out.x_cont = std::move(r.best.x_cont);
      out.value = r.best_value;
      return out;
    }
    case AcquisitionOptimizer::DualDecomposition: {
      const dd::FactorGraph fg = dd::graph_from_weights(fe, w, domain.constraints());
      dd::DualOptions opts = cfg.dual;
      opts.seed = rng();
      dd::DualResult r = dd::optimize(fg, cfg.dual_budget, opts);
      AlternationResult out;
      out.x_disc = std::move(r.x_disc);
      out.x_cont = std::move(r.x_cont);
      out.value = acquisition_value(fe, w, out.x_disc, out.x_cont);
      return out;
    }
  }
  throw ConfigError("unreachable acquisition optimizer");
}

void push_record(std::vector<TraceRecord>& trace, TraceRecord rec) {
  const double prev_inc = trace.empty() ? std::numeric_limits<double>::infinity() : trace.back().incumbent;
  const int prev_viol = trace.empty() ? 0 : trace.back().violations;
  rec.incumbent = rec.feasible ? std::min(prev_inc, rec.y) : prev_inc;
  rec.violations = prev_viol + (rec.feasible ? 0 : 1);
  trace.push_back(std::move(rec));
}

BoResult run_bo(const ObjectiveFn& objective, const MixedDomain& domain, const FeatureExpansion& fe,
                const BoLoopConfig& cfg, const RecordSink& sink) {
  cfg.validate();
  if (fe.d_disc() != domain.d_disc() || fe.d_cont() != domain.d_cont()) {
    throw DimensionError("feature expansion and domain disagree on dimensions");
  }
  Rng rng(cfg.seed);
  BayesianLinearRegression posterior(fe.total(), cfg.alpha, cfg.beta);
  const double scale = scaling_factor(fe.total(), std::max(cfg.T, 2), cfg.delta, cfg.scaling);

  BoResult result;
  result.trace.reserve(cfg.T);
  using Clock = std::chrono::steady_clock;
  for (int t = 1; t <= cfg.T; ++t) {
    const auto started = Clock::now();
    Bits xd;
    Eigen::VectorXd xc;
    if (t <= cfg.n_init) {
      std::tie(xd, xc) = random_feasible_start(domain, rng, cfg.max_sample_tries);
    } else {
      const Eigen::VectorXd w = posterior.sample_weights(scale, rng);
      AlternationResult r = optimize_acquisition(fe, w, domain, cfg, rng);
      xd = std::move(r.x_disc);
      xc = std::move(r.x_cont);
    }
    const double select_ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();

    const double y = objective(xd, xc);
    posterior.update(fe.eval_full(xd, xc), y);

    TraceRecord rec;
    rec.seed = cfg.seed;
    rec.t = t;
    rec.feasible = domain.is_feasible(xd, xc);
    rec.x_disc = std::move(xd);
    rec.x_cont = std::move(xc);
    rec.y = y;
    rec.wall_ms = select_ms;
    rec.scaling = to_string(cfg.scaling);
    push_record(result.trace, std::move(rec));
    if (sink) sink(result.trace.back());
  }

  AlternationResult mean_opt = optimize_acquisition(fe, posterior.mean(), domain, cfg, rng);
  result.mean_argmin_disc = std::move(mean_opt.x_disc);
  result.mean_argmin_cont = std::move(mean_opt.x_cont);
  result.mean_argmin_value = mean_opt.value;
  return result;
}

}  // namespace mivabo
