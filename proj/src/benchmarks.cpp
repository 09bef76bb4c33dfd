#include "mivabo/benchmarks.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "mivabo/continuous_opt.hpp"
#include "mivabo/errors.hpp"

namespace mivabo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

SyntheticLinearObjective::SyntheticLinearObjective(MixedDomain domain, FeatureExpansion fe, Eigen::VectorXd w_true,
                                                   double noise_beta)
    : domain_(std::move(domain)),
      fe_(std::move(fe)),
      w_true_(std::move(w_true)),
      noise_beta_(noise_beta),
      oracle_mutex_(std::make_unique<std::mutex>()) {
  if (w_true_.size() != fe_.total()) throw DimensionError("w_true length does not match the feature expansion");
  if (!(noise_beta_ > 0.0)) throw ConfigError("noise_beta must be positive");
}

double SyntheticLinearObjective::noiseless(BitsView x_disc, const Eigen::VectorXd& x_cont) const {
  return w_true_.dot(fe_.eval_full(x_disc, x_cont));
}

double SyntheticLinearObjective::evaluate(BitsView x_disc, const Eigen::VectorXd& x_cont, Rng& rng) const {
  std::normal_distribution<double> noise(0.0, 1.0 / std::sqrt(noise_beta_));
  return noiseless(x_disc, x_cont) + noise(rng);
}

std::vector<Bits> SyntheticLinearObjective::feasible_discrete_points() const {
  const int n = domain_.d_disc();
  if (n > 24) throw ScopeTooLarge("enumeration of more than 2^24 binary vectors");
  std::vector<Bits> out;
  // lexicographic with x[0] most significant
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << n); ++c) {
    Bits b(n);
    for (int i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>((c >> (n - 1 - i)) & 1U);
    if (domain_.constraints().satisfied(b)) out.push_back(std::move(b));
  }
  return out;
}

SyntheticLinearObjective::Oracle SyntheticLinearObjective::compute_oracle(int restarts, std::uint64_t seed) const {
  Oracle best;
  best.value = kInf;
  Rng rng(seed);
  MinimizeOptions opts;
  opts.restarts = restarts;
  for (const Bits& xd : feasible_discrete_points()) {
    if (domain_.d_cont() == 0) {
      const double v = noiseless(xd, Eigen::VectorXd());
      if (v < best.value) best = {xd, Eigen::VectorXd(), v};
      continue;
    }
    const BoxProblem p = reduce_continuous(fe_, w_true_, xd);
    MinimizeResult r = minimize(p, rng, opts);
    if (r.value < best.value) best = {xd, std::move(r.x), r.value};
  }
  if (!std::isfinite(best.value)) throw Infeasible("no feasible binary vector");
  best.value = noiseless(best.x_disc, best.x_cont);
  return best;
}

const SyntheticLinearObjective::Oracle& SyntheticLinearObjective::oracle() const {
  std::lock_guard<std::mutex> lock(*oracle_mutex_);
  if (!oracle_) oracle_ = compute_oracle(kOracleRestarts, 0);
  return *oracle_;
}

namespace {

SyntheticLinearObjective make_synthetic(std::uint64_t seed, std::optional<int> cardinality) {
  DomainBuilder b;
  for (int i = 0; i < 8; ++i) b.add_binary("b" + std::to_string(i));
  for (int i = 0; i < 8; ++i) b.add_continuous("c" + std::to_string(i));
  if (cardinality) b.add_cardinality(*cardinality);
  MixedDomain domain = b.build();

  FeatureConfig fc;
  fc.num_rff = 16;
  fc.bandwidth = 1.0;
  fc.seed = seed;
  FeatureExpansion fe(8, 8, fc);

  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd w(fe.total());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = n01(rng);
  return {std::move(domain), std::move(fe), std::move(w)};
}

}  // namespace

SyntheticLinearObjective make_synthetic_unconstrained(std::uint64_t seed) { return make_synthetic(seed, {}); }

SyntheticLinearObjective make_synthetic_constrained(std::uint64_t seed, int k) { return make_synthetic(seed, k); }

// ---------------------------------------------------------------------------
// table surrogate

TableSurrogateObjective::TableSurrogateObjective(MixedDomain domain, Eigen::MatrixXd raw_cont,
                                                 std::vector<Bits> disc, Eigen::VectorXd values)
    : domain_(std::move(domain)), values_(std::move(values)) {
  const Eigen::Index rows = values_.size();
  const int dc = domain_.d_cont();
  const int dd = domain_.d_disc();
  if (rows == 0) throw SchemaError("table has no rows");
  if (raw_cont.rows() != rows || raw_cont.cols() != dc || static_cast<Eigen::Index>(disc.size()) != rows) {
    throw SchemaError("table columns do not match the domain");
  }
  col_min_ = raw_cont.colwise().minCoeff().transpose();
  col_span_ = (raw_cont.colwise().maxCoeff().transpose() - col_min_);
  points_.resize(dc + dd, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int c = 0; c < dc; ++c) {
      points_(c, r) = col_span_[c] > 0.0 ? (raw_cont(r, c) - col_min_[c]) / col_span_[c] : 0.0;
    }
    if (static_cast<int>(disc[r].size()) != dd) throw SchemaError("binary row has the wrong width");
    for (int i = 0; i < dd; ++i) points_(dc + i, r) = disc[r][i];
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    out.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(what + ": cannot parse '" + s + "' as a number");
  }
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(what + ": cannot parse '" + s + "' as an integer");
  }
}

}  // namespace

TableSurrogateObjective TableSurrogateObjective::load(std::istream& csv, const MixedDomain& domain,
                                                      const std::string& metric_column) {
  std::string line;
  if (!std::getline(csv, line)) throw SchemaError("empty table file");
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, int> col;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) col[header[i]] = i;

  const auto& vars = domain.variables();
  std::vector<int> var_col(vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v) {
    auto it = col.find(vars[v].name);
    if (it == col.end()) throw SchemaError("table has no column '" + vars[v].name + "'");
    var_col[v] = it->second;
  }
  auto mit = col.find(metric_column);
  if (mit == col.end()) throw SchemaError("table has no metric column '" + metric_column + "'");
  const int metric_col = mit->second;

  std::vector<std::vector<double>> cont_rows;
  std::vector<Bits> disc_rows;
  std::vector<double> values;
  int line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " cells, got " + std::to_string(cells.size()));
    }
    const std::string where = "line " + std::to_string(line_no);
    Assignment a(vars.size());
    std::vector<double> cont(domain.d_cont());
    for (std::size_t v = 0; v < vars.size(); ++v) {
      const Variable& var = vars[v];
      const std::string& cell = cells[var_col[v]];
      if (var.kind == VariableKind::Continuous) {
        cont[var.cont_index] = parse_double(cell, where);
        a[v] = var.cont_lo;
      } else if (var.kind == VariableKind::Categorical) {
        auto lit = std::find(var.levels.begin(), var.levels.end(), cell);
        a[v] = lit != var.levels.end() ? static_cast<std::int64_t>(lit - var.levels.begin())
                                       : parse_int(cell, where);
      } else {
        a[v] = parse_int(cell, where);
      }
    }
    try {
      disc_rows.push_back(domain.encode(a).first);
    } catch (const EncodingError& e) {
      throw SchemaError(where + ": " + e.what());
    }
    cont_rows.push_back(std::move(cont));
    values.push_back(parse_double(cells[metric_col], where));
  }
  if (values.empty()) throw SchemaError("table has a header but no rows");

  Eigen::MatrixXd raw(static_cast<Eigen::Index>(values.size()), domain.d_cont());
  for (std::size_t r = 0; r < cont_rows.size(); ++r) {
    for (int c = 0; c < domain.d_cont(); ++c) raw(static_cast<Eigen::Index>(r), c) = cont_rows[r][c];
  }
  return {domain, std::move(raw), std::move(disc_rows),
          Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))};
}

TableSurrogateObjective TableSurrogateObjective::load_file(const std::string& path, const MixedDomain& domain,
                                                           const std::string& metric_column) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open table file '" + path + "'");
  return load(in, domain, metric_column);
}

Eigen::VectorXd TableSurrogateObjective::query_point(BitsView x_disc, const Eigen::VectorXd& x_cont) const {
  domain_.check_dims(x_disc, x_cont);
  const int dc = domain_.d_cont();
  Eigen::VectorXd q(points_.rows());
  for (const Variable& var : domain_.variables()) {
    if (var.kind != VariableKind::Continuous) continue;
    const int c = var.cont_index;
    const double user = var.cont_lo + x_cont[c] * (var.cont_hi - var.cont_lo);
    q[c] = col_span_[c] > 0.0 ? (user - col_min_[c]) / col_span_[c] : 0.0;
  }
  for (int i = 0; i < domain_.d_disc(); ++i) q[dc + i] = x_disc[i];
  return q;
}

std::size_t TableSurrogateObjective::nearest(BitsView x_disc, const Eigen::VectorXd& x_cont) const {
  const Eigen::VectorXd q = query_point(x_disc, x_cont);
  Eigen::Index best = 0;
  (points_.colwise() - q).colwise().squaredNorm().minCoeff(&best);
  return static_cast<std::size_t>(best);
}

double TableSurrogateObjective::evaluate(BitsView x_disc, const Eigen::VectorXd& x_cont) const {
  return values_[static_cast<Eigen::Index>(nearest(x_disc, x_cont))];
}

MixedDomain make_xgboost_like_domain() {
  DomainBuilder b;
  b.add_categorical("booster", std::vector<std::string>{"gbtree", "gblinear"});
  b.add_integer("nrounds", 3, 5000);
  b.add_continuous("alpha", 0.000985, 1009.209690);
  b.add_continuous("lambda", 0.000978, 999.020893);
  b.add_continuous("colsample_bylevel", 0.046776, 0.998424);
  b.add_continuous("colsample_bytree", 0.062528, 0.999640);
  b.add_continuous("eta", 0.000979, 0.995686);
  b.add_integer("max_depth", 1, 15);
  b.add_continuous("min_child_weight", 1.012169, 127.041806);
  b.add_continuous("subsample", 0.100215, 0.999830);
  return b.build();
}

std::string generate_xgboost_like_csv(int rows, std::uint64_t seed) {
  if (rows < 1) throw ConfigError("rows must be >= 1");
  const MixedDomain domain = make_xgboost_like_domain();
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> booster(0, 1);
  std::uniform_int_distribution<int> nrounds(3, 5000);
  std::uniform_int_distribution<int> depth(1, 15);
  std::normal_distribution<double> noise(0.0, 0.005);

  std::ostringstream os;
  os << std::setprecision(17);
  os << "booster,nrounds,alpha,lambda,colsample_bylevel,colsample_bytree,eta,max_depth,min_child_weight,subsample,y\n";
  const auto& vars = domain.variables();
  auto user = [&](int v, double u) { return vars[v].cont_lo + u * (vars[v].cont_hi - vars[v].cont_lo); };
  for (int r = 0; r < rows; ++r) {
    const int b = booster(rng);
    const int n = nrounds(rng);
    const int d = depth(rng);
    double u[7];
    for (double& x : u) x = unit(rng);
    // u: alpha, lambda, colsample_bylevel, colsample_bytree, eta, min_child_weight, subsample
    const double rounds = std::log(static_cast<double>(n)) / std::log(5000.0);
    double err = 0.08 + 0.06 * b + 0.12 * std::pow(rounds - 0.8, 2) + 0.08 * std::pow((d - 6) / 14.0, 2);
    err += 0.05 * std::pow(u[0] - 0.1, 2) + 0.05 * std::pow(u[1] - 0.3, 2);
    err += 0.04 * std::pow(u[2] - 0.7, 2) + 0.04 * std::pow(u[3] - 0.6, 2);
    err += 0.10 * std::pow(u[4] - 0.25, 2) + 0.03 * std::pow(u[5] - 0.2, 2) + 0.06 * std::pow(u[6] - 0.8, 2);
    err += 0.02 * std::sin(6.0 * u[4]) * rounds;
    err += noise(rng);
    os << vars[0].levels[b] << ',' << n << ',' << user(2, u[0]) << ',' << user(3, u[1]) << ',' << user(4, u[2])
       << ',' << user(5, u[3]) << ',' << user(6, u[4]) << ',' << d << ',' << user(8, u[5]) << ','
       << user(9, u[6]) << ',' << err << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// penalty wrapper and baselines

PenaltyWrapper::PenaltyWrapper(ObjectiveFn inner, const MixedDomain* domain, double penalty)
    : inner_(std::move(inner)), domain_(domain), penalty_(penalty) {}

double PenaltyWrapper::operator()(BitsView x_disc, const Eigen::VectorXd& x_cont) {
  const bool ok = domain_->is_feasible(x_disc, x_cont);
  log_.push_back(ok);
  return ok ? inner_(x_disc, x_cont) : penalty_;
}

int PenaltyWrapper::valid_count() const { return static_cast<int>(std::count(log_.begin(), log_.end(), true)); }

int PenaltyWrapper::invalid_count() const { return static_cast<int>(log_.size()) - valid_count(); }

double default_penalty(const ObjectiveFn& f, const MixedDomain& domain, std::uint64_t seed, int samples) {
  if (samples < 1) throw ConfigError("penalty reference needs at least one sample");
  Rng rng(seed);
  double lo = kInf;
  double hi = -kInf;
  for (int i = 0; i < samples; ++i) {
    auto [xd, xc] = random_feasible_start(domain, rng, 10000);
    const double y = f(xd, xc);
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  return hi + 10.0 * std::max(hi - lo, 1.0);
}

namespace {

void emit(std::vector<TraceRecord>& trace, const MixedDomain& domain, std::uint64_t seed, int t, Bits xd,
          Eigen::VectorXd xc, double y, double ms, const RecordSink& sink) {
  TraceRecord rec;
  rec.seed = seed;
  rec.t = t;
  rec.feasible = domain.is_feasible(xd, xc);
  rec.x_disc = std::move(xd);
  rec.x_cont = std::move(xc);
  rec.y = y;
  rec.wall_ms = ms;
  rec.scaling = "none";
  push_record(trace, std::move(rec));
  if (sink) sink(trace.back());
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

std::vector<TraceRecord> random_search(const ObjectiveFn& f, const MixedDomain& domain, int T, std::uint64_t seed,
                                       bool constraint_aware, const RecordSink& sink) {
  if (T < 0) throw ConfigError("T must be >= 0");
  Rng rng(seed);
  std::vector<TraceRecord> trace;
  trace.reserve(T);
  for (int t = 1; t <= T; ++t) {
    const auto t0 = Clock::now();
    auto [xd, xc] = constraint_aware ? random_feasible_start(domain, rng, 10000) : domain.sample_box(rng);
    const double ms = ms_since(t0);
    const double y = f(xd, xc);
    emit(trace, domain, seed, t, std::move(xd), std::move(xc), y, ms, sink);
  }
  return trace;
}

std::vector<TraceRecord> sa_search(const ObjectiveFn& f, const MixedDomain& domain, int T, std::uint64_t seed,
                                   const MixedAnnealSchedule& schedule, bool constraint_aware,
                                   const RecordSink& sink) {
  if (T < 0) throw ConfigError("T must be >= 0");
  if (domain.d_disc() + domain.d_cont() == 0) throw DimensionError("sa_search: empty domain");
  Rng rng(seed);
  std::vector<TraceRecord> trace;
  trace.reserve(T);
  MixedPoint cur;
  double cur_energy = kInf;
  double temp = schedule.t0;
  for (int t = 1; t <= T; ++t) {
    const auto t0 = Clock::now();
    MixedPoint cand;
    if (t == 1) {
      auto [xd, xc] = constraint_aware ? random_feasible_start(domain, rng, 10000) : domain.sample_box(rng);
      cand = {std::move(xd), std::move(xc)};
    } else {
      cand = propose_mixed_move(cur, schedule.cont_step, rng);
    }
    const double ms = ms_since(t0);
    const double y = f(cand.x_disc, cand.x_cont);
    const bool ok = domain.is_feasible(cand.x_disc, cand.x_cont);
    // the objective is expected to return a penalty for infeasible queries;
    // the chain adds its own so that an unwrapped objective still works
    const double energy = y + (ok ? 0.0 : schedule.penalty);
    if (t == 1 || metropolis_accept(energy - cur_energy, temp, rng)) {
      cur = cand;
      cur_energy = energy;
    }
    temp *= schedule.decay;
    emit(trace, domain, seed, t, std::move(cand.x_disc), std::move(cand.x_cont), y, ms, sink);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// metrics

std::vector<MetricRow> compute_metrics(const std::vector<RunTrace>& traces, std::optional<double> oracle,
                                       std::optional<double> penalty) {
  double lo = kInf;
  double hi = -kInf;
  for (const RunTrace& tr : traces) {
    for (const TraceRecord& r : tr.records) {
      if (!r.feasible) continue;
      lo = std::min(lo, r.y);
      hi = std::max(hi, r.y);
    }
  }
  const double range = hi - lo;
  std::vector<MetricRow> rows;
  for (const RunTrace& tr : traces) {
    for (const TraceRecord& r : tr.records) {
      MetricRow m;
      m.method = tr.method;
      m.seed = tr.seed;
      m.iter = r.t;
      m.value = r.incumbent;
      const bool defined = std::isfinite(r.incumbent);
      m.regret = std::numeric_limits<double>::quiet_NaN();
      if (oracle && defined) {
        m.regret = r.incumbent - *oracle;
      } else if (oracle && penalty) {
        m.regret = *penalty - *oracle;  // all the run has seen is the penalty
      }
      if (!defined) {
        m.normalized_error = 1.0;
      } else if (!(range > 0.0)) {
        m.normalized_error = 0.0;
      } else {
        m.normalized_error = std::clamp((r.incumbent - lo) / range, 0.0, 1.0);
      }
      rows.push_back(std::move(m));
    }
  }
  return rows;
}

namespace {

double column(const MetricRow& r, MetricColumn c) {
  switch (c) {
    case MetricColumn::Value:
      return r.value;
    case MetricColumn::Regret:
      return r.regret;
    case MetricColumn::NormalizedError:
      return r.normalized_error;
  }
  return 0.0;
}

}  // namespace

SeriesStats summarize(const std::vector<MetricRow>& rows, const std::string& method, MetricColumn c) {
  std::map<int, std::vector<double>> by_iter;
  for (const MetricRow& r : rows) {
    if (r.method == method) by_iter[r.iter].push_back(column(r, c));
  }
  SeriesStats s;
  for (const auto& [iter, vals] : by_iter) {
    const double n = static_cast<double>(vals.size());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    s.mean.push_back(mean);
    s.stddev.push_back(vals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
  }
  return s;
}

std::vector<double> final_values(const std::vector<MetricRow>& rows, const std::string& method, MetricColumn c) {
  std::map<std::uint64_t, std::pair<int, double>> last;
  for (const MetricRow& r : rows) {
    if (r.method != method) continue;
    auto it = last.find(r.seed);
    if (it == last.end() || r.iter > it->second.first) last[r.seed] = {r.iter, column(r, c)};
  }
  std::vector<double> out;
  for (const auto& [seed, p] : last) out.push_back(p.second);
  return out;
}

double wilcoxon_less(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("wilcoxon: samples must be paired");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double di = x[i] - y[i];
    if (di != 0.0) d.push_back(di);
  }
  const int n = static_cast<int>(d.size());
  if (n == 0) return 1.0;

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<double> rank(n);
  bool ties = false;
  double tie_term = 0.0;
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (int k = i; k <= j; ++k) rank[order[k]] = avg;
    const double t = j - i + 1;
    if (t > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  double w_plus = 0.0;
  for (int i = 0; i < n; ++i) {
    if (d[i] > 0) w_plus += rank[i];
  }

  if (!ties && n <= 25) {
    // counts of subsets of {1..n} by rank sum
    const int max_sum = n * (n + 1) / 2;
    std::vector<double> count(max_sum + 1, 0.0);
    count[0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      for (int s = max_sum; s >= k; --s) count[s] += count[s - k];
    }
    const int w = static_cast<int>(std::lround(w_plus));
    double below = 0.0;
    for (int s = 0; s <= w; ++s) below += count[s];
    return below / std::ldexp(1.0, n);
  }
  const double mean = n * (n + 1) / 4.0;
  const double var = n * (n + 1) * (2.0 * n + 1) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) return 1.0;
  const double z = (w_plus - mean + 0.5) / std::sqrt(var);
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  os << "method,seed,iter,value,regret,normalized_error\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const MetricRow& r : rows) {
    os << r.method << ',' << r.seed << ',' << r.iter << ',' << num(r.value) << ',' << num(r.regret) << ','
       << num(r.normalized_error) << '\n';
  }
}

}  // namespace mivabo
