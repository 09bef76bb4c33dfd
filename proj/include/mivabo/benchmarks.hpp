#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mivabo/acquisition.hpp"
#include "mivabo/domain.hpp"
#include "mivabo/features.hpp"
#include "mivabo/mixed_anneal.hpp"

namespace mivabo {

/// f(x) = w_true^T phi(x) observed with Gaussian noise of precision noise_beta.
class SyntheticLinearObjective {
 public:
  struct Oracle {
    Bits x_disc;
    Eigen::VectorXd x_cont;
    double value = 0.0;
  };

  SyntheticLinearObjective(MixedDomain domain, FeatureExpansion fe, Eigen::VectorXd w_true,
                           double noise_beta = 100.0);

  [[nodiscard]] const MixedDomain& domain() const { return domain_; }
  [[nodiscard]] const FeatureExpansion& features() const { return fe_; }
  [[nodiscard]] const Eigen::VectorXd& weights() const { return w_true_; }
  [[nodiscard]] double noise_beta() const { return noise_beta_; }

  [[nodiscard]] double noiseless(BitsView x_disc, const Eigen::VectorXd& x_cont) const;
  [[nodiscard]] double evaluate(BitsView x_disc, const Eigen::VectorXd& x_cont, Rng& rng) const;

  /// Every feasible binary vector in lexicographic order.
  [[nodiscard]] std::vector<Bits> feasible_discrete_points() const;

  /// Global minimum of the noiseless function: enumeration of the feasible
  /// binary vectors, multi-start continuous search for each. Cached after the
  /// first call.
  const Oracle& oracle() const;
  [[nodiscard]] Oracle compute_oracle(int restarts, std::uint64_t seed) const;

 private:
  MixedDomain domain_;
  FeatureExpansion fe_;
  Eigen::VectorXd w_true_;
  double noise_beta_;
  mutable std::unique_ptr<std::mutex> oracle_mutex_;
  mutable std::optional<Oracle> oracle_;
};

inline constexpr int kOracleRestarts = 50;

/// D_d = 8 binaries, D_c = 8 continuous, 16 RFFs with unit bandwidth,
/// w_true ~ N(0, I).
SyntheticLinearObjective make_synthetic_unconstrained(std::uint64_t seed);
/// Same, plus sum of the binaries <= 2.
SyntheticLinearObjective make_synthetic_constrained(std::uint64_t seed, int k = 2);

/// Nearest-neighbor lookup into a table of evaluated configurations.
/// Distance is Euclidean over [continuous columns min-max scaled to [0,1]]
/// concatenated with the binary slots.
class TableSurrogateObjective {
 public:
  TableSurrogateObjective(MixedDomain domain, Eigen::MatrixXd raw_cont, std::vector<Bits> disc,
                          Eigen::VectorXd values);

  /// CSV with a header row naming every domain variable plus the metric
  /// column. Categorical cells hold a level name or a level index.
  static TableSurrogateObjective load(std::istream& csv, const MixedDomain& domain,
                                      const std::string& metric_column = "y");
  static TableSurrogateObjective load_file(const std::string& path, const MixedDomain& domain,
                                           const std::string& metric_column = "y");

  [[nodiscard]] const MixedDomain& domain() const { return domain_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  [[nodiscard]] const Eigen::VectorXd& values() const { return values_; }
  /// Row r in the distance space.
  [[nodiscard]] Eigen::VectorXd row_point(std::size_t r) const { return points_.col(static_cast<Eigen::Index>(r)); }

  [[nodiscard]] Eigen::VectorXd query_point(BitsView x_disc, const Eigen::VectorXd& x_cont) const;
  [[nodiscard]] std::size_t nearest(BitsView x_disc, const Eigen::VectorXd& x_cont) const;
  [[nodiscard]] double evaluate(BitsView x_disc, const Eigen::VectorXd& x_cont) const;

 private:
  MixedDomain domain_;
  Eigen::VectorXd col_min_;
  Eigen::VectorXd col_span_;
  Eigen::MatrixXd points_;  // (D_c + D_d) x rows, column-major for the scan
  Eigen::VectorXd values_;
};

/// booster (2 levels), nrounds [3, 5000], max_depth [1, 15] and seven
/// continuous parameters; 19 binary slots.
MixedDomain make_xgboost_like_domain();

/// CSV text with `rows` configurations sampled uniformly in user scale and a
/// smooth synthetic validation error in the "y" column.
std::string generate_xgboost_like_csv(int rows, std::uint64_t seed);

/// Feasible points get the inner value, infeasible ones the penalty; every
/// call is logged.
class PenaltyWrapper {
 public:
  PenaltyWrapper(ObjectiveFn inner, const MixedDomain* domain, double penalty);

  double operator()(BitsView x_disc, const Eigen::VectorXd& x_cont);

  [[nodiscard]] double penalty() const { return penalty_; }
  [[nodiscard]] const std::vector<bool>& validity_log() const { return log_; }
  [[nodiscard]] int valid_count() const;
  [[nodiscard]] int invalid_count() const;

 private:
  ObjectiveFn inner_;
  const MixedDomain* domain_;
  double penalty_;
  std::vector<bool> log_;
};

/// y_max + 10 (y_max - y_min) over `samples` random feasible evaluations.
double default_penalty(const ObjectiveFn& f, const MixedDomain& domain, std::uint64_t seed, int samples = 1000);

/// T uniform queries; feasible ones via rejection sampling when
/// constraint_aware, otherwise uniform over the whole box.
std::vector<TraceRecord> random_search(const ObjectiveFn& f, const MixedDomain& domain, int T, std::uint64_t seed,
                                       bool constraint_aware = true, const RecordSink& sink = {});

/// Metropolis chain over the domain with one objective query per step.
/// Temperature starts at schedule.t0 and decays per query; schedule.steps
/// is ignored.
std::vector<TraceRecord> sa_search(const ObjectiveFn& f, const MixedDomain& domain, int T, std::uint64_t seed,
                                   const MixedAnnealSchedule& schedule, bool constraint_aware = false,
                                   const RecordSink& sink = {});

struct RunTrace {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> records;
};

struct MetricRow {
  std::string method;
  std::uint64_t seed = 0;
  int iter = 0;
  double value = 0.0;             // incumbent, +inf before the first feasible query
  double regret = 0.0;            // NaN without an oracle; penalty - oracle before the first feasible query
  double normalized_error = 0.0;  // in [0, 1]
};

/// Normalization pools the feasible observations of every trace passed in.
/// Without a feasible incumbent, regret is measured from `penalty` (NaN if none given).
std::vector<MetricRow> compute_metrics(const std::vector<RunTrace>& traces, std::optional<double> oracle,
                                       std::optional<double> penalty = std::nullopt);

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

enum class MetricColumn { Value, Regret, NormalizedError };

/// Mean and sample standard deviation across seeds for each iteration.
SeriesStats summarize(const std::vector<MetricRow>& rows, const std::string& method, MetricColumn column);

/// Final-iteration column value per seed, ordered by seed.
std::vector<double> final_values(const std::vector<MetricRow>& rows, const std::string& method, MetricColumn column);

/// One-sided Wilcoxon signed-rank test of H1: x tends to be smaller than y,
/// paired by index. Exact null distribution for n <= 25 without ties, normal
/// approximation with tie and continuity correction otherwise.
double wilcoxon_less(const std::vector<double>& x, const std::vector<double>& y);

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows);

}  // namespace mivabo
