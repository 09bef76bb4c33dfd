#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mivabo/blr.hpp"
#include "mivabo/continuous_opt.hpp"
#include "mivabo/discrete_opt.hpp"
#include "mivabo/domain.hpp"
#include "mivabo/dual_decomp.hpp"
#include "mivabo/features.hpp"
#include "mivabo/mixed_anneal.hpp"

namespace mivabo {

/// Discrete, continuous and mixed slices of a length-M weight vector. The
/// mixed block is a row-major m_disc x m_cont matrix.
class WeightView {
 public:
  WeightView(const FeatureExpansion& fe, const Eigen::VectorXd& w);

  [[nodiscard]] auto disc() const { return w_.head(m_disc_); }
  [[nodiscard]] auto cont() const { return w_.segment(m_disc_, m_cont_); }
  [[nodiscard]] Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  mixed() const;
  [[nodiscard]] Eigen::VectorXd concat() const;

 private:
  const Eigen::VectorXd& w_;
  int m_disc_;
  int m_cont_;
};

/// Conditions w^T phi on a fixed continuous point. The result equals
/// w^T phi(x_d, x_cont_fixed) for every binary x_d.
QuadraticForm reduce_discrete(const FeatureExpansion& fe, const Eigen::VectorXd& w,
                              const Eigen::VectorXd& x_cont_fixed);

/// Conditions w^T phi on a fixed binary point. The problem references `fe`,
/// which must outlive it.
BoxProblem reduce_continuous(const FeatureExpansion& fe, const Eigen::VectorXd& w, BitsView x_disc_fixed);

enum class AcquisitionOptimizer { Alternate, Anneal, DualDecomposition };

AcquisitionOptimizer parse_acquisition_optimizer(const std::string& s);
std::string to_string(AcquisitionOptimizer a);

struct BoLoopConfig {
  int T = 80;
  int n_init = 5;
  int alt_max_rounds = 50;
  double alt_tol = 1e-9;
  int alt_restarts = 5;
  ScalingMode scaling = ScalingMode::Unit;
  double delta = 0.1;
  double alpha = 1.0;
  double beta = 1.0;
  AcquisitionOptimizer optimizer = AcquisitionOptimizer::Alternate;
  SolveOptions discrete;
  MinimizeOptions continuous;
  MixedAnnealSchedule anneal;
  dd::DualOptions dual;
  int dual_budget = 200;
  int max_sample_tries = 10000;
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
  static BoLoopConfig from_json(const nlohmann::json& j);
};

struct AlternationResult {
  Bits x_disc;
  Eigen::VectorXd x_cont;
  double value = 0.0;
  std::vector<double> start_values;  // acquisition value at each restart's start
  int rounds = 0;
};

/// Feasible random point: rejection sampling, falling back to the
/// lexicographically smallest feasible binary vector.
std::pair<Bits, Eigen::VectorXd> random_feasible_start(const MixedDomain& domain, Rng& rng, int max_tries);

/// Alternates exact discrete solves and multi-start continuous solves from
/// alt_restarts feasible random starts; returns the best point found.
AlternationResult alternate(const FeatureExpansion& fe, const Eigen::VectorXd& w, const MixedDomain& domain,
                            const BoLoopConfig& cfg, Rng& rng);

/// w^T phi(x)
double acquisition_value(const FeatureExpansion& fe, const Eigen::VectorXd& w, BitsView x_disc,
                         const Eigen::VectorXd& x_cont);

/// Minimizes w^T phi over the domain with the configured optimizer.
AlternationResult optimize_acquisition(const FeatureExpansion& fe, const Eigen::VectorXd& w,
                                       const MixedDomain& domain, const BoLoopConfig& cfg, Rng& rng);

struct TraceRecord {
  std::uint64_t seed = 0;
  int t = 0;
  Bits x_disc;
  Eigen::VectorXd x_cont;
  double y = 0.0;
  bool feasible = true;
  double incumbent = 0.0;  // best feasible y so far, +inf before the first
  int violations = 0;      // infeasible queries so far
  double wall_ms = 0.0;
  std::string scaling = "unit";
};

using ObjectiveFn = std::function<double(BitsView, const Eigen::VectorXd&)>;
using RecordSink = std::function<void(const TraceRecord&)>;

struct BoResult {
  std::vector<TraceRecord> trace;
  /// argmin of the posterior mean m^T phi at the end of the run
  Bits mean_argmin_disc;
  Eigen::VectorXd mean_argmin_cont;
  double mean_argmin_value = 0.0;
};

/// Thompson-sampling loop: n_init feasible random queries, then T - n_init
/// model-based queries. `sink` sees every record as soon as it exists.
BoResult run_bo(const ObjectiveFn& objective, const MixedDomain& domain, const FeatureExpansion& fe,
                const BoLoopConfig& cfg, const RecordSink& sink = {});

/// Appends a record with incumbent and violation bookkeeping filled in.
void push_record(std::vector<TraceRecord>& trace, TraceRecord rec);

}  // namespace mivabo
