#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "mivabo/domain.hpp"

namespace mivabo {

enum class ScalingMode { Unit, Theory };

ScalingMode parse_scaling_mode(const std::string& s);
std::string to_string(ScalingMode m);

/// Posterior-variance multiplier for Thompson sampling.
/// Theory mode returns 24 M ln(T) ln(1/delta); unit mode returns 1.
double scaling_factor(int num_features, int horizon, double delta, ScalingMode mode);

/// Conjugate Gaussian posterior N(m, S^-1) over the weights of a linear model
/// with prior N(0, alpha^-1 I) and noise precision beta.
///
/// S = alpha I + beta Phi^T Phi and S m = beta Phi^T y. The lower Cholesky
/// factor of S is kept current with rank-one updates and rebuilt from S every
/// kRefactorEvery updates.
class BayesianLinearRegression {
 public:
  static constexpr int kRefactorEvery = 64;

  BayesianLinearRegression(int num_features, double alpha = 1.0, double beta = 1.0);

  [[nodiscard]] int dim() const { return static_cast<int>(mean_.size()); }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] double beta() const { return beta_; }
  [[nodiscard]] std::int64_t num_obs() const { return n_obs_; }
  [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
  [[nodiscard]] const Eigen::MatrixXd& precision() const { return precision_; }
  [[nodiscard]] const Eigen::MatrixXd& chol() const { return chol_; }
  [[nodiscard]] const Eigen::VectorXd& weighted_targets() const { return sum_phi_y_; }

  void update(const Eigen::VectorXd& phi, double y);

  /// Draw from N(m, scale * S^-1).
  [[nodiscard]] Eigen::VectorXd sample_weights(double scale, Rng& rng) const;

  struct Prediction {
    double mean;
    double variance;
  };
  /// Predictive mean m^T phi and variance phi^T S^-1 phi + 1/beta.
  [[nodiscard]] Prediction predict(const Eigen::VectorXd& phi) const;

  /// Binary checkpoint. Layout (little-endian):
  ///   char[4] "MVBP", uint32 version = 1, uint64 M,
  ///   float64 alpha, float64 beta, uint64 t,
  ///   float64 m[M], float64 S[M*M] (row-major)
  void save(std::ostream& os) const;
  static BayesianLinearRegression load(std::istream& is);

 private:
  void refactor();
  void solve_mean();

  double alpha_;
  double beta_;
  std::int64_t n_obs_ = 0;
  int since_refactor_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd precision_;
  Eigen::MatrixXd chol_;  // lower triangular, S = L L^T
  Eigen::VectorXd sum_phi_y_;
};

/// In-place update of the lower factor L so that L L^T becomes L L^T + v v^T.
void cholesky_rank_one_update(Eigen::MatrixXd& lower, Eigen::VectorXd v);

}  // namespace mivabo
