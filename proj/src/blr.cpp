#include "mivabo/blr.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include "mivabo/errors.hpp"

namespace mivabo {

ScalingMode parse_scaling_mode(const std::string& s) {
  if (s == "unit") return ScalingMode::Unit;
  if (s == "theory") return ScalingMode::Theory;
  throw ConfigError("unknown scaling mode '" + s + "'");
}

std::string to_string(ScalingMode m) { return m == ScalingMode::Unit ? "unit" : "theory"; }

double scaling_factor(int num_features, int horizon, double delta, ScalingMode mode) {
  if (horizon < 2) throw ConfigError("scaling_factor: T must be >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("scaling_factor: delta must be in (0,1)");
  if (mode == ScalingMode::Unit) return 1.0;
  return 24.0 * num_features * std::log(static_cast<double>(horizon)) * std::log(1.0 / delta);
}

void cholesky_rank_one_update(Eigen::MatrixXd& lower, Eigen::VectorXd v) {
  const Eigen::Index n = lower.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lkk = lower(k, k);
    const double r = std::hypot(lkk, v[k]);
    const double c = r / lkk;
    const double s = v[k] / lkk;
    lower(k, k) = r;
    if (k + 1 < n) {
      auto col = lower.col(k).tail(n - k - 1);
      auto rest = v.tail(n - k - 1);
      col = (col + s * rest) / c;
      rest = c * rest - s * col;
    }
  }
}

BayesianLinearRegression::BayesianLinearRegression(int num_features, double alpha, double beta)
    : alpha_(alpha), beta_(beta) {
  if (num_features < 1) throw DimensionError("posterior needs at least one feature");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("alpha and beta must be positive");
  mean_ = Eigen::VectorXd::Zero(num_features);
  precision_ = alpha * Eigen::MatrixXd::Identity(num_features, num_features);
  chol_ = std::sqrt(alpha) * Eigen::MatrixXd::Identity(num_features, num_features);
  sum_phi_y_ = Eigen::VectorXd::Zero(num_features);
}

void BayesianLinearRegression::refactor() {
  Eigen::LLT<Eigen::MatrixXd> llt(precision_);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * precision_.trace() / dim();
    Eigen::MatrixXd shifted = precision_;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() != Eigen::Success) {
      throw FactorizationError("posterior precision is not positive definite");
    }
  }
  chol_ = llt.matrixL();
  since_refactor_ = 0;
}

void BayesianLinearRegression::solve_mean() {
  const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(sum_phi_y_);
  mean_ = chol_.transpose().triangularView<Eigen::Upper>().solve(z);
}

void BayesianLinearRegression::update(const Eigen::VectorXd& phi, double y) {
  if (phi.size() != dim()) {
    throw DimensionError("feature vector has " + std::to_string(phi.size()) +
                         " entries, posterior has " + std::to_string(dim()));
  }
  precision_.selfadjointView<Eigen::Lower>().rankUpdate(phi, beta_);
  precision_.triangularView<Eigen::StrictlyUpper>() = precision_.transpose();
  sum_phi_y_ += (beta_ * y) * phi;
  ++n_obs_;
  if (++since_refactor_ >= kRefactorEvery) {
    refactor();
  } else {
    cholesky_rank_one_update(chol_, std::sqrt(beta_) * phi);
    if (!chol_.diagonal().allFinite() || (chol_.diagonal().array() <= 0.0).any()) refactor();
  }
  solve_mean();
}

Eigen::VectorXd BayesianLinearRegression::sample_weights(double scale, Rng& rng) const {
  if (!(scale > 0.0)) throw ConfigError("sample_weights: scale must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  // L^-T z has covariance (L L^T)^-1 = S^-1
  Eigen::VectorXd dev = chol_.triangularView<Eigen::Lower>().transpose().solve(z);
  return mean_ + std::sqrt(scale) * dev;
}

BayesianLinearRegression::Prediction BayesianLinearRegression::predict(
    const Eigen::VectorXd& phi) const {
  if (phi.size() != dim()) throw DimensionError("predict: feature dimension mismatch");
  const Eigen::VectorXd half = chol_.triangularView<Eigen::Lower>().solve(phi);
  return {mean_.dot(phi), half.squaredNorm() + 1.0 / beta_};
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw SchemaError("truncated posterior checkpoint");
  return v;
}

constexpr char kMagic[4] = {'M', 'V', 'B', 'P'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void BayesianLinearRegression::save(std::ostream& os) const {
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(dim()));
  put<double>(os, alpha_);
  put<double>(os, beta_);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(n_obs_));
  for (Eigen::Index i = 0; i < mean_.size(); ++i) put<double>(os, mean_[i]);
  for (Eigen::Index r = 0; r < precision_.rows(); ++r) {
    for (Eigen::Index c = 0; c < precision_.cols(); ++c) put<double>(os, precision_(r, c));
  }
}

BayesianLinearRegression BayesianLinearRegression::load(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw SchemaError("not a posterior checkpoint");
  if (get<std::uint32_t>(is) != kVersion) throw SchemaError("unsupported checkpoint version");
  const auto m = static_cast<int>(get<std::uint64_t>(is));
  const double alpha = get<double>(is);
  const double beta = get<double>(is);
  BayesianLinearRegression post(m, alpha, beta);
  post.n_obs_ = static_cast<std::int64_t>(get<std::uint64_t>(is));
  for (int i = 0; i < m; ++i) post.mean_[i] = get<double>(is);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) post.precision_(r, c) = get<double>(is);
  }
  post.sum_phi_y_ = post.precision_ * post.mean_;
  post.refactor();
  return post;
}

}  // namespace mivabo
