#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mivabo/domain.hpp"

namespace mivabo {

struct FeatureConfig {
  int num_rff = 16;        // M_c
  double bandwidth = 1.0;  // sigma of the squared exponential kernel
  std::uint64_t seed = 0;
  /// Optional continuous scope per RFF feature (length num_rff). Frequencies
  /// outside a feature's scope are zero. Empty means every feature sees all
  /// continuous dimensions.
  std::vector<std::vector<int>> rff_scopes;

  [[nodiscard]] nlohmann::json to_json() const;
  static FeatureConfig from_json(const nlohmann::json& j);
};

/// Frozen feature map phi(x) = [phi_d(x_d); phi_c(x_c); phi_m(x_d, x_c)].
///
/// Discrete block: [1, x_1..x_D, x_i x_j for i<j in lexicographic order].
/// Continuous block: sqrt(2/M_c) cos(omega_i^T x + b_i), omega ~ N(0, sigma^-2 I),
/// b ~ U[0, 2pi], drawn once from the seed.
/// Mixed block: phi_d[k] * phi_c[j] at index k * M_c + j.
class FeatureExpansion {
 public:
  FeatureExpansion(int d_disc, int d_cont, const FeatureConfig& cfg);

  [[nodiscard]] int d_disc() const { return d_disc_; }
  [[nodiscard]] int d_cont() const { return d_cont_; }
  [[nodiscard]] int m_disc() const { return m_disc_; }
  [[nodiscard]] int m_cont() const { return m_cont_; }
  [[nodiscard]] int m_mixed() const { return m_disc_ * m_cont_; }
  [[nodiscard]] int total() const { return m_disc_ + m_cont_ + m_disc_ * m_cont_; }

  [[nodiscard]] int cont_offset() const { return m_disc_; }
  [[nodiscard]] int mixed_offset() const { return m_disc_ + m_cont_; }
  [[nodiscard]] int mixed_index(int k, int j) const { return k * m_cont_ + j; }

  /// Monomial variables of discrete feature k: empty for k = 0, {i} for a
  /// singleton, {i, j} for a pair.
  [[nodiscard]] const std::vector<int>& monomial(int k) const { return monomials_[k]; }
  /// Discrete index of the pair (i, j), i < j.
  [[nodiscard]] int pair_index(int i, int j) const;

  [[nodiscard]] const Eigen::MatrixXd& frequencies() const { return omega_; }
  [[nodiscard]] const Eigen::VectorXd& phases() const { return phase_; }
  [[nodiscard]] double amplitude() const { return amplitude_; }
  [[nodiscard]] const FeatureConfig& config() const { return cfg_; }
  /// Continuous dimensions feature j depends on.
  [[nodiscard]] const std::vector<int>& rff_scope(int j) const { return scopes_[j]; }

  [[nodiscard]] Eigen::VectorXd eval_discrete(BitsView x_disc) const;
  [[nodiscard]] Eigen::VectorXd eval_continuous(const Eigen::VectorXd& x_cont) const;
  [[nodiscard]] Eigen::VectorXd eval_mixed(BitsView x_disc, const Eigen::VectorXd& x_cont) const;
  [[nodiscard]] Eigen::VectorXd eval_full(BitsView x_disc, const Eigen::VectorXd& x_cont) const;

  /// Gradient of sum_i w_i phi_c_i(x) with respect to x.
  [[nodiscard]] Eigen::VectorXd grad_continuous(const Eigen::VectorXd& x_cont,
                                                const Eigen::VectorXd& weights_cont) const;

  /// Weighted RFF sum and its gradient in one pass.
  [[nodiscard]] std::pair<double, Eigen::VectorXd> weighted_continuous(
      const Eigen::VectorXd& x_cont, const Eigen::VectorXd& weights_cont) const;

  /// Optional pruning mask on mixed indices; masked features evaluate to 0.
  void set_mixed_mask(std::vector<bool> mask);
  [[nodiscard]] const std::vector<bool>& mixed_mask() const { return mixed_mask_; }

  /// Upper bound on ||phi(x)||_2 over the whole domain.
  [[nodiscard]] double norm_bound() const;

 private:
  void check_disc(BitsView x_disc) const;
  void check_cont(const Eigen::VectorXd& x_cont) const;
  void apply_mask(Eigen::Ref<Eigen::VectorXd> mixed) const;

  int d_disc_;
  int d_cont_;
  int m_disc_;
  int m_cont_;
  FeatureConfig cfg_;
  double amplitude_;
  Eigen::MatrixXd omega_;  // M_c x D_c
  Eigen::VectorXd phase_;
  std::vector<std::vector<int>> monomials_;
  std::vector<std::vector<int>> scopes_;
  std::vector<bool> mixed_mask_;
};

}  // namespace mivabo
