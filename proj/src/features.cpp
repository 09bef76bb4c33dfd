#include "mivabo/features.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "mivabo/errors.hpp"

namespace mivabo {

nlohmann::json FeatureConfig::to_json() const {
  nlohmann::json j{{"num_rff", num_rff}, {"bandwidth", bandwidth}, {"seed", seed}};
  if (!rff_scopes.empty()) j["rff_scopes"] = rff_scopes;
  return j;
}

FeatureConfig FeatureConfig::from_json(const nlohmann::json& j) {
  FeatureConfig cfg;
  cfg.num_rff = j.value("num_rff", cfg.num_rff);
  cfg.bandwidth = j.value("bandwidth", cfg.bandwidth);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("rff_scopes")) cfg.rff_scopes = j.at("rff_scopes").get<std::vector<std::vector<int>>>();
  return cfg;
}

FeatureExpansion::FeatureExpansion(int d_disc, int d_cont, const FeatureConfig& cfg)
    : d_disc_(d_disc), d_cont_(d_cont), cfg_(cfg) {
  if (d_disc < 0 || d_cont < 0 || d_disc + d_cont < 1) {
    throw DimensionError("feature expansion needs D_d, D_c >= 0 and D_d + D_c >= 1");
  }
  if (!(cfg.bandwidth > 0.0)) throw ConfigError("RFF bandwidth must be positive");
  if (d_cont > 0 && cfg.num_rff < 1) throw ConfigError("num_rff must be >= 1");

  m_disc_ = 1 + d_disc + d_disc * (d_disc - 1) / 2;
  m_cont_ = d_cont > 0 ? cfg.num_rff : 0;
  amplitude_ = m_cont_ > 0 ? std::sqrt(2.0 / m_cont_) : 0.0;

  monomials_.reserve(m_disc_);
  monomials_.push_back({});
  for (int i = 0; i < d_disc; ++i) monomials_.push_back({i});
  for (int i = 0; i < d_disc; ++i) {
    for (int j = i + 1; j < d_disc; ++j) monomials_.push_back({i, j});
  }

  if (!cfg.rff_scopes.empty() && static_cast<int>(cfg.rff_scopes.size()) != m_cont_) {
    throw ConfigError("rff_scopes must list one scope per RFF feature");
  }
  scopes_.resize(m_cont_);
  for (int j = 0; j < m_cont_; ++j) {
    if (cfg.rff_scopes.empty()) {
      for (int c = 0; c < d_cont; ++c) scopes_[j].push_back(c);
    } else {
      scopes_[j] = cfg.rff_scopes[j];
      for (int c : scopes_[j]) {
        if (c < 0 || c >= d_cont) throw ConfigError("rff scope refers to a missing dimension");
      }
    }
  }

  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0 / cfg.bandwidth);
  std::uniform_real_distribution<double> unif(0.0, 2.0 * std::numbers::pi);
  omega_ = Eigen::MatrixXd::Zero(m_cont_, d_cont_);
  phase_ = Eigen::VectorXd::Zero(m_cont_);
  // Draw a full row before masking so scoped and unscoped expansions share
  // the same random stream.
  for (int j = 0; j < m_cont_; ++j) {
    for (int c = 0; c < d_cont_; ++c) omega_(j, c) = normal(rng);
    phase_[j] = unif(rng);
  }
  if (!cfg.rff_scopes.empty()) {
    for (int j = 0; j < m_cont_; ++j) {
      Eigen::RowVectorXd keep = Eigen::RowVectorXd::Zero(d_cont_);
      for (int c : scopes_[j]) keep[c] = 1.0;
      omega_.row(j) = omega_.row(j).cwiseProduct(keep);
    }
  }
}

int FeatureExpansion::pair_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= d_disc_ || i == j) throw DimensionError("invalid pair index");
  // pairs with first element < i come first
  const int before = i * d_disc_ - i * (i + 1) / 2;
  return 1 + d_disc_ + before + (j - i - 1);
}

void FeatureExpansion::check_disc(BitsView x_disc) const {
  if (static_cast<int>(x_disc.size()) != d_disc_) {
    throw DimensionError("discrete input has " + std::to_string(x_disc.size()) +
                         " entries, expected " + std::to_string(d_disc_));
  }
  for (auto b : x_disc) {
    if (b > 1) throw DimensionError("discrete input has a non-binary entry");
  }
}

void FeatureExpansion::check_cont(const Eigen::VectorXd& x_cont) const {
  if (x_cont.size() != d_cont_) {
    throw DimensionError("continuous input has " + std::to_string(x_cont.size()) +
                         " entries, expected " + std::to_string(d_cont_));
  }
  for (Eigen::Index i = 0; i < x_cont.size(); ++i) {
    if (!(x_cont[i] >= 0.0 && x_cont[i] <= 1.0)) {
      throw DimensionError("continuous input outside the unit box");
    }
  }
}

Eigen::VectorXd FeatureExpansion::eval_discrete(BitsView x_disc) const {
  check_disc(x_disc);
  Eigen::VectorXd phi(m_disc_);
  phi[0] = 1.0;
  int k = 1;
  for (int i = 0; i < d_disc_; ++i) phi[k++] = x_disc[i];
  for (int i = 0; i < d_disc_; ++i) {
    for (int j = i + 1; j < d_disc_; ++j) phi[k++] = (x_disc[i] & x_disc[j]) ? 1.0 : 0.0;
  }
  return phi;
}

Eigen::VectorXd FeatureExpansion::eval_continuous(const Eigen::VectorXd& x_cont) const {
  check_cont(x_cont);
  Eigen::VectorXd arg = omega_ * x_cont + phase_;
  return amplitude_ * arg.array().cos().matrix();
}

void FeatureExpansion::apply_mask(Eigen::Ref<Eigen::VectorXd> mixed) const {
  if (mixed_mask_.empty()) return;
  for (Eigen::Index i = 0; i < mixed.size(); ++i) {
    if (!mixed_mask_[i]) mixed[i] = 0.0;
  }
}

Eigen::VectorXd FeatureExpansion::eval_mixed(BitsView x_disc, const Eigen::VectorXd& x_cont) const {
  const Eigen::VectorXd pd = eval_discrete(x_disc);
  const Eigen::VectorXd pc = eval_continuous(x_cont);
  Eigen::VectorXd mixed(m_disc_ * m_cont_);
  for (int k = 0; k < m_disc_; ++k) mixed.segment(k * m_cont_, m_cont_) = pd[k] * pc;
  apply_mask(mixed);
  return mixed;
}

Eigen::VectorXd FeatureExpansion::eval_full(BitsView x_disc, const Eigen::VectorXd& x_cont) const {
  const Eigen::VectorXd pd = eval_discrete(x_disc);
  const Eigen::VectorXd pc = eval_continuous(x_cont);
  Eigen::VectorXd phi(total());
  phi.head(m_disc_) = pd;
  phi.segment(m_disc_, m_cont_) = pc;
  auto mixed = phi.tail(m_disc_ * m_cont_);
  for (int k = 0; k < m_disc_; ++k) mixed.segment(k * m_cont_, m_cont_) = pd[k] * pc;
  apply_mask(mixed);
  return phi;
}

std::pair<double, Eigen::VectorXd> FeatureExpansion::weighted_continuous(
    const Eigen::VectorXd& x_cont, const Eigen::VectorXd& weights_cont) const {
  if (weights_cont.size() != m_cont_ || x_cont.size() != d_cont_) {
    throw DimensionError("weighted_continuous: dimension mismatch");
  }
  double value = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(d_cont_);
  for (int j = 0; j < m_cont_; ++j) {
    if (weights_cont[j] == 0.0) continue;
    const double arg = omega_.row(j).dot(x_cont) + phase_[j];
    value += weights_cont[j] * amplitude_ * std::cos(arg);
    grad -= (weights_cont[j] * amplitude_ * std::sin(arg)) * omega_.row(j).transpose();
  }
  return {value, grad};
}

Eigen::VectorXd FeatureExpansion::grad_continuous(const Eigen::VectorXd& x_cont,
                                                  const Eigen::VectorXd& weights_cont) const {
  check_cont(x_cont);
  return weighted_continuous(x_cont, weights_cont).second;
}

void FeatureExpansion::set_mixed_mask(std::vector<bool> mask) {
  if (!mask.empty() && static_cast<int>(mask.size()) != m_mixed()) {
    throw DimensionError("mixed mask length does not match the mixed block");
  }
  mixed_mask_ = std::move(mask);
}

double FeatureExpansion::norm_bound() const {
  // ||phi_d|| <= sqrt(m_disc), ||phi_c||^2 <= M_c * 2/M_c, ||phi_m|| = ||phi_d|| ||phi_c||
  const double cont = m_cont_ > 0 ? std::sqrt(2.0) : 0.0;
  return std::sqrt(static_cast<double>(m_disc_)) + cont + std::sqrt(m_disc_ * 1.0) * cont;
}

}  // namespace mivabo
