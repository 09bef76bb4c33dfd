#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace mivabo {

using Rng = std::mt19937_64;
using Bits = std::vector<std::uint8_t>;
using BitsView = std::span<const std::uint8_t>;

/// a^T x <= b over the binary slots.
struct LinearConstraint {
  Eigen::VectorXd a;
  double b = 0.0;
};

/// x^T Q x + q^T x <= b over the binary slots, Q symmetric.
struct QuadraticConstraint {
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  double b = 0.0;
};

/// Known constraints over the binary part of the domain. Constraints whose
/// coefficients are all integral are checked in exact integer arithmetic,
/// the rest with an absolute tolerance of kFeasibilityTol.
class ConstraintSet {
 public:
  static constexpr double kFeasibilityTol = 1e-9;

  ConstraintSet() = default;
  explicit ConstraintSet(int num_slots) : num_slots_(num_slots) {}

  void add_linear(LinearConstraint c);
  void add_quadratic(QuadraticConstraint c);
  /// sum_{i in slots} x_i <= k
  void add_cardinality(int k);

  [[nodiscard]] int num_slots() const { return num_slots_; }
  [[nodiscard]] const std::vector<LinearConstraint>& linear() const { return linear_; }
  [[nodiscard]] const std::vector<QuadraticConstraint>& quadratic() const { return quadratic_; }
  [[nodiscard]] bool empty() const { return linear_.empty() && quadratic_.empty(); }

  [[nodiscard]] bool satisfied(BitsView x) const;
  [[nodiscard]] bool linear_satisfied(std::size_t i, BitsView x) const;
  [[nodiscard]] bool quadratic_satisfied(std::size_t i, BitsView x) const;

 private:
  int num_slots_ = 0;
  std::vector<LinearConstraint> linear_;
  std::vector<QuadraticConstraint> quadratic_;
  std::vector<bool> linear_integral_;
  std::vector<bool> quadratic_integral_;
};

enum class VariableKind { Binary, Integer, Categorical, Continuous };

/// One user-level variable and where it lives in the canonical vectors.
/// Discrete variables own a contiguous range of binary slots (integers are
/// little-endian within their range); continuous variables own one
/// coordinate of the unit box.
struct Variable {
  std::string name;
  VariableKind kind = VariableKind::Binary;
  std::int64_t int_lo = 0;
  std::int64_t int_hi = 1;
  std::vector<std::string> levels;
  double cont_lo = 0.0;
  double cont_hi = 1.0;
  int slot_begin = 0;
  int slot_count = 0;
  int cont_index = -1;

  [[nodiscard]] bool is_discrete() const { return kind != VariableKind::Continuous; }
};

/// Integer or level index for discrete variables, user-scale real for
/// continuous ones.
using UserValue = std::variant<std::int64_t, double>;
using Assignment = std::vector<UserValue>;

/// Bits needed for an integer range [lo, hi].
int integer_bit_count(std::int64_t lo, std::int64_t hi);

/// Mixed search space: D_d binary slots, D_c continuous coordinates in the
/// unit box, and the constraint set over the binary slots. Immutable once
/// built.
class MixedDomain {
 public:
  MixedDomain() = default;

  [[nodiscard]] int d_disc() const { return d_disc_; }
  [[nodiscard]] int d_cont() const { return d_cont_; }
  [[nodiscard]] const std::vector<Variable>& variables() const { return variables_; }
  [[nodiscard]] const ConstraintSet& constraints() const { return constraints_; }

  [[nodiscard]] bool is_feasible(BitsView x_disc, const Eigen::VectorXd& x_cont) const;

  /// Throws DimensionError on wrong sizes or non-binary entries.
  void check_dims(BitsView x_disc, const Eigen::VectorXd& x_cont) const;

  [[nodiscard]] std::pair<Bits, Eigen::VectorXd> encode(const Assignment& values) const;
  [[nodiscard]] Assignment decode(BitsView x_disc, const Eigen::VectorXd& x_cont) const;

  /// Uniform rejection sampling over {0,1}^D_d x [0,1]^D_c.
  [[nodiscard]] std::pair<Bits, Eigen::VectorXd> sample_feasible(Rng& rng, int max_tries) const;

  /// Uniform sample that ignores the constraints.
  [[nodiscard]] std::pair<Bits, Eigen::VectorXd> sample_box(Rng& rng) const;

  [[nodiscard]] nlohmann::json to_json() const;
  static MixedDomain from_json(const nlohmann::json& j);

 private:
  friend class DomainBuilder;

  int d_disc_ = 0;
  int d_cont_ = 0;
  std::vector<Variable> variables_;
  ConstraintSet constraints_;
  // user-supplied constraints only, for serialization
  std::vector<LinearConstraint> user_linear_;
  std::vector<QuadraticConstraint> user_quadratic_;
};

/// Declares variables in order, then constraints over the resulting slots.
class DomainBuilder {
 public:
  DomainBuilder& add_binary(std::string name);
  DomainBuilder& add_integer(std::string name, std::int64_t lo, std::int64_t hi);
  DomainBuilder& add_categorical(std::string name, std::vector<std::string> levels);
  DomainBuilder& add_categorical(std::string name, int n_levels);
  DomainBuilder& add_continuous(std::string name, double lo = 0.0, double hi = 1.0);

  DomainBuilder& add_linear(LinearConstraint c);
  DomainBuilder& add_quadratic(QuadraticConstraint c);
  DomainBuilder& add_cardinality(int k);

  [[nodiscard]] int num_slots() const { return next_slot_; }

  MixedDomain build() const;

 private:
  std::vector<Variable> variables_;
  std::vector<LinearConstraint> linear_;
  std::vector<QuadraticConstraint> quadratic_;
  std::vector<int> cardinality_;
  int next_slot_ = 0;
  int next_cont_ = 0;
};

/// Shorthand for a domain of raw binaries and unit-box continuous variables.
MixedDomain make_plain_domain(int d_disc, int d_cont);

}  // namespace mivabo
