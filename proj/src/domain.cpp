#include "mivabo/domain.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mivabo/errors.hpp"

namespace mivabo {

namespace {

// Largest magnitude for which integral doubles are summed exactly in int64.
constexpr double kExactLimit = 1e12;

bool is_integral(double v) {
  return std::isfinite(v) && std::abs(v) < kExactLimit && std::floor(v) == v;
}

bool all_integral(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!is_integral(v[i])) return false;
  }
  return true;
}

bool all_integral(const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!is_integral(m(r, c))) return false;
    }
  }
  return true;
}

std::string kind_name(VariableKind k) {
  switch (k) {
    case VariableKind::Binary:
      return "binary";
    case VariableKind::Integer:
      return "integer";
    case VariableKind::Categorical:
      return "categorical";
    case VariableKind::Continuous:
      return "continuous";
  }
  return "?";
}

Eigen::VectorXd json_vector(const nlohmann::json& j, int expected, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != expected) {
    throw SchemaError(std::string(what) + ": expected array of length " + std::to_string(expected));
  }
  Eigen::VectorXd v(expected);
  for (int i = 0; i < expected; ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// ConstraintSet

void ConstraintSet::add_linear(LinearConstraint c) {
  if (c.a.size() != num_slots_) {
    throw DimensionError("linear constraint has " + std::to_string(c.a.size()) +
                         " coefficients, domain has " + std::to_string(num_slots_) + " slots");
  }
  linear_integral_.push_back(all_integral(c.a) && is_integral(c.b));
  linear_.push_back(std::move(c));
}

void ConstraintSet::add_quadratic(QuadraticConstraint c) {
  if (c.Q.rows() != num_slots_ || c.Q.cols() != num_slots_ || c.q.size() != num_slots_) {
    throw DimensionError("quadratic constraint dimensions do not match the slot count");
  }
  // store symmetric
  Eigen::MatrixXd sym = 0.5 * (c.Q + c.Q.transpose());
  const bool integral = all_integral(sym) && all_integral(c.q) && is_integral(c.b);
  c.Q = std::move(sym);
  quadratic_integral_.push_back(integral);
  quadratic_.push_back(std::move(c));
}

void ConstraintSet::add_cardinality(int k) {
  add_linear({Eigen::VectorXd::Ones(num_slots_), static_cast<double>(k)});
}

bool ConstraintSet::linear_satisfied(std::size_t i, BitsView x) const {
  const auto& c = linear_[i];
  if (linear_integral_[i]) {
    std::int64_t lhs = 0;
    for (int s = 0; s < num_slots_; ++s) {
      if (x[s]) lhs += static_cast<std::int64_t>(c.a[s]);
    }
    return lhs <= static_cast<std::int64_t>(c.b);
  }
  double lhs = 0.0;
  for (int s = 0; s < num_slots_; ++s) {
    if (x[s]) lhs += c.a[s];
  }
  return lhs <= c.b + kFeasibilityTol;
}

bool ConstraintSet::quadratic_satisfied(std::size_t i, BitsView x) const {
  const auto& c = quadratic_[i];
  if (quadratic_integral_[i]) {
    // Symmetrization of an integral Q may produce halves; 2*lhs stays integral.
    std::int64_t twice = 0;
    for (int r = 0; r < num_slots_; ++r) {
      if (!x[r]) continue;
      twice += static_cast<std::int64_t>(2.0 * c.q[r]);
      for (int s = 0; s < num_slots_; ++s) {
        if (x[s]) twice += static_cast<std::int64_t>(2.0 * c.Q(r, s));
      }
    }
    return twice <= static_cast<std::int64_t>(2.0 * c.b);
  }
  double lhs = 0.0;
  for (int r = 0; r < num_slots_; ++r) {
    if (!x[r]) continue;
    lhs += c.q[r];
    for (int s = 0; s < num_slots_; ++s) {
      if (x[s]) lhs += c.Q(r, s);
    }
  }
  return lhs <= c.b + kFeasibilityTol;
}

bool ConstraintSet::satisfied(BitsView x) const {
  if (static_cast<int>(x.size()) != num_slots_) {
    throw DimensionError("binary vector has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(num_slots_));
  }
  for (std::size_t i = 0; i < linear_.size(); ++i) {
    if (!linear_satisfied(i, x)) return false;
  }
  for (std::size_t i = 0; i < quadratic_.size(); ++i) {
    if (!quadratic_satisfied(i, x)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// MixedDomain

int integer_bit_count(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw EncodingError("integer range is empty");
  const std::uint64_t width = static_cast<std::uint64_t>(hi - lo) + 1;
  int bits = 0;
  while ((std::uint64_t{1} << bits) < width) ++bits;
  return bits;
}

void MixedDomain::check_dims(BitsView x_disc, const Eigen::VectorXd& x_cont) const {
  if (static_cast<int>(x_disc.size()) != d_disc_ || x_cont.size() != d_cont_) {
    std::ostringstream os;
    os << "point has dims (" << x_disc.size() << ", " << x_cont.size() << "), domain has ("
       << d_disc_ << ", " << d_cont_ << ")";
    throw DimensionError(os.str());
  }
  for (auto b : x_disc) {
    if (b > 1) throw DimensionError("binary vector has a non-binary entry");
  }
}

bool MixedDomain::is_feasible(BitsView x_disc, const Eigen::VectorXd& x_cont) const {
  check_dims(x_disc, x_cont);
  for (Eigen::Index i = 0; i < x_cont.size(); ++i) {
    if (!(x_cont[i] >= 0.0 && x_cont[i] <= 1.0)) return false;
  }
  return constraints_.satisfied(x_disc);
}

std::pair<Bits, Eigen::VectorXd> MixedDomain::encode(const Assignment& values) const {
  if (values.size() != variables_.size()) {
    throw DimensionError("assignment has " + std::to_string(values.size()) +
                         " values, domain declares " + std::to_string(variables_.size()));
  }
  Bits bits(d_disc_, 0);
  Eigen::VectorXd cont(d_cont_);
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    const Variable& var = variables_[v];
    const UserValue& val = values[v];
    if (var.kind == VariableKind::Continuous) {
      const double x = std::holds_alternative<double>(val)
                           ? std::get<double>(val)
                           : static_cast<double>(std::get<std::int64_t>(val));
      if (!(x >= var.cont_lo && x <= var.cont_hi)) {
        throw EncodingError(var.name + ": value out of range");
      }
      const double span = var.cont_hi - var.cont_lo;
      cont[var.cont_index] = span > 0.0 ? (x - var.cont_lo) / span : 0.0;
      continue;
    }
    if (!std::holds_alternative<std::int64_t>(val)) {
      throw EncodingError(var.name + ": discrete variable needs an integer value");
    }
    const std::int64_t x = std::get<std::int64_t>(val);
    switch (var.kind) {
      case VariableKind::Binary:
        if (x != 0 && x != 1) throw EncodingError(var.name + ": binary value must be 0 or 1");
        bits[var.slot_begin] = static_cast<std::uint8_t>(x);
        break;
      case VariableKind::Integer: {
        if (x < var.int_lo || x > var.int_hi) {
          throw EncodingError(var.name + ": value out of range");
        }
        const std::uint64_t code = static_cast<std::uint64_t>(x - var.int_lo);
        for (int j = 0; j < var.slot_count; ++j) {
          bits[var.slot_begin + j] = static_cast<std::uint8_t>((code >> j) & 1U);
        }
        break;
      }
      case VariableKind::Categorical:
        if (x < 0 || x >= var.slot_count) {
          throw EncodingError(var.name + ": level index out of range");
        }
        bits[var.slot_begin + x] = 1;
        break;
      case VariableKind::Continuous:
        break;
    }
  }
  return {std::move(bits), std::move(cont)};
}

Assignment MixedDomain::decode(BitsView x_disc, const Eigen::VectorXd& x_cont) const {
  check_dims(x_disc, x_cont);
  Assignment out;
  out.reserve(variables_.size());
  for (const Variable& var : variables_) {
    switch (var.kind) {
      case VariableKind::Continuous: {
        const double u = x_cont[var.cont_index];
        if (!(u >= 0.0 && u <= 1.0)) throw EncodingError(var.name + ": coordinate outside [0,1]");
        out.emplace_back(var.cont_lo + u * (var.cont_hi - var.cont_lo));
        break;
      }
      case VariableKind::Binary:
        out.emplace_back(static_cast<std::int64_t>(x_disc[var.slot_begin]));
        break;
      case VariableKind::Integer: {
        std::int64_t code = 0;
        for (int j = 0; j < var.slot_count; ++j) {
          if (x_disc[var.slot_begin + j]) code |= std::int64_t{1} << j;
        }
        const std::int64_t value = var.int_lo + code;
        if (value > var.int_hi) throw EncodingError(var.name + ": integer code exceeds range");
        out.emplace_back(value);
        break;
      }
      case VariableKind::Categorical: {
        int hot = -1;
        for (int j = 0; j < var.slot_count; ++j) {
          if (!x_disc[var.slot_begin + j]) continue;
          if (hot >= 0) throw EncodingError(var.name + ": one-hot pattern has several ones");
          hot = j;
        }
        if (hot < 0) throw EncodingError(var.name + ": one-hot pattern has no ones");
        out.emplace_back(static_cast<std::int64_t>(hot));
        break;
      }
    }
  }
  return out;
}

std::pair<Bits, Eigen::VectorXd> MixedDomain::sample_box(Rng& rng) const {
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Bits bits(d_disc_);
  for (auto& b : bits) b = coin(rng) ? 1 : 0;
  Eigen::VectorXd cont(d_cont_);
  for (int i = 0; i < d_cont_; ++i) cont[i] = unit(rng);
  return {std::move(bits), std::move(cont)};
}

std::pair<Bits, Eigen::VectorXd> MixedDomain::sample_feasible(Rng& rng, int max_tries) const {
  if (max_tries < 1) throw ConfigError("sample_feasible: max_tries must be >= 1");
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    auto point = sample_box(rng);
    if (constraints_.satisfied(point.first)) return point;
  }
  throw NoFeasibleSample("no feasible sample within " + std::to_string(max_tries) + " tries");
}

nlohmann::json MixedDomain::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const Variable& v : variables_) {
    nlohmann::json jv{{"name", v.name}, {"kind", kind_name(v.kind)}};
    switch (v.kind) {
      case VariableKind::Integer:
        jv["lo"] = v.int_lo;
        jv["hi"] = v.int_hi;
        break;
      case VariableKind::Categorical:
        jv["levels"] = v.levels;
        break;
      case VariableKind::Continuous:
        jv["lo"] = v.cont_lo;
        jv["hi"] = v.cont_hi;
        break;
      case VariableKind::Binary:
        break;
    }
    vars.push_back(std::move(jv));
  }
  nlohmann::json lin = nlohmann::json::array();
  for (const auto& c : user_linear_) {
    lin.push_back({{"a", std::vector<double>(c.a.data(), c.a.data() + c.a.size())}, {"b", c.b}});
  }
  nlohmann::json quad = nlohmann::json::array();
  for (const auto& c : user_quadratic_) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < c.Q.rows(); ++r) {
      std::vector<double> row(c.Q.cols());
      for (Eigen::Index s = 0; s < c.Q.cols(); ++s) row[s] = c.Q(r, s);
      rows.push_back(row);
    }
    quad.push_back({{"Q", rows},
                    {"q", std::vector<double>(c.q.data(), c.q.data() + c.q.size())},
                    {"b", c.b}});
  }
  return {{"variables", vars}, {"constraints", {{"linear", lin}, {"quadratic", quad}}}};
}

MixedDomain MixedDomain::from_json(const nlohmann::json& j) {
  try {
    DomainBuilder b;
    for (const auto& jv : j.at("variables")) {
      const std::string name = jv.at("name").get<std::string>();
      const std::string kind = jv.at("kind").get<std::string>();
      if (kind == "binary") {
        b.add_binary(name);
      } else if (kind == "integer") {
        b.add_integer(name, jv.at("lo").get<std::int64_t>(), jv.at("hi").get<std::int64_t>());
      } else if (kind == "categorical") {
        if (jv.contains("levels")) {
          b.add_categorical(name, jv.at("levels").get<std::vector<std::string>>());
        } else {
          b.add_categorical(name, jv.at("n_levels").get<int>());
        }
      } else if (kind == "continuous") {
        b.add_continuous(name, jv.value("lo", 0.0), jv.value("hi", 1.0));
      } else {
        throw SchemaError("unknown variable kind '" + kind + "'");
      }
    }
    const int slots = b.num_slots();
    if (j.contains("constraints")) {
      const auto& jc = j.at("constraints");
      for (const auto& jl : jc.value("linear", nlohmann::json::array())) {
        b.add_linear({json_vector(jl.at("a"), slots, "linear.a"), jl.at("b").get<double>()});
      }
      for (const auto& jq : jc.value("quadratic", nlohmann::json::array())) {
        const auto& rows = jq.at("Q");
        if (!rows.is_array() || static_cast<int>(rows.size()) != slots) {
          throw SchemaError("quadratic.Q: expected " + std::to_string(slots) + " rows");
        }
        Eigen::MatrixXd Q(slots, slots);
        for (int r = 0; r < slots; ++r) Q.row(r) = json_vector(rows[r], slots, "quadratic.Q row");
        b.add_quadratic({Q, json_vector(jq.at("q"), slots, "quadratic.q"), jq.at("b").get<double>()});
      }
      if (jc.contains("cardinality")) b.add_cardinality(jc.at("cardinality").get<int>());
    }
    return b.build();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("domain spec: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// DomainBuilder

DomainBuilder& DomainBuilder::add_binary(std::string name) {
  Variable v;
  v.name = std::move(name);
  v.kind = VariableKind::Binary;
  v.int_lo = 0;
  v.int_hi = 1;
  v.slot_begin = next_slot_;
  v.slot_count = 1;
  next_slot_ += 1;
  variables_.push_back(std::move(v));
  return *this;
}

DomainBuilder& DomainBuilder::add_integer(std::string name, std::int64_t lo, std::int64_t hi) {
  Variable v;
  v.name = std::move(name);
  v.kind = VariableKind::Integer;
  v.int_lo = lo;
  v.int_hi = hi;
  v.slot_begin = next_slot_;
  v.slot_count = integer_bit_count(lo, hi);
  next_slot_ += v.slot_count;
  variables_.push_back(std::move(v));
  return *this;
}

DomainBuilder& DomainBuilder::add_categorical(std::string name, std::vector<std::string> levels) {
  if (levels.empty()) throw EncodingError(name + ": categorical needs at least one level");
  Variable v;
  v.name = std::move(name);
  v.kind = VariableKind::Categorical;
  v.slot_begin = next_slot_;
  v.slot_count = static_cast<int>(levels.size());
  v.levels = std::move(levels);
  next_slot_ += v.slot_count;
  variables_.push_back(std::move(v));
  return *this;
}

DomainBuilder& DomainBuilder::add_categorical(std::string name, int n_levels) {
  std::vector<std::string> levels;
  for (int i = 0; i < n_levels; ++i) levels.push_back(std::to_string(i));
  return add_categorical(std::move(name), std::move(levels));
}

DomainBuilder& DomainBuilder::add_continuous(std::string name, double lo, double hi) {
  if (!(hi >= lo)) throw EncodingError(name + ": continuous bounds are inverted");
  Variable v;
  v.name = std::move(name);
  v.kind = VariableKind::Continuous;
  v.cont_lo = lo;
  v.cont_hi = hi;
  v.cont_index = next_cont_++;
  variables_.push_back(std::move(v));
  return *this;
}

DomainBuilder& DomainBuilder::add_linear(LinearConstraint c) {
  linear_.push_back(std::move(c));
  return *this;
}

DomainBuilder& DomainBuilder::add_quadratic(QuadraticConstraint c) {
  quadratic_.push_back(std::move(c));
  return *this;
}

DomainBuilder& DomainBuilder::add_cardinality(int k) {
  cardinality_.push_back(k);
  return *this;
}

MixedDomain DomainBuilder::build() const {
  if (next_slot_ + next_cont_ < 1) throw DimensionError("domain has no dimensions");
  MixedDomain d;
  d.d_disc_ = next_slot_;
  d.d_cont_ = next_cont_;
  d.variables_ = variables_;
  d.constraints_ = ConstraintSet(next_slot_);

  // auto-constraints from the encodings
  for (const Variable& v : variables_) {
    if (v.kind == VariableKind::Integer) {
      const std::uint64_t width = static_cast<std::uint64_t>(v.int_hi - v.int_lo) + 1;
      if (v.slot_count > 0 && width != (std::uint64_t{1} << v.slot_count)) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(next_slot_);
        for (int j = 0; j < v.slot_count; ++j) a[v.slot_begin + j] = std::ldexp(1.0, j);
        d.constraints_.add_linear({std::move(a), static_cast<double>(v.int_hi - v.int_lo)});
      }
    } else if (v.kind == VariableKind::Categorical) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(next_slot_);
      a.segment(v.slot_begin, v.slot_count).setOnes();
      d.constraints_.add_linear({a, 1.0});
      d.constraints_.add_linear({-a, -1.0});
    }
  }
  for (const auto& c : linear_) {
    d.constraints_.add_linear(c);
    d.user_linear_.push_back(c);
  }
  for (const auto& c : quadratic_) {
    d.constraints_.add_quadratic(c);
    d.user_quadratic_.push_back(c);
  }
  for (int k : cardinality_) {
    LinearConstraint c{Eigen::VectorXd::Ones(next_slot_), static_cast<double>(k)};
    d.constraints_.add_linear(c);
    d.user_linear_.push_back(std::move(c));
  }
  return d;
}

MixedDomain make_plain_domain(int d_disc, int d_cont) {
  DomainBuilder b;
  for (int i = 0; i < d_disc; ++i) b.add_binary("b" + std::to_string(i));
  for (int i = 0; i < d_cont; ++i) b.add_continuous("c" + std::to_string(i));
  return b.build();
}

}  // namespace mivabo
