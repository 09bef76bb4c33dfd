#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "mivabo/discrete_opt.hpp"
#include "mivabo/errors.hpp"
#include "mivabo/features.hpp"

using namespace mivabo;

namespace {

// brute force written independently of the solver: value and lexicographic
// order computed from scratch
struct Brute {
  double value = std::numeric_limits<double>::infinity();
  Bits x;
};

double eval_qf(const QuadraticForm& qf, const Bits& x) {
  double v = qf.c0;
  const int n = qf.dim();
  for (int i = 0; i < n; ++i) {
    if (!x[i]) continue;
    v += qf.lin[i];
    for (int j = i + 1; j < n; ++j) v += x[j] ? qf.quad(i, j) : 0.0;
  }
  return v;
}

Brute brute(const QuadraticForm& qf, const ConstraintSet& cs) {
  Brute b;
  const int n = qf.dim();
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << n); ++c) {
    const Bits x = gen::bits_of(c, n);
    if (!cs.satisfied(x)) continue;
    const double v = eval_qf(qf, x);
    if (v < b.value || (v == b.value && x < b.x)) {
      b.value = v;
      b.x = x;
    }
  }
  return b;
}

}  // namespace

TEST_CASE("QuadraticForm value matches the discrete block of the feature map") {
  Rng rng(1);
  const FeatureExpansion fe(6, 1, FeatureConfig{});
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd u = gen::normal_vec(rng, fe.m_disc());
    QuadraticForm qf(6);
    qf.c0 = u[0];
    for (int i = 0; i < 6; ++i) qf.lin[i] = u[1 + i];
    for (int i = 0; i < 6; ++i) {
      for (int j = i + 1; j < 6; ++j) qf.quad(i, j) = u[fe.pair_index(i, j)];
    }
    const Bits x = gen::bits(rng, 6);
    CHECK(qf.value(x) == doctest::Approx(u.dot(fe.eval_discrete(x))).epsilon(1e-14));
  }
}

TEST_CASE("separable objective") {
  const int n = 7;
  QuadraticForm qf(n);
  qf.c0 = 0.5;
  qf.lin.setConstant(-1.0);
  for (SolveMode mode : {SolveMode::Exhaustive, SolveMode::BranchAndBound, SolveMode::Anneal}) {
    SolveOptions o;
    o.mode = mode;
    const SolveResult r = solve(qf, ConstraintSet(n), o);
    CHECK(r.x == Bits(n, 1));
    CHECK(r.value == doctest::Approx(0.5 - n));
  }
  ConstraintSet cs(n);
  cs.add_cardinality(2);
  for (SolveMode mode : {SolveMode::Exhaustive, SolveMode::BranchAndBound, SolveMode::Anneal}) {
    SolveOptions o;
    o.mode = mode;
    const SolveResult r = solve(qf, cs, o);
    int ones = 0;
    for (auto b : r.x) ones += b;
    CHECK(ones == 2);
    CHECK(r.value == doctest::Approx(0.5 - 2));
  }
  // ties break to the lexicographically smallest vector
  SolveOptions o;
  o.mode = SolveMode::BranchAndBound;
  CHECK(solve(qf, cs, o).x == Bits{0, 0, 0, 0, 0, 1, 1});
  o.mode = SolveMode::Exhaustive;
  CHECK(solve(qf, cs, o).x == Bits{0, 0, 0, 0, 0, 1, 1});
}

TEST_CASE("exact solvers agree with brute force") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = gen::integer(rng, 2, 12);
    const QuadraticForm qf = gen::quadratic_form(rng, n, trial % 3 == 0);
    const ConstraintSet cs = trial % 2 ? gen::constraints(rng, n) : ConstraintSet(n);
    const Brute b = brute(qf, cs);
    const SolveResult ex = solve_exhaustive(qf, cs);
    std::vector<double> history;
    const SolveResult bb = solve_branch_and_bound(qf, cs, 0, &history);
    INFO(dump_instance(qf, cs));
    CHECK(ex.value == b.value);
    CHECK(ex.x == b.x);
    CHECK(bb.value == b.value);
    CHECK(bb.x == b.x);
    CHECK(bb.proven_optimal);
    CHECK(cs.satisfied(bb.x));
    CHECK(std::abs(qf.value(bb.x) - bb.value) <= 1e-12);
    CHECK(bb.nodes <= (long{1} << (n + 1)));
    for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1]);
  }
}

TEST_CASE("lower bound") {
  Rng rng(3);
  SUBCASE("fully fixed equals the value") {
    for (int t = 0; t < 50; ++t) {
      const QuadraticForm qf = gen::quadratic_form(rng, 6);
      const Bits x = gen::bits(rng, 6);
      std::vector<std::int8_t> fixed(x.begin(), x.end());
      CHECK(lower_bound(qf, fixed) == doctest::Approx(qf.value(x)).epsilon(1e-14));
    }
  }
  SUBCASE("nonnegative coefficients, nothing fixed") {
    QuadraticForm qf(4);
    qf.c0 = 1.25;
    qf.lin << 1, 2, 0, 3;
    qf.quad(0, 3) = 2.0;
    std::vector<std::int8_t> free(4, -1);
    CHECK(lower_bound(qf, free) == 1.25);
  }
  SUBCASE("admissible over all completions") {
    for (int t = 0; t < 100; ++t) {
      const int n = gen::integer(rng, 2, 10);
      const QuadraticForm qf = gen::quadratic_form(rng, n);
      std::vector<std::int8_t> fixed(n, -1);
      const int prefix = gen::integer(rng, 0, n);
      for (int i = 0; i < prefix; ++i) fixed[i] = static_cast<std::int8_t>(gen::integer(rng, 0, 1));
      double best = std::numeric_limits<double>::infinity();
      for (std::uint64_t c = 0; c < (std::uint64_t{1} << (n - prefix)); ++c) {
        Bits x(n);
        for (int i = 0; i < prefix; ++i) x[i] = static_cast<std::uint8_t>(fixed[i]);
        for (int i = prefix; i < n; ++i) x[i] = static_cast<std::uint8_t>((c >> (i - prefix)) & 1U);
        best = std::min(best, qf.value(x));
      }
      CHECK(lower_bound(qf, fixed) <= best + 1e-12);
    }
  }
}

TEST_CASE("infeasible and budget errors") {
  ConstraintSet cs(3);
  cs.add_linear({Eigen::Vector3d(-1, -1, -1), -4.0});  // sum >= 4 with three bits
  const QuadraticForm qf(3);
  CHECK_THROWS_AS(solve_exhaustive(qf, cs), Infeasible);
  CHECK_THROWS_AS(solve_branch_and_bound(qf, cs), Infeasible);
  SolveOptions o;
  o.mode = SolveMode::Anneal;
  CHECK_THROWS_AS(solve(qf, cs, o), BudgetExhausted);
  CHECK_THROWS_AS(solve_exhaustive(QuadraticForm(26), ConstraintSet(26)), ConfigError);
}

TEST_CASE("default mode selection") {
  CHECK(default_solve_mode(16) == SolveMode::Exhaustive);
  CHECK(default_solve_mode(17) == SolveMode::BranchAndBound);
  CHECK(default_solve_mode(40) == SolveMode::BranchAndBound);
  CHECK(default_solve_mode(41) == SolveMode::Anneal);
  CHECK(parse_solve_mode("branch_and_bound") == SolveMode::BranchAndBound);
  CHECK_THROWS_AS(parse_solve_mode("gurobi"), ConfigError);
}

TEST_CASE("annealing") {
  SUBCASE("separable instances match exhaustive") {
    int hits = 0;
    for (int seed = 0; seed < 100; ++seed) {
      Rng rng(1000 + seed);
      QuadraticForm qf(10);
      for (int i = 0; i < 10; ++i) qf.lin[i] = gen::uniform(rng, -1, 1);
      AnnealSchedule s;
      s.steps = 10000;
      const AnnealResult r = anneal_run(qf, ConstraintSet(10), s, rng);
      hits += std::abs(r.value - solve_exhaustive(qf, ConstraintSet(10)).value) < 1e-12 ? 1 : 0;
    }
    CHECK(hits >= 95);
  }
  SUBCASE("zero temperature never goes uphill") {
    Rng rng(5);
    const QuadraticForm qf = gen::quadratic_form(rng, 12);
    AnnealSchedule s;
    s.t0 = 0.0;
    s.steps = 2000;
    std::vector<double> energies;
    (void)anneal_run(qf, ConstraintSet(12), s, rng, std::nullopt, &energies);
    REQUIRE(energies.size() == 2000);
    for (std::size_t i = 1; i < energies.size(); ++i) CHECK(energies[i] <= energies[i - 1]);
  }
  SUBCASE("returned points are feasible") {
    Rng rng(6);
    for (int t = 0; t < 30; ++t) {
      const QuadraticForm qf = gen::quadratic_form(rng, 10);
      ConstraintSet cs(10);
      cs.add_cardinality(2);
      const AnnealResult r = anneal_run(qf, cs, AnnealSchedule{}, rng);
      REQUIRE(r.found_feasible);
      CHECK(cs.satisfied(r.x));
      CHECK(std::abs(qf.value(r.x) - r.value) <= 1e-12);
    }
  }
}

TEST_CASE("branch and bound handles mid-size instances") {
  Rng rng(7);
  for (int t = 0; t < 3; ++t) {
    const QuadraticForm qf = gen::quadratic_form(rng, 22);
    ConstraintSet cs(22);
    cs.add_cardinality(5);
    const SolveResult bb = solve_branch_and_bound(qf, cs);
    const SolveResult ex = solve_exhaustive(qf, cs);
    CHECK(bb.value == ex.value);
    CHECK(bb.x == ex.x);
  }
}

TEST_CASE("all-zero objective returns the first feasible vector quickly") {
  ConstraintSet cs(30);
  cs.add_linear({Eigen::VectorXd::Constant(30, -1.0), -3.0});  // at least three ones
  const SolveResult r = solve_branch_and_bound(QuadraticForm(30), cs);
  CHECK(cs.satisfied(r.x));
  CHECK(r.nodes < 1000);
}
