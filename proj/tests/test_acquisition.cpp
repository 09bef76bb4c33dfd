#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "mivabo/acquisition.hpp"
#include "mivabo/errors.hpp"

using namespace mivabo;

namespace {

FeatureExpansion expansion(int dd, int dc, int mc, std::uint64_t seed = 0) {
  FeatureConfig cfg;
  cfg.num_rff = mc;
  cfg.seed = seed;
  return {dd, dc, cfg};
}

// min over x_c in [0,1] of a 1-D problem: fine grid, then local descent
double min_1d(const BoxProblem& p) {
  double best = std::numeric_limits<double>::infinity();
  double arg = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double v = p.value(Eigen::VectorXd::Constant(1, i / 2000.0));
    if (v < best) {
      best = v;
      arg = i / 2000.0;
    }
  }
  return std::min(best, descend_from(p, Eigen::VectorXd::Constant(1, arg), MinimizeOptions{}).value);
}

double enumeration_oracle(const FeatureExpansion& fe, const Eigen::VectorXd& w, const MixedDomain& d) {
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << d.d_disc()); ++c) {
    const Bits x = gen::bits_of(c, d.d_disc());
    if (!d.constraints().satisfied(x)) continue;
    best = std::min(best, min_1d(reduce_continuous(fe, w, x)));
  }
  return best;
}

}  // namespace

TEST_CASE("weight view slices and re-concatenates") {
  const FeatureExpansion fe = expansion(3, 2, 4);
  Rng rng(1);
  const Eigen::VectorXd w = gen::normal_vec(rng, fe.total());
  const WeightView v(fe, w);
  CHECK(v.disc() == w.head(7));
  CHECK(v.cont() == w.segment(7, 4));
  CHECK(v.mixed()(2, 3) == w[7 + 4 + fe.mixed_index(2, 3)]);
  CHECK(v.concat() == w);
  CHECK_THROWS_AS(WeightView(fe, Eigen::VectorXd::Zero(3)), DimensionError);
}

TEST_CASE("discrete reduction is exact") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const FeatureExpansion fe = expansion(8, 3, 16, t);
    const Eigen::VectorXd w = gen::normal_vec(rng, fe.total());
    const Eigen::VectorXd xc = gen::unit_vec(rng, 3);
    const QuadraticForm qf = reduce_discrete(fe, w, xc);
    double worst = 0.0;
    for (std::uint64_t c = 0; c < 256; ++c) {
      const Bits x = gen::bits_of(c, 8);
      worst = std::max(worst, std::abs(qf.value(x) - w.dot(fe.eval_full(x, xc))));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("discrete reduction special cases") {
  const FeatureExpansion fe = expansion(4, 2, 5, 3);
  Rng rng(3);
  const Eigen::VectorXd xc = gen::unit_vec(rng, 2);
  const Eigen::VectorXd pc = fe.eval_continuous(xc);
  SUBCASE("no coupling") {
    Eigen::VectorXd w = gen::normal_vec(rng, fe.total());
    w.tail(fe.m_mixed()).setZero();
    const QuadraticForm qf = reduce_discrete(fe, w, xc);
    CHECK(qf.c0 == doctest::Approx(w[0] + w.segment(fe.cont_offset(), fe.m_cont()).dot(pc)));
    for (int i = 0; i < 4; ++i) CHECK(qf.lin[i] == w[1 + i]);
    CHECK(qf.quad(1, 3) == w[fe.pair_index(1, 3)]);
  }
  SUBCASE("single constant-row mixed weight") {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(fe.total());
    w[fe.mixed_offset() + fe.mixed_index(0, 2)] = 1.7;
    const QuadraticForm qf = reduce_discrete(fe, w, xc);
    CHECK(qf.c0 == doctest::Approx(1.7 * pc[2]));
    CHECK(qf.lin.isZero(0.0));
  }
}

TEST_CASE("continuous reduction is exact") {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const FeatureExpansion fe = expansion(5, 2, 16, t);
    const Eigen::VectorXd w = gen::normal_vec(rng, fe.total());
    const Bits xd = gen::bits(rng, 5);
    const BoxProblem p = reduce_continuous(fe, w, xd);
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd xc = gen::unit_vec(rng, 2);
      CHECK(std::abs(p.value(xc) - w.dot(fe.eval_full(xd, xc))) <= 1e-10);
    }
  }
}

TEST_CASE("continuous reduction at x_disc = 0 keeps only the constant row") {
  const FeatureExpansion fe = expansion(3, 1, 4, 5);
  Rng rng(5);
  const Eigen::VectorXd w = gen::normal_vec(rng, fe.total());
  const BoxProblem p = reduce_continuous(fe, w, Bits(3, 0));
  const WeightView v(fe, w);
  const Eigen::VectorXd eff = v.cont() + v.mixed().row(0).transpose();
  const Eigen::VectorXd xc = Eigen::VectorXd::Constant(1, 0.37);
  CHECK(p.value(xc) == doctest::Approx(w[0] + eff.dot(fe.eval_continuous(xc))).epsilon(1e-13));
}

TEST_CASE("alternation on decoupled objectives") {
  Rng rng(6);
  BoLoopConfig cfg;
  SUBCASE("pure discrete") {
    const FeatureExpansion fe = expansion(6, 1, 4);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(fe.total());
    w.head(fe.m_disc()) = gen::normal_vec(rng, fe.m_disc());
    DomainBuilder b;
    for (int i = 0; i < 6; ++i) b.add_binary("b" + std::to_string(i));
    b.add_continuous("c").add_cardinality(3);
    const MixedDomain d = b.build();
    const AlternationResult r = alternate(fe, w, d, cfg, rng);
    const double exact = solve_exhaustive(reduce_discrete(fe, w, Eigen::VectorXd::Zero(1)), d.constraints()).value;
    CHECK(r.value == doctest::Approx(exact).epsilon(1e-12));
    CHECK(r.rounds <= 2);
  }
  SUBCASE("pure continuous") {
    const FeatureExpansion fe = expansion(2, 2, 8, 1);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(fe.total());
    w.segment(fe.cont_offset(), fe.m_cont()) = gen::normal_vec(rng, fe.m_cont());
    const MixedDomain d = make_plain_domain(2, 2);
    const AlternationResult r = alternate(fe, w, d, cfg, rng);
    MinimizeOptions o;
    o.restarts = 50;
    const double ref = minimize(reduce_continuous(fe, w, Bits(2, 0)), rng, o).value;
    CHECK(r.value <= ref + 1e-6);
  }
}

TEST_CASE("alternation on coupled objectives") {
  Rng rng(7);
  BoLoopConfig cfg;
  int close = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    const FeatureExpansion fe = expansion(6, 1, 16, 50 + t);
    const Eigen::VectorXd w = gen::normal_vec(rng, fe.total());
    DomainBuilder b;
    for (int i = 0; i < 6; ++i) b.add_binary("b" + std::to_string(i));
    b.add_continuous("c");
    if (t % 2) b.add_cardinality(3);
    const MixedDomain d = b.build();
    const AlternationResult r = alternate(fe, w, d, cfg, rng);
    CHECK(d.is_feasible(r.x_disc, r.x_cont));
    CHECK(r.value == doctest::Approx(acquisition_value(fe, w, r.x_disc, r.x_cont)).epsilon(1e-12));
    REQUIRE(r.start_values.size() == 5);
    for (double s : r.start_values) CHECK(r.value <= s + 1e-12);
    close += r.value <= enumeration_oracle(fe, w, d) + 1e-3 ? 1 : 0;
  }
  CHECK(close >= trials * 9 / 10);
}

TEST_CASE("loop config validation and JSON") {
  BoLoopConfig c;
  c.T = 3;
  c.n_init = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.T = 10;
  c.n_init = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.n_init = 2;
  c.scaling = ScalingMode::Theory;
  c.optimizer = AcquisitionOptimizer::Anneal;
  c.seed = 99;
  const BoLoopConfig back = BoLoopConfig::from_json(c.to_json());
  CHECK(back.T == 10);
  CHECK(back.n_init == 2);
  CHECK(back.scaling == ScalingMode::Theory);
  CHECK(back.optimizer == AcquisitionOptimizer::Anneal);
  CHECK(back.seed == 99);
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(BoLoopConfig::from_json(nlohmann::json{{"optimizer", "magic"}}), ConfigError);
}

TEST_CASE("BO loop") {
  SUBCASE("budget equal to n_init is random search") {
    const MixedDomain d = make_plain_domain(3, 2);
    const FeatureExpansion fe = expansion(3, 2, 4);
    BoLoopConfig cfg;
    cfg.T = 5;
    cfg.n_init = 5;
    cfg.seed = 3;
    int calls = 0;
    const BoResult r = run_bo([&](BitsView, const Eigen::VectorXd& x) { ++calls; return x.sum(); }, d, fe, cfg);
    CHECK(calls == 5);
    REQUIRE(r.trace.size() == 5);
    // the same draws as the feasible sampler with the same seed
    Rng rng(3);
    for (const auto& rec : r.trace) {
      auto [b, c] = d.sample_feasible(rng, cfg.max_sample_tries);
      CHECK(rec.x_disc == b);
      CHECK(rec.x_cont == c);
    }
  }

  SUBCASE("noiseless linear objective reaches the optimum") {
    int hits = 0;
    for (int seed = 0; seed < 20; ++seed) {
      const FeatureExpansion fe = expansion(2, 2, 4, 200 + seed);
      Rng wr(300 + seed);
      const Eigen::VectorXd w = gen::normal_vec(wr, fe.total());
      const MixedDomain d = make_plain_domain(2, 2);
      double oracle = std::numeric_limits<double>::infinity();
      MinimizeOptions o;
      o.restarts = 50;
      for (std::uint64_t c = 0; c < 4; ++c) {
        oracle = std::min(oracle, minimize(reduce_continuous(fe, w, gen::bits_of(c, 2)), wr, o).value);
      }
      BoLoopConfig cfg;
      cfg.T = 30;
      cfg.beta = 1e4;
      cfg.seed = seed;
      const BoResult r =
          run_bo([&](BitsView x, const Eigen::VectorXd& c) { return w.dot(fe.eval_full(x, c)); }, d, fe, cfg);
      hits += r.trace.back().incumbent <= oracle + 1e-2 ? 1 : 0;
    }
    CHECK(hits >= 18);
  }

  SUBCASE("trace invariants on a constrained domain") {
    DomainBuilder b;
    for (int i = 0; i < 8; ++i) b.add_binary("b" + std::to_string(i));
    b.add_continuous("c0").add_continuous("c1").add_cardinality(2);
    const MixedDomain d = b.build();
    const FeatureExpansion fe = expansion(8, 2, 8, 1);
    Rng wr(1);
    const Eigen::VectorXd w = gen::normal_vec(wr, fe.total());
    auto f = [&](BitsView x, const Eigen::VectorXd& c) { return w.dot(fe.eval_full(x, c)); };
    BoLoopConfig cfg;
    cfg.T = 25;
    cfg.seed = 11;
    std::vector<TraceRecord> seen;
    const BoResult r = run_bo(f, d, fe, cfg, [&](const TraceRecord& rec) { seen.push_back(rec); });
    REQUIRE(r.trace.size() == 25);
    CHECK(seen.size() == 25);
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      const auto& rec = r.trace[i];
      CHECK(rec.t == static_cast<int>(i) + 1);
      CHECK(rec.feasible);
      CHECK(d.is_feasible(rec.x_disc, rec.x_cont));
      CHECK(rec.violations == 0);
      if (i) CHECK(rec.incumbent <= r.trace[i - 1].incumbent);
    }
    CHECK(d.is_feasible(r.mean_argmin_disc, r.mean_argmin_cont));

    const BoResult again = run_bo(f, d, fe, cfg);
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      CHECK(again.trace[i].x_disc == r.trace[i].x_disc);
      CHECK((again.trace[i].x_cont - r.trace[i].x_cont).norm() <= 1e-12);
    }
  }

  SUBCASE("failing objective keeps the records produced so far") {
    const MixedDomain d = make_plain_domain(2, 1);
    const FeatureExpansion fe = expansion(2, 1, 4);
    BoLoopConfig cfg;
    cfg.T = 10;
    int calls = 0;
    std::vector<TraceRecord> seen;
    auto f = [&](BitsView, const Eigen::VectorXd&) -> double {
      if (++calls == 7) throw std::runtime_error("evaluation crashed");
      return 1.0;
    };
    CHECK_THROWS_AS(run_bo(f, d, fe, cfg, [&](const TraceRecord& rec) { seen.push_back(rec); }), std::runtime_error);
    CHECK(seen.size() == 6);
  }

  SUBCASE("annealing acquisition optimizer returns feasible queries") {
    DomainBuilder b;
    for (int i = 0; i < 6; ++i) b.add_binary("b" + std::to_string(i));
    b.add_continuous("c").add_cardinality(1);
    const MixedDomain d = b.build();
    const FeatureExpansion fe = expansion(6, 1, 4);
    BoLoopConfig cfg;
    cfg.T = 12;
    cfg.optimizer = AcquisitionOptimizer::Anneal;
    const BoResult r = run_bo([](BitsView x, const Eigen::VectorXd& c) { return c[0] - x[0]; }, d, fe, cfg);
    for (const auto& rec : r.trace) CHECK(rec.feasible);
  }
}

TEST_CASE("incumbent bookkeeping") {
  std::vector<TraceRecord> trace;
  auto rec = [](double y, bool ok) {
    TraceRecord r;
    r.y = y;
    r.feasible = ok;
    return r;
  };
  push_record(trace, rec(5.0, false));
  CHECK(std::isinf(trace.back().incumbent));
  CHECK(trace.back().violations == 1);
  push_record(trace, rec(3.0, true));
  push_record(trace, rec(-9.0, false));
  push_record(trace, rec(4.0, true));
  CHECK(trace.back().incumbent == 3.0);
  CHECK(trace.back().violations == 2);
}
