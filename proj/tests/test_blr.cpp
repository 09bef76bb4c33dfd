#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "gen.hpp"
#include "mivabo/blr.hpp"
#include "mivabo/errors.hpp"

using namespace mivabo;

namespace {

struct Dense {
  Eigen::MatrixXd S;
  Eigen::VectorXd m;
};

Dense dense_posterior(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double alpha, double beta) {
  const Eigen::Index M = Phi.cols();
  Dense d;
  d.S = alpha * Eigen::MatrixXd::Identity(M, M) + beta * Phi.transpose() * Phi;
  d.m = d.S.fullPivLu().solve(beta * Phi.transpose() * y);
  return d;
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

TEST_CASE("prior state") {
  BayesianLinearRegression post(5, 2.0, 3.0);
  CHECK(post.mean().isZero(0.0));
  CHECK(post.precision().isApprox(2.0 * Eigen::MatrixXd::Identity(5, 5)));
  CHECK(post.num_obs() == 0);
}

TEST_CASE("single observation closed form") {
  BayesianLinearRegression post(3);
  post.update(Eigen::Vector3d(1, 0, 0), 1.0);
  Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
  S(0, 0) = 2.0;
  CHECK(post.precision().isApprox(S));
  CHECK(post.mean().isApprox(Eigen::Vector3d(0.5, 0, 0)));
}

TEST_CASE("batch updates match the dense computation") {
  Rng rng(1);
  for (double beta : {1.0, 25.0}) {
    const int M = 30;
    const int n = 200;
    BayesianLinearRegression post(M, 1.5, beta);
    Eigen::MatrixXd Phi(n, M);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      Phi.row(i) = gen::normal_vec(rng, M).transpose();
      y[i] = gen::uniform(rng, -3.0, 3.0);
      post.update(Phi.row(i).transpose(), y[i]);
      if (i == 49) {
        const Dense d = dense_posterior(Phi.topRows(50), y.head(50), 1.5, beta);
        CHECK(rel(post.mean(), d.m) < 1e-8);
        CHECK(rel(post.precision(), d.S) < 1e-8);
      }
    }
    const Dense d = dense_posterior(Phi, y, 1.5, beta);
    CHECK(rel(post.mean(), d.m) < 1e-9);
    CHECK(rel(post.precision(), d.S) < 1e-10);
    CHECK(rel(post.chol() * post.chol().transpose(), d.S) < 1e-9);
    // S m = beta Phi^T y
    CHECK(rel(post.precision() * post.mean(), post.weighted_targets()) < 1e-8);
  }
}

TEST_CASE("repeated observation along one direction approaches least squares") {
  BayesianLinearRegression post(2);
  const Eigen::Vector2d phi(3.0, 4.0);
  for (int i = 0; i < 100000; ++i) post.update(phi, 2.0);
  // limit: phi * y / |phi|^2
  CHECK((post.mean() - phi * 2.0 / 25.0).norm() < 1e-4);
}

TEST_CASE("exchangeability") {
  Rng rng(2);
  const int M = 12;
  std::vector<Eigen::VectorXd> phis;
  std::vector<double> ys;
  for (int i = 0; i < 80; ++i) {
    phis.push_back(gen::normal_vec(rng, M));
    ys.push_back(gen::uniform(rng, -1.0, 1.0));
  }
  std::vector<int> order(80);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  BayesianLinearRegression a(M), b(M);
  for (int i = 0; i < 80; ++i) {
    a.update(phis[i], ys[i]);
    b.update(phis[order[i]], ys[order[i]]);
  }
  CHECK((a.mean() - b.mean()).norm() < 1e-10);
  CHECK((a.precision() - b.precision()).norm() < 1e-10);
}

TEST_CASE("rank-one path agrees with refactorization") {
  Rng rng(3);
  const int M = 40;
  BayesianLinearRegression post(M);
  for (int i = 0; i < 200; ++i) post.update(gen::normal_vec(rng, M), gen::uniform(rng, -1, 1));
  const Eigen::VectorXd dense_m = post.precision().llt().solve(post.weighted_targets());
  CHECK((post.mean() - dense_m).norm() <= 1e-9 * std::max(1.0, dense_m.norm()));

  Eigen::MatrixXd L = Eigen::MatrixXd(Eigen::MatrixXd::Identity(4, 4) * 2.0);
  const Eigen::Vector4d v(1, -2, 0.5, 3);
  cholesky_rank_one_update(L, v);
  const Eigen::Matrix4d expect = 4.0 * Eigen::Matrix4d::Identity() + v * v.transpose();
  CHECK((L * L.transpose() - expect).norm() < 1e-12);
}

TEST_CASE("dimension checks") {
  BayesianLinearRegression post(3);
  CHECK_THROWS_AS(post.update(Eigen::VectorXd::Zero(4), 0.0), DimensionError);
}

TEST_CASE("Thompson draws") {
  Rng rng(4);
  SUBCASE("prior covariance at unit scale") {
    const int M = 6;
    BayesianLinearRegression post(M);
    const int n = 100000;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(M, M);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(M);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd w = post.sample_weights(1.0, rng);
      mean += w;
      acc += w * w.transpose();
    }
    mean /= n;
    const Eigen::MatrixXd cov = acc / n - mean * mean.transpose();
    CHECK(rel(cov, Eigen::MatrixXd::Identity(M, M)) < 0.05);
  }
  SUBCASE("tiny scale collapses onto the mean") {
    BayesianLinearRegression post(4);
    for (int i = 0; i < 10; ++i) post.update(gen::normal_vec(rng, 4), 1.0);
    CHECK((post.sample_weights(1e-14, rng) - post.mean()).norm() < 1e-6);
  }
}

TEST_CASE("scaling factor") {
  CHECK(scaling_factor(645, 100, 0.1, ScalingMode::Unit) == 1.0);
  CHECK(scaling_factor(1, 3, 0.5, ScalingMode::Unit) == 1.0);
  CHECK(scaling_factor(1, static_cast<int>(std::exp(1.0)) + 0, std::exp(-1.0), ScalingMode::Theory) ==
        doctest::Approx(24.0 * std::log(2.0)));
  const double s = scaling_factor(645, 100, 0.1, ScalingMode::Theory);
  CHECK(s == doctest::Approx(24.0 * 645 * std::log(100.0) * std::log(10.0)).epsilon(1e-15));
  // direct evaluation: 24 * 645 * 4.60517 * 2.30259 = 164146.77
  CHECK(s == doctest::Approx(164146.7655004).epsilon(1e-12));
  CHECK(scaling_factor(10, 200, 0.1, ScalingMode::Theory) > scaling_factor(10, 100, 0.1, ScalingMode::Theory));
  CHECK(scaling_factor(10, 100, 0.01, ScalingMode::Theory) > scaling_factor(10, 100, 0.1, ScalingMode::Theory));
  CHECK_THROWS_AS(scaling_factor(10, 1, 0.1, ScalingMode::Theory), ConfigError);
  CHECK_THROWS_AS(scaling_factor(10, 100, 1.0, ScalingMode::Theory), ConfigError);
  CHECK(parse_scaling_mode("theory") == ScalingMode::Theory);
  CHECK_THROWS_AS(parse_scaling_mode("huge"), ConfigError);
}

TEST_CASE("predictive distribution") {
  Rng rng(5);
  SUBCASE("prior predictive") {
    BayesianLinearRegression post(3);
    const auto p = post.predict(Eigen::Vector3d(0, 1, 0));
    CHECK(p.mean == 0.0);
    CHECK(p.variance == doctest::Approx(2.0));
  }
  SUBCASE("matches the linear-kernel GP predictive") {
    const int M = 8;
    const int n = 25;
    const double alpha = 2.0;
    const double beta = 4.0;
    BayesianLinearRegression post(M, alpha, beta);
    Eigen::MatrixXd Phi(n, M);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      Phi.row(i) = gen::normal_vec(rng, M).transpose();
      y[i] = gen::uniform(rng, -2, 2);
      post.update(Phi.row(i).transpose(), y[i]);
    }
    // GP with k(a, b) = a^T b / alpha and noise 1/beta
    const Eigen::MatrixXd K = Phi * Phi.transpose() / alpha + Eigen::MatrixXd::Identity(n, n) / beta;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd phi = gen::normal_vec(rng, M);
      const Eigen::VectorXd k = Phi * phi / alpha;
      const double mean = k.dot(ldlt.solve(y));
      const double var = phi.squaredNorm() / alpha - k.dot(ldlt.solve(k)) + 1.0 / beta;
      const auto p = post.predict(phi);
      CHECK(std::abs(p.mean - mean) < 1e-8);
      CHECK(std::abs(p.variance - var) < 1e-8);
    }
  }
  SUBCASE("variance never grows after observing the same point") {
    BayesianLinearRegression post(5);
    for (int t = 0; t < 30; ++t) {
      const Eigen::VectorXd phi = gen::normal_vec(rng, 5);
      const double before = post.predict(phi).variance;
      post.update(phi, gen::uniform(rng, -1, 1));
      CHECK(post.predict(phi).variance <= before + 1e-12);
    }
  }
}

TEST_CASE("posterior contracts towards the generating weights") {
  const int M = 15;
  double err50 = 0.0;
  double err500 = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const Eigen::VectorXd w = gen::normal_vec(rng, M);
    BayesianLinearRegression post(M, 1.0, 4.0);
    std::normal_distribution<double> noise(0.0, 0.5);
    for (int t = 1; t <= 500; ++t) {
      const Eigen::VectorXd phi = gen::normal_vec(rng, M);
      post.update(phi, w.dot(phi) + noise(rng));
      if (t == 50) err50 += (post.mean() - w).norm();
    }
    err500 += (post.mean() - w).norm();
  }
  CHECK(err500 < err50);
}

TEST_CASE("checkpoint round trip") {
  Rng rng(6);
  BayesianLinearRegression post(7, 0.5, 2.0);
  for (int i = 0; i < 30; ++i) post.update(gen::normal_vec(rng, 7), gen::uniform(rng, -1, 1));
  std::stringstream ss;
  post.save(ss);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "MVBP");
  CHECK(bytes.size() == 4 + 4 + 8 + 8 + 8 + 8 + 7 * 8 + 49 * 8);
  const BayesianLinearRegression back = BayesianLinearRegression::load(ss);
  CHECK(back.alpha() == 0.5);
  CHECK(back.beta() == 2.0);
  CHECK(back.num_obs() == 30);
  CHECK(back.mean() == post.mean());
  CHECK(back.precision() == post.precision());
  Rng r1(9), r2(9);
  CHECK((back.sample_weights(1.0, r1) - post.sample_weights(1.0, r2)).norm() < 1e-10);

  std::stringstream junk("XXXX");
  CHECK_THROWS(BayesianLinearRegression::load(junk));
}
