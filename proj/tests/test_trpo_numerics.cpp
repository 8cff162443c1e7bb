#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "errors.hpp"
#include "trpo/trpo.hpp"

using namespace dcrl;

namespace {

GaussianPolicy random_policy(int obs, int act, std::vector<int> hidden, std::uint64_t seed) {
  GaussianPolicy p(obs, act, hidden);
  std::mt19937_64 rng(seed);
  p.initialize(rng);
  std::normal_distribution<double> n(0.0, 0.5);
  for (Eigen::Index i = 0; i < p.mean_net().num_params(); ++i) p.mean_net().params()(i) += n(rng);
  for (Eigen::Index i = 0; i < p.log_std().size(); ++i) p.log_std()(i) = -0.5 + 0.3 * n(rng);
  return p;
}

Batch random_batch(const GaussianPolicy& p, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Batch b;
  b.obs.resize(p.obs_dim(), n);
  b.actions.resize(p.act_dim(), n);
  b.log_prob_old.resize(n);
  Eigen::VectorXd adv(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < p.obs_dim(); ++i) b.obs(i, j) = g(rng);
    const auto s = p.sample(b.obs.col(j), rng);
    b.actions.col(j) = s.action;
    b.log_prob_old(j) = s.log_prob + 0.1 * g(rng);  // behaviour policy slightly off
    adv(j) = g(rng);
  }
  b.advantages = standardize(adv);
  b.returns = Eigen::VectorXd::Zero(n);
  return b;
}

GaussianPolicy with_params(const GaussianPolicy& p, const Eigen::VectorXd& flat) {
  GaussianPolicy q = p;
  q.set_flat_params(flat);
  return q;
}

Eigen::MatrixXd dense(const LinearOperator& op, Eigen::Index n) {
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) m.col(j) = op(Eigen::VectorXd::Unit(n, j));
  return m;
}

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  return m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

TrajectoryStep step(double r, double v, bool done) {
  TrajectoryStep s;
  s.reward = r;
  s.value = v;
  s.done = done;
  return s;
}

}  // namespace

TEST_SUITE("trpo_numerics") {

TEST_CASE("gaussian log density and KL closed forms") {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  CHECK(gaussian_log_prob(zero, zero, zero) == doctest::Approx(-2.0 * std::log(2.0 * std::numbers::pi)));
  CHECK(gaussian_log_prob(zero, zero, zero) == doctest::Approx(-3.6757541328186907));
  CHECK(gaussian_kl(zero, zero, Eigen::VectorXd::Ones(4), zero) == doctest::Approx(2.0));
  // KL(N(0,1) || N(0, e^2)) = 1 + 1/(2 e^2) - 1/2
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  CHECK(gaussian_kl(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), one) ==
        doctest::Approx(0.5 + 0.5 * std::exp(-2.0)));
}

TEST_CASE("surrogate and KL at the old policy") {
  const GaussianPolicy p = random_policy(3, 2, {4}, 1);
  Batch b = random_batch(p, 50, 2);
  b.log_prob_old = p.log_prob(b.obs, b.actions);
  const SurrogateKl sk = surrogate_and_kl(p, p, b);
  CHECK(std::abs(sk.surrogate) < 1e-12);  // mean of standardized advantages
  CHECK(std::abs(sk.kl) < 1e-12);
  b.advantages *= 2.0;
  b.advantages.array() += 0.3;
  const double s1 = surrogate_and_kl(p, p, b).surrogate;
  CHECK(s1 == doctest::Approx(0.3));
}

TEST_CASE("batch KL matches per-sample closed form") {
  const GaussianPolicy p = random_policy(3, 2, {4}, 3);
  const GaussianPolicy q = random_policy(3, 2, {4}, 4);
  const Batch b = random_batch(p, 20, 5);
  double expect = 0.0;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    expect += gaussian_kl(p.mean(b.obs.col(j)), p.log_std(), q.mean(b.obs.col(j)), q.log_std());
  }
  CHECK(surrogate_and_kl(p, q, b).kl == doctest::Approx(expect / 20.0).epsilon(1e-12));
}

TEST_CASE("surrogate gradient matches central differences") {
  const GaussianPolicy p = random_policy(2, 1, {1}, 7);
  REQUIRE(p.num_params() == 6);
  const Batch b = random_batch(p, 40, 8);
  const Eigen::VectorXd g = surrogate_gradient(p, b);
  const Eigen::VectorXd theta = p.flat_params();
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(theta.size(), i) * h;
    const double fd = (surrogate_and_kl(p, with_params(p, theta + e), b).surrogate -
                       surrogate_and_kl(p, with_params(p, theta - e), b).surrogate) /
                      (2.0 * h);
    CHECK(std::abs(g(i) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("Fisher-vector product equals the Hessian of the mean KL") {
  const GaussianPolicy p = random_policy(3, 2, {4}, 11);
  REQUIRE(p.num_params() == 28);
  const Batch b = random_batch(p, 30, 12);
  const FisherOperator fisher(p, b.obs);
  const Eigen::Index n = p.num_params();
  const Eigen::MatrixXd f = dense(std::cref(fisher), n);

  const Eigen::VectorXd theta = p.flat_params();
  auto kl = [&](const Eigen::VectorXd& d) { return surrogate_and_kl(p, with_params(p, theta + d), b).kl; };
  const double h = 1e-4;
  Eigen::MatrixXd hess(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const Eigen::VectorXd ei = Eigen::VectorXd::Unit(n, i) * h;
      const Eigen::VectorXd ej = Eigen::VectorXd::Unit(n, j) * h;
      hess(i, j) = hess(j, i) =
          (kl(ei + ej) - kl(ei - ej) - kl(-ei + ej) + kl(-ei - ej)) / (4.0 * h * h);
    }
  }
  CHECK((f - f.transpose()).norm() < 1e-12 * f.norm());
  CHECK((f - hess).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, hess.cwiseAbs().maxCoeff()));
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(f).eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("conjugate gradient") {
  SUBCASE("identity converges in one step") {
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
    std::vector<double> norms;
    const auto x = conjugate_gradient([](const Eigen::VectorXd& v) { return v; }, b, 10, 0.0, 1e-10, &norms);
    CHECK((x - b).norm() < 1e-14);
    CHECK(norms.size() == 2);
  }
  SUBCASE("diagonal hand case") {
    Eigen::Matrix2d a;
    a << 2, 0, 0, 4;
    const auto x = conjugate_gradient([&](const Eigen::VectorXd& v) { return Eigen::VectorXd(a * v); },
                                      Eigen::Vector2d(2, 4), 10, 0.0);
    CHECK(x(0) == doctest::Approx(1.0));
    CHECK(x(1) == doctest::Approx(1.0));
  }
  SUBCASE("damping shifts the spectrum") {
    const auto x = conjugate_gradient([](const Eigen::VectorXd& v) { return Eigen::VectorXd(v); },
                                      Eigen::Vector2d(1.1, 2.2), 10, 0.1);
    CHECK(x(0) == doctest::Approx(1.0));
    CHECK(x(1) == doctest::Approx(2.0));
  }
  SUBCASE("random SPD systems against a direct solve") {
    std::mt19937_64 rng(21);
    for (int n : {2, 5, 10, 20}) {
      const Eigen::MatrixXd a = random_spd(n, rng);
      const Eigen::VectorXd b = Eigen::VectorXd::Random(n);
      const Eigen::VectorXd direct = (a + 0.1 * Eigen::MatrixXd::Identity(n, n)).ldlt().solve(b);
      const Eigen::VectorXd x = conjugate_gradient(
          [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(a * v); }, b, 4 * n, 0.1, 1e-14);
      CHECK((x - direct).norm() <= 1e-8 * direct.norm());
    }
  }
  SUBCASE("energy norm of the error never increases") {
    std::mt19937_64 rng(22);
    const Eigen::MatrixXd a = random_spd(12, rng);
    const Eigen::VectorXd b = Eigen::VectorXd::Random(12);
    const Eigen::VectorXd exact = a.ldlt().solve(b);
    auto apply = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(a * v); };
    double prev = std::sqrt(exact.dot(a * exact));
    for (int k = 1; k <= 12; ++k) {
      const Eigen::VectorXd e = conjugate_gradient(apply, b, k, 0.0, 0.0) - exact;
      const double err = std::sqrt(e.dot(a * e));
      CHECK(err <= prev * (1.0 + 1e-9) + 1e-12);
      prev = err;
    }
  }
  SUBCASE("early stop once the residual is small") {
    std::vector<double> norms;
    conjugate_gradient([](const Eigen::VectorXd& v) { return Eigen::VectorXd(3.0 * v); },
                       Eigen::VectorXd::Ones(4), 10, 0.0, 1e-10, &norms);
    CHECK(norms.back() < 1e-10);
    CHECK(norms.size() < 11);
  }
  SUBCASE("non-finite operator output") {
    CHECK_THROWS_AS(conjugate_gradient([](const Eigen::VectorXd& v) { return Eigen::VectorXd(v * NAN); },
                                       Eigen::VectorXd::Ones(3), 10, 0.0),
                    Error);
  }
}

TEST_CASE("generalized advantage estimation") {
  SUBCASE("single terminal step") {
    Trajectory t;
    t.steps = {step(1.0, 0.25, true)};
    const GaeResult g = compute_gae(t, 0.99, 0.98);
    CHECK(g.advantages(0) == doctest::Approx(0.75));
    CHECK(g.returns(0) == doctest::Approx(1.0));
  }
  SUBCASE("three-step hand oracle") {
    Trajectory t;
    t.steps = {step(1, 0.5, false), step(2, 1.0, false), step(3, 1.5, true)};
    const GaeResult g = compute_gae(t, 0.99, 0.98);
    CHECK(g.advantages(2) == doctest::Approx(1.5));
    CHECK(g.advantages(1) == doctest::Approx(3.9403));
    CHECK(g.advantages(0) == doctest::Approx(5.31287906));
    CHECK(g.returns(0) == doctest::Approx(5.81287906));
  }
  SUBCASE("lambda zero gives one-step TD errors") {
    Trajectory t;
    t.steps = {step(1, 0.5, false), step(2, 1.0, false)};
    t.bootstrap_value = 4.0;
    const GaeResult g = compute_gae(t, 0.9, 0.0);
    CHECK(g.advantages(0) == doctest::Approx(1 + 0.9 * 1.0 - 0.5));
    CHECK(g.advantages(1) == doctest::Approx(2 + 0.9 * 4.0 - 1.0));
  }
  SUBCASE("gamma = lambda = 1 gives reward-to-go minus value") {
    Trajectory t;
    t.steps = {step(1, 3, false), step(2, 2, false), step(3, 1, false), step(4, 0, true)};
    const GaeResult g = compute_gae(t, 1.0, 1.0);
    const double rtg[] = {10, 9, 7, 4};
    for (int i = 0; i < 4; ++i) CHECK(g.returns(i) == doctest::Approx(rtg[i]));
  }
  SUBCASE("done cuts the bootstrap") {
    Trajectory t;
    t.steps = {step(1, 0, true), step(5, 0, false)};
    t.bootstrap_value = 100.0;
    CHECK(compute_gae(t, 0.99, 0.98).advantages(0) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(compute_gae(Trajectory{}, 0.99, 0.98), Error);
}

TEST_CASE("standardize") {
  const Eigen::VectorXd s = standardize(Eigen::Vector4d(1, 2, 3, 4));
  CHECK(std::abs(s.mean()) < 1e-15);
  CHECK(std::sqrt(s.squaredNorm() / 4.0) == doctest::Approx(1.0));
  CHECK(standardize(Eigen::Vector3d(2, 2, 2)).isZero());
}

TEST_CASE("sampling") {
  GaussianPolicy p = random_policy(6, 4, {8}, 31);
  const Eigen::VectorXd obs = Eigen::VectorXd::LinSpaced(6, -1, 1);
  std::mt19937_64 r1(5), r2(5);
  CHECK(p.sample(obs, r1).action == p.sample(obs, r2).action);
  p.log_std().setConstant(kLogStdMin);
  const auto s = p.sample(obs, r1);
  CHECK((s.action - p.mean(obs)).cwiseAbs().maxCoeff() < 1e-8);
  p.log_std().setConstant(50.0);
  p.clamp_log_std();
  CHECK(p.log_std().maxCoeff() == kLogStdMax);
  p.mean_net().params()(0) = NAN;
  CHECK_THROWS_AS(p.sample(obs, r1), Error);
}

TEST_CASE("update leaves the policy unchanged when no step is accepted") {
  GaussianPolicy p = random_policy(6, 4, {8}, 41);
  Batch b = random_batch(p, 64, 42);
  b.advantages.setZero();
  Mlp value({6, 8, 1});
  std::mt19937_64 rng(1);
  value.initialize(rng, 1.0, 1.0);
  const Eigen::VectorXd before = p.flat_params();
  TrpoConfig cfg;
  const UpdateStats st = trpo_update(p, value, b, cfg, rng);
  CHECK_FALSE(st.accepted);
  CHECK(st.kl == 0.0);
  CHECK(p.flat_params() == before);
}

TEST_CASE("accepted update respects the trust region") {
  GaussianPolicy p = random_policy(6, 4, {8}, 51);
  Batch b = random_batch(p, 256, 52);
  b.log_prob_old = p.log_prob(b.obs, b.actions);
  Mlp value({6, 8, 1});
  std::mt19937_64 rng(1);
  value.initialize(rng, 1.0, 1.0);
  TrpoConfig cfg;
  const GaussianPolicy old = p;
  const UpdateStats st = trpo_update(p, value, b, cfg, rng);
  REQUIRE(st.accepted);
  const SurrogateKl sk = surrogate_and_kl(old, p, b);
  CHECK(sk.kl <= cfg.max_kl);
  CHECK(sk.surrogate > 0.0);
  CHECK(sk.kl == doctest::Approx(st.kl));
  // The quadratic model puts the full step on the KL boundary.
  if (st.backtracks == 0) CHECK(sk.kl > 0.5 * cfg.max_kl);
}

TEST_CASE("trpo config validation") {
  TrpoConfig cfg;
  cfg.max_kl = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.lam = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.hidden = {32, 0};
  CHECK_THROWS_AS(cfg.validate(), Error);
}

}  // TEST_SUITE
