#include "trpo/trpo.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "errors.hpp"

namespace dcrl {

void TrpoConfig::validate() const {
  auto bad = [](const char* field, const std::string& why) {
    throw Error(ErrorCode::kConfig, fmt::format("invalid trpo.{}: {}", field, why));
  };
  if (!(max_kl > 0.0)) bad("max_kl", "must be > 0");
  if (timesteps_per_batch < 1) bad("timesteps_per_batch", "must be >= 1");
  if (cg_iters < 1) bad("cg_iters", "must be >= 1");
  if (!(cg_damping >= 0.0)) bad("cg_damping", "must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) bad("gamma", "must be in (0, 1]");
  if (!(lam >= 0.0 && lam <= 1.0)) bad("lam", "must be in [0, 1]");
  if (vf_iters < 0) bad("vf_iters", "must be >= 0");
  if (!(vf_stepsize > 0.0)) bad("vf_stepsize", "must be > 0");
  if (vf_minibatch < 1) bad("vf_minibatch", "must be >= 1");
  if (!(backtrack_coeff > 0.0 && backtrack_coeff < 1.0)) bad("backtrack_coeff", "must be in (0, 1)");
  if (max_backtracks < 1) bad("max_backtracks", "must be >= 1");
  for (int h : hidden) {
    if (h < 1) bad("hidden", "layer sizes must be >= 1");
  }
}

GaeResult compute_gae(const Trajectory& traj, double gamma, double lam) {
  const auto n = Eigen::Index(traj.steps.size());
  if (n == 0) throw Error(ErrorCode::kContract, "compute_gae on an empty trajectory");
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double next_value = traj.bootstrap_value;
  double next_adv = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const TrajectoryStep& s = traj.steps[std::size_t(t)];
    const double live = s.done ? 0.0 : 1.0;
    const double delta = s.reward + gamma * next_value * live - s.value;
    const double adv = delta + gamma * lam * live * next_adv;
    out.advantages(t) = adv;
    out.returns(t) = adv + s.value;
    next_value = s.value;
    next_adv = adv;
  }
  return out;
}

Eigen::VectorXd standardize(const Eigen::VectorXd& x) {
  if (x.size() == 0) return x;
  const double mean = x.mean();
  const Eigen::ArrayXd centered = x.array() - mean;
  const double std = std::sqrt(centered.square().mean());
  if (!(std > 1e-12)) return Eigen::VectorXd::Zero(x.size());
  return (centered / std).matrix();
}

Batch assemble_batch(const std::vector<Trajectory>& trajectories, double gamma, double lam) {
  Eigen::Index total = 0;
  for (const auto& t : trajectories) total += Eigen::Index(t.steps.size());
  if (total == 0) throw Error(ErrorCode::kContract, "empty batch");
  const auto& first = trajectories.front().steps.front();
  Batch b;
  b.obs.resize(first.obs.size(), total);
  b.actions.resize(first.action.size(), total);
  b.log_prob_old.resize(total);
  b.returns.resize(total);
  Eigen::VectorXd adv(total);
  Eigen::Index col = 0;
  for (const auto& traj : trajectories) {
    if (traj.steps.empty()) continue;
    const GaeResult gae = compute_gae(traj, gamma, lam);
    for (std::size_t i = 0; i < traj.steps.size(); ++i, ++col) {
      const auto& s = traj.steps[i];
      b.obs.col(col) = s.obs;
      b.actions.col(col) = s.action;
      b.log_prob_old(col) = s.log_prob;
      adv(col) = gae.advantages(Eigen::Index(i));
      b.returns(col) = gae.returns(Eigen::Index(i));
    }
  }
  b.advantages = standardize(adv);
  return b;
}

SurrogateKl surrogate_and_kl(const GaussianPolicy& old_policy, const GaussianPolicy& new_policy,
                             const Batch& batch) {
  const auto n = double(batch.size());
  const Eigen::VectorXd logp_new = new_policy.log_prob(batch.obs, batch.actions);
  const Eigen::ArrayXd ratio = (logp_new - batch.log_prob_old).array().exp();
  SurrogateKl out;
  out.surrogate = (ratio * batch.advantages.array()).sum() / n;

  const Eigen::MatrixXd mu_old = old_policy.mean_net().forward(batch.obs);
  const Eigen::MatrixXd mu_new = new_policy.mean_net().forward(batch.obs);
  const Eigen::ArrayXd inv_var_new = (-2.0 * new_policy.log_std().array()).exp();
  const Eigen::ArrayXd var_old = (2.0 * old_policy.log_std().array()).exp();
  // Per-sample KL = const + sum_i (mu_old - mu_new)_i^2 / (2 var_new_i).
  const double constant =
      (new_policy.log_std().array() - old_policy.log_std().array() +
       var_old * inv_var_new / 2.0 - 0.5)
          .sum();
  const Eigen::ArrayXXd diff = (mu_old - mu_new).array();
  const double quad = (diff.square().colwise() * inv_var_new).sum() / 2.0;
  out.kl = constant + quad / n;
  return out;
}

Eigen::VectorXd surrogate_gradient(const GaussianPolicy& policy, const Batch& batch) {
  const auto n = double(batch.size());
  Mlp::Activations acts;
  const Eigen::MatrixXd mu = policy.mean_net().forward(batch.obs, &acts);
  const Eigen::ArrayXd inv_std = (-policy.log_std().array()).exp();
  const Eigen::ArrayXXd z = (batch.actions - mu).array().colwise() * inv_std;
  const double constant =
      -policy.log_std().sum() - 0.5 * double(policy.act_dim()) * std::log(2.0 * std::numbers::pi);
  const Eigen::ArrayXd logp = -0.5 * z.square().colwise().sum().transpose() + constant;
  const Eigen::ArrayXd weight =
      (logp - batch.log_prob_old.array()).exp() * batch.advantages.array() / n;

  // d logp / d mu = z / std, d logp / d log_std = z^2 - 1.
  Eigen::ArrayXXd grad_mu = z.colwise() * inv_std;
  grad_mu.rowwise() *= weight.transpose();
  Eigen::VectorXd grad(policy.num_params());
  grad.head(policy.mean_net().num_params()) = policy.mean_net().backward(acts, grad_mu.matrix());
  Eigen::ArrayXXd grad_ls = z.square() - 1.0;
  grad_ls.rowwise() *= weight.transpose();
  grad.tail(policy.act_dim()) = grad_ls.rowwise().sum().matrix();
  return grad;
}

FisherOperator::FisherOperator(const GaussianPolicy& policy, const Eigen::MatrixXd& obs)
    : policy_(policy), n_(obs.cols()) {
  policy_.mean_net().forward(obs, &acts_);
  inv_var_ = (-2.0 * policy_.log_std().array()).exp();
}

Eigen::VectorXd FisherOperator::operator()(const Eigen::VectorXd& v) const {
  const Mlp& net = policy_.mean_net();
  const Eigen::Index n_mlp = net.num_params();
  Eigen::ArrayXXd jv = net.jvp(acts_, v.head(n_mlp)).array();
  jv.colwise() *= inv_var_;
  Eigen::VectorXd out(v.size());
  out.head(n_mlp) = net.backward(acts_, jv.matrix() / double(n_));
  // Fisher of a Gaussian w.r.t. its log std is 2 per dimension.
  out.tail(v.size() - n_mlp) = 2.0 * v.tail(v.size() - n_mlp);
  return out;
}

Eigen::VectorXd conjugate_gradient(const LinearOperator& apply_a, const Eigen::VectorXd& b,
                                   int iters, double damping, double residual_tol,
                                   std::vector<double>* residual_norms) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = b;
  double rr = r.squaredNorm();
  if (residual_norms) residual_norms->push_back(std::sqrt(rr));
  for (int i = 0; i < iters && std::sqrt(rr) >= residual_tol; ++i) {
    const Eigen::VectorXd ap = apply_a(p) + damping * p;
    const double alpha = rr / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.squaredNorm();
    if (!std::isfinite(alpha) || !std::isfinite(rr_new)) {
      throw Error(ErrorCode::kNumericalFault, fmt::format("conjugate gradient diverged at iteration {}", i));
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    if (residual_norms) residual_norms->push_back(std::sqrt(rr));
  }
  return x;
}

namespace {

double value_mse(const Mlp& value, const Batch& batch) {
  const Eigen::MatrixXd v = value.forward(batch.obs);
  return (v.row(0).transpose() - batch.returns).squaredNorm() / double(batch.size());
}

// vf_iters epochs of minibatch SGD on 0.5 * (V - R)^2.
std::vector<double> fit_value(Mlp& value, const Batch& batch, const TrpoConfig& cfg,
                              std::mt19937_64& rng) {
  std::vector<double> losses = {value_mse(value, batch)};
  std::vector<Eigen::Index> order(std::size_t(batch.size()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  for (int pass = 0; pass < cfg.vf_iters; ++pass) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.vf_minibatch)) {
      const std::size_t end = std::min(order.size(), start + std::size_t(cfg.vf_minibatch));
      const auto m = Eigen::Index(end - start);
      Eigen::MatrixXd obs(batch.obs.rows(), m);
      Eigen::RowVectorXd target(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        obs.col(j) = batch.obs.col(order[start + std::size_t(j)]);
        target(j) = batch.returns(order[start + std::size_t(j)]);
      }
      Mlp::Activations acts;
      const Eigen::MatrixXd v = value.forward(obs, &acts);
      const Eigen::MatrixXd grad_out = (v - target) / double(m);
      value.params() -= cfg.vf_stepsize * value.backward(acts, grad_out);
    }
    losses.push_back(value_mse(value, batch));
  }
  if (!value.params().allFinite()) {
    throw Error(ErrorCode::kNumericalFault, "value network diverged");
  }
  return losses;
}

}  // namespace

UpdateStats trpo_update(GaussianPolicy& policy, Mlp& value, const Batch& batch,
                        const TrpoConfig& cfg, std::mt19937_64& rng) {
  UpdateStats stats;
  const GaussianPolicy old_policy = policy;
  GaussianPolicy new_policy = policy;

  const Eigen::VectorXd grad = surrogate_gradient(old_policy, batch);
  if (!grad.allFinite()) throw Error(ErrorCode::kNumericalFault, "policy gradient is not finite");

  if (grad.squaredNorm() > 0.0) {
    const FisherOperator fisher(old_policy, batch.obs);
    const Eigen::VectorXd dir =
        conjugate_gradient(std::cref(fisher), grad, cfg.cg_iters, cfg.cg_damping);
    const double shs = 0.5 * dir.dot(fisher(dir) + cfg.cg_damping * dir);
    if (!std::isfinite(shs)) throw Error(ErrorCode::kNumericalFault, "non-finite step curvature");
    if (shs > 0.0) {
      const Eigen::VectorXd full_step = dir * std::sqrt(cfg.max_kl / shs);
      const Eigen::VectorXd theta_old = old_policy.flat_params();
      double fraction = 1.0;
      for (int k = 0; k < cfg.max_backtracks; ++k, fraction *= cfg.backtrack_coeff) {
        GaussianPolicy candidate = old_policy;
        candidate.set_flat_params(theta_old + fraction * full_step);
        candidate.clamp_log_std();
        const SurrogateKl sk = surrogate_and_kl(old_policy, candidate, batch);
        if (std::isfinite(sk.surrogate) && std::isfinite(sk.kl) && sk.kl <= cfg.max_kl &&
            sk.surrogate > 0.0) {
          new_policy = std::move(candidate);
          stats.accepted = true;
          stats.backtracks = k;
          stats.surrogate = sk.surrogate;
          stats.kl = sk.kl;
          break;
        }
      }
    }
  }

  Mlp new_value = value;
  stats.value_loss_passes = fit_value(new_value, batch, cfg, rng);
  stats.value_loss = stats.value_loss_passes.back();

  policy = std::move(new_policy);
  value = std::move(new_value);
  return stats;
}

TrainResult make_initial_agent(const TrpoConfig& cfg) {
  cfg.validate();
  TrainResult r;
  std::mt19937_64 init_rng(cfg.seed);
  r.policy = GaussianPolicy(kObservationSize, kActionSize, cfg.hidden);
  r.policy.initialize(init_rng);
  std::vector<int> sizes = {kObservationSize};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  r.value = Mlp(sizes);
  r.value.initialize(init_rng, 1.0, 1.0);
  return r;
}

TrainResult train(const EnvFactory& factory, const TrpoConfig& cfg, std::int64_t total_timesteps,
                  const ProgressCallback& progress) {
  TrainResult result = make_initial_agent(cfg);
  if (total_timesteps <= 0) return result;

  std::seed_seq seq{std::uint64_t(cfg.seed), std::uint64_t(0x5eed)};
  std::mt19937_64 rng(seq);
  const ObsNormalizer& norm = result.normalizer;

  std::int64_t episode = 0;
  std::unique_ptr<Environment> env = factory(episode);
  Observation obs = env->reset();
  std::int64_t timesteps = 0;
  std::int64_t batch_index = 0;

  while (timesteps < total_timesteps) {
    try {
      const std::int64_t n = std::min(cfg.timesteps_per_batch, total_timesteps - timesteps);
      std::vector<Trajectory> trajectories(1);
      double reward_sum = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        const Eigen::VectorXd o = norm.apply(obs);
        const auto sample = result.policy.sample(o, rng);
        const double v = result.value.forward_one(o)(0);
        NormalizedAction action;
        for (int k = 0; k < kActionSize; ++k) action.values[std::size_t(k)] = sample.action(k);
        const StepResult step = env->step(action);
        trajectories.back().steps.push_back(
            {o, sample.action, sample.log_prob, step.reward, v, step.done});
        reward_sum += step.reward;
        if (step.done) {
          trajectories.emplace_back();
          env = factory(++episode);
          obs = env->reset();
        } else {
          obs = step.observation;
        }
      }
      if (trajectories.back().steps.empty()) {
        trajectories.pop_back();
      } else if (!trajectories.back().steps.back().done) {
        trajectories.back().bootstrap_value = result.value.forward_one(norm.apply(obs))(0);
      }
      timesteps += n;

      const Batch batch = assemble_batch(trajectories, cfg.gamma, cfg.lam);
      const UpdateStats stats = trpo_update(result.policy, result.value, batch, cfg, rng);
      CurvePoint point{batch_index, timesteps, reward_sum / double(n), stats.kl, stats.surrogate,
                       stats.value_loss};
      result.curve.push_back(point);
      result.updates.push_back(stats);
      if (progress) progress(point, stats);
      ++batch_index;
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("training batch {}: {}", batch_index, e.what()));
    }
  }
  return result;
}

}  // namespace dcrl
