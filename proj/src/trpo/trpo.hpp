#ifndef DCRL_TRPO_TRPO_HPP_
#define DCRL_TRPO_TRPO_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "envsdk.hpp"
#include "trpo/mlp.hpp"
#include "trpo/policy.hpp"

namespace dcrl {

struct TrpoConfig {
  double max_kl = 0.01;
  std::int64_t timesteps_per_batch = 16384;
  int cg_iters = 10;
  double cg_damping = 0.1;
  double gamma = 0.99;
  double lam = 0.98;
  int vf_iters = 5;
  double vf_stepsize = 1e-3;
  int vf_minibatch = 64;
  double backtrack_coeff = 0.5;
  int max_backtracks = 10;
  std::vector<int> hidden = {32, 32};
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrajectoryStep {
  Eigen::VectorXd obs;     // normalized
  Eigen::VectorXd action;  // normalized, as sampled (pre-clamp)
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

// Contiguous run of steps from one environment. When the last step is not
// terminal, bootstrap_value estimates the value of the state after it.
struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double bootstrap_value = 0.0;
};

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

// delta_t = r_t + gamma V(s_{t+1}) (1 - done_t) - V(s_t)
// A_t     = delta_t + gamma lam (1 - done_t) A_{t+1}
// Throws kContract for an empty trajectory.
GaeResult compute_gae(const Trajectory& traj, double gamma, double lam);

// Zero mean, unit variance (population). Constant input maps to zeros.
Eigen::VectorXd standardize(const Eigen::VectorXd& x);

struct Batch {
  Eigen::MatrixXd obs;      // obs_dim x N
  Eigen::MatrixXd actions;  // act_dim x N
  Eigen::VectorXd log_prob_old;
  Eigen::VectorXd advantages;  // standardized
  Eigen::VectorXd returns;
  Eigen::Index size() const { return obs.cols(); }
};

Batch assemble_batch(const std::vector<Trajectory>& trajectories, double gamma, double lam);

struct SurrogateKl {
  double surrogate = 0.0;
  double kl = 0.0;
};

// Mean of exp(logp_new - logp_old) * A and mean KL(old || new) over the
// batch observations.
SurrogateKl surrogate_and_kl(const GaussianPolicy& old_policy, const GaussianPolicy& new_policy,
                             const Batch& batch);

// Gradient of the surrogate w.r.t. the flat parameters of `policy`.
Eigen::VectorXd surrogate_gradient(const GaussianPolicy& policy, const Batch& batch);

// Fisher information of the policy at fixed batch observations, i.e. the
// Hessian of mean KL(current || perturbed) at zero perturbation.
class FisherOperator {
 public:
  FisherOperator(const GaussianPolicy& policy, const Eigen::MatrixXd& obs);
  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const;

 private:
  const GaussianPolicy& policy_;
  Mlp::Activations acts_;
  Eigen::ArrayXd inv_var_;
  Eigen::Index n_;
};

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Solves (A + damping I) x = b with at most `iters` CG iterations, stopping
// early once the residual norm drops below `residual_tol`. If
// `residual_norms` is given it receives ||r|| before each iteration and at
// exit. Throws kNumericalFault on non-finite intermediates.
Eigen::VectorXd conjugate_gradient(const LinearOperator& apply_a, const Eigen::VectorXd& b,
                                   int iters, double damping, double residual_tol = 1e-10,
                                   std::vector<double>* residual_norms = nullptr);

struct UpdateStats {
  double surrogate = 0.0;  // surrogate of the accepted step (0 when rejected)
  double kl = 0.0;         // KL of the accepted step (0 when rejected)
  int backtracks = 0;      // step halvings before acceptance
  bool accepted = false;
  double value_loss = 0.0;                // after fitting
  std::vector<double> value_loss_passes;  // before fitting, then after each pass
};

// One TRPO iteration: natural-gradient step under the KL constraint with
// backtracking, then value regression on the batch returns. On a numerical
// fault both networks are left unchanged and the error propagates.
UpdateStats trpo_update(GaussianPolicy& policy, Mlp& value, const Batch& batch,
                        const TrpoConfig& cfg, std::mt19937_64& rng);

struct CurvePoint {
  std::int64_t batch = 0;
  std::int64_t timesteps = 0;  // cumulative
  double mean_reward = 0.0;
  double kl = 0.0;
  double surrogate = 0.0;
  double value_loss = 0.0;
};

struct TrainResult {
  GaussianPolicy policy;
  Mlp value;
  ObsNormalizer normalizer;
  std::vector<CurvePoint> curve;
  std::vector<UpdateStats> updates;
};

// Creates the environment for the given episode index (0, 1, ...).
using EnvFactory = std::function<std::unique_ptr<Environment>(std::int64_t episode)>;
using ProgressCallback = std::function<void(const CurvePoint&, const UpdateStats&)>;

// Networks initialised from cfg.seed. Deterministic for a given
// (factory, cfg, total_timesteps).
TrainResult make_initial_agent(const TrpoConfig& cfg);
TrainResult train(const EnvFactory& factory, const TrpoConfig& cfg, std::int64_t total_timesteps,
                  const ProgressCallback& progress = {});

}  // namespace dcrl

#endif  // DCRL_TRPO_TRPO_HPP_
