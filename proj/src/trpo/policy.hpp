#ifndef DCRL_TRPO_POLICY_HPP_
#define DCRL_TRPO_POLICY_HPP_

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "spaces.hpp"
#include "trpo/mlp.hpp"

namespace dcrl {

// Affine maps bringing raw observations to roughly unit scale:
// temperatures (T - 15) / 35, powers P / 1e6.
struct ObsNormalizer {
  double temp_offset = 15.0;
  double temp_scale = 35.0;
  double power_scale = 1e6;

  Eigen::VectorXd apply(const Observation& obs) const;
  bool operator==(const ObsNormalizer&) const = default;
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Diagonal Gaussian policy: mean from an MLP, state-independent log std.
// Flat parameter vector = [mlp params; log_std].
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, int act_dim, const std::vector<int>& hidden);

  void initialize(std::mt19937_64& rng);

  int obs_dim() const { return mean_net_.input_size(); }
  int act_dim() const { return mean_net_.output_size(); }
  Eigen::Index num_params() const { return mean_net_.num_params() + log_std_.size(); }

  Mlp& mean_net() { return mean_net_; }
  const Mlp& mean_net() const { return mean_net_; }
  Eigen::VectorXd& log_std() { return log_std_; }
  const Eigen::VectorXd& log_std() const { return log_std_; }

  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& flat);
  void clamp_log_std();

  Eigen::VectorXd mean(const Eigen::VectorXd& obs) const { return mean_net_.forward_one(obs); }

  struct Sample {
    Eigen::VectorXd action;  // unclamped
    double log_prob = 0.0;
  };
  // Throws kNumericalFault when the network output is not finite.
  Sample sample(const Eigen::VectorXd& obs, std::mt19937_64& rng) const;

  // Column-wise log densities of `actions` at `obs`.
  Eigen::VectorXd log_prob(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions) const;

 private:
  Mlp mean_net_;
  Eigen::VectorXd log_std_;
};

double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                         const Eigen::VectorXd& action);

// KL(old || new) between diagonal Gaussians, summed over dimensions.
double gaussian_kl(const Eigen::VectorXd& mean_old, const Eigen::VectorXd& log_std_old,
                   const Eigen::VectorXd& mean_new, const Eigen::VectorXd& log_std_new);

}  // namespace dcrl

#endif  // DCRL_TRPO_POLICY_HPP_
