#include "trpo/policy.hpp"

#include <cmath>
#include <numbers>

#include "errors.hpp"

namespace dcrl {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd ObsNormalizer::apply(const Observation& obs) const {
  Eigen::VectorXd v(kObservationSize);
  v << (obs.outdoor_c - temp_offset) / temp_scale, (obs.west_c - temp_offset) / temp_scale,
      (obs.east_c - temp_offset) / temp_scale, obs.p_total_w / power_scale,
      obs.p_it_w / power_scale, obs.p_hvac_w / power_scale;
  return v;
}

GaussianPolicy::GaussianPolicy(int obs_dim, int act_dim, const std::vector<int>& hidden) {
  std::vector<int> sizes = {obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(act_dim);
  mean_net_ = Mlp(sizes);
  log_std_ = Eigen::VectorXd::Zero(act_dim);
}

void GaussianPolicy::initialize(std::mt19937_64& rng) {
  // Small output gain: initial means sit near the middle of the action box.
  mean_net_.initialize(rng, 1.0, 0.01);
  log_std_.setZero();
}

Eigen::VectorXd GaussianPolicy::flat_params() const {
  Eigen::VectorXd flat(num_params());
  flat << mean_net_.params(), log_std_;
  return flat;
}

void GaussianPolicy::set_flat_params(const Eigen::VectorXd& flat) {
  const Eigen::Index n = mean_net_.num_params();
  mean_net_.params() = flat.head(n);
  log_std_ = flat.tail(log_std_.size());
}

void GaussianPolicy::clamp_log_std() { log_std_ = log_std_.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax); }

GaussianPolicy::Sample GaussianPolicy::sample(const Eigen::VectorXd& obs,
                                              std::mt19937_64& rng) const {
  const Eigen::VectorXd mu = mean(obs);
  if (!mu.allFinite()) throw Error(ErrorCode::kNumericalFault, "policy mean is not finite");
  std::normal_distribution<double> normal(0.0, 1.0);
  Sample s;
  s.action.resize(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    s.action(i) = mu(i) + std::exp(log_std_(i)) * normal(rng);
  }
  s.log_prob = gaussian_log_prob(mu, log_std_, s.action);
  return s;
}

Eigen::VectorXd GaussianPolicy::log_prob(const Eigen::MatrixXd& obs,
                                         const Eigen::MatrixXd& actions) const {
  const Eigen::MatrixXd mu = mean_net_.forward(obs);
  const Eigen::ArrayXd inv_std = (-log_std_.array()).exp();
  const Eigen::ArrayXXd z = (actions - mu).array().colwise() * inv_std;
  const double constant = -log_std_.sum() - 0.5 * double(log_std_.size()) * kLog2Pi;
  return (-0.5 * z.square().colwise().sum() + constant).matrix().transpose();
}

double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                         const Eigen::VectorXd& action) {
  const Eigen::ArrayXd z = (action - mean).array() * (-log_std.array()).exp();
  return -0.5 * z.square().sum() - log_std.sum() - 0.5 * double(mean.size()) * kLog2Pi;
}

double gaussian_kl(const Eigen::VectorXd& mean_old, const Eigen::VectorXd& log_std_old,
                   const Eigen::VectorXd& mean_new, const Eigen::VectorXd& log_std_new) {
  const Eigen::ArrayXd var_old = (2.0 * log_std_old.array()).exp();
  const Eigen::ArrayXd var_new = (2.0 * log_std_new.array()).exp();
  const Eigen::ArrayXd diff = (mean_old - mean_new).array();
  return (log_std_new.array() - log_std_old.array() + (var_old + diff.square()) / (2.0 * var_new) -
          0.5)
      .sum();
}

}  // namespace dcrl
