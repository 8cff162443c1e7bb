#ifndef DCRL_TRPO_MLP_HPP_
#define DCRL_TRPO_MLP_HPP_

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace dcrl {

// Fully connected network with tanh hidden layers and a linear output.
// Parameters live in one flat vector, layer by layer: W (out x in,
// column-major) followed by b (out). Batches are column-major: one sample
// per column.
class Mlp {
 public:
  Mlp() = default;
  // sizes = {input, hidden..., output}
  explicit Mlp(std::vector<int> sizes);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_layers() const { return int(sizes_.size()) - 1; }
  Eigen::Index num_params() const { return params_.size(); }
  const std::vector<int>& sizes() const { return sizes_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  // Orthogonal weights scaled by `hidden_gain` / `output_gain`; zero biases.
  void initialize(std::mt19937_64& rng, double hidden_gain, double output_gain);

  // Per-layer outputs kept for backward() and jvp(): activations[0] is the
  // input, activations[k] the output of layer k.
  struct Activations {
    std::vector<Eigen::MatrixXd> layers;
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Activations* acts = nullptr) const;
  Eigen::VectorXd forward_one(const Eigen::VectorXd& input) const;

  // Gradient w.r.t. the parameters of sum_n <grad_output(:, n), output(:, n)>.
  Eigen::VectorXd backward(const Activations& acts, const Eigen::MatrixXd& grad_output) const;

  // Directional derivative of the output along `direction` in parameter
  // space (forward mode).
  Eigen::MatrixXd jvp(const Activations& acts, const Eigen::VectorXd& direction) const;

 private:
  Eigen::Map<const Eigen::MatrixXd> weight(const Eigen::VectorXd& flat, int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(const Eigen::VectorXd& flat, int layer) const;

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;  // start of W for each layer
  Eigen::VectorXd params_;
};

}  // namespace dcrl

#endif  // DCRL_TRPO_MLP_HPP_
