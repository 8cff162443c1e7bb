#include "trpo/mlp.hpp"

#include <stdexcept>

namespace dcrl {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  Eigen::Index total = 0;
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(total);
    total += Eigen::Index(sizes_[std::size_t(l)]) * sizes_[std::size_t(l) + 1] +
             sizes_[std::size_t(l) + 1];
  }
  params_ = Eigen::VectorXd::Zero(total);
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(const Eigen::VectorXd& flat, int layer) const {
  const auto l = std::size_t(layer);
  return {flat.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(const Eigen::VectorXd& flat, int layer) const {
  const auto l = std::size_t(layer);
  return {flat.data() + offsets_[l] + Eigen::Index(sizes_[l]) * sizes_[l + 1], sizes_[l + 1]};
}

void Mlp::initialize(std::mt19937_64& rng, double hidden_gain, double output_gain) {
  std::normal_distribution<double> normal(0.0, 1.0);
  params_.setZero();
  for (int l = 0; l < num_layers(); ++l) {
    const auto rows = Eigen::Index(sizes_[std::size_t(l) + 1]);
    const auto cols = Eigen::Index(sizes_[std::size_t(l)]);
    // QR of a tall Gaussian matrix gives orthonormal columns.
    const bool tall = rows >= cols;
    Eigen::MatrixXd g(tall ? rows : cols, tall ? cols : rows);
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
    // Sign fix so the result is uniformly distributed over orthogonal matrices.
    const Eigen::MatrixXd r = qr.matrixQR().topRows(g.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    const double gain = l + 1 == num_layers() ? output_gain : hidden_gain;
    Eigen::MatrixXd w = tall ? q : Eigen::MatrixXd(q.transpose());
    Eigen::Map<Eigen::MatrixXd>(params_.data() + offsets_[std::size_t(l)], rows, cols) = gain * w;
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Activations* acts) const {
  Eigen::MatrixXd h = input;
  if (acts) {
    acts->layers.clear();
    acts->layers.push_back(h);
  }
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(params_, l) * h;
    z.colwise() += bias(params_, l);
    if (l + 1 < num_layers()) z = z.array().tanh().matrix();
    h = std::move(z);
    if (acts) acts->layers.push_back(h);
  }
  return h;
}

Eigen::VectorXd Mlp::forward_one(const Eigen::VectorXd& input) const {
  return forward(Eigen::MatrixXd(input)).col(0);
}

Eigen::VectorXd Mlp::backward(const Activations& acts, const Eigen::MatrixXd& grad_output) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = grad_output;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const auto ul = std::size_t(l);
    const Eigen::MatrixXd& h_in = acts.layers[ul];
    const auto rows = Eigen::Index(sizes_[ul + 1]);
    const auto cols = Eigen::Index(sizes_[ul]);
    Eigen::Map<Eigen::MatrixXd>(grad.data() + offsets_[ul], rows, cols) = delta * h_in.transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + offsets_[ul] + rows * cols, rows) =
        delta.rowwise().sum();
    if (l > 0) {
      delta = (weight(params_, l).transpose() * delta).cwiseProduct(
          (1.0 - h_in.array().square()).matrix());
    }
  }
  return grad;
}

Eigen::MatrixXd Mlp::jvp(const Activations& acts, const Eigen::VectorXd& direction) const {
  const Eigen::Index n = acts.layers.front().cols();
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(input_size(), n);
  for (int l = 0; l < num_layers(); ++l) {
    const auto ul = std::size_t(l);
    Eigen::MatrixXd dz = weight(direction, l) * acts.layers[ul] + weight(params_, l) * dh;
    dz.colwise() += bias(direction, l);
    if (l + 1 < num_layers()) {
      dz = dz.cwiseProduct((1.0 - acts.layers[ul + 1].array().square()).matrix());
    }
    dh = std::move(dz);
  }
  return dh;
}

}  // namespace dcrl
