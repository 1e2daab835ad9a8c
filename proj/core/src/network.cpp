#include "racer/network.hpp"

#include <stdexcept>

namespace racer {

Mlp::Mlp(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("an MLP needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    if (sizes[i] < 1 || sizes[i + 1] < 1) throw std::invalid_argument("layer sizes must be positive");
    layers.push_back({Eigen::MatrixXd::Zero(sizes[i + 1], sizes[i]), Eigen::VectorXd::Zero(sizes[i + 1])});
  }
}

Eigen::MatrixXd orthogonal_matrix(int rows, int cols, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  Eigen::MatrixXd out = rows >= cols ? q : Eigen::MatrixXd(q.transpose());
  return gain * out;
}

Mlp Mlp::orthogonal(const std::vector<int>& sizes, double hidden_gain, double output_gain,
                    std::mt19937_64& rng) {
  Mlp net(sizes);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const bool last = i + 1 == net.layers.size();
    auto& w = net.layers[i].weight;
    w = orthogonal_matrix(static_cast<int>(w.rows()), static_cast<int>(w.cols()),
                          last ? output_gain : hidden_gain, rng);
  }
  return net;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  Eigen::VectorXd h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::VectorXd z = layers[i].weight * h + layers[i].bias;
    h = i + 1 < layers.size() ? Eigen::VectorXd(z.array().tanh()) : z;
  }
  return h;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  Eigen::MatrixXd h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weight * h;
    z.colwise() += layers[i].bias;
    if (i + 1 < layers.size()) z = z.array().tanh().matrix();
    h = std::move(z);
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

void Mlp::backward(const Cache& cache, const Eigen::MatrixXd& grad_output, Mlp& grads) const {
  Eigen::MatrixXd delta = grad_output;  // dL/dz of the current layer
  for (std::size_t k = layers.size(); k-- > 0;) {
    const Eigen::MatrixXd& input = cache.activations[k];
    grads.layers[k].weight.noalias() += delta * input.transpose();
    grads.layers[k].bias += delta.rowwise().sum();
    if (k == 0) break;
    Eigen::MatrixXd back = layers[k].weight.transpose() * delta;
    // input is tanh output of the previous layer: d tanh = 1 - tanh^2.
    delta = back.array() * (1.0 - input.array().square());
  }
}

int Mlp::input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
int Mlp::output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }

std::vector<int> Mlp::sizes() const {
  std::vector<int> s;
  if (layers.empty()) return s;
  s.push_back(input_dim());
  for (const auto& l : layers) s.push_back(static_cast<int>(l.weight.rows()));
  return s;
}

Eigen::Index Mlp::num_params() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void Mlp::write_params(Eigen::Ref<Eigen::VectorXd> out) const {
  Eigen::Index k = 0;
  for (const auto& l : layers) {
    out.segment(k, l.weight.size()) = Eigen::Map<const Eigen::VectorXd>(l.weight.data(), l.weight.size());
    k += l.weight.size();
    out.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
}

void Mlp::read_params(const Eigen::Ref<const Eigen::VectorXd>& in) {
  Eigen::Index k = 0;
  for (auto& l : layers) {
    Eigen::Map<Eigen::VectorXd>(l.weight.data(), l.weight.size()) = in.segment(k, l.weight.size());
    k += l.weight.size();
    l.bias = in.segment(k, l.bias.size());
    k += l.bias.size();
  }
}

Mlp Mlp::zeros_like() const {
  Mlp z;
  for (const auto& l : layers) {
    z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return z;
}

}  // namespace racer
