#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

namespace racer {

struct DenseLayer {
  Eigen::MatrixXd weight;  ///< out x in
  Eigen::VectorXd bias;

  bool operator==(const DenseLayer& o) const { return weight == o.weight && bias == o.bias; }
};

/// Feed-forward network with tanh hidden activations and a linear output
/// layer. Batched inputs are column-major: one column per sample.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized network with layer sizes {in, hidden..., out}.
  explicit Mlp(const std::vector<int>& sizes);

  /// Orthogonal initialization with the given gains and zero biases.
  static Mlp orthogonal(const std::vector<int>& sizes, double hidden_gain, double output_gain,
                        std::mt19937_64& rng);

  /// Activations of every layer, kept for the backward pass.
  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  ///< input, hidden outputs..., output
  };

  [[nodiscard]] Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache) const;

  /// Accumulates dLoss/dparams into `grads` (same shape as *this) given
  /// dLoss/doutput for the batch stored in `cache`.
  void backward(const Cache& cache, const Eigen::MatrixXd& grad_output, Mlp& grads) const;

  [[nodiscard]] int input_dim() const;
  [[nodiscard]] int output_dim() const;
  [[nodiscard]] std::vector<int> sizes() const;
  [[nodiscard]] Eigen::Index num_params() const;

  /// Flattened parameters: for each layer, weight (column-major) then bias.
  void write_params(Eigen::Ref<Eigen::VectorXd> out) const;
  void read_params(const Eigen::Ref<const Eigen::VectorXd>& in);

  [[nodiscard]] Mlp zeros_like() const;

  std::vector<DenseLayer> layers;

  bool operator==(const Mlp& o) const { return layers == o.layers; }
};

/// Orthogonal matrix (rows x cols) scaled by gain.
[[nodiscard]] Eigen::MatrixXd orthogonal_matrix(int rows, int cols, double gain, std::mt19937_64& rng);

}  // namespace racer
