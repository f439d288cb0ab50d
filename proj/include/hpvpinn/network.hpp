#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hpvpinn {

/// Fully connected tanh network R^2 -> R^n_out with a linear output layer.
///
/// All trainable values live in one flat vector: for each layer the weight
/// matrix (column-major, n_out x n_in) followed by its bias, then the named
/// extra scalars (e.g. adaptive indicator exponents). Gradients and optimizer
/// state use the same layout.
class DenseNetwork {
 public:
  /// Zero-initialized parameters. Throws InvalidArgument for fewer than two
  /// sizes, an input size other than 2, or a non-positive width.
  explicit DenseNetwork(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int n_layers() const { return static_cast<int>(layer_sizes_.size()) - 1; }
  int n_outputs() const { return layer_sizes_.back(); }

  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  /// Weights and biases only.
  std::size_t n_network_parameters() const { return n_network_params_; }
  /// Entries of all weight matrices (biases excluded).
  std::size_t n_weight_entries() const;
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const;

  /// Appends a trainable scalar; returns its flat index. Names must be unique.
  std::size_t add_extra_scalar(const std::string& name, double value);
  std::optional<std::size_t> extra_index(const std::string& name) const;
  double extra_scalar(const std::string& name) const;
  const std::vector<std::string>& extra_names() const { return extra_names_; }

  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

 private:
  std::vector<int> layer_sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t n_network_params_ = 0;
  Eigen::VectorXd params_;
  std::vector<std::string> extra_names_;
  std::uint64_t seed_ = 0;
};

/// Glorot-uniform weights from CounterRng(seed).split(layer), drawn in storage
/// order; zero biases.
DenseNetwork init_network(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Outputs and their spatial derivatives; rows are heads, columns points.
struct EvalBatch {
  Eigen::MatrixXd u;
  Eigen::MatrixXd du_dx;
  Eigen::MatrixXd du_dy;
  Eigen::Index size() const { return u.cols(); }
};

/// dLoss/d(u), dLoss/d(du_dx), dLoss/d(du_dy); same shapes as EvalBatch.
using BatchAdjoint = EvalBatch;

/// Activations kept by forward_with_gradients for the reverse pass. Each entry
/// holds [value | d/dx | d/dy] column blocks of one layer's input.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
  Eigen::Index n_points = 0;
};

/// Forward pass with two tangent directions (d/dx, d/dy) propagated exactly.
EvalBatch forward_with_gradients(const DenseNetwork& net, const Eigen::Ref<const Eigen::Matrix2Xd>& points,
                                 ForwardCache* cache = nullptr);

/// Values only.
Eigen::MatrixXd forward_values(const DenseNetwork& net, const Eigen::Ref<const Eigen::Matrix2Xd>& points);

/// Accumulates dLoss/dtheta into grad given adjoints of the outputs and their
/// spatial derivatives. Differentiates through the tangent propagation.
void backward(const DenseNetwork& net, const ForwardCache& cache, const BatchAdjoint& adjoint,
              Eigen::Ref<Eigen::VectorXd> grad);

/// Scalar loss of a batch. Must fill `adjoint` (pre-sized, zeroed) with
/// dLoss/d(outputs) and may add direct parameter derivatives (regularization,
/// extra scalars) to `direct_grad`.
using LossEvaluator =
    std::function<double(const EvalBatch& batch, BatchAdjoint& adjoint, Eigen::Ref<Eigen::VectorXd> direct_grad)>;

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Exact gradient of evaluator(forward(points)) w.r.t. all parameters.
/// Throws NumericError carrying `epoch` if the loss is not finite.
LossAndGradient loss_gradient(const DenseNetwork& net, const Eigen::Ref<const Eigen::Matrix2Xd>& points,
                              const LossEvaluator& evaluator, long epoch = -1);

struct AdamState {
  AdamState(std::size_t n_params, double learning_rate);

  long step = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  double learning_rate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update in place. Throws InvalidArgument on size mismatch.
void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads);

/// JSON checkpoint: {"format":"hpvpinn-checkpoint","version":1,"layer_sizes":[...],
/// "seed":..,"epoch":..,"parameters":[...],"extra_scalars":[{"name":..,"value":..}]}.
/// "parameters" holds weights and biases only, in flat order.
void save_checkpoint(const std::string& path, const DenseNetwork& net, long epoch);

struct Checkpoint {
  DenseNetwork network;
  long epoch = 0;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hpvpinn
