#include "hpvpinn/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hpvpinn/error.hpp"
#include "hpvpinn/rng.hpp"

namespace hpvpinn {

DenseNetwork::DenseNetwork(std::vector<int> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2) throw InvalidArgument("network needs at least an input and an output layer");
  if (layer_sizes_.front() != 2) throw InvalidArgument("network input dimension must be 2");
  for (int n : layer_sizes_) {
    if (n < 1) throw InvalidArgument("layer widths must be positive");
  }
  std::size_t offset = 0;
  for (int l = 0; l < n_layers(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<std::size_t>(layer_sizes_[l + 1]) * (layer_sizes_[l] + 1);
  }
  n_network_params_ = offset;
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

Eigen::Map<const Eigen::MatrixXd> DenseNetwork::weight(int layer) const {
  return {params_.data() + offsets_[layer], layer_sizes_[layer + 1], layer_sizes_[layer]};
}

Eigen::Map<Eigen::MatrixXd> DenseNetwork::weight(int layer) {
  return {params_.data() + offsets_[layer], layer_sizes_[layer + 1], layer_sizes_[layer]};
}

Eigen::Map<const Eigen::VectorXd> DenseNetwork::bias(int layer) const {
  return {params_.data() + bias_offset(layer), layer_sizes_[layer + 1]};
}

Eigen::Map<Eigen::VectorXd> DenseNetwork::bias(int layer) {
  return {params_.data() + bias_offset(layer), layer_sizes_[layer + 1]};
}

std::size_t DenseNetwork::bias_offset(int layer) const {
  return offsets_[layer] + static_cast<std::size_t>(layer_sizes_[layer + 1]) * layer_sizes_[layer];
}

std::size_t DenseNetwork::n_weight_entries() const {
  std::size_t n = 0;
  for (int l = 0; l < n_layers(); ++l) n += static_cast<std::size_t>(layer_sizes_[l + 1]) * layer_sizes_[l];
  return n;
}

std::size_t DenseNetwork::add_extra_scalar(const std::string& name, double value) {
  if (extra_index(name)) throw InvalidArgument("duplicate extra scalar '" + name + "'");
  const Eigen::Index n = params_.size();
  params_.conservativeResize(n + 1);
  params_(n) = value;
  extra_names_.push_back(name);
  return static_cast<std::size_t>(n);
}

std::optional<std::size_t> DenseNetwork::extra_index(const std::string& name) const {
  const auto it = std::find(extra_names_.begin(), extra_names_.end(), name);
  if (it == extra_names_.end()) return std::nullopt;
  return n_network_params_ + static_cast<std::size_t>(it - extra_names_.begin());
}

double DenseNetwork::extra_scalar(const std::string& name) const {
  const auto idx = extra_index(name);
  if (!idx) throw InvalidArgument("unknown extra scalar '" + name + "'");
  return params_(static_cast<Eigen::Index>(*idx));
}

DenseNetwork init_network(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  DenseNetwork net(layer_sizes);
  net.set_seed(seed);
  const CounterRng root(seed);
  for (int l = 0; l < net.n_layers(); ++l) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(l));
    const double limit = std::sqrt(6.0 / (layer_sizes[l] + layer_sizes[l + 1]));
    auto w = net.weight(l);
    double* data = w.data();
    for (Eigen::Index i = 0; i < w.size(); ++i) data[i] = rng.uniform(-limit, limit);
  }
  return net;
}

namespace {

// Builds the layer-0 input block [points | e_x | e_y].
Eigen::MatrixXd input_block(const Eigen::Ref<const Eigen::Matrix2Xd>& points) {
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd a(2, 3 * n);
  a.leftCols(n) = points;
  a.middleCols(n, n).row(0).setOnes();
  a.middleCols(n, n).row(1).setZero();
  a.rightCols(n).row(0).setZero();
  a.rightCols(n).row(1).setOnes();
  return a;
}

}  // namespace

EvalBatch forward_with_gradients(const DenseNetwork& net, const Eigen::Ref<const Eigen::Matrix2Xd>& points,
                                 ForwardCache* cache) {
  const Eigen::Index n = points.cols();
  const int n_layers = net.n_layers();
  if (cache) {
    cache->inputs.resize(static_cast<std::size_t>(n_layers));
    cache->n_points = n;
  }

  Eigen::MatrixXd a = input_block(points);
  Eigen::MatrixXd z;
  for (int l = 0; l < n_layers; ++l) {
    z.noalias() = net.weight(l) * a;
    z.leftCols(n).colwise() += net.bias(l);
    if (cache) {
      cache->inputs[static_cast<std::size_t>(l)] = std::move(a);
    }
    if (l + 1 == n_layers) break;
    // tanh on the value block; tangents scale by 1 - tanh^2.
    a.resize(z.rows(), 3 * n);
    a.leftCols(n) = z.leftCols(n).array().tanh();
    const Eigen::ArrayXXd d = 1.0 - a.leftCols(n).array().square();
    a.middleCols(n, n) = d * z.middleCols(n, n).array();
    a.rightCols(n) = d * z.rightCols(n).array();
  }

  EvalBatch batch;
  batch.u = z.leftCols(n);
  batch.du_dx = z.middleCols(n, n);
  batch.du_dy = z.rightCols(n);
  return batch;
}

Eigen::MatrixXd forward_values(const DenseNetwork& net, const Eigen::Ref<const Eigen::Matrix2Xd>& points) {
  Eigen::MatrixXd a = points;
  for (int l = 0; l < net.n_layers(); ++l) {
    Eigen::MatrixXd z = net.weight(l) * a;
    z.colwise() += net.bias(l);
    if (l + 1 == net.n_layers()) return z;
    a = z.array().tanh();
  }
  return a;
}

void backward(const DenseNetwork& net, const ForwardCache& cache, const BatchAdjoint& adjoint,
              Eigen::Ref<Eigen::VectorXd> grad) {
  const Eigen::Index n = cache.n_points;
  const int n_layers = net.n_layers();
  if (static_cast<int>(cache.inputs.size()) != n_layers || adjoint.u.cols() != n ||
      adjoint.u.rows() != net.n_outputs()) {
    throw InvalidArgument("backward: cache or adjoint does not match the network");
  }
  if (grad.size() != net.parameters().size()) throw InvalidArgument("backward: gradient size mismatch");

  Eigen::MatrixXd g(net.n_outputs(), 3 * n);
  g.leftCols(n) = adjoint.u;
  g.middleCols(n, n) = adjoint.du_dx;
  g.rightCols(n) = adjoint.du_dy;

  Eigen::MatrixXd ga;
  for (int l = n_layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& a = cache.inputs[static_cast<std::size_t>(l)];
    const auto rows = net.layer_sizes()[l + 1];
    const auto cols = net.layer_sizes()[l];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + net.weight_offset(l), rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + net.bias_offset(l), rows);
    gw.noalias() += g * a.transpose();
    gb += g.leftCols(n).rowwise().sum();
    if (l == 0) break;

    ga.noalias() = net.weight(l).transpose() * g;
    // a = [t | d*zx | d*zy] with t = tanh(z), d = 1 - t^2.
    const auto t = a.leftCols(n).array();
    const auto ax = a.middleCols(n, n).array();
    const auto ay = a.rightCols(n).array();
    const Eigen::ArrayXXd d = 1.0 - t.square();
    g.resize(ga.rows(), 3 * n);
    g.leftCols(n) = ga.leftCols(n).array() * d -
                    2.0 * t * (ga.middleCols(n, n).array() * ax + ga.rightCols(n).array() * ay);
    g.middleCols(n, n) = ga.middleCols(n, n).array() * d;
    g.rightCols(n) = ga.rightCols(n).array() * d;
  }
}

LossAndGradient loss_gradient(const DenseNetwork& net, const Eigen::Ref<const Eigen::Matrix2Xd>& points,
                              const LossEvaluator& evaluator, long epoch) {
  ForwardCache cache;
  const EvalBatch batch = forward_with_gradients(net, points, &cache);
  BatchAdjoint adjoint;
  adjoint.u = Eigen::MatrixXd::Zero(batch.u.rows(), batch.u.cols());
  adjoint.du_dx = adjoint.u;
  adjoint.du_dy = adjoint.u;

  LossAndGradient out;
  out.gradient = Eigen::VectorXd::Zero(net.parameters().size());
  out.loss = evaluator(batch, adjoint, out.gradient);
  if (!std::isfinite(out.loss)) {
    throw NumericError("non-finite loss" + (epoch >= 0 ? " at epoch " + std::to_string(epoch) : std::string()),
                       epoch);
  }
  backward(net, cache, adjoint, out.gradient);
  return out;
}

AdamState::AdamState(std::size_t n_params, double lr)
    : first_moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params))),
      second_moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params))),
      learning_rate(lr) {}

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw InvalidArgument("adam_step: parameter, gradient and moment sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double g = grads(i);
    double& m = state.first_moment(i);
    double& v = state.second_moment(i);
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    params(i) -= state.learning_rate * (m / c1) / (std::sqrt(v / c2) + state.epsilon);
  }
}

void save_checkpoint(const std::string& path, const DenseNetwork& net, long epoch) {
  nlohmann::json j;
  j["format"] = "hpvpinn-checkpoint";
  j["version"] = 1;
  j["layer_sizes"] = net.layer_sizes();
  j["seed"] = net.seed();
  j["epoch"] = epoch;
  const auto& p = net.parameters();
  j["parameters"] = std::vector<double>(p.data(), p.data() + net.n_network_parameters());
  j["extra_scalars"] = nlohmann::json::array();
  for (const auto& name : net.extra_names()) {
    j["extra_scalars"].push_back({{"name", name}, {"value", net.extra_scalar(name)}});
  }
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write checkpoint '" + path + "'");
  out << j.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read checkpoint '" + path + "'");
  const nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "hpvpinn-checkpoint" || j.value("version", 0) != 1) {
    throw InvalidArgument("'" + path + "' is not a version-1 hpvpinn checkpoint");
  }
  DenseNetwork net(j.at("layer_sizes").get<std::vector<int>>());
  net.set_seed(j.at("seed").get<std::uint64_t>());
  const auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != net.n_network_parameters()) throw InvalidArgument("checkpoint parameter count mismatch");
  std::copy(params.begin(), params.end(), net.parameters().data());
  for (const auto& e : j.at("extra_scalars")) {
    net.add_extra_scalar(e.at("name").get<std::string>(), e.at("value").get<double>());
  }
  return {std::move(net), j.at("epoch").get<long>()};
}

}  // namespace hpvpinn
