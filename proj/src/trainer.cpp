#include "hpvpinn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "hpvpinn/basis.hpp"
#include "hpvpinn/geometry.hpp"

namespace hpvpinn {

namespace {

// Grid, exact values and (for fixed indicators) the ansatz, computed once per run.
class ErrorEvaluator {
 public:
  ErrorEvaluator(const BoundaryAnsatz& ansatz, const CDRProblem& problem, int grid_n)
      : ansatz_(ansatz), grid_(evaluation_grid(problem.domain, grid_n)) {
    if (!problem.exact) throw UnsupportedMetric("problem '" + problem.name + "' has no exact solution");
    exact_.resize(grid_.cols());
    for (Eigen::Index i = 0; i < grid_.cols(); ++i) exact_(i) = problem.exact->value({grid_(0, i), grid_(1, i)});
    adaptive_ = ansatz_.indicator && !used_scalar_slots(*ansatz_.indicator).empty();
    if (!adaptive_) field_ = sample_ansatz(ansatz_, {}, grid_);
  }

  ErrorMetric operator()(const DenseNetwork& net) const {
    const Eigen::MatrixXd raw = forward_values(net, grid_);
    AnsatzField scratch;
    if (adaptive_) scratch = sample_ansatz(ansatz_, indicator_scalars(net), grid_);
    const AnsatzField& f = adaptive_ ? scratch : field_;
    double sum = 0.0;
    double max = 0.0;
    for (Eigen::Index i = 0; i < grid_.cols(); ++i) {
      const double u = f.j(i) + f.h(i) * raw(0, i);
      const double d = std::abs(exact_(i) - u);
      sum += d * d;
      max = std::max(max, d);
    }
    return {std::sqrt(sum / static_cast<double>(grid_.cols())), max};
  }

 private:
  const BoundaryAnsatz& ansatz_;
  Eigen::Matrix2Xd grid_;
  Eigen::VectorXd exact_;
  bool adaptive_ = false;
  AnsatzField field_;
};

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void validate_training_config(const TrainingConfig& c) {
  if (c.problem != "eriksson_johnson" && c.problem != "outflow_layer" && c.problem != "parabolic_layer") {
    throw ConfigError("unknown problem '" + c.problem + "'");
  }
  if (c.nx < 1 || c.ny < 1) throw ConfigError("mesh dimensions must be positive");
  if (c.n_quad_per_dim < 2) throw ConfigError("n_quad_per_dim must be at least 2");
  if (c.n_test_per_dim < 1) throw ConfigError("n_test_per_dim must be positive");
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (c.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (c.eval_every < 1) throw ConfigError("eval_every must be positive");
  if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (c.layer_sizes.size() < 2 || c.layer_sizes.front() != 2) {
    throw ConfigError("layer_sizes must start with 2 and have an output layer");
  }
  for (int w : c.layer_sizes) {
    if (w < 1) throw ConfigError("layer widths must be positive");
  }
  if (c.indicator == IndicatorChoice::custom) {
    for (double k : c.custom_kappa) {
      if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("custom indicator slopes must be positive");
    }
  }
  validate_loss_config(c.loss, c.layer_sizes.back());
}

BoundaryAnsatz make_ansatz(const TrainingConfig& config, const CDRProblem& problem) {
  BoundaryAnsatz ansatz;
  ansatz.extension = extension_for(problem);
  switch (config.indicator) {
    case IndicatorChoice::none: break;
    case IndicatorChoice::symmetric: ansatz.indicator = indicator_preset(problem, IndicatorPreset::symmetric); break;
    case IndicatorChoice::modified: ansatz.indicator = indicator_preset(problem, IndicatorPreset::modified); break;
    case IndicatorChoice::adaptive: ansatz.indicator = indicator_preset(problem, IndicatorPreset::adaptive); break;
    case IndicatorChoice::custom: ansatz.indicator = ProductExp{config.custom_kappa}; break;
  }
  if (!ansatz.indicator) ansatz.extension = {};
  return ansatz;
}

DenseNetwork make_network(const TrainingConfig& config, const BoundaryAnsatz& ansatz, const CDRProblem& problem) {
  DenseNetwork net = init_network(config.layer_sizes, config.seed);
  if (ansatz.indicator) {
    attach_indicator_scalars(net, *ansatz.indicator, config.initial_scalars.value_or(adaptive_initial_scalars(problem)));
  }
  return net;
}

VariationalObjective make_objective(const TrainingConfig& config, const CDRProblem& problem,
                                    const BoundaryAnsatz& ansatz) {
  const Mesh mesh = build_structured_mesh(config.nx, config.ny, problem.domain);
  const QuadratureRule2D rule = tensor_rule_2d(gll_rule(config.n_quad_per_dim));
  const TestFunctionSet tests(config.n_test_per_dim);
  return VariationalObjective(precompute_tensors(mesh, rule, tests, problem), problem, ansatz, config.loss);
}

Eigen::Matrix2Xd evaluation_grid(const Rectangle& domain, int n) {
  if (n < 2) throw InvalidArgument("evaluation grid needs at least 2 points per direction");
  Eigen::Matrix2Xd pts(2, static_cast<Eigen::Index>(n) * n);
  const double hx = (domain.x_max - domain.x_min) / (n - 1);
  const double hy = (domain.y_max - domain.y_min) / (n - 1);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index idx = static_cast<Eigen::Index>(j) * n + i;
      pts(0, idx) = i == n - 1 ? domain.x_max : domain.x_min + i * hx;
      pts(1, idx) = j == n - 1 ? domain.y_max : domain.y_min + j * hy;
    }
  }
  return pts;
}

ErrorMetric evaluate_errors(const DenseNetwork& net, const BoundaryAnsatz& ansatz, const CDRProblem& problem,
                            int grid_n) {
  return ErrorEvaluator(ansatz, problem, grid_n)(net);
}

TrainingRecord train(const TrainingConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  validate_training_config(config);
  const CDRProblem problem = make_problem(config.problem, config.epsilon);
  const BoundaryAnsatz ansatz = make_ansatz(config, problem);
  DenseNetwork net = make_network(config, ansatz, problem);
  const VariationalObjective objective = make_objective(config, problem, ansatz);
  std::optional<ErrorEvaluator> errors;
  if (problem.exact) errors.emplace(ansatz, problem, 100);

  TrainingRecord record;
  record.loss_history.reserve(static_cast<std::size_t>(config.epochs));
  if (ansatz.indicator) record.scalar_slots = used_scalar_slots(*ansatz.indicator);
  record.initial_scalars = indicator_scalars(net);
  record.best_l2_err = std::numeric_limits<double>::quiet_NaN();

  auto record_error = [&](long epoch) {
    if (!errors) return;
    const ErrorMetric m = (*errors)(net);
    record.error_history.push_back({epoch, m.l2, m.linf});
    if (record.best_epoch < 0 || m.l2 < record.best_l2_err) {
      record.best_l2_err = m.l2;
      record.best_epoch = epoch;
      record.best_network = net;
    }
  };
  auto finish = [&]() {
    record.final_scalars = indicator_scalars(net);
    record.final_network = net;
    if (!errors) record.best_network = net;
    record.wall_time = elapsed_seconds(start);
  };

  record_error(0);
  AdamState adam(static_cast<std::size_t>(net.parameters().size()), config.learning_rate);
  for (long e = 0; e < config.epochs; ++e) {
    LossAndGradient step;
    try {
      step = objective.evaluate(net, e);
    } catch (const NumericError& err) {
      const double last = record.loss_history.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                      : record.loss_history.back();
      finish();
      throw TrainingAborted(std::string(err.what()) + " (last finite loss " + std::to_string(last) + ")", e, last,
                            std::move(record));
    }
    record.loss_history.push_back(step.loss);
    adam_step(adam, net.parameters(), step.gradient);
    if ((e + 1) % config.eval_every == 0 || e + 1 == config.epochs) record_error(e + 1);
  }
  finish();
  return record;
}

namespace {

TrainingConfig with_param(TrainingConfig config, SweepParam param, double value) {
  switch (param) {
    case SweepParam::tau:
      if (config.loss.mode == LossMode::variational) config.loss.mode = LossMode::supg_const;
      config.loss.tau_const = value;
      break;
    case SweepParam::tau_growth: config.loss.tau_growth = value; break;
    case SweepParam::lambda:
      if (config.loss.mode == LossMode::variational) config.loss.mode = LossMode::l2reg;
      config.loss.lambda = value;
      break;
  }
  return config;
}

}  // namespace

MultiSeedResult multi_seed(const TrainingConfig& config, int n_seeds) {
  if (n_seeds < 1) throw InvalidArgument("need at least one seed");
  MultiSeedResult out;
  std::vector<double> best;
  for (int s = 0; s < n_seeds; ++s) {
    TrainingConfig c = config;
    c.seed = static_cast<std::uint64_t>(s);
    try {
      out.records.push_back(train(c));
      best.push_back(out.records.back().best_l2_err);
    } catch (const NumericError&) {
      ++out.n_failed;
    }
  }
  if (best.empty()) {
    out.mean = out.min = out.max = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double sum = 0.0;
  for (double b : best) sum += b;
  out.mean = sum / static_cast<double>(best.size());
  out.min = *std::min_element(best.begin(), best.end());
  out.max = *std::max_element(best.begin(), best.end());
  return out;
}

std::vector<SweepRow> sweep_tau(const TrainingConfig& base, SweepParam param, const std::vector<double>& values,
                                int seeds_per_value) {
  if (values.empty()) throw InvalidArgument("sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (double v : values) {
    const MultiSeedResult r = multi_seed(with_param(base, param, v), seeds_per_value);
    SweepRow row;
    row.value = v;
    row.mean = r.mean;
    row.min = r.min;
    row.max = r.max;
    row.n_ok = static_cast<int>(r.records.size());
    row.n_failed = r.n_failed;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hpvpinn
