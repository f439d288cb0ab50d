#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hpvpinn/boundary.hpp"
#include "hpvpinn/error.hpp"
#include "hpvpinn/loss.hpp"
#include "hpvpinn/network.hpp"
#include "hpvpinn/problems.hpp"

namespace hpvpinn {

/// Which indicator the hard constraint uses. `none` trains u_NN directly
/// (usually together with a soft boundary loss); `custom` uses custom_kappa.
enum class IndicatorChoice { none, symmetric, modified, adaptive, custom };

struct TrainingConfig {
  std::string problem = "eriksson_johnson";
  double epsilon = 0.1;
  int nx = 4;
  int ny = 4;
  int n_quad_per_dim = 5;
  int n_test_per_dim = 3;
  std::vector<int> layer_sizes{2, 20, 20, 20, 20, 1};
  double learning_rate = 1.25e-3;
  long epochs = 5000;
  std::uint64_t seed = 0;
  LossConfig loss;
  IndicatorChoice indicator = IndicatorChoice::modified;
  std::array<double, 4> custom_kappa{};  ///< left, bottom, right, top
  /// Starting (alpha, beta, gamma) for the adaptive indicator; problem default when unset.
  std::optional<std::array<double, 3>> initial_scalars;
  long eval_every = 100;
};

/// Throws ConfigError for non-positive counts, learning rate, or an
/// inconsistent loss/network combination.
void validate_training_config(const TrainingConfig& config);

struct ErrorMetric {
  double l2 = 0.0;
  double linf = 0.0;
};

struct ErrorSample {
  long epoch = 0;
  double l2 = 0.0;
  double linf = 0.0;
};

struct TrainingRecord {
  std::vector<double> loss_history;  ///< loss before update e, e = 0..epochs-1
  std::vector<ErrorSample> error_history;
  double best_l2_err = 0.0;  ///< NaN when the problem has no exact solution
  long best_epoch = -1;
  std::optional<DenseNetwork> best_network;
  std::optional<DenseNetwork> final_network;
  std::vector<int> scalar_slots;  ///< learnable indicator exponents in use
  std::array<double, 3> initial_scalars{};
  std::array<double, 3> final_scalars{};
  double wall_time = 0.0;  ///< seconds
};

/// Training stopped on a non-finite loss. Carries the record up to that point.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, long epoch, double last_finite_loss, TrainingRecord partial)
      : NumericError(what, epoch), last_finite_loss_(last_finite_loss),
        partial_(std::make_shared<TrainingRecord>(std::move(partial))) {}

  double last_finite_loss() const noexcept { return last_finite_loss_; }
  const TrainingRecord& partial() const noexcept { return *partial_; }

 private:
  double last_finite_loss_;
  std::shared_ptr<TrainingRecord> partial_;
};

/// The hard-constraint ansatz a config selects for a problem.
BoundaryAnsatz make_ansatz(const TrainingConfig& config, const CDRProblem& problem);

/// Network initialized from config.seed with indicator scalars attached.
DenseNetwork make_network(const TrainingConfig& config, const BoundaryAnsatz& ansatz, const CDRProblem& problem);

/// Objective on the config's structured mesh.
VariationalObjective make_objective(const TrainingConfig& config, const CDRProblem& problem,
                                    const BoundaryAnsatz& ansatz);

/// Points (i/(n-1), j/(n-1)) of the closed domain, x fastest.
Eigen::Matrix2Xd evaluation_grid(const Rectangle& domain, int n = 100);

/// RMS and max-abs of u - u_hard on the 100 x 100 grid. Throws
/// UnsupportedMetric when the problem has no exact solution.
ErrorMetric evaluate_errors(const DenseNetwork& net, const BoundaryAnsatz& ansatz, const CDRProblem& problem,
                            int grid_n = 100);

/// Full-batch Adam training. Deterministic for a fixed config.
TrainingRecord train(const TrainingConfig& config);

enum class SweepParam { tau, tau_growth, lambda };

struct SweepRow {
  double value = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  int n_ok = 0;
  int n_failed = 0;
};

/// For each value, trains seeds 0..seeds-1 and aggregates best_l2_err. Failed
/// runs are counted and skipped.
std::vector<SweepRow> sweep_tau(const TrainingConfig& base, SweepParam param, const std::vector<double>& values,
                                int seeds_per_value);

struct MultiSeedResult {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<TrainingRecord> records;
  int n_failed = 0;
};

MultiSeedResult multi_seed(const TrainingConfig& config, int n_seeds);

}  // namespace hpvpinn
