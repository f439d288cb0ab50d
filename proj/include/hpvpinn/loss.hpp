#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "hpvpinn/basis.hpp"
#include "hpvpinn/boundary.hpp"
#include "hpvpinn/geometry.hpp"
#include "hpvpinn/network.hpp"
#include "hpvpinn/problems.hpp"

namespace hpvpinn {

/// Entry (j, k): weak residual of test function j on cell k. N_test x N_elem.
using ResidualMatrix = Eigen::MatrixXd;

enum class LossMode { variational, supg_const, supg_learnt, l2reg };

/// How the SUPG matrix S enters the loss. in_residual squares (R + S);
/// separate adds mean_k |S_k|^2 next to mean_k |R_k|^2.
enum class SupgComposition { in_residual, separate };

struct SoftBoundary {
  double weight = 0.0;  ///< boundary_weight
  int n_boundary_points = 400;
};

struct LossConfig {
  LossMode mode = LossMode::variational;
  double tau_const = 0.0;
  double tau_growth = 1.0;
  double lambda = 0.0;
  SupgComposition composition = SupgComposition::in_residual;
  std::optional<SoftBoundary> soft_boundary;
};

/// Throws ConfigError for negative parameters or a head count that does not
/// fit the mode (learnt tau needs two heads, every other mode one).
void validate_loss_config(const LossConfig& config, int n_outputs);

/// Solution values at quadrature points, ordered like PrecomputedTensors
/// (point k * n_quad + q).
using QuadFields = HardFields;

/// Sum_q [eps grad u . grad v_j + (b . grad u) v_j + c u v_j] w_q |det J| - force(j, k).
ResidualMatrix assemble_residual(const PrecomputedTensors& tensors, const QuadFields& fields,
                                 const CDRProblem& problem);

/// Sum_q tau (b . grad u + c u - f)(b . grad v_j) w_q |det J|.
ResidualMatrix supg_residual(const PrecomputedTensors& tensors, const QuadFields& fields,
                             const Eigen::Ref<const Eigen::VectorXd>& tau, const CDRProblem& problem);

/// (1 / N_elem) * sum of squared entries.
double variational_loss(const ResidualMatrix& residual);

/// (lambda / N) * sum of squared weight-matrix entries, N their count.
double l2_weight_regularization(const DenseNetwork& net, double lambda);

/// n points spread uniformly along the perimeter of the domain, counterclockwise from (x_min, y_min).
Eigen::Matrix2Xd boundary_points(const Rectangle& domain, int n);

/// Current (alpha, beta, gamma) from the network's extra scalars; missing names read as 0.
std::array<double, 3> indicator_scalars(const DenseNetwork& net);

/// Adds the extra scalars the indicator needs, initialized from `initial`.
void attach_indicator_scalars(DenseNetwork& net, const IndicatorFunction& ind, const std::array<double, 3>& initial);

struct Prediction {
  Eigen::VectorXd u, u_x, u_y;  ///< hard-constrained solution
  Eigen::VectorXd h;            ///< indicator (1 without hard constraint)
  std::optional<Eigen::VectorXd> tau;
};

/// Evaluates the model (ansatz applied, and tau if the network has a second head).
Prediction predict(const DenseNetwork& net, const BoundaryAnsatz& ansatz, const Eigen::Ref<const Eigen::Matrix2Xd>& points,
                   double tau_growth = 1.0, const TauMask& mask = {});

struct LossBreakdown {
  double total = 0.0;
  double variational = 0.0;  ///< mean |R_k + S_k|^2 (or mean |R_k|^2 when separate)
  double supg = 0.0;         ///< separate composition only
  double regularization = 0.0;
  double boundary = 0.0;
};

/// Training objective on precomputed tensors: one network pass over all quadrature
/// points (plus soft-boundary points), tensor contractions, and exact gradients.
class VariationalObjective {
 public:
  VariationalObjective(PrecomputedTensors tensors, CDRProblem problem, BoundaryAnsatz ansatz, LossConfig config);

  /// Loss and gradient w.r.t. every trainable value. Throws NumericError on a
  /// non-finite loss, ConfigError if the network does not fit the config.
  LossAndGradient evaluate(const DenseNetwork& net, long epoch = -1) const;

  /// Loss components without the backward pass.
  LossBreakdown breakdown(const DenseNetwork& net) const;
  double loss(const DenseNetwork& net) const { return breakdown(net).total; }

  const PrecomputedTensors& tensors() const { return tensors_; }
  const CDRProblem& problem() const { return problem_; }
  const BoundaryAnsatz& ansatz() const { return ansatz_; }
  const LossConfig& config() const { return config_; }

 private:
  double run(const DenseNetwork& net, const EvalBatch& batch, BatchAdjoint* adjoint, Eigen::Ref<Eigen::VectorXd>* grad,
             LossBreakdown* parts) const;
  const AnsatzField& field_for(const DenseNetwork& net, AnsatzField& scratch) const;
  void check_network(const DenseNetwork& net) const;

  PrecomputedTensors tensors_;
  CDRProblem problem_;
  BoundaryAnsatz ansatz_;
  LossConfig config_;
  bool adaptive_ = false;
  Eigen::Matrix2Xd points_;  ///< quadrature points, then boundary points
  Eigen::Index n_quad_points_ = 0;
  Eigen::VectorXd boundary_g_;
  Eigen::VectorXd tau_mask_;  ///< w at quadrature points
  AnsatzField fixed_field_;   ///< cached when the indicator has no learnable scalars
};

/// Cell-by-cell reference evaluation of the same loss: the network is run per
/// cell and test functions, Jacobians and forcing are evaluated on the fly.
/// Used to benchmark and cross-check the tensor path.
double loop_reference_loss(const DenseNetwork& net, const Mesh& mesh, const QuadratureRule2D& rule,
                           const TestFunctionSet& tests, const CDRProblem& problem, const BoundaryAnsatz& ansatz,
                           const LossConfig& config);

}  // namespace hpvpinn
