#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "hpvpinn/geometry.hpp"
#include "hpvpinn/problems.hpp"

namespace hpvpinn {

/// Edges of the unit square, in the order the indicator factors are written.
enum class Edge { left = 0, bottom = 1, right = 2, top = 3 };

/// Names of the learnable indicator exponents, indexed by AdaptiveExp slots.
inline const std::array<std::string, 3> kIndicatorScalarNames{"alpha", "beta", "gamma"};

/// h = (1 - e^{-k_l x})(1 - e^{-k_b y})(1 - e^{-k_r (1-x)})(1 - e^{-k_t (1-y)}).
struct ProductExp {
  std::array<double, 4> kappa{};  ///< per Edge
};

/// Same product form with k_edge = 10^{s[slot(edge)]}, s = (alpha, beta, gamma).
struct AdaptiveExp {
  std::array<int, 4> slot{};  ///< per Edge, index into (alpha, beta, gamma)
};

using IndicatorFunction = std::variant<ProductExp, AdaptiveExp>;

/// Slots of (alpha, beta, gamma) referenced by the indicator; empty for ProductExp.
std::vector<int> used_scalar_slots(const IndicatorFunction& ind);

struct IndicatorValue {
  double h = 0.0;
  double dh_dx = 0.0;
  double dh_dy = 0.0;
  /// Derivatives of h, dh/dx, dh/dy with respect to (alpha, beta, gamma).
  std::array<double, 3> dh_ds{};
  std::array<double, 3> dhx_ds{};
  std::array<double, 3> dhy_ds{};
};

/// Exponent arguments below -700 evaluate to exactly 0 (and contribute no
/// derivative), so e.g. kappa = 1e9 is safe away from the boundary.
IndicatorValue indicator_eval(const IndicatorFunction& ind, const std::array<double, 3>& scalars, Point2 p);

/// Closed-form lift of the Dirichlet data.
struct ExtensionFunction {
  enum class Kind { zero, sin_pi_y_cos_half_pi_x };
  Kind kind = Kind::zero;
};

struct ExtensionValue {
  double j = 0.0;
  double dj_dx = 0.0;
  double dj_dy = 0.0;
};

ExtensionValue extension_eval(const ExtensionFunction& ext, Point2 p);

/// w = tanh(s x) tanh(s y) tanh(s (1-x)) tanh(s (1-y)), s = 50.
struct TauMask {
  double scale = 50.0;
};

ExtensionValue tau_mask_eval(const TauMask& mask, Point2 p);

/// Numerically stable logistic function.
double sigmoid(double z);

/// Hard-constrained ansatz. Without an indicator the network output is used
/// unchanged (soft boundary runs).
struct BoundaryAnsatz {
  std::optional<IndicatorFunction> indicator;
  ExtensionFunction extension;
};

/// Indicator and extension sampled on a point set.
struct AnsatzField {
  Eigen::VectorXd h, h_x, h_y;
  Eigen::VectorXd j, j_x, j_y;
  /// 3 x n derivatives of h, h_x, h_y w.r.t. (alpha, beta, gamma).
  Eigen::Matrix3Xd h_s, h_x_s, h_y_s;
};

AnsatzField sample_ansatz(const BoundaryAnsatz& ansatz, const std::array<double, 3>& scalars,
                          const Eigen::Ref<const Eigen::Matrix2Xd>& points);

struct HardFields {
  Eigen::VectorXd u, u_x, u_y;
};

/// u_hard = j + h u_NN and its gradient by the product rule.
HardFields hard_ansatz(const AnsatzField& field, const Eigen::Ref<const Eigen::VectorXd>& u_nn,
                       const Eigen::Ref<const Eigen::VectorXd>& du_dx, const Eigen::Ref<const Eigen::VectorXd>& du_dy);

struct TauField {
  Eigen::VectorXd tau;
  Eigen::VectorXd dtau_dtilde;  ///< derivative w.r.t. the pre-sigmoid head
};

/// tau = tau_growth * w(x) * sigmoid(tau_tilde).
TauField tau_field(const Eigen::Ref<const Eigen::VectorXd>& tau_tilde, const TauMask& mask, double tau_growth,
                   const Eigen::Ref<const Eigen::Matrix2Xd>& points);

enum class IndicatorPreset {
  symmetric,  ///< kappa = 10/eps on every edge
  modified,   ///< gentle slope (30) on inflow-type edges, 10/eps elsewhere
  adaptive,   ///< learnable exponents
};

IndicatorFunction indicator_preset(const CDRProblem& problem, IndicatorPreset preset);
ExtensionFunction extension_for(const CDRProblem& problem);

/// Starting (alpha, beta, gamma) for the adaptive preset.
std::array<double, 3> adaptive_initial_scalars(const CDRProblem& problem);

}  // namespace hpvpinn
