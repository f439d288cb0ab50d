#include "hpvpinn/boundary.hpp"

#include <cmath>
#include <numbers>

#include "hpvpinn/error.hpp"

namespace hpvpinn {

namespace {

// Value with derivatives w.r.t. (alpha, beta, gamma).
struct Dual {
  double v = 0.0;
  std::array<double, 3> d{};
};

Dual operator*(const Dual& a, const Dual& b) {
  Dual r{a.v * b.v, {}};
  for (int s = 0; s < 3; ++s) r.d[s] = a.d[s] * b.v + a.v * b.d[s];
  return r;
}

Dual operator+(const Dual& a, const Dual& b) {
  Dual r{a.v + b.v, {}};
  for (int s = 0; s < 3; ++s) r.d[s] = a.d[s] + b.d[s];
  return r;
}

// One edge factor F = 1 - exp(-kappa * dist) and its derivative along the
// coordinate normal to the edge, dF/dcoord = orient * kappa * exp(-kappa * dist).
struct EdgeFactor {
  Dual value;
  Dual slope;
};

EdgeFactor edge_factor(const Dual& kappa, double dist, double orient) {
  EdgeFactor out;
  const double arg = -kappa.v * dist;
  if (arg < -700.0) {
    out.value.v = 1.0;
    return out;
  }
  const double e = std::exp(arg);
  Dual ed{e, {}};
  for (int s = 0; s < 3; ++s) ed.d[s] = -dist * e * kappa.d[s];
  out.value.v = 1.0 - e;
  for (int s = 0; s < 3; ++s) out.value.d[s] = -ed.d[s];
  Dual ke = kappa * ed;
  out.slope.v = orient * ke.v;
  for (int s = 0; s < 3; ++s) out.slope.d[s] = orient * ke.d[s];
  return out;
}

std::array<Dual, 4> edge_kappas(const IndicatorFunction& ind, const std::array<double, 3>& scalars) {
  std::array<Dual, 4> kappa;
  if (const auto* fixed = std::get_if<ProductExp>(&ind)) {
    for (int e = 0; e < 4; ++e) kappa[e].v = fixed->kappa[e];
  } else {
    const auto& adaptive = std::get<AdaptiveExp>(ind);
    for (int e = 0; e < 4; ++e) {
      const int s = adaptive.slot[e];
      if (s < 0 || s > 2) throw InvalidArgument("adaptive indicator slot out of range");
      const double k = std::pow(10.0, scalars[s]);
      kappa[e].v = k;
      kappa[e].d[s] = k * std::numbers::ln10;
    }
  }
  for (const Dual& k : kappa) {
    if (!(k.v > 0.0) || !std::isfinite(k.v)) throw InvalidArgument("indicator slope must be positive and finite");
  }
  return kappa;
}

}  // namespace

std::vector<int> used_scalar_slots(const IndicatorFunction& ind) {
  std::vector<int> slots;
  if (const auto* adaptive = std::get_if<AdaptiveExp>(&ind)) {
    for (int s = 0; s < 3; ++s) {
      for (int e = 0; e < 4; ++e) {
        if (adaptive->slot[e] == s) {
          slots.push_back(s);
          break;
        }
      }
    }
  }
  return slots;
}

IndicatorValue indicator_eval(const IndicatorFunction& ind, const std::array<double, 3>& scalars, Point2 p) {
  const std::array<Dual, 4> kappa = edge_kappas(ind, scalars);
  const EdgeFactor left = edge_factor(kappa[0], p.x, 1.0);
  const EdgeFactor bottom = edge_factor(kappa[1], p.y, 1.0);
  const EdgeFactor right = edge_factor(kappa[2], 1.0 - p.x, -1.0);
  const EdgeFactor top = edge_factor(kappa[3], 1.0 - p.y, -1.0);

  const Dual fx = left.value * right.value;
  const Dual fy = bottom.value * top.value;
  const Dual h = fx * fy;
  const Dual hx = (left.slope * right.value + left.value * right.slope) * fy;
  const Dual hy = (bottom.slope * top.value + bottom.value * top.slope) * fx;

  IndicatorValue out;
  out.h = h.v;
  out.dh_dx = hx.v;
  out.dh_dy = hy.v;
  out.dh_ds = h.d;
  out.dhx_ds = hx.d;
  out.dhy_ds = hy.d;
  return out;
}

ExtensionValue extension_eval(const ExtensionFunction& ext, Point2 p) {
  switch (ext.kind) {
    case ExtensionFunction::Kind::zero: return {};
    case ExtensionFunction::Kind::sin_pi_y_cos_half_pi_x: {
      constexpr double pi = std::numbers::pi;
      const double sy = std::sin(pi * p.y);
      const double cy = std::cos(pi * p.y);
      const double sx = std::sin(0.5 * pi * p.x);
      const double cx = std::cos(0.5 * pi * p.x);
      return {sy * cx, -0.5 * pi * sy * sx, pi * cy * cx};
    }
  }
  return {};
}

ExtensionValue tau_mask_eval(const TauMask& mask, Point2 p) {
  const double s = mask.scale;
  const double t1 = std::tanh(s * p.x);
  const double t2 = std::tanh(s * p.y);
  const double t3 = std::tanh(s * (1.0 - p.x));
  const double t4 = std::tanh(s * (1.0 - p.y));
  const double d1 = s * (1.0 - t1 * t1);
  const double d2 = s * (1.0 - t2 * t2);
  const double d3 = -s * (1.0 - t3 * t3);
  const double d4 = -s * (1.0 - t4 * t4);
  return {t1 * t2 * t3 * t4, (d1 * t3 + t1 * d3) * t2 * t4, (d2 * t4 + t2 * d4) * t1 * t3};
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

AnsatzField sample_ansatz(const BoundaryAnsatz& ansatz, const std::array<double, 3>& scalars,
                          const Eigen::Ref<const Eigen::Matrix2Xd>& points) {
  const Eigen::Index n = points.cols();
  AnsatzField f;
  f.h.resize(n);
  f.h_x.resize(n);
  f.h_y.resize(n);
  f.j.resize(n);
  f.j_x.resize(n);
  f.j_y.resize(n);
  f.h_s = Eigen::Matrix3Xd::Zero(3, n);
  f.h_x_s = Eigen::Matrix3Xd::Zero(3, n);
  f.h_y_s = Eigen::Matrix3Xd::Zero(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 p{points(0, i), points(1, i)};
    if (ansatz.indicator) {
      const IndicatorValue iv = indicator_eval(*ansatz.indicator, scalars, p);
      f.h(i) = iv.h;
      f.h_x(i) = iv.dh_dx;
      f.h_y(i) = iv.dh_dy;
      for (int s = 0; s < 3; ++s) {
        f.h_s(s, i) = iv.dh_ds[s];
        f.h_x_s(s, i) = iv.dhx_ds[s];
        f.h_y_s(s, i) = iv.dhy_ds[s];
      }
      const ExtensionValue ev = extension_eval(ansatz.extension, p);
      f.j(i) = ev.j;
      f.j_x(i) = ev.dj_dx;
      f.j_y(i) = ev.dj_dy;
    } else {
      f.h(i) = 1.0;
      f.h_x(i) = 0.0;
      f.h_y(i) = 0.0;
      f.j(i) = 0.0;
      f.j_x(i) = 0.0;
      f.j_y(i) = 0.0;
    }
  }
  return f;
}

HardFields hard_ansatz(const AnsatzField& field, const Eigen::Ref<const Eigen::VectorXd>& u_nn,
                       const Eigen::Ref<const Eigen::VectorXd>& du_dx, const Eigen::Ref<const Eigen::VectorXd>& du_dy) {
  if (u_nn.size() != field.h.size() || du_dx.size() != u_nn.size() || du_dy.size() != u_nn.size()) {
    throw InvalidArgument("hard_ansatz: batch and point set are not aligned");
  }
  HardFields out;
  out.u = field.j.array() + field.h.array() * u_nn.array();
  out.u_x = field.j_x.array() + field.h_x.array() * u_nn.array() + field.h.array() * du_dx.array();
  out.u_y = field.j_y.array() + field.h_y.array() * u_nn.array() + field.h.array() * du_dy.array();
  return out;
}

TauField tau_field(const Eigen::Ref<const Eigen::VectorXd>& tau_tilde, const TauMask& mask, double tau_growth,
                   const Eigen::Ref<const Eigen::Matrix2Xd>& points) {
  if (!(tau_growth >= 0.0)) throw InvalidArgument("tau_growth must be non-negative");
  if (tau_tilde.size() != points.cols()) throw InvalidArgument("tau_field: batch and point set are not aligned");
  TauField out;
  out.tau.resize(tau_tilde.size());
  out.dtau_dtilde.resize(tau_tilde.size());
  for (Eigen::Index i = 0; i < tau_tilde.size(); ++i) {
    const double w = tau_mask_eval(mask, {points(0, i), points(1, i)}).j;
    const double s = sigmoid(tau_tilde(i));
    out.tau(i) = tau_growth * w * s;
    out.dtau_dtilde(i) = tau_growth * w * s * (1.0 - s);
  }
  return out;
}

IndicatorFunction indicator_preset(const CDRProblem& problem, IndicatorPreset preset) {
  const double steep = 10.0 / problem.epsilon;
  constexpr double gentle = 30.0;
  enum { L = 0, B = 1, R = 2, T = 3 };
  if (preset == IndicatorPreset::symmetric) return ProductExp{{steep, steep, steep, steep}};

  if (problem.name == "eriksson_johnson") {
    if (preset == IndicatorPreset::modified) return ProductExp{{gentle, gentle, steep, gentle}};
    AdaptiveExp a;
    a.slot[L] = 0;
    a.slot[B] = 0;
    a.slot[T] = 0;
    a.slot[R] = 1;
    return a;
  }
  if (problem.name == "outflow_layer") {
    if (preset == IndicatorPreset::modified) return ProductExp{{gentle, gentle, steep, steep}};
    AdaptiveExp a;
    a.slot[L] = 0;
    a.slot[B] = 0;
    a.slot[R] = 1;
    a.slot[T] = 1;
    return a;
  }
  if (problem.name == "parabolic_layer") {
    if (preset == IndicatorPreset::modified) return ProductExp{{gentle, steep, steep, steep}};
    AdaptiveExp a;
    a.slot[L] = 0;
    a.slot[B] = 1;
    a.slot[T] = 1;
    a.slot[R] = 2;
    return a;
  }
  throw InvalidArgument("no indicator presets for problem '" + problem.name + "'");
}

ExtensionFunction extension_for(const CDRProblem& problem) {
  ExtensionFunction ext;
  if (problem.name == "eriksson_johnson") ext.kind = ExtensionFunction::Kind::sin_pi_y_cos_half_pi_x;
  return ext;
}

std::array<double, 3> adaptive_initial_scalars(const CDRProblem& problem) {
  const double phi = -std::log10(problem.epsilon) / 2.0;
  if (problem.name == "parabolic_layer") {
    // Inlet slope starts at 10^2 for the smallest diffusion, 10 otherwise.
    const double alpha = problem.epsilon <= 1e-8 * (1.0 + 1e-12) ? 2.0 : 1.0;
    return {alpha, 0.0, phi};
  }
  return {1.0, phi, 0.0};
}

}  // namespace hpvpinn
