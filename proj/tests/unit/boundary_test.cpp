#include <cmath>

#include <gtest/gtest.h>

#include "hpvpinn/boundary.hpp"
#include "hpvpinn/error.hpp"
#include "hpvpinn/loss.hpp"
#include "hpvpinn/rng.hpp"

namespace hpvpinn {
namespace {

double fd_rel_tol(double fd) { return 1e-6 * std::max(1.0, std::abs(fd)); }

TEST(Indicator, VanishesOnBoundary) {
  const IndicatorFunction ind = ProductExp{{30, 30, 30, 30}};
  EXPECT_EQ(indicator_eval(ind, {}, {0.0, 0.5}).h, 0.0);
  EXPECT_EQ(indicator_eval(ind, {}, {0.4, 1.0}).h, 0.0);
}

TEST(Indicator, ProductAtCenter) {
  const IndicatorFunction ind = ProductExp{{30, 30, 30, 30}};
  const double expected = std::pow(1.0 - std::exp(-15.0), 4);
  EXPECT_NEAR(indicator_eval(ind, {}, {0.5, 0.5}).h, expected, 1e-15);
  EXPECT_NEAR(expected, 0.99999877, 1e-8);
}

TEST(Indicator, AdaptiveMatchesProductAtLogSlopes) {
  const IndicatorFunction prod = ProductExp{{10, 1e3, 10, 1e3}};
  const IndicatorFunction adapt = AdaptiveExp{{0, 1, 0, 1}};
  CounterRng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Point2 p{rng.uniform(), rng.uniform()};
    const IndicatorValue a = indicator_eval(prod, {}, p);
    const IndicatorValue b = indicator_eval(adapt, {1.0, 3.0, 0.0}, p);
    EXPECT_NEAR(b.h, a.h, 1e-13 * std::abs(a.h));
    EXPECT_NEAR(b.dh_dx, a.dh_dx, 1e-13 * std::max(1.0, std::abs(a.dh_dx)));
    EXPECT_NEAR(b.dh_dy, a.dh_dy, 1e-13 * std::max(1.0, std::abs(a.dh_dy)));
  }
}

TEST(Indicator, PositiveInsideForSteepSlopes) {
  CounterRng rng(6);
  for (double k : {30.0, 1e4, 1e9}) {
    const IndicatorFunction ind = ProductExp{{k, 30, k, 30}};
    for (int i = 0; i < 10000; ++i) {
      const Point2 p{rng.uniform(1e-12, 1.0 - 1e-12), rng.uniform(1e-12, 1.0 - 1e-12)};
      EXPECT_GT(indicator_eval(ind, {}, p).h, 0.0);
    }
  }
}

TEST(Indicator, DerivativesMatchFiniteDifferences) {
  const IndicatorFunction ind = AdaptiveExp{{0, 1, 2, 1}};
  const std::array<double, 3> s{1.0, 1.3, 0.7};
  CounterRng rng(7);
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const Point2 p{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
    const IndicatorValue v = indicator_eval(ind, s, p);
    const double fx = (indicator_eval(ind, s, {p.x + h, p.y}).h - indicator_eval(ind, s, {p.x - h, p.y}).h) / (2 * h);
    const double fy = (indicator_eval(ind, s, {p.x, p.y + h}).h - indicator_eval(ind, s, {p.x, p.y - h}).h) / (2 * h);
    EXPECT_NEAR(v.dh_dx, fx, fd_rel_tol(fx));
    EXPECT_NEAR(v.dh_dy, fy, fd_rel_tol(fy));
    for (int k = 0; k < 3; ++k) {
      auto sp = s, sm = s;
      sp[k] += h;
      sm[k] -= h;
      const IndicatorValue a = indicator_eval(ind, sp, p), b = indicator_eval(ind, sm, p);
      const double fs = (a.h - b.h) / (2 * h);
      const double fxs = (a.dh_dx - b.dh_dx) / (2 * h);
      const double fys = (a.dh_dy - b.dh_dy) / (2 * h);
      EXPECT_NEAR(v.dh_ds[k], fs, fd_rel_tol(fs));
      EXPECT_NEAR(v.dhx_ds[k], fxs, fd_rel_tol(fxs));
      EXPECT_NEAR(v.dhy_ds[k], fys, fd_rel_tol(fys));
    }
  }
}

TEST(Indicator, AdaptiveInitialSlope) {
  const CDRProblem p = make_outflow_layer(1e-8);
  const IndicatorFunction ind = indicator_preset(p, IndicatorPreset::adaptive);
  const auto s = adaptive_initial_scalars(p);
  EXPECT_EQ(s[0], 1.0);
  // With alpha = 1 the left-edge slope is 10: compare against the product form.
  const IndicatorFunction ref = ProductExp{{10.0, 10.0, std::pow(10.0, s[1]), std::pow(10.0, s[1])}};
  const Point2 x{0.05, 0.3};
  EXPECT_NEAR(indicator_eval(ind, s, x).h, indicator_eval(ref, {}, x).h, 1e-13);
  EXPECT_EQ(used_scalar_slots(ind), (std::vector<int>{0, 1}));
}

TEST(Indicator, RejectsNonPositiveSlope) {
  EXPECT_THROW(indicator_eval(ProductExp{{0, 1, 1, 1}}, {}, {0.5, 0.5}), InvalidArgument);
}

TEST(HardAnsatz, BoundaryAndZeroNetwork) {
  const CDRProblem p = make_eriksson_johnson(0.1);
  const BoundaryAnsatz ansatz{indicator_preset(p, IndicatorPreset::modified), extension_for(p)};
  Eigen::Matrix2Xd pts(2, 4);
  pts << 0.0, 0.3, 1.0, 0.6, 0.5, 0.0, 0.2, 0.4;
  const AnsatzField f = sample_ansatz(ansatz, {}, pts);
  const Eigen::VectorXd u_nn = Eigen::VectorXd::Constant(4, 2.5);
  const HardFields hard = hard_ansatz(f, u_nn, Eigen::VectorXd::Ones(4), Eigen::VectorXd::Ones(4));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(hard.u(i), p.g({pts(0, i), pts(1, i)}), 1e-15);
  const HardFields zero = hard_ansatz(f, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4));
  EXPECT_EQ(zero.u, f.j);
  EXPECT_EQ(zero.u_x, f.j_x);
}

TEST(HardAnsatz, GradientMatchesFiniteDifferences) {
  const CDRProblem p = make_eriksson_johnson(0.1);
  BoundaryAnsatz ansatz{indicator_preset(p, IndicatorPreset::modified), extension_for(p)};
  DenseNetwork net = init_network({2, 8, 8, 1}, 2);
  CounterRng rng(3);
  Eigen::Matrix2Xd pts(2, 20);
  for (Eigen::Index i = 0; i < 20; ++i) pts.col(i) << rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9);
  const Prediction pr = predict(net, ansatz, pts);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < 20; ++i) {
    Eigen::Matrix2Xd q(2, 4);
    q.col(0) = pts.col(i) + Eigen::Vector2d(h, 0);
    q.col(1) = pts.col(i) - Eigen::Vector2d(h, 0);
    q.col(2) = pts.col(i) + Eigen::Vector2d(0, h);
    q.col(3) = pts.col(i) - Eigen::Vector2d(0, h);
    const Prediction s = predict(net, ansatz, q);
    const double fx = (s.u(0) - s.u(1)) / (2 * h), fy = (s.u(2) - s.u(3)) / (2 * h);
    EXPECT_NEAR(pr.u_x(i), fx, fd_rel_tol(fx));
    EXPECT_NEAR(pr.u_y(i), fy, fd_rel_tol(fy));
  }
}

TEST(HardAnsatz, ExactOnBoundaryForAllPresets) {
  const Eigen::Matrix2Xd pts = boundary_points(Rectangle::unit_square(), 400);
  for (const CDRProblem& p : {make_eriksson_johnson(0.1), make_outflow_layer(1e-8), make_parabolic_layer()}) {
    for (auto preset : {IndicatorPreset::symmetric, IndicatorPreset::modified, IndicatorPreset::adaptive}) {
      const BoundaryAnsatz ansatz{indicator_preset(p, preset), extension_for(p)};
      DenseNetwork net = init_network({2, 6, 1}, 1);
      attach_indicator_scalars(net, *ansatz.indicator, adaptive_initial_scalars(p));
      const Prediction pr = predict(net, ansatz, pts);
      for (Eigen::Index i = 0; i < pts.cols(); ++i) EXPECT_LE(std::abs(pr.u(i) - p.g({pts(0, i), pts(1, i)})), 1e-12);
    }
  }
}

TEST(Extension, EjBoundaryData) {
  const ExtensionFunction e{ExtensionFunction::Kind::sin_pi_y_cos_half_pi_x};
  const CDRProblem p = make_eriksson_johnson(0.1);
  for (double s : {0.1, 0.5, 0.8}) {
    EXPECT_NEAR(extension_eval(e, {0.0, s}).j, p.g({0.0, s}), 1e-12);
    EXPECT_NEAR(extension_eval(e, {1.0, s}).j, 0.0, 1e-15);
    EXPECT_NEAR(extension_eval(e, {s, 1.0}).j, 0.0, 1e-15);
  }
}

TEST(TauField, Values) {
  Eigen::Matrix2Xd pts(2, 3);
  pts << 0.5, 0.0, 0.3, 0.5, 0.7, 1.0;
  const TauField t = tau_field(Eigen::VectorXd::Zero(3), TauMask{}, 1.0, pts);
  EXPECT_NEAR(t.tau(0), 0.5 * std::pow(std::tanh(25.0), 4), 1e-16);
  EXPECT_EQ(t.tau(1), 0.0);
  EXPECT_EQ(t.tau(2), 0.0);
  const TauField off = tau_field(Eigen::VectorXd::Constant(3, 4.0), TauMask{}, 0.0, pts);
  EXPECT_EQ(off.tau.cwiseAbs().maxCoeff(), 0.0);
}

TEST(TauField, NonNegativeAndDerivative) {
  CounterRng rng(9);
  Eigen::Matrix2Xd pts(2, 100);
  Eigen::VectorXd z(100);
  for (Eigen::Index i = 0; i < 100; ++i) {
    pts.col(i) << rng.uniform(), rng.uniform();
    z(i) = rng.uniform(-40, 40);
  }
  const double h = 1e-6;
  const TauField t = tau_field(z, TauMask{}, 2.0, pts);
  const TauField tp = tau_field(z.array() + h, TauMask{}, 2.0, pts);
  const TauField tm = tau_field(z.array() - h, TauMask{}, 2.0, pts);
  for (Eigen::Index i = 0; i < 100; ++i) {
    EXPECT_GE(t.tau(i), 0.0);
    const double fd = (tp.tau(i) - tm.tau(i)) / (2 * h);
    EXPECT_NEAR(t.dtau_dtilde(i), fd, 1e-7);
  }
}

TEST(Sigmoid, Stable) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_DOUBLE_EQ(sigmoid(2.0) + sigmoid(-2.0), 1.0);
}

}  // namespace
}  // namespace hpvpinn
