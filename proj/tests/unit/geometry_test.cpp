#include <cmath>

#include <gtest/gtest.h>

#include "hpvpinn/basis.hpp"
#include "hpvpinn/error.hpp"
#include "hpvpinn/geometry.hpp"
#include "hpvpinn/rng.hpp"

namespace hpvpinn {
namespace {

const QuadCell kSkewed({Point2{0, 0}, Point2{2, 0}, Point2{3, 2}, Point2{1, 1}});

double shoelace(const QuadCell& c) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point2 a = c.vertex(i), b = c.vertex((i + 1) % 4);
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

TEST(StructuredMesh, SingleCellIsTheSquare) {
  const Mesh m = build_structured_mesh(1, 1);
  ASSERT_EQ(m.n_elem(), 1u);
  EXPECT_EQ(m.cell(0).vertex(0), (Point2{0, 0}));
  EXPECT_EQ(m.cell(0).vertex(1), (Point2{1, 0}));
  EXPECT_EQ(m.cell(0).vertex(2), (Point2{1, 1}));
  EXPECT_EQ(m.cell(0).vertex(3), (Point2{0, 1}));
}

TEST(StructuredMesh, EightByEightCellAreas) {
  const Mesh m = build_structured_mesh(8, 8);
  ASSERT_EQ(m.n_elem(), 64u);
  for (const QuadCell& c : m.cells()) EXPECT_NEAR(shoelace(c), 1.0 / 64.0, 1e-15);
}

TEST(StructuredMesh, RectangleUnionArea) {
  const Mesh m = build_structured_mesh(2, 3, Rectangle{0, 2, 0, 3});
  ASSERT_EQ(m.n_elem(), 6u);
  double area = 0.0;
  for (const QuadCell& c : m.cells()) area += shoelace(c);
  EXPECT_NEAR(area, 6.0, 1e-14);
}

TEST(StructuredMesh, RejectsBadSizes) {
  EXPECT_THROW(build_structured_mesh(0, 2), InvalidArgument);
  EXPECT_THROW(build_structured_mesh(2, -1), InvalidArgument);
}

TEST(QuadCell, RejectsDegenerateAndClockwise) {
  EXPECT_THROW(QuadCell({Point2{0, 0}, Point2{1, 0}, Point2{2, 0}, Point2{3, 0}}), DegenerateCell);
  EXPECT_THROW(QuadCell({Point2{0, 0}, Point2{0, 1}, Point2{1, 1}, Point2{1, 0}}), DegenerateCell);
}

TEST(BilinearMap, CornersAndCentroid) {
  const Mesh m = build_structured_mesh(1, 1);
  EXPECT_EQ(bilinear_map(m.cell(0), {-1, -1}), (Point2{0, 0}));
  const Point2 c = bilinear_map(m.cell(0), {0, 0});
  EXPECT_DOUBLE_EQ(c.x, 0.5);
  EXPECT_DOUBLE_EQ(c.y, 0.5);
  const Point2 s = bilinear_map(kSkewed, {0, 0});
  EXPECT_DOUBLE_EQ(s.x, 1.5);
  EXPECT_DOUBLE_EQ(s.y, 0.75);
  for (int i = 0; i < 4; ++i) {
    const Point2 ref{i == 1 || i == 2 ? 1.0 : -1.0, i >= 2 ? 1.0 : -1.0};
    EXPECT_EQ(bilinear_map(kSkewed, ref), kSkewed.vertex(i));
  }
}

TEST(Jacobian, AxisAlignedScaling) {
  const QuadCell c({Point2{1, 2}, Point2{1.5, 2}, Point2{1.5, 2.25}, Point2{1, 2.25}});
  for (Point2 r : {Point2{0, 0}, Point2{-0.3, 0.8}, Point2{1, -1}}) {
    const JacobianInfo j = jacobian(c, r);
    EXPECT_DOUBLE_EQ(j.matrix[0][0], 0.25);
    EXPECT_DOUBLE_EQ(j.matrix[1][1], 0.125);
    EXPECT_NEAR(j.matrix[0][1], 0.0, 1e-15);
    EXPECT_NEAR(j.matrix[1][0], 0.0, 1e-15);
    EXPECT_NEAR(j.det, 0.5 * 0.25 / 4.0, 1e-15);
    const auto g = map_reference_gradient(j, {1, 1});
    EXPECT_NEAR(g[0], 2.0 / 0.5, 1e-13);
    EXPECT_NEAR(g[1], 2.0 / 0.25, 1e-13);
  }
  const JacobianInfo unit = jacobian(build_structured_mesh(1, 1).cell(0), {0.4, -0.7});
  EXPECT_DOUBLE_EQ(unit.det, 0.25);
}

TEST(Jacobian, IdentityScaledGradient) {
  const QuadCell ref_cell({Point2{-1, -1}, Point2{1, -1}, Point2{1, 1}, Point2{-1, 1}});
  const auto g = map_reference_gradient(jacobian(ref_cell, {0.2, 0.1}), {1, 0});
  EXPECT_DOUBLE_EQ(g[0], 1.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(Jacobian, MatchesFiniteDifferencesOfMap) {
  CounterRng rng(4);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const Point2 r{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const JacobianInfo j = jacobian(kSkewed, r);
    const Point2 xp = bilinear_map(kSkewed, {r.x + h, r.y}), xm = bilinear_map(kSkewed, {r.x - h, r.y});
    const Point2 yp = bilinear_map(kSkewed, {r.x, r.y + h}), ym = bilinear_map(kSkewed, {r.x, r.y - h});
    const double fd[2][2] = {{(xp.x - xm.x) / (2 * h), (yp.x - ym.x) / (2 * h)},
                             {(xp.y - xm.y) / (2 * h), (yp.y - ym.y) / (2 * h)}};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) EXPECT_NEAR(j.matrix[a][b], fd[a][b], 1e-6 * std::max(1.0, std::abs(fd[a][b])));
    }
    const double det = fd[0][0] * fd[1][1] - fd[0][1] * fd[1][0];
    EXPECT_NEAR(j.det, det, 1e-6 * std::abs(det));
  }
}

TEST(Jacobian, SkewedGradientMatchesChainRule) {
  // phi(xi, eta) = v_2(xi) v_1(eta); its physical x-derivative via finite differences in x.
  auto phi_ref = [](Point2 r) { return test_function_1d(2, r.x).value * test_function_1d(1, r.y).value; };
  const Point2 r0{0.0, 0.0};
  const JacobianInfo j = jacobian(kSkewed, r0);
  const auto grad_ref = std::array<double, 2>{test_function_1d(2, 0.0).derivative * test_function_1d(1, 0.0).value,
                                              test_function_1d(2, 0.0).value * test_function_1d(1, 0.0).derivative};
  const auto g = map_reference_gradient(j, grad_ref);
  // Invert the map locally by Newton to evaluate phi at physical offsets.
  auto inverse = [&](Point2 x) {
    Point2 r = r0;
    for (int it = 0; it < 50; ++it) {
      const Point2 m = bilinear_map(kSkewed, r);
      const JacobianInfo jj = jacobian(kSkewed, r);
      const double dx = x.x - m.x, dy = x.y - m.y;
      r.x += (jj.matrix[1][1] * dx - jj.matrix[0][1] * dy) / jj.det;
      r.y += (-jj.matrix[1][0] * dx + jj.matrix[0][0] * dy) / jj.det;
    }
    return r;
  };
  const Point2 x0 = bilinear_map(kSkewed, r0);
  const double h = 1e-6;
  const double fdx = (phi_ref(inverse({x0.x + h, x0.y})) - phi_ref(inverse({x0.x - h, x0.y}))) / (2 * h);
  const double fdy = (phi_ref(inverse({x0.x, x0.y + h})) - phi_ref(inverse({x0.x, x0.y - h}))) / (2 * h);
  EXPECT_NEAR(g[0], fdx, 1e-6 * std::max(1.0, std::abs(fdx)));
  EXPECT_NEAR(g[1], fdy, 1e-6 * std::max(1.0, std::abs(fdy)));
}

TEST(Jacobian, AffineGradientOfLinearFunction) {
  // phi(x) = 3x - 2y on a parallelogram: the mapped reference gradient is exactly (3, -2).
  const QuadCell c({Point2{0, 0}, Point2{2, 0.5}, Point2{2.5, 2}, Point2{0.5, 1.5}});
  const JacobianInfo j = jacobian(c, {0.3, -0.2});
  const std::array<double, 2> grad_ref{3 * j.matrix[0][0] - 2 * j.matrix[1][0], 3 * j.matrix[0][1] - 2 * j.matrix[1][1]};
  const auto g = map_reference_gradient(j, grad_ref);
  EXPECT_NEAR(g[0], 3.0, 1e-14);
  EXPECT_NEAR(g[1], -2.0, 1e-14);
}

TEST(Jacobian, QuadratureRecoversDomainArea) {
  const Rectangle dom{-1, 2, 0.5, 1.25};
  const Mesh m = build_structured_mesh(5, 3, dom);
  const QuadratureRule2D rule = tensor_rule_2d(gll_rule(4));
  double area = 0.0;
  for (const QuadCell& c : m.cells()) {
    for (int q = 0; q < rule.size(); ++q) area += rule.weights[q] * jacobian(c, rule.points[q]).det;
  }
  EXPECT_NEAR(area, dom.area(), 1e-12 * dom.area());
}

}  // namespace
}  // namespace hpvpinn
