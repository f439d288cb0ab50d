#include "hpvpinn/geometry.hpp"

#include <cmath>
#include <string>

#include "hpvpinn/error.hpp"

namespace hpvpinn {

namespace {

constexpr std::array<Point2, 4> kReferenceCorners{{{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}}};
constexpr double kMinDet = 1e-14;

std::array<std::array<double, 2>, 2> jacobian_matrix(const QuadCell& cell, Point2 ref) {
  const auto dn = bilinear_shape_gradient(ref);
  std::array<std::array<double, 2>, 2> m{};
  for (int i = 0; i < 4; ++i) {
    const Point2& v = cell.vertex(i);
    m[0][0] += dn[i][0] * v.x;
    m[0][1] += dn[i][1] * v.x;
    m[1][0] += dn[i][0] * v.y;
    m[1][1] += dn[i][1] * v.y;
  }
  return m;
}

}  // namespace

QuadCell::QuadCell(const std::array<Point2, 4>& vertices) : vertices_(vertices) {
  if (!(signed_area() > 0.0)) {
    throw DegenerateCell("quad cell is not counter-clockwise (signed area " +
                         std::to_string(signed_area()) + ")");
  }
  for (const Point2& corner : kReferenceCorners) {
    const auto m = jacobian_matrix(*this, corner);
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (!(det > kMinDet)) {
      throw DegenerateCell("quad cell is non-convex or degenerate at a corner (det " +
                           std::to_string(det) + ")");
    }
  }
}

double QuadCell::signed_area() const {
  double twice = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point2& a = vertices_[i];
    const Point2& b = vertices_[(i + 1) % 4];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

bool QuadCell::is_parallelogram(double tol) const {
  // v0 - v1 + v2 - v3 is the coefficient of xi*eta in the bilinear map.
  const double cx = vertices_[0].x - vertices_[1].x + vertices_[2].x - vertices_[3].x;
  const double cy = vertices_[0].y - vertices_[1].y + vertices_[2].y - vertices_[3].y;
  const double scale = std::abs(signed_area()) + 1.0;
  return std::abs(cx) <= tol * scale && std::abs(cy) <= tol * scale;
}

Mesh::Mesh(std::vector<QuadCell> cells, Rectangle bounds)
    : cells_(std::move(cells)), bounds_(bounds) {}

Mesh build_structured_mesh(int nx, int ny, const Rectangle& bounds) {
  if (nx < 1 || ny < 1) {
    throw InvalidArgument("structured mesh needs nx >= 1 and ny >= 1");
  }
  if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) {
    throw InvalidArgument("structured mesh bounds are degenerate");
  }
  const double hx = (bounds.x_max - bounds.x_min) / nx;
  const double hy = (bounds.y_max - bounds.y_min) / ny;
  std::vector<QuadCell> cells;
  cells.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    const double y0 = bounds.y_min + j * hy;
    const double y1 = (j + 1 == ny) ? bounds.y_max : bounds.y_min + (j + 1) * hy;
    for (int i = 0; i < nx; ++i) {
      const double x0 = bounds.x_min + i * hx;
      const double x1 = (i + 1 == nx) ? bounds.x_max : bounds.x_min + (i + 1) * hx;
      cells.emplace_back(std::array<Point2, 4>{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}});
    }
  }
  return Mesh(std::move(cells), bounds);
}

std::array<double, 4> bilinear_shape(Point2 ref) {
  const double xi = ref.x;
  const double eta = ref.y;
  return {0.25 * (1.0 - xi) * (1.0 - eta), 0.25 * (1.0 + xi) * (1.0 - eta),
          0.25 * (1.0 + xi) * (1.0 + eta), 0.25 * (1.0 - xi) * (1.0 + eta)};
}

std::array<std::array<double, 2>, 4> bilinear_shape_gradient(Point2 ref) {
  const double xi = ref.x;
  const double eta = ref.y;
  return {{{-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)},
           {0.25 * (1.0 - eta), -0.25 * (1.0 + xi)},
           {0.25 * (1.0 + eta), 0.25 * (1.0 + xi)},
           {-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)}}};
}

Point2 bilinear_map(const QuadCell& cell, Point2 ref) {
  const auto n = bilinear_shape(ref);
  Point2 p;
  for (int i = 0; i < 4; ++i) {
    p.x += n[i] * cell.vertex(i).x;
    p.y += n[i] * cell.vertex(i).y;
  }
  return p;
}

JacobianInfo jacobian(const QuadCell& cell, Point2 ref) {
  JacobianInfo info;
  info.matrix = jacobian_matrix(cell, ref);
  const auto& m = info.matrix;
  info.det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  if (!(info.det > kMinDet)) {
    throw DegenerateCell("Jacobian determinant " + std::to_string(info.det) + " at reference point (" +
                         std::to_string(ref.x) + ", " + std::to_string(ref.y) + ")");
  }
  const double inv_det = 1.0 / info.det;
  // inverse = [m11 -m01; -m10 m00] / det, transposed
  info.inverse_transpose = {{{m[1][1] * inv_det, -m[1][0] * inv_det},
                             {-m[0][1] * inv_det, m[0][0] * inv_det}}};
  return info;
}

std::array<double, 2> map_reference_gradient(const JacobianInfo& jac, std::array<double, 2> grad_ref) {
  const auto& t = jac.inverse_transpose;
  return {t[0][0] * grad_ref[0] + t[0][1] * grad_ref[1], t[1][0] * grad_ref[0] + t[1][1] * grad_ref[1]};
}

}  // namespace hpvpinn
