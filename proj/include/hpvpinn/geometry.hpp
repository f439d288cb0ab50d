#pragma once

#include <array>
#include <vector>

namespace hpvpinn {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Rectangle {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  static Rectangle unit_square() { return {}; }
};

/// Four-node quadrilateral, vertices counter-clockwise. Vertex i is the image
/// of reference corner i in the order (-1,-1), (1,-1), (1,1), (-1,1).
class QuadCell {
 public:
  /// Throws DegenerateCell when the cell is clockwise or the Jacobian
  /// determinant is not positive at every reference corner.
  explicit QuadCell(const std::array<Point2, 4>& vertices);

  const std::array<Point2, 4>& vertices() const { return vertices_; }
  const Point2& vertex(int i) const { return vertices_[i]; }

  /// Shoelace area.
  double signed_area() const;

  /// True when opposite edges are parallel, i.e. the bilinear map is affine
  /// and the Jacobian is constant over the cell.
  bool is_parallelogram(double tol = 1e-14) const;

 private:
  std::array<Point2, 4> vertices_;
};

struct JacobianInfo {
  /// matrix[r][c] = d(x,y)_r / d(xi,eta)_c
  std::array<std::array<double, 2>, 2> matrix{};
  double det = 0.0;
  std::array<std::array<double, 2>, 2> inverse_transpose{};
};

class Mesh {
 public:
  Mesh(std::vector<QuadCell> cells, Rectangle bounds);

  const std::vector<QuadCell>& cells() const { return cells_; }
  const QuadCell& cell(std::size_t k) const { return cells_[k]; }
  std::size_t n_elem() const { return cells_.size(); }
  const Rectangle& domain_bounds() const { return bounds_; }

 private:
  std::vector<QuadCell> cells_;
  Rectangle bounds_;
};

/// nx*ny axis-aligned cells, x index fastest.
Mesh build_structured_mesh(int nx, int ny, const Rectangle& bounds = Rectangle::unit_square());

/// Bilinear shape functions N_i(xi, eta) and their reference gradients.
std::array<double, 4> bilinear_shape(Point2 ref);
std::array<std::array<double, 2>, 4> bilinear_shape_gradient(Point2 ref);

Point2 bilinear_map(const QuadCell& cell, Point2 ref);

/// Throws DegenerateCell if det <= 1e-14.
JacobianInfo jacobian(const QuadCell& cell, Point2 ref);

/// Physical gradient from a reference-space gradient.
std::array<double, 2> map_reference_gradient(const JacobianInfo& jac, std::array<double, 2> grad_ref);

}  // namespace hpvpinn
