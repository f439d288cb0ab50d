#pragma once

#include <vector>

#include <Eigen/Core>

#include "hpvpinn/geometry.hpp"
#include "hpvpinn/problems.hpp"

namespace hpvpinn {

struct ValueDerivative {
  double value = 0.0;
  double derivative = 0.0;
};

/// P_k(x) and P_k'(x) by the Bonnet recurrence.
ValueDerivative legendre(int k, double x);

/// v_k = P_{k+1} - P_{k-1}, k >= 1. Vanishes at x = +-1.
ValueDerivative test_function_1d(int k, double x);

struct QuadratureRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order() const { return static_cast<int>(nodes.size()); }
};

/// n-point Gauss-Lobatto-Legendre rule on [-1,1]; exact up to degree 2n-3.
QuadratureRule1D gll_rule(int n);

struct QuadratureRule2D {
  std::vector<Point2> points;  ///< reference points, xi fastest
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

QuadratureRule2D tensor_rule_2d(const QuadratureRule1D& rule);

/// Tensor-product test functions v_{a}(xi) v_{b}(eta), a, b in 1..n_per_dim.
/// Flat index j = (b-1) * n_per_dim + (a-1).
class TestFunctionSet {
 public:
  explicit TestFunctionSet(int n_per_dim);

  int n_per_dim() const { return n_per_dim_; }
  int n_test() const { return n_per_dim_ * n_per_dim_; }
  int max_legendre_degree() const { return n_per_dim_ + 1; }

  /// Value and reference gradient (d/dxi, d/deta) of test function j.
  double value(int j, Point2 ref) const;
  std::array<double, 2> reference_gradient(int j, Point2 ref) const;

 private:
  int n_per_dim_;
};

enum class JacobianPath {
  automatic,  ///< constant-Jacobian path on parallelograms, per-point otherwise
  per_point,  ///< evaluate the bilinear Jacobian at every quadrature point
  constant,   ///< one Jacobian per cell; requires parallelogram cells
};

struct PrecomputeOptions {
  JacobianPath path = JacobianPath::automatic;
  /// Negates the inverse Jacobian when mapping gradients. Only used by the
  /// validation suite to check that the assembly property catches it.
  bool flip_jacobian_sign = false;
};

/// Stacked premultipliers. Each tensor is stored flat with index
/// (k * n_test + j) * n_quad + q, k the cell, j the test function, q the point.
struct PrecomputedTensors {
  int n_elem = 0;
  int n_test = 0;
  int n_quad = 0;

  std::vector<double> shape_val;  ///< w_q |det J| v_j
  std::vector<double> grad_x;     ///< w_q |det J| dv_j/dx
  std::vector<double> grad_y;     ///< w_q |det J| dv_j/dy

  Eigen::Matrix2Xd quad_points;  ///< physical points, column k * n_quad + q
  Eigen::VectorXd quad_weights;  ///< w_q |det J| per stacked point
  Eigen::VectorXd forcing;       ///< f at each stacked point
  Eigen::MatrixXd force;         ///< n_test x n_elem, sum_q w_q |det J| f v_j

  std::size_t n_points() const { return static_cast<std::size_t>(n_elem) * n_quad; }
  std::size_t tensor_index(int k, int j, int q) const {
    return (static_cast<std::size_t>(k) * n_test + j) * n_quad + q;
  }
};

PrecomputedTensors precompute_tensors(const Mesh& mesh, const QuadratureRule2D& rule,
                                      const TestFunctionSet& tests, const CDRProblem& problem,
                                      const PrecomputeOptions& options = {});

}  // namespace hpvpinn
