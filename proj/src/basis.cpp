#include "hpvpinn/basis.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hpvpinn/error.hpp"

namespace hpvpinn {

ValueDerivative legendre(int k, double x) {
  if (k < 0) throw InvalidArgument("Legendre degree must be non-negative");
  double p_prev = 1.0;  // P_0
  double d_prev = 0.0;
  if (k == 0) return {p_prev, d_prev};
  double p = x;  // P_1
  double d = 1.0;
  for (int n = 1; n < k; ++n) {
    const double p_next = ((2.0 * n + 1.0) * x * p - n * p_prev) / (n + 1.0);
    // P'_{n+1} = P'_{n-1} + (2n+1) P_n
    const double d_next = d_prev + (2.0 * n + 1.0) * p;
    p_prev = p;
    p = p_next;
    d_prev = d;
    d = d_next;
  }
  return {p, d};
}

ValueDerivative test_function_1d(int k, double x) {
  if (k < 1) throw InvalidArgument("test function index must be >= 1");
  const ValueDerivative hi = legendre(k + 1, x);
  const ValueDerivative lo = legendre(k - 1, x);
  return {hi.value - lo.value, hi.derivative - lo.derivative};
}

QuadratureRule1D gll_rule(int n) {
  if (n < 2) throw InvalidArgument("GLL rule needs at least 2 nodes");
  const int degree = n - 1;  // interior nodes are roots of P'_degree
  QuadratureRule1D rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  rule.nodes.front() = -1.0;
  rule.nodes.back() = 1.0;

  for (int i = 1; i < degree; ++i) {
    double x = -std::cos(std::numbers::pi * i / degree);
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
      const ValueDerivative p = legendre(degree, x);
      // (1 - x^2) P'' = 2x P' - N(N+1) P
      const double second = (2.0 * x * p.derivative - degree * (degree + 1.0) * p.value) / (1.0 - x * x);
      const double step = p.derivative / second;
      x -= step;
      if (std::abs(step) < 1e-14) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw NumericError("GLL Newton iteration did not converge for n = " + std::to_string(n));
    }
    rule.nodes[i] = x;
  }
  // Enforce exact antisymmetry of the node set.
  for (int i = 0; i < n / 2; ++i) {
    const double half = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    rule.nodes[i] = -half;
    rule.nodes[n - 1 - i] = half;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;

  for (int i = 0; i < n; ++i) {
    const double p = legendre(degree, rule.nodes[i]).value;
    rule.weights[i] = 2.0 / (degree * (degree + 1.0) * p * p);
  }
  return rule;
}

QuadratureRule2D tensor_rule_2d(const QuadratureRule1D& rule) {
  QuadratureRule2D out;
  const int n = rule.order();
  out.points.reserve(static_cast<std::size_t>(n) * n);
  out.weights.reserve(static_cast<std::size_t>(n) * n);
  for (int qy = 0; qy < n; ++qy) {
    for (int qx = 0; qx < n; ++qx) {
      out.points.push_back({rule.nodes[qx], rule.nodes[qy]});
      out.weights.push_back(rule.weights[qx] * rule.weights[qy]);
    }
  }
  return out;
}

TestFunctionSet::TestFunctionSet(int n_per_dim) : n_per_dim_(n_per_dim) {
  if (n_per_dim < 1) throw InvalidArgument("need at least one test function per dimension");
}

double TestFunctionSet::value(int j, Point2 ref) const {
  const int a = j % n_per_dim_ + 1;
  const int b = j / n_per_dim_ + 1;
  return test_function_1d(a, ref.x).value * test_function_1d(b, ref.y).value;
}

std::array<double, 2> TestFunctionSet::reference_gradient(int j, Point2 ref) const {
  const int a = j % n_per_dim_ + 1;
  const int b = j / n_per_dim_ + 1;
  const ValueDerivative vx = test_function_1d(a, ref.x);
  const ValueDerivative vy = test_function_1d(b, ref.y);
  return {vx.derivative * vy.value, vx.value * vy.derivative};
}

PrecomputedTensors precompute_tensors(const Mesh& mesh, const QuadratureRule2D& rule,
                                      const TestFunctionSet& tests, const CDRProblem& problem,
                                      const PrecomputeOptions& options) {
  PrecomputedTensors t;
  t.n_elem = static_cast<int>(mesh.n_elem());
  t.n_test = tests.n_test();
  t.n_quad = rule.size();
  if (t.n_elem == 0 || t.n_quad == 0) throw InvalidArgument("empty mesh or quadrature rule");

  const std::size_t tensor_size = static_cast<std::size_t>(t.n_elem) * t.n_test * t.n_quad;
  t.shape_val.assign(tensor_size, 0.0);
  t.grad_x.assign(tensor_size, 0.0);
  t.grad_y.assign(tensor_size, 0.0);
  t.quad_points.resize(2, static_cast<Eigen::Index>(t.n_points()));
  t.quad_weights.resize(static_cast<Eigen::Index>(t.n_points()));
  t.forcing.resize(static_cast<Eigen::Index>(t.n_points()));
  t.force = Eigen::MatrixXd::Zero(t.n_test, t.n_elem);

  // Reference values do not depend on the cell.
  std::vector<double> ref_val(static_cast<std::size_t>(t.n_test) * t.n_quad);
  std::vector<std::array<double, 2>> ref_grad(ref_val.size());
  for (int j = 0; j < t.n_test; ++j) {
    for (int q = 0; q < t.n_quad; ++q) {
      ref_val[j * t.n_quad + q] = tests.value(j, rule.points[q]);
      ref_grad[j * t.n_quad + q] = tests.reference_gradient(j, rule.points[q]);
    }
  }

  const double sign = options.flip_jacobian_sign ? -1.0 : 1.0;
  for (int k = 0; k < t.n_elem; ++k) {
    const QuadCell& cell = mesh.cell(k);
    bool constant = false;
    switch (options.path) {
      case JacobianPath::automatic: constant = cell.is_parallelogram(); break;
      case JacobianPath::per_point: constant = false; break;
      case JacobianPath::constant:
        if (!cell.is_parallelogram()) {
          throw InvalidArgument("constant-Jacobian path requested for a non-parallelogram cell");
        }
        constant = true;
        break;
    }
    const JacobianInfo cell_jac = constant ? jacobian(cell, {0.0, 0.0}) : JacobianInfo{};

    for (int q = 0; q < t.n_quad; ++q) {
      const Point2 ref = rule.points[q];
      const JacobianInfo jac = constant ? cell_jac : jacobian(cell, ref);
      JacobianInfo mapped = jac;
      for (auto& row : mapped.inverse_transpose) {
        for (double& v : row) v *= sign;
      }
      const Point2 x = bilinear_map(cell, ref);
      const double wdet = rule.weights[q] * std::abs(jac.det);
      const double fq = problem.f(x);
      const std::size_t point = static_cast<std::size_t>(k) * t.n_quad + q;
      t.quad_points(0, point) = x.x;
      t.quad_points(1, point) = x.y;
      t.quad_weights(point) = wdet;
      t.forcing(point) = fq;

      for (int j = 0; j < t.n_test; ++j) {
        const std::size_t idx = t.tensor_index(k, j, q);
        const double v = ref_val[j * t.n_quad + q];
        const auto g = map_reference_gradient(mapped, ref_grad[j * t.n_quad + q]);
        t.shape_val[idx] = wdet * v;
        t.grad_x[idx] = wdet * g[0];
        t.grad_y[idx] = wdet * g[1];
        t.force(j, k) += wdet * fq * v;
      }
    }
  }
  return t;
}

}  // namespace hpvpinn
