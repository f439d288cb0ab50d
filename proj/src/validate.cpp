#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hpvpinn/cli.hpp"
#include "hpvpinn/error.hpp"
#include "hpvpinn/rng.hpp"

namespace hpvpinn {

namespace {

struct Property {
  std::string name;
  std::function<std::string()> check;  // empty string on success
};

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

std::string quadrature_exactness() {
  for (int n = 2; n <= 12; ++n) {
    const QuadratureRule1D rule = gll_rule(n);
    for (int d = 0; d <= 2 * n - 3; ++d) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += rule.weights[i] * std::pow(rule.nodes[i], d);
      const double exact = d % 2 == 1 ? 0.0 : 2.0 / (d + 1);
      if (std::abs(sum - exact) > 1e-12) {
        return "n = " + std::to_string(n) + ", degree " + std::to_string(d) + ": error " + std::to_string(sum - exact);
      }
    }
  }
  return {};
}

std::string test_function_zeros() {
  for (int k = 1; k <= 20; ++k) {
    for (double x : {-1.0, 1.0}) {
      if (std::abs(test_function_1d(k, x).value) > 1e-12) return "v_" + std::to_string(k) + " does not vanish at the edge";
    }
  }
  return {};
}

// Structured mesh whose interior vertices are moved by up to `jitter` of a cell width.
Mesh perturbed_mesh(int nx, int ny, double jitter, CounterRng& rng) {
  std::vector<Point2> v(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      Point2 p{static_cast<double>(i) / nx, static_cast<double>(j) / ny};
      if (i > 0 && i < nx) p.x += rng.uniform(-jitter, jitter) / nx;
      if (j > 0 && j < ny) p.y += rng.uniform(-jitter, jitter) / ny;
      v[static_cast<std::size_t>(j) * (nx + 1) + i] = p;
    }
  }
  std::vector<QuadCell> cells;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      auto at = [&](int a, int b) { return v[static_cast<std::size_t>(b) * (nx + 1) + a]; };
      cells.emplace_back(std::array<Point2, 4>{at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});
    }
  }
  return Mesh(std::move(cells), Rectangle::unit_square());
}

// Cell-by-cell residual with basis and Jacobian evaluated at each use.
ResidualMatrix loop_residual(const Mesh& mesh, const QuadratureRule2D& rule, const TestFunctionSet& tests,
                             const CDRProblem& problem, const std::function<std::array<double, 3>(Point2)>& u,
                             const std::function<double(Point2)>& tau, ResidualMatrix& supg) {
  ResidualMatrix r = ResidualMatrix::Zero(tests.n_test(), static_cast<Eigen::Index>(mesh.n_elem()));
  supg = r;
  for (std::size_t k = 0; k < mesh.n_elem(); ++k) {
    for (int j = 0; j < tests.n_test(); ++j) {
      for (int q = 0; q < rule.size(); ++q) {
        const Point2 ref = rule.points[q];
        const JacobianInfo jac = jacobian(mesh.cell(k), ref);
        const Point2 x = bilinear_map(mesh.cell(k), ref);
        const double w = rule.weights[q] * std::abs(jac.det);
        const auto g = map_reference_gradient(jac, tests.reference_gradient(j, ref));
        const double v = tests.value(j, ref);
        const auto f = u(x);
        const double adv = problem.b[0] * f[1] + problem.b[1] * f[2] + problem.c * f[0];
        r(j, k) += w * (problem.epsilon * (f[1] * g[0] + f[2] * g[1]) + adv * v - problem.f(x) * v);
        supg(j, k) += w * tau(x) * (adv - problem.f(x)) * (problem.b[0] * g[0] + problem.b[1] * g[1]);
      }
    }
  }
  return r;
}

std::string tensor_vs_loop(const ValidateOptions& options) {
  CounterRng rng(20240917);
  for (int trial = 0; trial < 20; ++trial) {
    const int nx = 1 + static_cast<int>(rng.uniform() * 3);
    const int ny = 1 + static_cast<int>(rng.uniform() * 3);
    const int nt = 1 + static_cast<int>(rng.uniform() * 3);
    const int nq = 2 + static_cast<int>(rng.uniform() * 3);
    const Mesh mesh = trial % 2 == 0 ? perturbed_mesh(nx, ny, 0.25, rng) : build_structured_mesh(nx, ny);
    const QuadratureRule2D rule = tensor_rule_2d(gll_rule(nq));
    const TestFunctionSet tests(nt);
    CDRProblem problem = make_outflow_layer(0.05 + rng.uniform());
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
    auto field = [=](Point2 p) {
      const double s = std::sin(a * p.x + b * p.y + c);
      const double co = std::cos(a * p.x + b * p.y + c);
      return std::array<double, 3>{s + p.x * p.y, a * co + p.y, b * co + p.x};
    };
    auto tau = [=](Point2 p) { return 0.1 + 0.05 * std::cos(3.0 * p.x - p.y + a); };

    PrecomputeOptions opt;
    opt.flip_jacobian_sign = options.flip_jacobian_sign;
    const PrecomputedTensors t = precompute_tensors(mesh, rule, tests, problem, opt);
    QuadFields fields;
    const auto n = static_cast<Eigen::Index>(t.n_points());
    fields.u.resize(n);
    fields.u_x.resize(n);
    fields.u_y.resize(n);
    Eigen::VectorXd tau_q(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Point2 p{t.quad_points(0, i), t.quad_points(1, i)};
      const auto f = field(p);
      fields.u(i) = f[0];
      fields.u_x(i) = f[1];
      fields.u_y(i) = f[2];
      tau_q(i) = tau(p);
    }
    ResidualMatrix supg_loop;
    const ResidualMatrix r_loop = loop_residual(mesh, rule, tests, problem, field, tau, supg_loop);
    const ResidualMatrix r_tensor = assemble_residual(t, fields, problem);
    const ResidualMatrix s_tensor = supg_residual(t, fields, tau_q, problem);
    const double scale_r = std::max(r_loop.cwiseAbs().maxCoeff(), 1e-300);
    const double scale_s = std::max(supg_loop.cwiseAbs().maxCoeff(), 1e-300);
    const double err_r = (r_loop - r_tensor).cwiseAbs().maxCoeff() / scale_r;
    const double err_s = (supg_loop - s_tensor).cwiseAbs().maxCoeff() / scale_s;
    if (!(err_r <= 1e-12) || !(err_s <= 1e-12)) {
      std::ostringstream msg;
      msg << "configuration " << trial << " (" << nx << "x" << ny << ", " << nt << " tests, " << nq
          << " nodes): residual mismatch " << err_r << ", SUPG mismatch " << err_s;
      return msg.str();
    }
  }
  return {};
}

std::string gradient_checks() {
  const CDRProblem problem = make_outflow_layer(0.1);
  const Mesh mesh = build_structured_mesh(2, 2);
  const QuadratureRule2D rule = tensor_rule_2d(gll_rule(4));
  const TestFunctionSet tests(2);
  struct Case {
    const char* name;
    LossConfig config;
    IndicatorChoice indicator;
  };
  std::vector<Case> cases;
  cases.push_back({"variational", {}, IndicatorChoice::modified});
  LossConfig supg_const;
  supg_const.mode = LossMode::supg_const;
  supg_const.tau_const = 0.05;
  cases.push_back({"supg_const", supg_const, IndicatorChoice::modified});
  LossConfig supg_learnt;
  supg_learnt.mode = LossMode::supg_learnt;
  supg_learnt.tau_growth = 0.5;
  cases.push_back({"supg_learnt", supg_learnt, IndicatorChoice::modified});
  LossConfig l2;
  l2.mode = LossMode::l2reg;
  l2.lambda = 0.3;
  cases.push_back({"l2reg", l2, IndicatorChoice::modified});
  LossConfig soft;
  soft.soft_boundary = SoftBoundary{5.0, 40};
  cases.push_back({"soft_boundary", soft, IndicatorChoice::none});
  cases.push_back({"adaptive_indicator", {}, IndicatorChoice::adaptive});

  for (const Case& cs : cases) {
    TrainingConfig tc;
    tc.problem = "outflow_layer";
    tc.epsilon = 0.1;
    tc.indicator = cs.indicator;
    tc.loss = cs.config;
    tc.layer_sizes = {2, 8, 8, cs.config.mode == LossMode::supg_learnt ? 2 : 1};
    tc.seed = 3;
    const BoundaryAnsatz ansatz = make_ansatz(tc, problem);
    DenseNetwork net = make_network(tc, ansatz, problem);
    const VariationalObjective obj(precompute_tensors(mesh, rule, tests, problem), problem, ansatz, cs.config);
    const LossAndGradient lg = obj.evaluate(net);
    CounterRng rng(11);
    Eigen::VectorXd d(net.parameters().size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = rng.uniform(-1.0, 1.0);
    const Eigen::VectorXd p0 = net.parameters();
    const double h = 1e-6;
    net.parameters() = p0 + h * d;
    const double lp = obj.loss(net);
    net.parameters() = p0 - h * d;
    const double lm = obj.loss(net);
    const double fd = (lp - lm) / (2.0 * h);
    const double an = lg.gradient.dot(d);
    if (!(rel_diff(fd, an) <= 1e-5)) {
      std::ostringstream msg;
      msg << cs.name << ": analytic " << an << " vs finite difference " << fd;
      return msg.str();
    }
  }
  return {};
}

std::string hard_bc_exactness() {
  std::vector<CDRProblem> problems{make_eriksson_johnson(0.1), make_eriksson_johnson(1e-3), make_outflow_layer(1e-4),
                                   make_outflow_layer(1e-6), make_outflow_layer(1e-8), make_parabolic_layer(1e-4),
                                   make_parabolic_layer(1e-8)};
  const Eigen::Matrix2Xd pts = boundary_points(Rectangle::unit_square(), 400);
  for (const CDRProblem& problem : problems) {
    for (IndicatorPreset preset : {IndicatorPreset::symmetric, IndicatorPreset::modified, IndicatorPreset::adaptive}) {
      BoundaryAnsatz ansatz{indicator_preset(problem, preset), extension_for(problem)};
      DenseNetwork net = init_network({2, 8, 8, 1}, 5);
      attach_indicator_scalars(net, *ansatz.indicator, adaptive_initial_scalars(problem));
      const Prediction p = predict(net, ansatz, pts);
      for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        const Point2 x{pts(0, i), pts(1, i)};
        // Outflow corner of P_out: g carries the layer for moderate eps.
        if (problem.name == "outflow_layer" && std::hypot(1.0 - x.x, 1.0 - x.y) < 10.0 * problem.epsilon) continue;
        const double err = std::abs(p.u(i) - problem.g(x));
        if (!(err <= 1e-12)) {
          std::ostringstream msg;
          msg << problem.name << " eps " << problem.epsilon << ": |u_hard - g| = " << err << " at (" << x.x << ", "
              << x.y << ")";
          return msg.str();
        }
      }
    }
  }
  return {};
}

std::string problem_oracles() {
  CounterRng rng(99);
  for (double eps : {0.1, 0.01}) {
    const CDRProblem p = make_eriksson_johnson(eps);
    for (int i = 0; i < 100; ++i) {
      const Point2 x{rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99)};
      const auto g = p.exact->gradient(x);
      const double res = -eps * p.exact->laplacian(x) + p.b[0] * g[0] + p.b[1] * g[1] + p.c * p.exact->value(x) - p.f(x);
      if (!(std::abs(res) <= 1e-8)) return "Eriksson-Johnson strong residual " + std::to_string(res);
    }
  }
  const CDRProblem p = make_outflow_layer(0.05);
  const double h = 1e-4;
  for (int i = 0; i < 100; ++i) {
    const Point2 x{rng.uniform(0.05, 0.7), rng.uniform(0.05, 0.7)};
    auto u = [&](double dx, double dy) { return p.exact->value({x.x + dx, x.y + dy}); };
    const double lap = (u(h, 0) + u(-h, 0) + u(0, h) + u(0, -h) - 4.0 * u(0, 0)) / (h * h);
    const double ux = (u(h, 0) - u(-h, 0)) / (2.0 * h);
    const double uy = (u(0, h) - u(0, -h)) / (2.0 * h);
    const double lhs = -p.epsilon * lap + p.b[0] * ux + p.b[1] * uy + p.c * u(0, 0);
    if (!(rel_diff(lhs, p.f(x)) <= 1e-4)) return "outflow-layer forcing vs finite differences " + std::to_string(lhs);
  }
  return {};
}

}  // namespace

int cmd_validate(const ValidateOptions& options, std::ostream& out) {
  const std::vector<Property> suite{
      {"quadrature_exactness", quadrature_exactness},
      {"test_function_edge_zeros", test_function_zeros},
      {"tensor_vs_loop_assembly", [&] { return tensor_vs_loop(options); }},
      {"parameter_gradients", gradient_checks},
      {"hard_boundary_exactness", hard_bc_exactness},
      {"problem_oracles", problem_oracles},
  };
  int failures = 0;
  for (const Property& p : suite) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    try {
      detail = p.check();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (detail.empty()) {
      out << "PASS " << p.name << " (" << static_cast<long>(ms) << " ms)\n";
    } else {
      ++failures;
      out << "FAIL " << p.name << ": " << detail << '\n';
    }
  }
  out << (failures == 0 ? "all properties passed" : std::to_string(failures) + " properties failed") << '\n';
  return failures == 0 ? kExitOk : kExitValidation;
}

}  // namespace hpvpinn
