// One PASS/FAIL line per acceptance criterion. Usage: acceptance [--only N[,M...]]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hpvpinn/cli.hpp"
#include "hpvpinn/error.hpp"
#include "hpvpinn/rng.hpp"

namespace hp = hpvpinn;

namespace {

// Tolerances and budgets.
constexpr double kQuadTol = 1e-12;
constexpr double kAssemblyRelTol = 1e-12;
constexpr double kGradStep = 1e-6;
constexpr double kGradRelTol = 1e-5;
constexpr double kHardBcTol = 1e-12;
constexpr double kEjResidualTol = 1e-8;
constexpr double kPoutForcingRelTol = 1e-4;
constexpr double kEjTarget = 1e-2;
constexpr double kSupgBand = 1.1;
constexpr double kAdaptiveImprovement = 10.0;
constexpr double kParaLo = -0.05;
constexpr double kParaHi = 1.3;
constexpr double kParaBoundaryTol = 1e-10;
constexpr double kBenchRelTol = 1e-12;
constexpr double kBudget1 = 1.0, kBudget2 = 10.0, kBudget3 = 30.0, kBudget4 = 1.0, kBudget5 = 5.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

Outcome within_budget(Outcome o, double seconds, double budget) {
  if (seconds >= budget) {
    o.pass = false;
    o.detail += "; runtime " + sci(seconds) + " s over budget " + sci(budget) + " s";
  }
  return o;
}

// 1. GLL exactness for monomials of degree <= 2n-3.
Outcome quadrature() {
  double worst = 0.0;
  for (int n = 2; n <= 12; ++n) {
    const hp::QuadratureRule1D r = hp::gll_rule(n);
    for (int d = 0; d <= 2 * n - 3; ++d) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], d);
      worst = std::max(worst, std::abs(s - (d % 2 ? 0.0 : 2.0 / (d + 1))));
    }
  }
  return {worst <= kQuadTol, "max abs error " + sci(worst) + " (n = 2..12)"};
}

// Independent double loop: basis, Jacobian and fields evaluated per use.
void loop_oracle(const hp::Mesh& mesh, int nq, int nt, const hp::CDRProblem& p,
                 const std::function<std::array<double, 3>(hp::Point2)>& u, const std::function<double(hp::Point2)>& tau,
                 Eigen::MatrixXd& r, Eigen::MatrixXd& s) {
  const hp::QuadratureRule1D g = hp::gll_rule(nq);
  r = Eigen::MatrixXd::Zero(nt * nt, static_cast<Eigen::Index>(mesh.n_elem()));
  s = r;
  for (std::size_t k = 0; k < mesh.n_elem(); ++k) {
    for (int j2 = 0; j2 < nt; ++j2) {
      for (int j1 = 0; j1 < nt; ++j1) {
        for (int b = 0; b < nq; ++b) {
          for (int a = 0; a < nq; ++a) {
            const hp::Point2 ref{g.nodes[a], g.nodes[b]};
            const hp::JacobianInfo J = hp::jacobian(mesh.cell(k), ref);
            const auto va = hp::test_function_1d(j1 + 1, ref.x), vb = hp::test_function_1d(j2 + 1, ref.y);
            const double v = va.value * vb.value;
            const double dxi = va.derivative * vb.value, deta = va.value * vb.derivative;
            // Physical gradient by solving J^T grad = grad_ref.
            const double gx = (J.matrix[1][1] * dxi - J.matrix[1][0] * deta) / J.det;
            const double gy = (-J.matrix[0][1] * dxi + J.matrix[0][0] * deta) / J.det;
            const hp::Point2 x = hp::bilinear_map(mesh.cell(k), ref);
            const auto f = u(x);
            const double w = g.weights[a] * g.weights[b] * std::abs(J.det);
            const double adv = p.b[0] * f[1] + p.b[1] * f[2] + p.c * f[0];
            r(j2 * nt + j1, static_cast<Eigen::Index>(k)) +=
                w * (p.epsilon * (f[1] * gx + f[2] * gy) + (adv - p.f(x)) * v);
            s(j2 * nt + j1, static_cast<Eigen::Index>(k)) += w * tau(x) * (adv - p.f(x)) * (p.b[0] * gx + p.b[1] * gy);
          }
        }
      }
    }
  }
}

// 2. Tensor assembly vs double loop on 20 random small configurations.
Outcome assembly() {
  hp::CounterRng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int nx = 1 + static_cast<int>(rng.uniform() * 3), ny = 1 + static_cast<int>(rng.uniform() * 3);
    const int nt = 1 + static_cast<int>(rng.uniform() * 3), nq = 2 + static_cast<int>(rng.uniform() * 3);
    hp::Mesh mesh = hp::build_structured_mesh(nx, ny);
    if (trial == 0) {
      mesh = hp::Mesh({hp::QuadCell({hp::Point2{0, 0}, hp::Point2{2, 0}, hp::Point2{3, 2}, hp::Point2{1, 1}})},
                      hp::Rectangle{0, 3, 0, 2});
    }
    const hp::CDRProblem p = hp::make_outflow_layer(0.05 + rng.uniform());
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), c = rng.uniform(-2, 2);
    auto u = [=](hp::Point2 x) {
      const double arg = a * x.x + b * x.y + c;
      return std::array<double, 3>{std::sin(arg) + x.x * x.x, a * std::cos(arg) + 2 * x.x, b * std::cos(arg)};
    };
    auto tau = [=](hp::Point2 x) { return 0.2 + 0.1 * std::sin(x.x - 2 * x.y + c); };
    const hp::PrecomputedTensors t =
        hp::precompute_tensors(mesh, hp::tensor_rule_2d(hp::gll_rule(nq)), hp::TestFunctionSet(nt), p);
    hp::QuadFields q;
    const auto n = static_cast<Eigen::Index>(t.n_points());
    q.u.resize(n);
    q.u_x.resize(n);
    q.u_y.resize(n);
    Eigen::VectorXd tq(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const hp::Point2 x{t.quad_points(0, i), t.quad_points(1, i)};
      const auto f = u(x);
      q.u(i) = f[0];
      q.u_x(i) = f[1];
      q.u_y(i) = f[2];
      tq(i) = tau(x);
    }
    Eigen::MatrixXd r_loop, s_loop;
    loop_oracle(mesh, nq, nt, p, u, tau, r_loop, s_loop);
    const Eigen::MatrixXd r = hp::assemble_residual(t, q, p), s = hp::supg_residual(t, q, tq, p);
    worst = std::max(worst, (r - r_loop).cwiseAbs().maxCoeff() / r_loop.cwiseAbs().maxCoeff());
    worst = std::max(worst, (s - s_loop).cwiseAbs().maxCoeff() / s_loop.cwiseAbs().maxCoeff());
  }
  return {worst <= kAssemblyRelTol, "max relative deviation " + sci(worst) + " over 20 configurations (one skewed)"};
}

// 3. Directional derivative vs central differences for every loss mode.
Outcome gradients() {
  struct Mode {
    const char* name;
    hp::LossConfig loss;
    hp::IndicatorChoice indicator;
  };
  std::vector<Mode> modes;
  modes.push_back({"variational", {}, hp::IndicatorChoice::modified});
  hp::LossConfig sc;
  sc.mode = hp::LossMode::supg_const;
  sc.tau_const = 0.03;
  modes.push_back({"supg_const", sc, hp::IndicatorChoice::modified});
  hp::LossConfig sl;
  sl.mode = hp::LossMode::supg_learnt;
  modes.push_back({"supg_learnt", sl, hp::IndicatorChoice::modified});
  hp::LossConfig l2;
  l2.mode = hp::LossMode::l2reg;
  l2.lambda = 0.5;
  modes.push_back({"l2reg", l2, hp::IndicatorChoice::modified});
  hp::LossConfig soft;
  soft.soft_boundary = hp::SoftBoundary{10.0, 80};
  modes.push_back({"soft_boundary", soft, hp::IndicatorChoice::none});

  std::ostringstream detail;
  bool ok = true;
  for (const Mode& m : modes) {
    hp::TrainingConfig c;
    c.problem = "outflow_layer";
    c.epsilon = 0.1;
    c.nx = c.ny = 2;
    c.n_quad_per_dim = 5;
    c.n_test_per_dim = 3;
    c.layer_sizes = {2, 8, 8, m.loss.mode == hp::LossMode::supg_learnt ? 2 : 1};
    c.loss = m.loss;
    c.indicator = m.indicator;
    c.seed = 11;
    const hp::CDRProblem p = hp::make_problem(c.problem, c.epsilon);
    const hp::BoundaryAnsatz an = hp::make_ansatz(c, p);
    hp::DenseNetwork net = hp::make_network(c, an, p);
    const hp::VariationalObjective obj = hp::make_objective(c, p, an);
    const Eigen::VectorXd g = obj.evaluate(net).gradient;
    hp::CounterRng rng(3);
    Eigen::VectorXd d(g.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = rng.uniform(-1, 1);
    const Eigen::VectorXd p0 = net.parameters();
    net.parameters() = p0 + kGradStep * d;
    const double lp = obj.loss(net);
    net.parameters() = p0 - kGradStep * d;
    const double lm = obj.loss(net);
    const double fd = (lp - lm) / (2 * kGradStep), an_dir = g.dot(d);
    const double e = rel(fd, an_dir);
    ok = ok && e <= kGradRelTol;
    detail << m.name << ' ' << sci(e) << ' ';
  }
  return {ok, "relative errors: " + detail.str()};
}

// 4. Hard boundary exactness for every shipped problem/indicator pair.
Outcome hard_bc() {
  const Eigen::Matrix2Xd pts = hp::boundary_points(hp::Rectangle::unit_square(), 400);
  double worst = 0.0;
  int pairs = 0;
  const std::vector<hp::CDRProblem> problems{hp::make_eriksson_johnson(0.1), hp::make_outflow_layer(1e-4),
                                             hp::make_outflow_layer(1e-6), hp::make_outflow_layer(1e-8),
                                             hp::make_parabolic_layer(1e-8)};
  for (const hp::CDRProblem& p : problems) {
    for (auto preset : {hp::IndicatorPreset::symmetric, hp::IndicatorPreset::modified, hp::IndicatorPreset::adaptive}) {
      const hp::BoundaryAnsatz an{hp::indicator_preset(p, preset), hp::extension_for(p)};
      hp::DenseNetwork net = hp::init_network({2, 10, 10, 1}, 1);
      hp::attach_indicator_scalars(net, *an.indicator, hp::adaptive_initial_scalars(p));
      const hp::Prediction pr = hp::predict(net, an, pts);
      for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        const hp::Point2 x{pts(0, i), pts(1, i)};
        if (p.name == "outflow_layer" && std::hypot(1 - x.x, 1 - x.y) < 10 * p.epsilon) continue;
        worst = std::max(worst, std::abs(pr.u(i) - p.g(x)));
      }
      ++pairs;
    }
  }
  return {worst <= kHardBcTol, "max |u_hard - g| " + sci(worst) + " over " + std::to_string(pairs) + " pairs"};
}

// 5. Problem construction: analytic EJ residual, P_out forcing vs finite differences.
Outcome problems() {
  hp::CounterRng rng(5);
  const hp::CDRProblem ej = hp::make_eriksson_johnson(0.1);
  double ej_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const hp::Point2 x{rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99)};
    const auto g = ej.exact->gradient(x);
    ej_worst = std::max(ej_worst, std::abs(-ej.epsilon * ej.exact->laplacian(x) + g[0] - ej.f(x)));
  }
  double po_worst = 0.0;
  for (double eps : {1e-2, 1e-4}) {
    const hp::CDRProblem po = hp::make_outflow_layer(eps);
    const double h = 1e-5, lim = 1.0 - std::max(0.2, 20 * eps);
    for (int i = 0; i < 100; ++i) {
      const hp::Point2 x{rng.uniform(0.05, lim), rng.uniform(0.05, lim)};
      auto u = [&](double dx, double dy) {
        const double X = x.x + dx, Y = x.y + dy;
        const double e2 = std::exp(2 * (X - 1) / eps), e3 = std::exp(3 * (Y - 1) / eps);
        return X * Y * Y - Y * Y * e2 - X * e3 + e2 * e3;
      };
      const double lap = (u(h, 0) + u(-h, 0) + u(0, h) + u(0, -h) - 4 * u(0, 0)) / (h * h);
      const double lhs = -eps * lap + 2 * (u(h, 0) - u(-h, 0)) / (2 * h) + 3 * (u(0, h) - u(0, -h)) / (2 * h) + u(0, 0);
      po_worst = std::max(po_worst, rel(lhs, po.f(x)));
    }
  }
  return {ej_worst <= kEjResidualTol && po_worst <= kPoutForcingRelTol,
          "EJ strong residual " + sci(ej_worst) + ", P_out forcing relative deviation " + sci(po_worst)};
}

// 6. Desk-scale Eriksson-Johnson accuracy.
Outcome ej_accuracy() {
  hp::TrainingConfig c;  // defaults are the desk-scale EJ setup
  c.seed = 0;
  const hp::TrainingRecord r = hp::train(c);
  return {r.best_l2_err < kEjTarget,
          "best L2_err " + sci(r.best_l2_err) + " at epoch " + std::to_string(r.best_epoch) + " (target < " +
              sci(kEjTarget) + ")"};
}

hp::TrainingConfig pout_desk(double eps) {
  hp::TrainingConfig c;
  c.problem = "outflow_layer";
  c.epsilon = eps;
  c.nx = c.ny = 4;
  c.n_quad_per_dim = 10;
  c.n_test_per_dim = 6;
  c.layer_sizes = {2, 30, 30, 30, 1};
  c.learning_rate = 0.01 / 9.0;
  c.epochs = 10000;
  c.indicator = hp::IndicatorChoice::modified;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 7. SUPG ordering on P_out, eps = 1e-8, median over 5 seeds.
Outcome supg_ordering() {
  hp::TrainingConfig none = pout_desk(1e-8);
  hp::TrainingConfig constant = none;
  constant.loss.mode = hp::LossMode::supg_const;
  constant.loss.tau_const = 1e-5;
  hp::TrainingConfig learnt = none;
  learnt.loss.mode = hp::LossMode::supg_learnt;
  learnt.loss.tau_growth = 1.0;
  learnt.layer_sizes.back() = 2;
  auto med = [](const hp::TrainingConfig& c) {
    const hp::MultiSeedResult r = hp::multi_seed(c, 5);
    std::vector<double> best;
    for (const auto& rec : r.records) best.push_back(rec.best_l2_err);
    for (int i = 0; i < r.n_failed; ++i) best.push_back(INFINITY);
    return median(best);
  };
  const double m_none = med(none), m_const = med(constant), m_learnt = med(learnt);
  const bool hard = m_learnt <= m_none;
  const bool band = m_learnt <= kSupgBand * m_const && m_const <= kSupgBand * m_none;
  std::string detail = "median best L2_err: none " + sci(m_none) + ", constant tau " + sci(m_const) + ", learnt tau " +
                       sci(m_learnt) + (band ? "; 1.1x band holds" : "; 1.1x band violated");
  return {hard, detail};
}

// 8. Adaptive indicator on P_out, eps = 1e-6, (alpha, beta) = (1, 3).
Outcome adaptive_indicator() {
  hp::TrainingConfig c = pout_desk(1e-6);
  c.indicator = hp::IndicatorChoice::adaptive;
  c.initial_scalars = std::array<double, 3>{1.0, 3.0, 0.0};
  const hp::TrainingRecord r = hp::train(c);
  const double initial = r.error_history.front().l2, final_err = r.error_history.back().l2;
  const double b0 = r.initial_scalars[1], b1 = r.final_scalars[1];
  return {final_err * kAdaptiveImprovement <= initial && b1 > b0,
          "L2_err " + sci(initial) + " -> " + sci(final_err) + ", alpha " + sci(r.initial_scalars[0]) + " -> " +
              sci(r.final_scalars[0]) + ", beta " + sci(b0) + " -> " + sci(b1)};
}

// Mean over x of the spread of u across the mid-lines y = 0.4, 0.5, 0.6.
double midline_spread(const hp::DenseNetwork& net, const hp::BoundaryAnsatz& an) {
  const int n = 100;
  Eigen::Matrix2Xd pts(2, 3 * n);
  const double ys[3] = {0.4, 0.5, 0.6};
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < n; ++i) pts.col(k * n + i) << i / (n - 1.0), ys[k];
  }
  const Eigen::VectorXd u = hp::predict(net, an, pts).u;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = (u(i) + u(n + i) + u(2 * n + i)) / 3.0;
    double var = 0.0;
    for (int k = 0; k < 3; ++k) var += (u(k * n + i) - m) * (u(k * n + i) - m);
    total += std::sqrt(var / 3.0);
  }
  return total / n;
}

// 9. Parabolic layer properties, learnt tau with the modified indicator.
Outcome parabolic() {
  hp::TrainingConfig c = pout_desk(1e-8);
  c.problem = "parabolic_layer";
  c.layer_sizes.back() = 2;
  c.loss.mode = hp::LossMode::supg_learnt;
  c.loss.tau_growth = 1.0;
  const hp::CDRProblem p = hp::make_problem(c.problem, c.epsilon);
  const hp::BoundaryAnsatz an = hp::make_ansatz(c, p);
  const hp::DenseNetwork init = hp::make_network(c, an, p);
  const hp::TrainingRecord r = hp::train(c);
  const hp::DenseNetwork& net = *r.final_network;
  const Eigen::Matrix2Xd grid = hp::evaluation_grid(p.domain, 100);
  const Eigen::VectorXd u = hp::predict(net, an, grid).u;
  double boundary = 0.0;
  for (Eigen::Index i = 0; i < grid.cols(); ++i) {
    const double x = grid(0, i), y = grid(1, i);
    if (x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0) boundary = std::max(boundary, std::abs(u(i)));
  }
  const double s0 = midline_spread(init, an), s1 = midline_spread(net, an);
  const bool ok = u.minCoeff() >= kParaLo && u.maxCoeff() <= kParaHi && boundary <= kParaBoundaryTol && s1 < s0;
  return {ok, "range [" + sci(u.minCoeff()) + ", " + sci(u.maxCoeff()) + "], max boundary |u| " + sci(boundary) +
                  ", mid-line spread " + sci(s0) + " -> " + sci(s1)};
}

// 10. Loop and tensor losses agree; tensor path faster at 16x16.
Outcome bench() {
  std::ostringstream detail;
  bool agree = true, faster = false;
  for (int n : {1, 2, 4, 8, 16}) {
    const hp::BenchRow row = hp::bench_mesh(n, n);
    const double e = rel(row.loop_loss, row.tensor_loss);
    agree = agree && e <= kBenchRelTol;
    if (n == 16) faster = row.tensor_ms < row.loop_ms;
    detail << n << 'x' << n << " speedup " << sci(row.loop_ms / row.tensor_ms) << " dev " << sci(e) << "; ";
  }
  return {agree && faster, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else {
      std::cerr << "usage: acceptance [--only N[,M...]]\n";
      return 2;
    }
  }
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget;  // seconds; <= 0 means reported only
  };
  const std::vector<Criterion> criteria{
      {1, "quadrature exactness", quadrature, kBudget1},
      {2, "assembly oracle equivalence", assembly, kBudget2},
      {3, "gradient correctness", gradients, kBudget3},
      {4, "hard boundary exactness", hard_bc, kBudget4},
      {5, "problem construction oracles", problems, kBudget5},
      {6, "desk-scale Eriksson-Johnson accuracy", ej_accuracy, 0},
      {7, "SUPG ordering on outflow layer", supg_ordering, 0},
      {8, "adaptive indicator improvement", adaptive_indicator, 0},
      {9, "parabolic layer properties", parabolic, 0},
      {10, "bench correctness", bench, 0},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget > 0) o = within_budget(o, s, c.budget);
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), s);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
