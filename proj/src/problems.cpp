#include "hpvpinn/problems.hpp"

#include <cmath>
#include <numbers>

#include "hpvpinn/error.hpp"

namespace hpvpinn {

double clamped_exp(double arg) { return arg < -700.0 ? 0.0 : std::exp(arg); }

namespace {

void require_positive_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be positive and finite");
  }
}

}  // namespace

CDRProblem make_eriksson_johnson(double epsilon) {
  require_positive_epsilon(epsilon);
  constexpr double pi = std::numbers::pi;
  const double root = std::sqrt(1.0 + 4.0 * epsilon * epsilon * pi * pi);
  const double r1 = (1.0 + root) / (2.0 * epsilon);
  // r1 * r2 = -pi^2; avoids the cancellation in (1 - root) for small eps.
  const double r2 = -pi * pi / r1;

  // Both exponents solve eps*r^2 - r - eps*pi^2 = 0, so each mode satisfies the
  // homogeneous equation and f = 0.
  for (double r : {r1, r2}) {
    const double residual = epsilon * r * r - r - epsilon * pi * pi;
    if (std::abs(residual) > 1e-9 * (1.0 + std::abs(r) + epsilon * r * r)) {
      throw NumericError("Eriksson-Johnson exponent does not satisfy the characteristic equation");
    }
  }
  const double denom = clamped_exp(-r1) - clamped_exp(-r2);

  struct Modes {
    double x, dx, dxx;
  };
  auto modes = [=](double x) {
    const double e1 = clamped_exp(r1 * (x - 1.0));
    const double e2 = clamped_exp(r2 * (x - 1.0));
    return Modes{(e1 - e2) / denom, (r1 * e1 - r2 * e2) / denom, (r1 * r1 * e1 - r2 * r2 * e2) / denom};
  };

  ExactSolution exact;
  exact.value = [=](Point2 p) { return modes(p.x).x * std::sin(pi * p.y); };
  exact.gradient = [=](Point2 p) {
    const Modes m = modes(p.x);
    return std::array<double, 2>{m.dx * std::sin(pi * p.y), m.x * pi * std::cos(pi * p.y)};
  };
  exact.laplacian = [=](Point2 p) {
    const Modes m = modes(p.x);
    return (m.dxx - pi * pi * m.x) * std::sin(pi * p.y);
  };

  CDRProblem problem;
  problem.name = "eriksson_johnson";
  problem.epsilon = epsilon;
  problem.b = {1.0, 0.0};
  problem.c = 0.0;
  problem.f = [](Point2) { return 0.0; };
  problem.g = exact.value;
  problem.exact = std::move(exact);
  return problem;
}

CDRProblem make_outflow_layer(double epsilon) {
  require_positive_epsilon(epsilon);
  // u = A(x) * B(y) with A = x - E2(x), B = y^2 - E3(y),
  // E2 = exp(2(x-1)/eps), E3 = exp(3(y-1)/eps).
  struct Factors {
    double a, da, dda, b, db, ddb;
  };
  auto factors = [epsilon](Point2 p) {
    const double e2 = clamped_exp(2.0 * (p.x - 1.0) / epsilon);
    const double e3 = clamped_exp(3.0 * (p.y - 1.0) / epsilon);
    return Factors{p.x - e2,
                   1.0 - 2.0 / epsilon * e2,
                   -4.0 / (epsilon * epsilon) * e2,
                   p.y * p.y - e3,
                   2.0 * p.y - 3.0 / epsilon * e3,
                   2.0 - 9.0 / (epsilon * epsilon) * e3};
  };

  ExactSolution exact;
  exact.value = [=](Point2 p) {
    const Factors t = factors(p);
    return t.a * t.b;
  };
  exact.gradient = [=](Point2 p) {
    const Factors t = factors(p);
    return std::array<double, 2>{t.da * t.b, t.a * t.db};
  };
  exact.laplacian = [=](Point2 p) {
    const Factors t = factors(p);
    return t.dda * t.b + t.a * t.ddb;
  };

  CDRProblem problem;
  problem.name = "outflow_layer";
  problem.epsilon = epsilon;
  problem.b = {2.0, 3.0};
  problem.c = 1.0;
  // The 1/eps and 1/eps^2 parts of -eps*Lap(u) cancel against b.grad(u), leaving
  // f = 2B + (6y - 2 eps) A + A B.
  problem.f = [=](Point2 p) {
    const Factors t = factors(p);
    return 2.0 * t.b + (6.0 * p.y - 2.0 * epsilon) * t.a + t.a * t.b;
  };
  problem.g = exact.value;
  problem.exact = std::move(exact);
  return problem;
}

CDRProblem make_parabolic_layer(double epsilon) {
  require_positive_epsilon(epsilon);
  CDRProblem problem;
  problem.name = "parabolic_layer";
  problem.epsilon = epsilon;
  problem.b = {1.0, 0.0};
  problem.c = 0.0;
  problem.f = [](Point2) { return 1.0; };
  problem.g = [](Point2) { return 0.0; };
  return problem;
}

CDRProblem make_problem(const std::string& name, double epsilon) {
  if (name == "eriksson_johnson") return make_eriksson_johnson(epsilon);
  if (name == "outflow_layer") return make_outflow_layer(epsilon);
  if (name == "parabolic_layer") return make_parabolic_layer(epsilon);
  throw InvalidArgument("unknown problem '" + name + "'");
}

PecletReport peclet(const CDRProblem& problem) {
  PecletReport report;
  report.length = 1.0;
  report.b_norm = std::hypot(problem.b[0], problem.b[1]);
  report.peclet = report.length * report.b_norm / problem.epsilon;
  return report;
}

}  // namespace hpvpinn
