#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>

#include "hpvpinn/geometry.hpp"

namespace hpvpinn {

/// exp(arg) with arguments below -700 flushed to exactly zero.
double clamped_exp(double arg);

struct ExactSolution {
  std::function<double(Point2)> value;
  std::function<std::array<double, 2>(Point2)> gradient;
  std::function<double(Point2)> laplacian;
};

/// Steady -eps*Lap(u) + b.grad(u) + c*u = f on a rectangle, u = g on the boundary.
/// b and c are constant for every shipped problem.
struct CDRProblem {
  std::string name;
  double epsilon = 1.0;
  std::array<double, 2> b{0.0, 0.0};
  double c = 0.0;
  std::function<double(Point2)> f;
  std::function<double(Point2)> g;
  std::optional<ExactSolution> exact;
  Rectangle domain = Rectangle::unit_square();
};

struct PecletReport {
  double length = 1.0;
  double b_norm = 0.0;
  double peclet = 0.0;
};

/// b = (1,0), c = 0, f = 0; boundary layer at x = 1.
CDRProblem make_eriksson_johnson(double epsilon);

/// b = (2,3), c = 1; exponential layers at x = 1 and y = 1.
CDRProblem make_outflow_layer(double epsilon);

/// b = (1,0), c = 0, f = 1, g = 0; no closed-form solution. The benchmark
/// uses eps = 1e-8; other values are accepted for the adaptive-indicator studies.
CDRProblem make_parabolic_layer(double epsilon = 1e-8);

/// Builds a problem by registry name: eriksson_johnson, outflow_layer, parabolic_layer.
CDRProblem make_problem(const std::string& name, double epsilon);

PecletReport peclet(const CDRProblem& problem);

}  // namespace hpvpinn
