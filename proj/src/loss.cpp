#include "hpvpinn/loss.hpp"

#include <cmath>
#include <string>

#include "hpvpinn/error.hpp"

namespace hpvpinn {

namespace {

void check_fields(const PrecomputedTensors& t, const QuadFields& fields) {
  const auto n = static_cast<Eigen::Index>(t.n_points());
  if (fields.u.size() != n || fields.u_x.size() != n || fields.u_y.size() != n) {
    throw InvalidArgument("quadrature fields do not match the tensor layout (" + std::to_string(n) + " points)");
  }
}

// out(j, k) += scale * sum_q T[k][j][q] * field(k * n_quad + q)
void contract(const std::vector<double>& tensor, const Eigen::VectorXd& field, const PrecomputedTensors& t,
              double scale, ResidualMatrix& out) {
  const Eigen::Map<const Eigen::MatrixXd> columns(tensor.data(), t.n_quad,
                                                  static_cast<Eigen::Index>(t.n_test) * t.n_elem);
  const Eigen::Map<const Eigen::MatrixXd> cells(field.data(), t.n_quad, t.n_elem);
  for (int k = 0; k < t.n_elem; ++k) {
    out.col(k).noalias() += scale * (columns.middleCols(static_cast<Eigen::Index>(k) * t.n_test, t.n_test).transpose() *
                                     cells.col(k));
  }
}

// out(k * n_quad + q) = sum_j G(j, k) T[k][j][q]
void contract_transposed(const std::vector<double>& tensor, const Eigen::MatrixXd& g, const PrecomputedTensors& t,
                         Eigen::VectorXd& out) {
  const Eigen::Map<const Eigen::MatrixXd> columns(tensor.data(), t.n_quad,
                                                  static_cast<Eigen::Index>(t.n_test) * t.n_elem);
  out.resize(static_cast<Eigen::Index>(t.n_points()));
  Eigen::Map<Eigen::MatrixXd> cells(out.data(), t.n_quad, t.n_elem);
  for (int k = 0; k < t.n_elem; ++k) {
    cells.col(k).noalias() = columns.middleCols(static_cast<Eigen::Index>(k) * t.n_test, t.n_test) * g.col(k);
  }
}

// b . grad u + c u - f
Eigen::VectorXd strong_residual(const QuadFields& fields, const Eigen::VectorXd& forcing, const CDRProblem& problem) {
  return (problem.b[0] * fields.u_x.array() + problem.b[1] * fields.u_y.array() + problem.c * fields.u.array() -
          forcing.array())
      .matrix();
}

bool uses_supg(LossMode mode) { return mode == LossMode::supg_const || mode == LossMode::supg_learnt; }

QuadFields head_fields(const HardFields& all, Eigen::Index n) {
  return {all.u.head(n), all.u_x.head(n), all.u_y.head(n)};
}

Eigen::VectorXd row_vector(const Eigen::MatrixXd& m, Eigen::Index row) { return m.row(row).transpose(); }

}  // namespace

void validate_loss_config(const LossConfig& config, int n_outputs) {
  if (!(config.tau_const >= 0.0)) throw ConfigError("tau must be non-negative");
  if (!(config.tau_growth >= 0.0)) throw ConfigError("tau_growth must be non-negative");
  if (!(config.lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (config.soft_boundary) {
    if (!(config.soft_boundary->weight >= 0.0)) throw ConfigError("boundary_weight must be non-negative");
    if (config.soft_boundary->n_boundary_points < 1) throw ConfigError("n_boundary_points must be positive");
  }
  const int needed = config.mode == LossMode::supg_learnt ? 2 : 1;
  if (n_outputs != needed) {
    throw ConfigError("loss mode needs a network with " + std::to_string(needed) + " output head(s), got " +
                      std::to_string(n_outputs));
  }
}

ResidualMatrix assemble_residual(const PrecomputedTensors& tensors, const QuadFields& fields,
                                 const CDRProblem& problem) {
  check_fields(tensors, fields);
  if (tensors.force.rows() != tensors.n_test || tensors.force.cols() != tensors.n_elem) {
    throw InvalidArgument("force matrix does not match the tensor layout");
  }
  ResidualMatrix r = -tensors.force;
  const Eigen::VectorXd transport =
      (problem.b[0] * fields.u_x.array() + problem.b[1] * fields.u_y.array() + problem.c * fields.u.array()).matrix();
  contract(tensors.grad_x, fields.u_x, tensors, problem.epsilon, r);
  contract(tensors.grad_y, fields.u_y, tensors, problem.epsilon, r);
  contract(tensors.shape_val, transport, tensors, 1.0, r);
  return r;
}

ResidualMatrix supg_residual(const PrecomputedTensors& tensors, const QuadFields& fields,
                             const Eigen::Ref<const Eigen::VectorXd>& tau, const CDRProblem& problem) {
  check_fields(tensors, fields);
  if (tau.size() != fields.u.size()) throw InvalidArgument("tau does not match the tensor layout");
  const Eigen::VectorXd weighted = (tau.array() * strong_residual(fields, tensors.forcing, problem).array()).matrix();
  ResidualMatrix s = ResidualMatrix::Zero(tensors.n_test, tensors.n_elem);
  contract(tensors.grad_x, weighted, tensors, problem.b[0], s);
  contract(tensors.grad_y, weighted, tensors, problem.b[1], s);
  return s;
}

double variational_loss(const ResidualMatrix& residual) {
  if (residual.cols() == 0) return 0.0;
  return residual.squaredNorm() / static_cast<double>(residual.cols());
}

double l2_weight_regularization(const DenseNetwork& net, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  double sum = 0.0;
  for (int l = 0; l < net.n_layers(); ++l) sum += net.weight(l).squaredNorm();
  return lambda / static_cast<double>(net.n_weight_entries()) * sum;
}

Eigen::Matrix2Xd boundary_points(const Rectangle& domain, int n) {
  if (n < 1) throw InvalidArgument("need at least one boundary point");
  const double w = domain.x_max - domain.x_min;
  const double h = domain.y_max - domain.y_min;
  const double perimeter = 2.0 * (w + h);
  Eigen::Matrix2Xd pts(2, n);
  for (int i = 0; i < n; ++i) {
    double s = (i + 0.5) * perimeter / n;
    double x = 0.0;
    double y = 0.0;
    if (s < w) {
      x = domain.x_min + s;
      y = domain.y_min;
    } else if ((s -= w) < h) {
      x = domain.x_max;
      y = domain.y_min + s;
    } else if ((s -= h) < w) {
      x = domain.x_max - s;
      y = domain.y_max;
    } else {
      s -= w;
      x = domain.x_min;
      y = domain.y_max - s;
    }
    pts(0, i) = x;
    pts(1, i) = y;
  }
  return pts;
}

std::array<double, 3> indicator_scalars(const DenseNetwork& net) {
  std::array<double, 3> s{};
  for (int i = 0; i < 3; ++i) {
    if (auto idx = net.extra_index(kIndicatorScalarNames[i])) s[i] = net.parameters()(static_cast<Eigen::Index>(*idx));
  }
  return s;
}

void attach_indicator_scalars(DenseNetwork& net, const IndicatorFunction& ind, const std::array<double, 3>& initial) {
  for (int s : used_scalar_slots(ind)) {
    if (auto idx = net.extra_index(kIndicatorScalarNames[s])) {
      net.parameters()(static_cast<Eigen::Index>(*idx)) = initial[s];
    } else {
      net.add_extra_scalar(kIndicatorScalarNames[s], initial[s]);
    }
  }
}

Prediction predict(const DenseNetwork& net, const BoundaryAnsatz& ansatz, const Eigen::Ref<const Eigen::Matrix2Xd>& points,
                   double tau_growth, const TauMask& mask) {
  const EvalBatch batch = forward_with_gradients(net, points);
  const AnsatzField field = sample_ansatz(ansatz, indicator_scalars(net), points);
  HardFields hard = hard_ansatz(field, row_vector(batch.u, 0), row_vector(batch.du_dx, 0), row_vector(batch.du_dy, 0));
  Prediction out;
  out.u = std::move(hard.u);
  out.u_x = std::move(hard.u_x);
  out.u_y = std::move(hard.u_y);
  out.h = field.h;
  if (net.n_outputs() >= 2) out.tau = tau_field(row_vector(batch.u, 1), mask, tau_growth, points).tau;
  return out;
}

VariationalObjective::VariationalObjective(PrecomputedTensors tensors, CDRProblem problem, BoundaryAnsatz ansatz,
                                           LossConfig config)
    : tensors_(std::move(tensors)), problem_(std::move(problem)), ansatz_(std::move(ansatz)), config_(config) {
  validate_loss_config(config_, config_.mode == LossMode::supg_learnt ? 2 : 1);
  adaptive_ = ansatz_.indicator && !used_scalar_slots(*ansatz_.indicator).empty();
  n_quad_points_ = static_cast<Eigen::Index>(tensors_.n_points());

  if (config_.soft_boundary) {
    const Eigen::Matrix2Xd bp = boundary_points(problem_.domain, config_.soft_boundary->n_boundary_points);
    points_.resize(2, n_quad_points_ + bp.cols());
    points_.leftCols(n_quad_points_) = tensors_.quad_points;
    points_.rightCols(bp.cols()) = bp;
    boundary_g_.resize(bp.cols());
    for (Eigen::Index i = 0; i < bp.cols(); ++i) boundary_g_(i) = problem_.g({bp(0, i), bp(1, i)});
  } else {
    points_ = tensors_.quad_points;
  }

  if (config_.mode == LossMode::supg_learnt) {
    tau_mask_.resize(n_quad_points_);
    const TauMask mask;
    for (Eigen::Index i = 0; i < n_quad_points_; ++i) {
      tau_mask_(i) = tau_mask_eval(mask, {points_(0, i), points_(1, i)}).j;
    }
  }
  if (!adaptive_) fixed_field_ = sample_ansatz(ansatz_, {}, points_);
}

void VariationalObjective::check_network(const DenseNetwork& net) const {
  validate_loss_config(config_, net.n_outputs());
  if (adaptive_) {
    for (int s : used_scalar_slots(*ansatz_.indicator)) {
      if (!net.extra_index(kIndicatorScalarNames[s])) {
        throw ConfigError("adaptive indicator needs the network scalar '" + kIndicatorScalarNames[s] + "'");
      }
    }
  }
}

const AnsatzField& VariationalObjective::field_for(const DenseNetwork& net, AnsatzField& scratch) const {
  if (!adaptive_) return fixed_field_;
  scratch = sample_ansatz(ansatz_, indicator_scalars(net), points_);
  return scratch;
}

double VariationalObjective::run(const DenseNetwork& net, const EvalBatch& batch, BatchAdjoint* adjoint,
                                 Eigen::Ref<Eigen::VectorXd>* grad, LossBreakdown* parts) const {
  const Eigen::Index nq = n_quad_points_;
  const Eigen::Index n_all = points_.cols();
  AnsatzField scratch;
  const AnsatzField& field = field_for(net, scratch);
  const Eigen::VectorXd u_nn = row_vector(batch.u, 0);
  const Eigen::VectorXd ux_nn = row_vector(batch.du_dx, 0);
  const Eigen::VectorXd uy_nn = row_vector(batch.du_dy, 0);
  const HardFields hard = hard_ansatz(field, u_nn, ux_nn, uy_nn);
  const QuadFields quad = nq == n_all ? hard : head_fields(hard, nq);
  const double n_elem = static_cast<double>(tensors_.n_elem);

  const ResidualMatrix r = assemble_residual(tensors_, quad, problem_);

  const bool supg = uses_supg(config_.mode);
  Eigen::VectorXd tau;
  Eigen::VectorXd dtau;
  ResidualMatrix s;
  if (supg) {
    if (config_.mode == LossMode::supg_const) {
      tau = Eigen::VectorXd::Constant(nq, config_.tau_const);
    } else {
      tau.resize(nq);
      dtau.resize(nq);
      for (Eigen::Index i = 0; i < nq; ++i) {
        const double sig = sigmoid(batch.u(1, i));
        const double scale = config_.tau_growth * tau_mask_(i);
        tau(i) = scale * sig;
        dtau(i) = scale * sig * (1.0 - sig);
      }
    }
    s = supg_residual(tensors_, quad, tau, problem_);
  }

  LossBreakdown b;
  ResidualMatrix g_var;   // dL/dR
  ResidualMatrix g_supg;  // dL/dS
  if (supg && config_.composition == SupgComposition::in_residual) {
    const ResidualMatrix w = r + s;
    b.variational = variational_loss(w);
    if (adjoint) {
      g_var = (2.0 / n_elem) * w;
      g_supg = g_var;
    }
  } else {
    b.variational = variational_loss(r);
    if (adjoint) g_var = (2.0 / n_elem) * r;
    if (supg) {
      b.supg = variational_loss(s);
      if (adjoint) g_supg = (2.0 / n_elem) * s;
    }
  }
  if (config_.mode == LossMode::l2reg) b.regularization = l2_weight_regularization(net, config_.lambda);

  Eigen::VectorXd diff;
  if (config_.soft_boundary) {
    diff = hard.u.tail(n_all - nq) - boundary_g_;
    b.boundary = config_.soft_boundary->weight * diff.squaredNorm() / static_cast<double>(diff.size());
  }
  b.total = b.variational + b.supg + b.regularization + b.boundary;
  if (parts) *parts = b;
  if (!adjoint) return b.total;

  // Adjoints w.r.t. the hard-constrained fields at every point.
  Eigen::VectorXd g_u = Eigen::VectorXd::Zero(n_all);
  Eigen::VectorXd g_ux = Eigen::VectorXd::Zero(n_all);
  Eigen::VectorXd g_uy = Eigen::VectorXd::Zero(n_all);

  Eigen::VectorXd gx, gy, gv;
  contract_transposed(tensors_.grad_x, g_var, tensors_, gx);
  contract_transposed(tensors_.grad_y, g_var, tensors_, gy);
  contract_transposed(tensors_.shape_val, g_var, tensors_, gv);
  const double eps = problem_.epsilon;
  const double b1 = problem_.b[0];
  const double b2 = problem_.b[1];
  const double c = problem_.c;
  g_u.head(nq) = c * gv;
  g_ux.head(nq) = eps * gx + b1 * gv;
  g_uy.head(nq) = eps * gy + b2 * gv;

  if (supg) {
    Eigen::VectorXd px, py;
    contract_transposed(tensors_.grad_x, g_supg, tensors_, px);
    contract_transposed(tensors_.grad_y, g_supg, tensors_, py);
    const Eigen::VectorXd p = b1 * px + b2 * py;
    const Eigen::VectorXd tp = (tau.array() * p.array()).matrix();
    g_u.head(nq) += c * tp;
    g_ux.head(nq) += b1 * tp;
    g_uy.head(nq) += b2 * tp;
    if (config_.mode == LossMode::supg_learnt) {
      const Eigen::VectorXd res = strong_residual(quad, tensors_.forcing, problem_);
      adjoint->u.row(1).head(nq) = (res.array() * p.array() * dtau.array()).matrix().transpose();
    }
  }
  if (config_.soft_boundary) {
    g_u.tail(n_all - nq) = (2.0 * config_.soft_boundary->weight / static_cast<double>(diff.size())) * diff;
  }

  // u_hard = j + h u_NN
  adjoint->u.row(0) = (g_u.array() * field.h.array() + g_ux.array() * field.h_x.array() +
                       g_uy.array() * field.h_y.array())
                          .matrix()
                          .transpose();
  adjoint->du_dx.row(0) = (g_ux.array() * field.h.array()).matrix().transpose();
  adjoint->du_dy.row(0) = (g_uy.array() * field.h.array()).matrix().transpose();

  Eigen::Ref<Eigen::VectorXd>& direct = *grad;
  if (adaptive_) {
    for (int sl : used_scalar_slots(*ansatz_.indicator)) {
      const auto idx = static_cast<Eigen::Index>(*net.extra_index(kIndicatorScalarNames[sl]));
      const auto hs = field.h_s.row(sl).transpose().array();
      const auto hxs = field.h_x_s.row(sl).transpose().array();
      const auto hys = field.h_y_s.row(sl).transpose().array();
      direct(idx) += (g_u.array() * u_nn.array() * hs + g_ux.array() * (u_nn.array() * hxs + ux_nn.array() * hs) +
                      g_uy.array() * (u_nn.array() * hys + uy_nn.array() * hs))
                         .sum();
    }
  }
  if (config_.mode == LossMode::l2reg) {
    const double scale = 2.0 * config_.lambda / static_cast<double>(net.n_weight_entries());
    for (int l = 0; l < net.n_layers(); ++l) {
      const auto off = static_cast<Eigen::Index>(net.weight_offset(l));
      const Eigen::Index size = net.weight(l).size();
      direct.segment(off, size) += scale * net.parameters().segment(off, size);
    }
  }
  return b.total;
}

LossAndGradient VariationalObjective::evaluate(const DenseNetwork& net, long epoch) const {
  check_network(net);
  const LossEvaluator evaluator = [&](const EvalBatch& batch, BatchAdjoint& adjoint,
                                      Eigen::Ref<Eigen::VectorXd> direct) {
    return run(net, batch, &adjoint, &direct, nullptr);
  };
  return loss_gradient(net, points_, evaluator, epoch);
}

LossBreakdown VariationalObjective::breakdown(const DenseNetwork& net) const {
  check_network(net);
  const EvalBatch batch = forward_with_gradients(net, points_);
  LossBreakdown parts;
  run(net, batch, nullptr, nullptr, &parts);
  return parts;
}

double loop_reference_loss(const DenseNetwork& net, const Mesh& mesh, const QuadratureRule2D& rule,
                           const TestFunctionSet& tests, const CDRProblem& problem, const BoundaryAnsatz& ansatz,
                           const LossConfig& config) {
  validate_loss_config(config, net.n_outputs());
  const int n_elem = static_cast<int>(mesh.n_elem());
  const int n_test = tests.n_test();
  const int n_quad = rule.size();
  const std::array<double, 3> scalars = indicator_scalars(net);
  const bool supg = uses_supg(config.mode);
  const TauMask mask;

  ResidualMatrix r = ResidualMatrix::Zero(n_test, n_elem);
  ResidualMatrix s = ResidualMatrix::Zero(n_test, n_elem);
  Eigen::Matrix2Xd cell_points(2, n_quad);
  for (int k = 0; k < n_elem; ++k) {
    const QuadCell& cell = mesh.cell(k);
    for (int q = 0; q < n_quad; ++q) {
      const Point2 x = bilinear_map(cell, rule.points[q]);
      cell_points(0, q) = x.x;
      cell_points(1, q) = x.y;
    }
    const EvalBatch batch = forward_with_gradients(net, cell_points);
    const AnsatzField field = sample_ansatz(ansatz, scalars, cell_points);
    const HardFields u = hard_ansatz(field, row_vector(batch.u, 0), row_vector(batch.du_dx, 0),
                                     row_vector(batch.du_dy, 0));

    for (int j = 0; j < n_test; ++j) {
      for (int q = 0; q < n_quad; ++q) {
        const Point2 ref = rule.points[q];
        const Point2 x{cell_points(0, q), cell_points(1, q)};
        const JacobianInfo jac = jacobian(cell, ref);
        const double wdet = rule.weights[q] * std::abs(jac.det);
        const double v = tests.value(j, ref);
        const auto grad = map_reference_gradient(jac, tests.reference_gradient(j, ref));
        const double f = problem.f(x);
        const double transport = problem.b[0] * u.u_x(q) + problem.b[1] * u.u_y(q);
        r(j, k) += wdet * (problem.epsilon * (u.u_x(q) * grad[0] + u.u_y(q) * grad[1]) + transport * v +
                           problem.c * u.u(q) * v - f * v);
        if (supg) {
          double tau = config.tau_const;
          if (config.mode == LossMode::supg_learnt) {
            tau = config.tau_growth * tau_mask_eval(mask, x).j * sigmoid(batch.u(1, q));
          }
          const double res = transport + problem.c * u.u(q) - f;
          s(j, k) += wdet * tau * res * (problem.b[0] * grad[0] + problem.b[1] * grad[1]);
        }
      }
    }
  }

  double total = 0.0;
  if (supg && config.composition == SupgComposition::in_residual) {
    total = variational_loss(r + s);
  } else {
    total = variational_loss(r);
    if (supg) total += variational_loss(s);
  }
  if (config.mode == LossMode::l2reg) total += l2_weight_regularization(net, config.lambda);
  if (config.soft_boundary) {
    const Eigen::Matrix2Xd bp = boundary_points(problem.domain, config.soft_boundary->n_boundary_points);
    const Prediction pred = predict(net, ansatz, bp);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < bp.cols(); ++i) {
      const double d = pred.u(i) - problem.g({bp(0, i), bp(1, i)});
      sum += d * d;
    }
    total += config.soft_boundary->weight * sum / static_cast<double>(bp.cols());
  }
  return total;
}

}  // namespace hpvpinn
