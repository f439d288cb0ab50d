#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "hpvpinn/cli.hpp"
#include "hpvpinn/error.hpp"

namespace hpvpinn {

namespace fs = std::filesystem;

namespace {

const char* mode_name(LossMode m) {
  switch (m) {
    case LossMode::variational: return "variational";
    case LossMode::supg_const: return "supg_const";
    case LossMode::supg_learnt: return "supg_learnt";
    case LossMode::l2reg: return "l2reg";
  }
  return "?";
}

const char* indicator_name(IndicatorChoice c) {
  switch (c) {
    case IndicatorChoice::none: return "none";
    case IndicatorChoice::symmetric: return "symmetric";
    case IndicatorChoice::modified: return "modified";
    case IndicatorChoice::adaptive: return "adaptive";
    case IndicatorChoice::custom: return "custom";
  }
  return "?";
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

void write_histories(const fs::path& dir, const TrainingRecord& r) {
  std::ofstream loss = open_out(dir / "loss_history.csv");
  loss << "epoch,loss\n";
  for (std::size_t e = 0; e < r.loss_history.size(); ++e) loss << e << ',' << fmt17(r.loss_history[e]) << '\n';
  std::ofstream err = open_out(dir / "error_history.csv");
  err << "epoch,l2_err,linf_err\n";
  for (const ErrorSample& s : r.error_history) err << s.epoch << ',' << fmt17(s.l2) << ',' << fmt17(s.linf) << '\n';
}

nlohmann::json summary_json(const RunConfigFile& rc, const TrainingRecord& r) {
  const TrainingConfig& c = rc.training;
  nlohmann::json j;
  j["status"] = "ok";
  j["problem"] = c.problem;
  j["epsilon"] = c.epsilon;
  j["loss_mode"] = mode_name(c.loss.mode);
  j["indicator"] = indicator_name(c.indicator);
  j["seed"] = c.seed;
  j["epochs_run"] = r.loss_history.size();
  j["best_l2_err"] = number_or_null(r.best_l2_err);
  j["best_epoch"] = r.best_epoch;
  double best_linf = std::numeric_limits<double>::quiet_NaN();
  for (const ErrorSample& s : r.error_history) {
    if (s.epoch == r.best_epoch) best_linf = s.linf;
  }
  j["best_linf_err"] = number_or_null(best_linf);
  if (!r.error_history.empty()) {
    j["initial_l2_err"] = r.error_history.front().l2;
    j["final_l2_err"] = r.error_history.back().l2;
  }
  j["final_loss"] = r.loss_history.empty() ? nlohmann::json(nullptr) : number_or_null(r.loss_history.back());
  for (int s : r.scalar_slots) {
    j["initial_" + kIndicatorScalarNames[s]] = r.initial_scalars[s];
    j["final_" + kIndicatorScalarNames[s]] = r.final_scalars[s];
  }
  j["wall_time_s"] = r.wall_time;
  return j;
}

Eigen::VectorXd exact_on(const CDRProblem& problem, const Eigen::Matrix2Xd& pts) {
  Eigen::VectorXd v(pts.cols());
  for (Eigen::Index i = 0; i < pts.cols(); ++i) v(i) = problem.exact->value({pts(0, i), pts(1, i)});
  return v;
}

void write_images(const fs::path& dir, const DenseNetwork& net, const BoundaryAnsatz& ansatz, const CDRProblem& problem,
                  double tau_growth, int n) {
  const Eigen::Matrix2Xd grid = evaluation_grid(problem.domain, n);
  const Prediction p = predict(net, ansatz, grid, tau_growth);
  write_ppm((dir / "u_pred.ppm").string(), p.u, n);
  if (problem.exact) write_ppm((dir / "abs_err.ppm").string(), (exact_on(problem, grid) - p.u).cwiseAbs(), n);
  if (p.tau) write_ppm((dir / "tau.ppm").string(), *p.tau, n);
  if (ansatz.indicator) write_ppm((dir / "h.ppm").string(), p.h, n);
}

void export_run(const fs::path& dir, const RunConfigFile& rc, const TrainingRecord& r, const CDRProblem& problem,
                const BoundaryAnsatz& ansatz) {
  write_histories(dir, r);
  const DenseNetwork* best = r.best_network ? &*r.best_network : r.final_network ? &*r.final_network : nullptr;
  if (!best) return;
  if (rc.exports.csv) {
    write_field_csv((dir / "field.csv").string(), *best, ansatz, problem, rc.training.loss.tau_growth, rc.exports.grid);
  }
  if (rc.exports.images) {
    write_images(dir, *best, ansatz, problem, rc.training.loss.tau_growth, rc.exports.image_resolution);
  }
  if (rc.exports.checkpoint) {
    save_checkpoint((dir / "checkpoint_best.json").string(), *best, r.best_epoch);
    if (r.final_network) {
      save_checkpoint((dir / "checkpoint_final.json").string(), *r.final_network,
                      static_cast<long>(r.loss_history.size()));
    }
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

void write_field_csv(const std::string& path, const DenseNetwork& net, const BoundaryAnsatz& ansatz,
                     const CDRProblem& problem, double tau_growth, int grid_n) {
  const Eigen::Matrix2Xd grid = evaluation_grid(problem.domain, grid_n);
  const Prediction p = predict(net, ansatz, grid, tau_growth);
  std::ofstream out = open_out(path);
  out << "x,y,u_pred";
  if (problem.exact) out << ",u_exact,abs_err";
  if (p.tau) out << ",tau";
  if (ansatz.indicator) out << ",h";
  out << '\n';
  for (Eigen::Index i = 0; i < grid.cols(); ++i) {
    out << fmt17(grid(0, i)) << ',' << fmt17(grid(1, i)) << ',' << fmt17(p.u(i));
    if (problem.exact) {
      const double ue = problem.exact->value({grid(0, i), grid(1, i)});
      out << ',' << fmt17(ue) << ',' << fmt17(std::abs(ue - p.u(i)));
    }
    if (p.tau) out << ',' << fmt17((*p.tau)(i));
    if (ansatz.indicator) out << ',' << fmt17(p.h(i));
    out << '\n';
  }
}

void write_ppm(const std::string& path, const Eigen::VectorXd& values, int n) {
  if (values.size() != static_cast<Eigen::Index>(n) * n) throw InvalidArgument("image data does not match n x n");
  // viridis sampled at 9 evenly spaced anchors, linear in between
  static const std::array<std::array<double, 3>, 9> anchors{{{68, 1, 84},
                                                             {71, 44, 122},
                                                             {59, 81, 139},
                                                             {44, 113, 142},
                                                             {33, 145, 140},
                                                             {39, 173, 129},
                                                             {92, 200, 99},
                                                             {170, 220, 50},
                                                             {253, 231, 37}}};
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << "P6\n" << n << ' ' << n << "\n255\n";
  for (int row = n - 1; row >= 0; --row) {
    for (int col = 0; col < n; ++col) {
      const double t = std::clamp((values(static_cast<Eigen::Index>(row) * n + col) - lo) / span, 0.0, 1.0) * 8.0;
      const int a = std::min(static_cast<int>(t), 7);
      const double f = t - a;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = anchors[a][ch] * (1.0 - f) + anchors[a + 1][ch] * f;
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
      }
    }
  }
}

int cmd_solve(const std::string& config_path, std::ostream& out, std::ostream& err) {
  RunConfigFile rc;
  fs::path dir;
  try {
    rc = load_run_config(config_path);
    dir = resolve_output_directory(rc.output_directory);
    fs::create_directories(dir);
  } catch (const ConfigError& e) {
    err << config_path << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "cannot create output directory: " << e.what() << '\n';
    return kExitConfig;
  }

  const CDRProblem problem = make_problem(rc.training.problem, rc.training.epsilon);
  const BoundaryAnsatz ansatz = make_ansatz(rc.training, problem);
  try {
    const TrainingRecord r = train(rc.training);
    export_run(dir, rc, r, problem, ansatz);
    const nlohmann::json summary = summary_json(rc, r);
    write_json(dir / "summary.json", summary);
    out << "best_l2_err " << summary["best_l2_err"].dump() << " at epoch " << r.best_epoch << ", "
        << r.loss_history.size() << " epochs in " << r.wall_time << " s\n";
    for (int s : r.scalar_slots) out << kIndicatorScalarNames[s] << ' ' << r.final_scalars[s] << '\n';
    out << "results in " << dir.string() << '\n';
    return kExitOk;
  } catch (const TrainingAborted& e) {
    export_run(dir, rc, e.partial(), problem, ansatz);
    nlohmann::json summary = summary_json(rc, e.partial());
    summary["status"] = "aborted";
    summary["abort_epoch"] = e.epoch();
    summary["last_finite_loss"] = number_or_null(e.last_finite_loss());
    write_json(dir / "summary.json", summary);
    err << "training aborted at epoch " << e.epoch() << ": " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConfigError& e) {
    err << config_path << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
}

int cmd_sweep(const std::string& config_path, SweepParam param, const std::vector<double>& values, int seeds,
              std::ostream& out, std::ostream& err) {
  RunConfigFile rc;
  fs::path dir;
  try {
    rc = load_run_config(config_path);
    if (values.empty()) throw ConfigError("--values must list at least one value");
    for (double v : values) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("sweep values must be finite and non-negative");
    }
    if (seeds < 1) throw ConfigError("--seeds must be positive");
    if (!make_problem(rc.training.problem, rc.training.epsilon).exact) {
      throw ConfigError("sweeps rank runs by L2 error and need a problem with an exact solution");
    }
    if (param == SweepParam::tau_growth && rc.training.loss.mode != LossMode::supg_learnt) {
      throw ConfigError("sweeping tau_growth needs loss mode supg_learnt");
    }
    dir = resolve_output_directory(rc.output_directory);
    fs::create_directories(dir);
  } catch (const ConfigError& e) {
    err << config_path << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "cannot create output directory: " << e.what() << '\n';
    return kExitConfig;
  }

  const char* name = param == SweepParam::tau ? "tau" : param == SweepParam::tau_growth ? "tau_growth" : "lambda";
  const std::vector<SweepRow> rows = sweep_tau(rc.training, param, values, seeds);
  std::ofstream csv = open_out(dir / (std::string("sweep_") + name + ".csv"));
  csv << "value,mean_best_l2_err,min,max,n_ok,n_failed\n";
  const SweepRow* best = nullptr;
  for (const SweepRow& row : rows) {
    csv << fmt17(row.value) << ',' << fmt17(row.mean) << ',' << fmt17(row.min) << ',' << fmt17(row.max) << ','
        << row.n_ok << ',' << row.n_failed << '\n';
    out << name << ' ' << row.value << ": mean " << row.mean << " [" << row.min << ", " << row.max << "]";
    if (row.n_failed > 0) out << " (" << row.n_failed << " failed)";
    out << '\n';
    if (row.n_ok > 0 && (!best || row.mean < best->mean)) best = &row;
  }
  nlohmann::json summary;
  summary["param"] = name;
  summary["seeds"] = seeds;
  if (best) {
    summary["argmin"] = best->value;
    summary["min_mean_best_l2_err"] = best->mean;
    out << "argmin " << name << " = " << best->value << " (mean best_l2_err " << best->mean << ")\n";
  } else {
    summary["argmin"] = nullptr;
    out << "every run failed\n";
  }
  write_json(dir / (std::string("sweep_") + name + "_summary.json"), summary);
  return best ? kExitOk : kExitNumeric;
}

BenchRow bench_mesh(int nx, int ny, int min_repeats) {
  TrainingConfig c;
  c.nx = nx;
  c.ny = ny;
  const CDRProblem problem = make_problem(c.problem, c.epsilon);
  const BoundaryAnsatz ansatz = make_ansatz(c, problem);
  const DenseNetwork net = make_network(c, ansatz, problem);
  const Mesh mesh = build_structured_mesh(nx, ny, problem.domain);
  const QuadratureRule2D rule = tensor_rule_2d(gll_rule(c.n_quad_per_dim));
  const TestFunctionSet tests(c.n_test_per_dim);
  const VariationalObjective objective(precompute_tensors(mesh, rule, tests, problem), problem, ansatz, c.loss);

  using clock = std::chrono::steady_clock;
  auto time_ms = [&](auto&& fn, double& value) {
    double best = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (int rep = 0; rep < min_repeats || total < 200.0; ++rep) {
      const auto t0 = clock::now();
      value = fn();
      const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      best = std::min(best, ms);
      total += ms;
      if (rep > 1000) break;
    }
    return best;
  };
  BenchRow row;
  row.n_cells = nx * ny;
  row.loop_ms = time_ms([&] { return loop_reference_loss(net, mesh, rule, tests, problem, ansatz, c.loss); },
                        row.loop_loss);
  row.tensor_ms = time_ms([&] { return objective.loss(net); }, row.tensor_loss);
  return row;
}

int cmd_bench(const std::vector<std::pair<int, int>>& cells, std::ostream& out, std::ostream& err) {
  if (cells.empty()) {
    err << "--cells must list at least one mesh\n";
    return kExitConfig;
  }
  out << "n_cells,loop_ms,tensor_ms,speedup\n";
  bool agree = true;
  for (const auto& [nx, ny] : cells) {
    if (nx < 1 || ny < 1) {
      err << "mesh dimensions must be positive\n";
      return kExitConfig;
    }
    const BenchRow row = bench_mesh(nx, ny);
    out << row.n_cells << ',' << row.loop_ms << ',' << row.tensor_ms << ',' << row.loop_ms / row.tensor_ms << '\n';
    const double rel = std::abs(row.loop_loss - row.tensor_loss) / std::max(std::abs(row.loop_loss), 1e-300);
    if (!(rel <= 1e-12)) {
      agree = false;
      err << nx << 'x' << ny << ": loop loss " << fmt17(row.loop_loss) << " vs tensor loss " << fmt17(row.tensor_loss)
          << " (relative difference " << rel << ")\n";
    }
  }
  return agree ? kExitOk : kExitValidation;
}

}  // namespace hpvpinn
