#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "hpvpinn/cli.hpp"
#include "hpvpinn/error.hpp"

namespace hpvpinn {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().is_null() ? -1 : node.Mark().line + 1; }

void require_map(const YAML::Node& node, const std::string& name) {
  if (!node.IsMap()) throw ConfigError("'" + name + "' must be a mapping", line_of(node));
}

void check_keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& section) {
  for (auto it = map.begin(); it != map.end(); ++it) {
    const std::string key = it->first.as<std::string>();
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) {
      const std::string where = section.empty() ? "" : " in '" + section + "'";
      throw ConfigError("unknown key '" + key + "'" + where, line_of(it->first));
    }
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& name, const char* expected) {
  if (!node.IsScalar()) throw ConfigError("'" + name + "' must be " + expected, line_of(node));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + name + "' must be " + expected + ", got '" + node.Scalar() + "'", line_of(node));
  }
}

double real(const YAML::Node& n, const std::string& name) { return scalar<double>(n, name, "a number"); }
int integer(const YAML::Node& n, const std::string& name) { return scalar<int>(n, name, "an integer"); }
bool boolean(const YAML::Node& n, const std::string& name) { return scalar<bool>(n, name, "true or false"); }
std::string text(const YAML::Node& n, const std::string& name) { return scalar<std::string>(n, name, "a string"); }

double non_negative(const YAML::Node& n, const std::string& name) {
  const double v = real(n, name);
  if (!(v >= 0.0)) throw ConfigError("'" + name + "' must be non-negative", line_of(n));
  return v;
}

int positive(const YAML::Node& n, const std::string& name) {
  const int v = integer(n, name);
  if (v < 1) throw ConfigError("'" + name + "' must be positive", line_of(n));
  return v;
}

void parse_problem(const YAML::Node& n, TrainingConfig& c) {
  require_map(n, "problem");
  check_keys(n, {"name", "epsilon"}, "problem");
  if (n["name"]) {
    c.problem = text(n["name"], "problem.name");
    if (c.problem != "eriksson_johnson" && c.problem != "outflow_layer" && c.problem != "parabolic_layer") {
      throw ConfigError("unknown problem '" + c.problem + "'", line_of(n["name"]));
    }
  }
  if (n["epsilon"]) {
    c.epsilon = real(n["epsilon"], "problem.epsilon");
    if (!(c.epsilon > 0.0)) throw ConfigError("'problem.epsilon' must be positive", line_of(n["epsilon"]));
  }
}

void parse_mesh(const YAML::Node& n, TrainingConfig& c) {
  require_map(n, "mesh");
  check_keys(n, {"nx", "ny", "n_quad_per_dim", "n_test_per_dim"}, "mesh");
  if (n["nx"]) c.nx = positive(n["nx"], "mesh.nx");
  if (n["ny"]) c.ny = positive(n["ny"], "mesh.ny");
  if (n["n_quad_per_dim"]) {
    c.n_quad_per_dim = integer(n["n_quad_per_dim"], "mesh.n_quad_per_dim");
    if (c.n_quad_per_dim < 2) throw ConfigError("'mesh.n_quad_per_dim' must be at least 2", line_of(n["n_quad_per_dim"]));
  }
  if (n["n_test_per_dim"]) c.n_test_per_dim = positive(n["n_test_per_dim"], "mesh.n_test_per_dim");
}

void parse_network(const YAML::Node& n, TrainingConfig& c) {
  require_map(n, "network");
  check_keys(n, {"layer_sizes", "seed"}, "network");
  if (const YAML::Node ls = n["layer_sizes"]) {
    if (!ls.IsSequence() || ls.size() < 2) {
      throw ConfigError("'network.layer_sizes' must be a list of at least two widths", line_of(ls));
    }
    c.layer_sizes.clear();
    for (const YAML::Node& w : ls) c.layer_sizes.push_back(positive(w, "network.layer_sizes"));
    if (c.layer_sizes.front() != 2) throw ConfigError("'network.layer_sizes' must start with 2", line_of(ls));
  }
  if (n["seed"]) c.seed = scalar<std::uint64_t>(n["seed"], "network.seed", "a non-negative integer");
}

void parse_training(const YAML::Node& n, TrainingConfig& c) {
  require_map(n, "training");
  check_keys(n, {"learning_rate", "epochs", "eval_every"}, "training");
  if (n["learning_rate"]) {
    c.learning_rate = real(n["learning_rate"], "training.learning_rate");
    if (!(c.learning_rate > 0.0)) {
      throw ConfigError("'training.learning_rate' must be positive", line_of(n["learning_rate"]));
    }
  }
  if (n["epochs"]) {
    c.epochs = scalar<long>(n["epochs"], "training.epochs", "an integer");
    if (c.epochs < 0) throw ConfigError("'training.epochs' must be non-negative", line_of(n["epochs"]));
  }
  if (n["eval_every"]) c.eval_every = positive(n["eval_every"], "training.eval_every");
}

void parse_loss(const YAML::Node& n, TrainingConfig& c) {
  require_map(n, "loss");
  check_keys(n, {"mode", "tau", "tau_growth", "lambda", "supg_composition", "soft_boundary"}, "loss");
  LossConfig& l = c.loss;
  if (n["mode"]) {
    const std::string m = text(n["mode"], "loss.mode");
    if (m == "variational") l.mode = LossMode::variational;
    else if (m == "supg_const") l.mode = LossMode::supg_const;
    else if (m == "supg_learnt") l.mode = LossMode::supg_learnt;
    else if (m == "l2reg") l.mode = LossMode::l2reg;
    else throw ConfigError("unknown loss mode '" + m + "' (variational, supg_const, supg_learnt, l2reg)", line_of(n["mode"]));
  }
  if (n["tau"]) l.tau_const = non_negative(n["tau"], "loss.tau");
  if (n["tau_growth"]) l.tau_growth = non_negative(n["tau_growth"], "loss.tau_growth");
  if (n["lambda"]) l.lambda = non_negative(n["lambda"], "loss.lambda");
  if (n["supg_composition"]) {
    const std::string s = text(n["supg_composition"], "loss.supg_composition");
    if (s == "in_residual") l.composition = SupgComposition::in_residual;
    else if (s == "separate") l.composition = SupgComposition::separate;
    else throw ConfigError("unknown supg_composition '" + s + "' (in_residual, separate)", line_of(n["supg_composition"]));
  }
  if (const YAML::Node sb = n["soft_boundary"]) {
    require_map(sb, "loss.soft_boundary");
    check_keys(sb, {"weight", "n_points"}, "loss.soft_boundary");
    SoftBoundary soft;
    if (sb["weight"]) soft.weight = non_negative(sb["weight"], "loss.soft_boundary.weight");
    if (sb["n_points"]) soft.n_boundary_points = positive(sb["n_points"], "loss.soft_boundary.n_points");
    l.soft_boundary = soft;
  }
}

void parse_indicator(const YAML::Node& n, TrainingConfig& c) {
  require_map(n, "indicator");
  check_keys(n, {"type", "initial", "kappa"}, "indicator");
  if (n["type"]) {
    const std::string t = text(n["type"], "indicator.type");
    if (t == "none") c.indicator = IndicatorChoice::none;
    else if (t == "symmetric") c.indicator = IndicatorChoice::symmetric;
    else if (t == "modified") c.indicator = IndicatorChoice::modified;
    else if (t == "adaptive") c.indicator = IndicatorChoice::adaptive;
    else if (t == "custom") c.indicator = IndicatorChoice::custom;
    else throw ConfigError("unknown indicator type '" + t + "' (none, symmetric, modified, adaptive, custom)", line_of(n["type"]));
  }
  if (const YAML::Node init = n["initial"]) {
    require_map(init, "indicator.initial");
    check_keys(init, {"alpha", "beta", "gamma"}, "indicator.initial");
    std::array<double, 3> s{};
    for (int i = 0; i < 3; ++i) {
      const std::string& name = kIndicatorScalarNames[i];
      if (init[name]) s[i] = real(init[name], "indicator.initial." + name);
    }
    c.initial_scalars = s;
  }
  if (const YAML::Node k = n["kappa"]) {
    if (!k.IsSequence() || k.size() != 4) {
      throw ConfigError("'indicator.kappa' must list four slopes (left, bottom, right, top)", line_of(k));
    }
    for (std::size_t i = 0; i < 4; ++i) {
      c.custom_kappa[i] = real(k[i], "indicator.kappa");
      if (!(c.custom_kappa[i] > 0.0)) throw ConfigError("indicator slopes must be positive", line_of(k[i]));
    }
  }
  if (c.indicator == IndicatorChoice::custom && !n["kappa"]) {
    throw ConfigError("custom indicator needs 'kappa'", line_of(n));
  }
}

void parse_output(const YAML::Node& n, RunConfigFile& rc) {
  require_map(n, "output");
  check_keys(n, {"directory", "csv", "images", "image_resolution", "grid", "checkpoint"}, "output");
  if (n["directory"]) rc.output_directory = text(n["directory"], "output.directory");
  if (n["csv"]) rc.exports.csv = boolean(n["csv"], "output.csv");
  if (n["images"]) rc.exports.images = boolean(n["images"], "output.images");
  if (n["image_resolution"]) {
    rc.exports.image_resolution = integer(n["image_resolution"], "output.image_resolution");
    if (rc.exports.image_resolution < 2) {
      throw ConfigError("'output.image_resolution' must be at least 2", line_of(n["image_resolution"]));
    }
  }
  if (n["grid"]) {
    rc.exports.grid = integer(n["grid"], "output.grid");
    if (rc.exports.grid < 2) throw ConfigError("'output.grid' must be at least 2", line_of(n["grid"]));
  }
  if (n["checkpoint"]) rc.exports.checkpoint = boolean(n["checkpoint"], "output.checkpoint");
}

}  // namespace

RunConfigFile parse_run_config(const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(source);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.is_null() ? -1 : e.mark.line + 1);
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping of sections", line_of(root));
  check_keys(root, {"problem", "mesh", "network", "training", "loss", "indicator", "output"}, "");

  RunConfigFile rc;
  TrainingConfig& c = rc.training;
  if (root["problem"]) parse_problem(root["problem"], c);
  if (root["mesh"]) parse_mesh(root["mesh"], c);
  if (root["network"]) parse_network(root["network"], c);
  if (root["training"]) parse_training(root["training"], c);
  if (root["loss"]) parse_loss(root["loss"], c);
  if (root["indicator"]) parse_indicator(root["indicator"], c);
  if (root["output"]) parse_output(root["output"], rc);

  try {
    validate_training_config(c);
  } catch (const ConfigError& e) {
    // Cross-field checks are tied to the section that most likely needs fixing.
    const YAML::Node anchor = root["network"] ? root["network"] : root["loss"] ? root["loss"] : root;
    throw ConfigError(e.what(), line_of(anchor));
  }
  return rc;
}

RunConfigFile load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string resolve_output_directory(const std::string& directory) {
  const std::filesystem::path dir(directory);
  const char* root = std::getenv("VPINN_OUTPUT_ROOT");
  if (root && *root && dir.is_relative()) return (std::filesystem::path(root) / dir).string();
  return dir.string();
}

}  // namespace hpvpinn
