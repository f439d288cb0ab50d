#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hpvpinn/cli.hpp"
#include "hpvpinn/error.hpp"

namespace {

std::vector<std::pair<int, int>> parse_cells(const std::vector<std::string>& items) {
  std::vector<std::pair<int, int>> cells;
  for (const std::string& item : items) {
    const auto x = item.find('x');
    if (x == std::string::npos) throw CLI::ValidationError("--cells", "expected NXxNY, got '" + item + "'");
    try {
      std::size_t a = 0, b = 0;
      const int nx = std::stoi(item.substr(0, x), &a);
      const int ny = std::stoi(item.substr(x + 1), &b);
      if (a != x || b != item.size() - x - 1 || nx < 1 || ny < 1) throw std::invalid_argument(item);
      cells.emplace_back(nx, ny);
    } catch (const std::logic_error&) {
      throw CLI::ValidationError("--cells", "expected NXxNY with positive sizes, got '" + item + "'");
    }
  }
  return cells;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hp-VPINN solver for 2D convection-dominated problems"};
  app.require_subcommand(1);

  std::string solve_config;
  CLI::App* solve = app.add_subcommand("solve", "Train one run config and export results");
  solve->add_option("config", solve_config, "YAML run config")->required();

  std::string sweep_config;
  hpvpinn::SweepParam sweep_param = hpvpinn::SweepParam::tau;
  std::vector<double> sweep_values;
  int sweep_seeds = 1;
  const std::map<std::string, hpvpinn::SweepParam> params{{"tau", hpvpinn::SweepParam::tau},
                                                          {"tau_growth", hpvpinn::SweepParam::tau_growth},
                                                          {"lambda", hpvpinn::SweepParam::lambda}};
  CLI::App* sweep = app.add_subcommand("sweep", "Mean best error over seeds for a list of parameter values");
  sweep->add_option("config", sweep_config, "YAML run config")->required();
  sweep->add_option("--param", sweep_param, "tau, tau_growth or lambda")
      ->required()
      ->transform(CLI::CheckedTransformer(params, CLI::ignore_case));
  sweep->add_option("--values", sweep_values, "non-negative values")
      ->required()
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber);
  sweep->add_option("--seeds", sweep_seeds, "seeds 0..n-1 per value")->check(CLI::PositiveNumber);

  std::string fault;
  CLI::App* validate = app.add_subcommand("validate", "Run the fast property suite");
  validate->add_option("--inject-fault", fault, "test hook")->check(CLI::IsMember({"jacobian_sign"}));

  std::vector<std::string> cell_items{"1x1", "2x2", "4x4", "8x8", "16x16"};
  CLI::App* bench = app.add_subcommand("bench", "Time loop vs tensor loss assembly");
  bench->add_option("--cells", cell_items, "meshes such as 1x1,4x4,16x16")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? hpvpinn::kExitOk : hpvpinn::kExitConfig;
  }

  try {
    if (*solve) return hpvpinn::cmd_solve(solve_config, std::cout, std::cerr);
    if (*sweep) return hpvpinn::cmd_sweep(sweep_config, sweep_param, sweep_values, sweep_seeds, std::cout, std::cerr);
    if (*validate) {
      hpvpinn::ValidateOptions options;
      options.flip_jacobian_sign = fault == "jacobian_sign";
      return hpvpinn::cmd_validate(options, std::cout);
    }
    if (*bench) {
      std::vector<std::pair<int, int>> cells;
      try {
        cells = parse_cells(cell_items);
      } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hpvpinn::kExitConfig;
      }
      return hpvpinn::cmd_bench(cells, std::cout, std::cerr);
    }
  } catch (const hpvpinn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return hpvpinn::kExitConfig;
  } catch (const hpvpinn::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return hpvpinn::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hpvpinn::kExitConfig;
  }
  return hpvpinn::kExitOk;
}
