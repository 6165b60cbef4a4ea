#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gridscreen/cli.hpp"

using namespace gridscreen;

namespace {

std::vector<double> parse_v_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw CLI::ValidationError("--v", "empty v list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmission-constraint screening and reduced OPF/UC benchmarks"};
  app.require_subcommand(1);

  RunConfig config;
  std::string v_list;
  std::string relax = "on";
  std::string form = "theta";
  double margin = -1.0;
  int workers = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--case", config.case_path, "MATPOWER case file")->required();
    cmd->add_option("--v", v_list, "comma-separated load variation fractions (default 0,0.25,0.5,0.75,1)");
    cmd->add_option("--pmin-floor", config.pmin_floor, "p_min floor as a fraction of p_max")->capture_default_str();
    cmd->add_option("--relax-pmin", relax, "screen with p_min relaxed to zero: on|off")->capture_default_str();
    cmd->add_option("--workers", workers, "screening worker threads (env GRIDSCREEN_WORKERS)");
    cmd->add_option("--form", form, "dispatch formulation: theta|ptdf")->capture_default_str();
    cmd->add_option("--segments", config.segments, "pieces per quadratic cost")->capture_default_str();
    cmd->add_option("--seed", config.seed, "seed for sampled loads")->capture_default_str();
    cmd->add_option("--out", config.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--margin", margin, "absolute redundancy margin override");
    cmd->add_flag("--dump-lp", config.dump_lp, "write LP debug dumps");
    cmd->add_flag("--dump-ptdf", config.dump_ptdf, "write the PTDF matrix as CSV");
  };

  CLI::App* screen = app.add_subcommand("screen", "two-step redundancy screening per v");
  add_common(screen);

  CLI::App* solve = app.add_subcommand("solve", "solve full (and reduced) OPF/UC instances");
  add_common(solve);
  std::string mode = "opf";
  std::string load_source = "nominal";
  bool reduced = false;
  int samples = 1;
  solve->add_option("--mode", mode, "opf|uc")->capture_default_str();
  solve->add_flag("--reduced", reduced, "also solve with screened constraints removed");
  solve->add_option("--load", load_source, "nominal|sample")->capture_default_str();
  solve->add_option("--samples", samples, "number of sampled loads per v")->capture_default_str();

  CLI::App* oracle = app.add_subcommand("oracle", "grid-search and brute-force oracle checks");
  add_common(oracle);
  int grid_r = 9;
  int uc_seeds = 20;
  oracle->add_option("--grid-r", grid_r, "grid resolution per load dimension")->capture_default_str();
  oracle->add_option("--uc-seeds", uc_seeds, "commitment oracle sample count")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!v_list.empty()) config.v_grid = parse_v_list(v_list);
  } catch (const std::exception& e) {
    std::cerr << "error: bad --v list: " << e.what() << "\n";
    return 1;
  }
  if (relax == "on" || relax == "off") {
    config.relax_pmin = (relax == "on");
  } else {
    std::cerr << "error: --relax-pmin must be on or off\n";
    return 1;
  }
  if (form == "theta" || form == "ptdf") {
    config.form = form == "theta" ? OpfForm::Theta : OpfForm::Ptdf;
  } else {
    std::cerr << "error: --form must be theta or ptdf\n";
    return 1;
  }
  if (margin >= 0.0) config.margin_epsilon = margin;
  if (workers > 0) {
    config.workers = workers;
  } else if (const char* env = std::getenv("GRIDSCREEN_WORKERS")) {
    config.workers = std::max(1, std::atoi(env));
  } else {
    config.workers = 1;
  }

  if (screen->parsed()) return cmd_screen(config);
  if (oracle->parsed()) return cmd_oracle(config, grid_r, uc_seeds);

  if (mode != "opf" && mode != "uc") {
    std::cerr << "error: --mode must be opf or uc\n";
    return 1;
  }
  if (load_source != "nominal" && load_source != "sample") {
    std::cerr << "error: --load must be nominal or sample\n";
    return 1;
  }
  return cmd_solve(config, mode == "opf" ? SolveMode::Opf : SolveMode::Uc, reduced,
                   load_source == "nominal" ? LoadSource::Nominal : LoadSource::Sample, samples);
}
