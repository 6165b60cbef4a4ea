#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridscreen/opfsolve.hpp"
#include "gridscreen/screening.hpp"

namespace gridscreen {

struct RunConfig {
  std::string case_path;
  std::vector<double> v_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  double pmin_floor = 0.1;
  bool relax_pmin = true;
  int workers = 1;
  std::optional<double> margin_epsilon;
  OpfForm form = OpfForm::Theta;
  int segments = 10;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool dump_lp = false;
  bool dump_ptdf = false;
};

enum class SolveMode { Opf, Uc };
enum class LoadSource { Nominal, Sample };

/// Screens every v in the grid; writes one JSON report per v plus a CSV
/// summary (and the canonical network snapshot). Returns a process exit
/// code: 0 ok, 1 user/data error, 2 internal failure.
int cmd_screen(const RunConfig& config);

/// Solves full (and optionally reduced) OPF/UC instances per v, either at
/// the nominal load or over seeded uniform samples; emits a per-sample CSV
/// and an aggregate CSV. Reduced solves require a prior cmd_screen run.
int cmd_solve(const RunConfig& config, SolveMode mode, bool reduced, LoadSource source,
              int samples);

/// Grid-search + coordinate-descent oracle for the screening LPs and the
/// brute-force commitment oracle; writes a pass/fail report.
int cmd_oracle(const RunConfig& config, int grid_resolution, int uc_seeds = 20);

/// Deterministic per-sample load draw used by cmd_solve and the benchmarks.
Eigen::VectorXd sample_load(const LoadSet& loads, std::uint64_t seed, int v_index, int sample);

/// Independent maximization/minimization of one bound's flow over the load
/// box: dense grid over the most sensitive load dimensions, then coordinate
/// descent with per-coordinate ternary refinement. Returns the refined
/// extreme, or nothing when no evaluated load was feasible.
std::optional<double> grid_oracle_extreme(const Network& network, const DcSystem& dc,
                                          const PtdfMatrix& ptdf, const LoadSet& loads,
                                          FlowBound bound, bool relax_pmin, int resolution);

std::string screen_report_path(const RunConfig& config, double v);
std::string case_stem(const std::string& path);

}  // namespace gridscreen
