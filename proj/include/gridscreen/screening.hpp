#pragma once

#include <optional>
#include <vector>

#include "gridscreen/caseio.hpp"
#include "gridscreen/dcmodel.hpp"
#include "gridscreen/lpcore.hpp"

namespace gridscreen {

/// Per-bus demand box. Built from a variation fraction v as
/// [min((1-v)d, (1+v)d), max((1-v)d, (1+v)d)], which keeps lower <= upper
/// for negative nominal loads as well.
struct BusLoadRange {
  double lower = 0.0;
  double upper = 0.0;
};

struct LoadSet {
  std::vector<BusLoadRange> range;  // by bus index
  std::optional<double> v;          // provenance when built from a fraction
};

LoadSet make_load_set(const Network& network, double v);

enum class Verdict { RedundantParallel, RedundantOpt, NonRedundant };

struct Witness {
  Eigen::VectorXd p;
  Eigen::VectorXd theta;
  Eigen::VectorXd d;
};

struct ScreeningCertificate {
  FlowBound bound;
  Verdict verdict = Verdict::NonRedundant;
  std::optional<double> extreme_flow;  // optimization verdicts only
  std::optional<double> margin;        // f_max - |extreme_flow|
  std::optional<Witness> witness;      // present iff NonRedundant
};

struct ScreeningOptions {
  bool relax_pmin = true;  // screen with p in [0, p_max] (UC-compatible)
  int workers = 1;
  std::optional<double> margin_epsilon;  // absolute override of the default rule
  bool cascade = false;  // drop step-1 certified bounds from step-2 LPs
};

struct StepCounts {
  int parallel = 0;
  int optimization = 0;
  int remaining = 0;
};

struct ScreeningReport {
  std::vector<FlowBound> redundant;  // sorted by (branch, side)
  StepCounts counts;
  std::vector<ScreeningCertificate> certificates;
  double step1_ms = 0.0;
  double step2_ms = 0.0;
  // configuration echo
  std::optional<double> v;
  bool relax_pmin = true;
  std::optional<double> margin_epsilon;
  int workers = 1;
  bool cascade = false;
};

/// Default redundancy margin: a relative guard against classifying a binding
/// constraint as redundant out of solver noise.
double default_margin_epsilon(double f_max);

struct ParallelVerdict {
  FlowBound bound;
  bool strict = false;  // ratio strictly below the kept branch's ratio
};

/// Dominated flow bounds among parallel-line groups (same terminal pair,
/// positive susceptance, rated). Depends only on topology and parameters.
std::vector<ParallelVerdict> parallel_dominated(const Network& network);

std::vector<ScreeningCertificate> screen_parallel(const Network& network);

/// The per-bound extreme-flow LP: variables p (per generator), theta (per
/// bus, slack fixed to zero) and d (per bus, bounded by the load set);
/// nodal balance plus every flow limit not listed in `exclusions`; the
/// objective drives the bounded branch's flow toward the requested side.
LinearProgram build_screening_lp(const Network& network, const DcSystem& dc,
                                 const LoadSet& loads, FlowBound bound, bool relax_pmin,
                                 const std::vector<FlowBound>& exclusions = {});

ScreeningCertificate screen_bound(const Network& network, const DcSystem& dc,
                                  const LoadSet& loads, FlowBound bound, bool relax_pmin,
                                  const std::vector<FlowBound>& exclusions = {},
                                  std::optional<double> margin_epsilon = std::nullopt);

/// Two-step pipeline over all flow bounds. Subproblems are distributed over
/// `workers` threads; the result is independent of worker count.
ScreeningReport screen_all(const Network& network, const LoadSet& loads,
                           const ScreeningOptions& options = {});

std::string report_to_json(const ScreeningReport& report, const Network& network);
ScreeningReport report_from_json(const std::string& text);

const char* to_string(Verdict verdict);

}  // namespace gridscreen
