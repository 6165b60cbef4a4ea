#pragma once

#include <mutex>
#include <optional>
#include <vector>

#include "gridscreen/dcmodel.hpp"
#include "gridscreen/lpcore.hpp"
#include "gridscreen/screening.hpp"

namespace gridscreen {

enum class SolveStatus { Optimal, Infeasible };
enum class OpfForm { Theta, Ptdf };

struct DispatchSolution {
  SolveStatus status = SolveStatus::Infeasible;
  Eigen::VectorXd p;      // per generator
  Eigen::VectorXd theta;  // per bus (recovered from injections in PTDF form)
  double objective = 0.0;
  std::vector<FlowBound> binding;  // enforced bounds within 1e-6 of their limit
  double solve_ms = 0.0;
  long iterations = 0;
};

struct CommitmentSolution {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<int> z;
  Eigen::VectorXd p;
  Eigen::VectorXd theta;
  double objective = 0.0;
  long nodes = 0;
  double solve_ms = 0.0;
};

struct ViolationReport {
  double balance = 0.0;     // max nodal balance residual
  double generation = 0.0;  // max generator bound violation
  double flow = 0.0;        // max violation over every rated branch
  Eigen::VectorXd branch_flows;
};

/// Dispatch and commitment solves over one prepared network. Quadratic costs
/// are handled by a K-segment piecewise-linear model shared by every solve,
/// so full-versus-reduced comparisons see the same cost surface. Methods are
/// const and safe to call from multiple threads.
class OpfSolver {
public:
  explicit OpfSolver(Network network, int segments = 10);

  const Network& network() const { return network_; }
  const DcSystem& dc() const { return dc_; }
  const PtdfMatrix& ptdf() const;
  int segments() const { return segments_; }

  /// Minimum-cost dispatch enforcing every flow bound outside `redundant`.
  /// Infeasible loads yield an Infeasible status, not an error.
  DispatchSolution solve_dcopf(const Eigen::VectorXd& load,
                               const std::vector<FlowBound>& redundant, OpfForm form) const;

  /// Single-period unit commitment (binary on/off per generator) by exact
  /// branch-and-bound.
  CommitmentSolution solve_uc(const Eigen::VectorXd& load,
                              const std::vector<FlowBound>& redundant, OpfForm form) const;

  /// Exhaustive 2^g enumeration oracle; ties pick the lexicographically
  /// smallest commitment. Refuses networks with more than 20 generators.
  CommitmentSolution brute_force_uc(const Eigen::VectorXd& load,
                                    const std::vector<FlowBound>& redundant,
                                    OpfForm form = OpfForm::Theta) const;

  /// The LP behind solve_dcopf, exposed for debug dumps.
  LinearProgram build_opf_lp(const Eigen::VectorXd& load, const std::vector<FlowBound>& redundant,
                             OpfForm form) const;

private:
  struct UcModel {
    LinearProgram lp;
    std::vector<int> binaries;
  };
  UcModel build_uc_lp(const Eigen::VectorXd& load, const std::vector<FlowBound>& redundant,
                      OpfForm form) const;
  int add_network_rows(LinearProgram& lp, const Eigen::VectorXd& load,
                       const std::vector<FlowBound>& redundant, OpfForm form) const;

  Network network_;
  DcSystem dc_;
  int segments_;
  mutable std::optional<PtdfMatrix> ptdf_;
  mutable std::once_flag ptdf_once_;
};

/// Evaluates every original constraint (balance, generator bounds, all flow
/// limits including screened ones) at the given point.
ViolationReport verify_dispatch(const Network& network, const DcSystem& dc,
                                const Eigen::VectorXd& p, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& load);

/// Commitment variant: generator bounds become p_min z <= p <= p_max z.
ViolationReport verify_commitment(const Network& network, const DcSystem& dc,
                                  const Eigen::VectorXd& p, const std::vector<int>& z,
                                  const Eigen::VectorXd& theta, const Eigen::VectorXd& load);

/// Worst violation among the given bounds at the report's branch flows.
double max_violation_on(const ViolationReport& report, const Network& network,
                        const std::vector<FlowBound>& bounds);

}  // namespace gridscreen
