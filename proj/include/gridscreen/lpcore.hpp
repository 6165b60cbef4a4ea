#pragma once

#include <limits>
#include <string>
#include <vector>

#include "gridscreen/util.hpp"

namespace gridscreen {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { Eq, Le, Ge };
enum class Sense { Min, Max };
enum class LpStatus { Optimal, Infeasible, Unbounded };
enum class MilpStatus { Optimal, Infeasible };

struct LinearTerm {
  int var = 0;
  double coeff = 0.0;
};

struct Variable {
  std::string name;
  double lower = -kInf;
  double upper = kInf;
};

struct Constraint {
  std::vector<LinearTerm> terms;
  Relation rel = Relation::Le;
  double rhs = 0.0;
};

struct Objective {
  Sense sense = Sense::Min;
  std::vector<double> coeffs;  // dense, indexed by variable
  double constant = 0.0;
};

/// Bounded-variable LP instance. Rows reference declared variables only and
/// every bound pair satisfies lower <= upper; violations throw at build time.
class LinearProgram {
public:
  int add_variable(std::string name, double lower, double upper);
  int add_constraint(std::vector<LinearTerm> terms, Relation rel, double rhs);
  void set_objective(Sense sense, std::vector<double> coeffs, double constant = 0.0);
  void set_objective_coeff(int var, double coeff);
  void set_objective_sense(Sense sense) { objective_.sense = sense; }
  void set_variable_bounds(int var, double lower, double upper);

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Objective& objective() const { return objective_; }

private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  Objective objective_;
};

/// Solver tolerances. Stated once here and inherited by every caller:
/// feasibility is absolute per constraint, optimality applies to reduced
/// costs, integrality to binary rounding in branch-and-bound.
struct SolverTolerances {
  double feasibility = 1e-8;
  double optimality = 1e-9;
  double integrality = 1e-6;
  long max_pivots = 1'000'000;
};

struct LpSolution {
  LpStatus status = LpStatus::Optimal;
  std::vector<double> primal;  // per variable
  std::vector<double> dual;    // per constraint, in the problem's own sense
  double objective = 0.0;
  long iterations = 0;
  double max_residual = 0.0;  // post-solve primal feasibility residual
  double duality_gap = 0.0;   // |primal obj - dual obj| at the final basis
};

struct MilpSolution {
  MilpStatus status = MilpStatus::Optimal;
  std::vector<int> assignment;  // binary values aligned with the `binaries` argument
  std::vector<double> primal;
  double objective = 0.0;
  long nodes = 0;  // node LPs solved
};

/// Revised simplex over general variable bounds. Deterministic: identical
/// inputs produce identical outputs regardless of threading in the caller.
/// Throws SolverError on numerical failure; wrong statuses are never returned.
LpSolution solve_lp(const LinearProgram& lp, const SolverTolerances& tol = {});

/// Exact branch-and-bound over the given binary variables (bounds must lie
/// within [0,1]): most-fractional branching, best-first by LP bound.
MilpSolution solve_milp(const LinearProgram& lp, const std::vector<int>& binaries,
                        const SolverTolerances& tol = {});

struct CostPiece {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Secant underestimator of c0 + c1 p + c2 p^2 on [p_min, p_max] with
/// `segments` pieces; exact when c2 == 0 (single piece). Requires c2 >= 0.
std::vector<CostPiece> piecewise_linearize(double c0, double c1, double c2, double p_min,
                                           double p_max, int segments);

/// Fixed-width text dump (variables, bounds, rows, rhs) for external checks.
std::string dump_lp(const LinearProgram& lp);

/// Aggregate post-solve diagnostics across every solve_lp call since the last
/// reset. Used by the acceptance suite to assert solver soundness globally.
struct LpStats {
  long long solves = 0;
  double max_residual = 0.0;
  double max_relative_gap = 0.0;
};

LpStats lp_stats();
void reset_lp_stats();

}  // namespace gridscreen
