#include "gridscreen/lpcore.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <queue>
#include <sstream>

namespace gridscreen {

namespace {

std::atomic<long long> g_solves{0};
std::atomic<double> g_max_residual{0.0};
std::atomic<double> g_max_gap{0.0};

void atomic_max(std::atomic<double>& target, double value) {
  double cur = target.load(std::memory_order_relaxed);
  while (value > cur && !target.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
  }
}

// Columns of the constraint matrix in CSC layout; logical columns (one per
// row, turning every row into a ==) are implicit unit vectors appended after
// the structural ones.
struct CompiledLp {
  int n = 0;  // structural columns
  int m = 0;  // rows
  std::vector<int> col_start;
  std::vector<int> row_idx;
  std::vector<double> val;
  std::vector<double> lower;  // size n + m
  std::vector<double> upper;  // size n + m
  std::vector<double> cost;   // internal minimization cost, size n + m
  std::vector<double> rhs;    // size m
  bool maximize = false;
};

CompiledLp compile(const LinearProgram& lp) {
  CompiledLp c;
  c.n = lp.num_variables();
  c.m = lp.num_constraints();
  c.maximize = lp.objective().sense == Sense::Max;

  c.lower.resize(c.n + c.m);
  c.upper.resize(c.n + c.m);
  c.cost.assign(c.n + c.m, 0.0);
  for (int j = 0; j < c.n; ++j) {
    c.lower[j] = lp.variables()[j].lower;
    c.upper[j] = lp.variables()[j].upper;
  }
  const auto& obj = lp.objective();
  for (int j = 0; j < c.n && j < static_cast<int>(obj.coeffs.size()); ++j) {
    c.cost[j] = c.maximize ? -obj.coeffs[j] : obj.coeffs[j];
  }

  // CSC assembly: count per column, then fill.
  std::vector<int> count(c.n, 0);
  for (const auto& row : lp.constraints()) {
    for (const auto& t : row.terms) ++count[t.var];
  }
  c.col_start.assign(c.n + 1, 0);
  for (int j = 0; j < c.n; ++j) c.col_start[j + 1] = c.col_start[j] + count[j];
  c.row_idx.resize(c.col_start[c.n]);
  c.val.resize(c.col_start[c.n]);
  std::vector<int> fill(c.col_start.begin(), c.col_start.end() - 1);
  c.rhs.resize(c.m);
  for (int i = 0; i < c.m; ++i) {
    const auto& row = lp.constraints()[i];
    c.rhs[i] = row.rhs;
    for (const auto& t : row.terms) {
      c.row_idx[fill[t.var]] = i;
      c.val[fill[t.var]] = t.coeff;
      ++fill[t.var];
    }
    const int s = c.n + i;
    switch (row.rel) {
      case Relation::Eq:
        c.lower[s] = 0.0;
        c.upper[s] = 0.0;
        break;
      case Relation::Le:
        c.lower[s] = 0.0;
        c.upper[s] = kInf;
        break;
      case Relation::Ge:
        c.lower[s] = -kInf;
        c.upper[s] = 0.0;
        break;
    }
  }
  return c;
}

enum VarState : signed char { kAtLower = 0, kAtUpper = 1, kBasic = 2, kFreeZero = 3 };

struct Eta {
  int row = 0;
  double pivot = 0.0;
  std::vector<std::pair<int, double>> nz;  // nonzeros of B^-1 a_q, including `row`
};

class SimplexSolver {
public:
  SimplexSolver(const CompiledLp& p, const SolverTolerances& tol) : P(p), tol_(tol) {
    N_ = P.n + P.m;
  }

  LpSolution solve() {
    init_basis();
    LpStatus status = run();
    return extract(status);
  }

private:
  static constexpr int kRefactorInterval = 100;
  static constexpr double kPivotTol = 1e-10;
  static constexpr double kDegenerateStep = 1e-12;
  static constexpr int kStallLimit = 50;

  const CompiledLp& P;
  SolverTolerances tol_;
  int N_ = 0;

  std::vector<int> basic_;           // row -> column
  std::vector<signed char> vstat_;   // column -> VarState
  std::vector<double> xB_;           // value of basic variable per row
  std::vector<int> basic_row_;       // column -> row when basic, else -1
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  std::vector<Eta> etas_;
  bool phase_one_ = true;
  bool bland_ = false;
  int singular_resets_ = 0;
  int stall_ = 0;
  long iterations_ = 0;

  Eigen::VectorXd work_;   // FTRAN/BTRAN scratch
  std::vector<double> y_;  // dual scratch

  struct RatioCand {
    int row;
    double t_strict;
    signed char st;
    double w;
  };
  std::vector<RatioCand> cands_;

  double nb_value(int j) const {
    switch (vstat_[j]) {
      case kAtLower:
        return P.lower[j];
      case kAtUpper:
        return P.upper[j];
      default:
        return 0.0;  // free at zero
    }
  }

  // Column j of [A | I] scattered into dense v (accumulating).
  void add_column(int j, double scale, Eigen::VectorXd& v) const {
    if (j >= P.n) {
      v[j - P.n] += scale;
      return;
    }
    for (int k = P.col_start[j]; k < P.col_start[j + 1]; ++k) v[P.row_idx[k]] += scale * P.val[k];
  }

  double dot_column(int j, const std::vector<double>& y) const {
    if (j >= P.n) return y[j - P.n];
    double s = 0.0;
    for (int k = P.col_start[j]; k < P.col_start[j + 1]; ++k) s += P.val[k] * y[P.row_idx[k]];
    return s;
  }

  void init_basis() {
    basic_.resize(P.m);
    vstat_.assign(N_, kAtLower);
    basic_row_.assign(N_, -1);
    for (int j = 0; j < P.n; ++j) {
      if (std::isfinite(P.lower[j]))
        vstat_[j] = kAtLower;
      else if (std::isfinite(P.upper[j]))
        vstat_[j] = kAtUpper;
      else
        vstat_[j] = kFreeZero;
    }
    for (int i = 0; i < P.m; ++i) {
      basic_[i] = P.n + i;
      vstat_[P.n + i] = kBasic;
      basic_row_[P.n + i] = i;
    }
    work_.resize(P.m);
    y_.resize(P.m);
    if (!refactorize()) throw SolverError("identity basis failed to factorize");
  }

  bool refactorize() {
    etas_.clear();
    if (P.m == 0) {
      xB_.clear();
      return true;
    }
    Eigen::SparseMatrix<double> B(P.m, P.m);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < P.m; ++i) {
      const int j = basic_[i];
      if (j >= P.n) {
        trip.emplace_back(j - P.n, i, 1.0);
      } else {
        for (int k = P.col_start[j]; k < P.col_start[j + 1]; ++k)
          trip.emplace_back(P.row_idx[k], i, P.val[k]);
      }
    }
    B.setFromTriplets(trip.begin(), trip.end());
    lu_.compute(B);
    if (lu_.info() != Eigen::Success) return false;
    recompute_basic_values();
    return true;
  }

  // Numerically singular basis: fall back to the all-logical basis and redo
  // the cleanup from there. Progress is lost but correctness is not.
  void recover_from_singular_basis() {
    if (++singular_resets_ > 2) {
      throw SolverError("simplex basis factorization failed repeatedly");
    }
    for (int j = 0; j < P.n; ++j) {
      basic_row_[j] = -1;
      if (std::isfinite(P.lower[j]))
        vstat_[j] = kAtLower;
      else if (std::isfinite(P.upper[j]))
        vstat_[j] = kAtUpper;
      else
        vstat_[j] = kFreeZero;
    }
    for (int i = 0; i < P.m; ++i) {
      basic_[i] = P.n + i;
      vstat_[P.n + i] = kBasic;
      basic_row_[P.n + i] = i;
    }
    phase_one_ = true;
    if (!refactorize()) throw SolverError("identity basis failed to factorize");
  }

  void recompute_basic_values() {
    if (P.m == 0) return;
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(P.rhs.data(), P.m);
    for (int j = 0; j < N_; ++j) {
      if (vstat_[j] == kBasic) continue;
      const double x = nb_value(j);
      if (x != 0.0) add_column(j, -x, r);
    }
    Eigen::VectorXd xb = lu_.solve(r);
    for (const auto& e : etas_) apply_eta_ftran(e, xb);
    xB_.assign(xb.data(), xb.data() + P.m);
  }

  static void apply_eta_ftran(const Eta& e, Eigen::VectorXd& v) {
    const double t = v[e.row] / e.pivot;
    if (t != 0.0) {
      for (const auto& [i, wi] : e.nz) {
        if (i != e.row) v[i] -= wi * t;
      }
    }
    v[e.row] = t;
  }

  static void apply_eta_btran(const Eta& e, std::vector<double>& z) {
    double s = z[e.row];
    for (const auto& [i, wi] : e.nz) {
      if (i != e.row) s -= wi * z[i];
    }
    z[e.row] = s / e.pivot;
  }

  // w = B^-1 a_j
  void ftran(int j, Eigen::VectorXd& w) {
    w.setZero(P.m);
    add_column(j, 1.0, w);
    if (P.m == 0) return;
    w = lu_.solve(w);
    for (const auto& e : etas_) apply_eta_ftran(e, w);
  }

  // y = B^-T c_B
  void btran(const std::vector<double>& cb, std::vector<double>& y) {
    if (P.m == 0) return;
    std::vector<double> z = cb;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) apply_eta_btran(*it, z);
    Eigen::VectorXd yv =
        lu_.transpose().solve(Eigen::Map<const Eigen::VectorXd>(z.data(), P.m));
    std::copy(yv.data(), yv.data() + P.m, y.begin());
  }

  double basic_cost(int row) const {
    if (phase_one_) {
      const int j = basic_[row];
      if (xB_[row] < P.lower[j] - tol_.feasibility) return -1.0;
      if (xB_[row] > P.upper[j] + tol_.feasibility) return 1.0;
      return 0.0;
    }
    return P.cost[basic_[row]];
  }

  double infeasibility() const {
    double s = 0.0;
    for (int i = 0; i < P.m; ++i) {
      const int j = basic_[i];
      if (xB_[i] < P.lower[j]) s += P.lower[j] - xB_[i];
      if (xB_[i] > P.upper[j]) s += xB_[i] - P.upper[j];
    }
    return s;
  }

  double max_bound_violation() const {
    double s = 0.0;
    for (int i = 0; i < P.m; ++i) {
      const int j = basic_[i];
      if (xB_[i] < P.lower[j]) s = std::max(s, P.lower[j] - xB_[i]);
      if (xB_[i] > P.upper[j]) s = std::max(s, xB_[i] - P.upper[j]);
    }
    return s;
  }

  // Entering column, or -1 at (phase) optimality.
  int price() {
    for (int i = 0; i < P.m; ++i) y_[i] = basic_cost(i);
    btran(y_, y_);
    int best = -1;
    double best_score = tol_.optimality;
    for (int j = 0; j < N_; ++j) {
      if (vstat_[j] == kBasic) continue;
      if (P.upper[j] - P.lower[j] <= 0.0) continue;  // fixed variable
      const double cj = phase_one_ ? 0.0 : P.cost[j];
      const double d = cj - dot_column(j, y_);
      double score = 0.0;
      if (vstat_[j] == kAtLower && d < -tol_.optimality)
        score = -d;
      else if (vstat_[j] == kAtUpper && d > tol_.optimality)
        score = d;
      else if (vstat_[j] == kFreeZero && std::abs(d) > tol_.optimality)
        score = std::abs(d);
      else
        continue;
      if (bland_) return j;  // lowest index eligible
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  double reduced_cost(int j) {
    for (int i = 0; i < P.m; ++i) y_[i] = basic_cost(i);
    btran(y_, y_);
    const double cj = phase_one_ ? 0.0 : P.cost[j];
    return cj - dot_column(j, y_);
  }

  LpStatus run() {
    // Phase 1: drive bound violations of the basic logicals to zero by
    // minimizing total infeasibility; phase 2: the actual cost.
    phase_one_ = true;
    if (max_bound_violation() <= tol_.feasibility) phase_one_ = false;
    while (true) {
      if (++iterations_ > tol_.max_pivots) throw SolverError("simplex pivot limit exceeded");
      if (static_cast<int>(etas_.size()) >= kRefactorInterval && !refactorize()) {
        recover_from_singular_basis();
        continue;
      }

      const int q = price();
      if (q < 0) {
        if (phase_one_) {
          if (max_bound_violation() > tol_.feasibility) return LpStatus::Infeasible;
          phase_one_ = false;
          continue;
        }
        return LpStatus::Optimal;
      }

      const double dq = reduced_cost(q);
      const int dir = (vstat_[q] == kAtUpper) ? -1 : (vstat_[q] == kAtLower ? 1 : (dq < 0 ? 1 : -1));

      Eigen::VectorXd& w = work_;
      ftran(q, w);

      // Two-pass Harris ratio test. Basics move at rate -dir*w_i; infeasible
      // basics block at the bound they are about to regain, feasible ones at
      // the bound they approach. Pass 1 finds the shortest step with the
      // feasibility tolerance as slack; pass 2 picks the largest pivot within
      // that window (Bland mode: plain minimal ratio, lowest variable index).
      const double flip = P.upper[q] - P.lower[q];  // +inf for free columns
      cands_.clear();
      double t_relax_min = kInf;
      double winf = 0.0;
      for (int i = 0; i < P.m; ++i) winf = std::max(winf, std::abs(w[i]));
      const double pivot_floor = std::max(kPivotTol, 1e-9 * winf);
      for (int i = 0; i < P.m; ++i) {
        const double wi = w[i];
        if (std::abs(wi) <= pivot_floor) continue;
        const double rate = -dir * wi;
        const int j = basic_[i];
        double dist;  // nonnegative distance to the blocking bound
        signed char st;
        if (rate < 0.0) {
          if (xB_[i] > P.upper[j] + tol_.feasibility) {
            dist = xB_[i] - P.upper[j];  // regains feasibility at up
            st = kAtUpper;
          } else if (xB_[i] < P.lower[j] - tol_.feasibility) {
            continue;  // already below lower and moving away: no bound ahead
          } else if (std::isfinite(P.lower[j])) {
            dist = xB_[i] - P.lower[j];
            st = kAtLower;
          } else {
            continue;
          }
        } else {
          if (xB_[i] < P.lower[j] - tol_.feasibility) {
            dist = P.lower[j] - xB_[i];  // regains feasibility at lo
            st = kAtLower;
          } else if (xB_[i] > P.upper[j] + tol_.feasibility) {
            continue;  // already above upper and moving away
          } else if (std::isfinite(P.upper[j])) {
            dist = P.upper[j] - xB_[i];
            st = kAtUpper;
          } else {
            continue;
          }
        }
        if (dist < 0.0) dist = 0.0;
        const double t_strict = dist / std::abs(rate);
        const double t_relax = (dist + tol_.feasibility) / std::abs(rate);
        t_relax_min = std::min(t_relax_min, t_relax);
        cands_.push_back({i, t_strict, st, wi});
      }

      int leave_row = -1;
      signed char leave_state = kAtLower;
      double t_best = kInf;
      if (!cands_.empty()) {
        if (bland_) {
          double t_min = kInf;
          for (const auto& c : cands_) t_min = std::min(t_min, c.t_strict);
          int best_var = -1;
          for (const auto& c : cands_) {
            if (c.t_strict <= t_min + 1e-12 && (best_var < 0 || basic_[c.row] < best_var)) {
              best_var = basic_[c.row];
              leave_row = c.row;
              leave_state = c.st;
              t_best = c.t_strict;
            }
          }
        } else {
          double best_pivot = 0.0;
          for (const auto& c : cands_) {
            if (c.t_strict <= t_relax_min && std::abs(c.w) > best_pivot) {
              best_pivot = std::abs(c.w);
              leave_row = c.row;
              leave_state = c.st;
              t_best = c.t_strict;
            }
          }
          if (best_pivot < 1e-6 * winf) {
            // Only negligible pivots block within the tolerance window; take
            // the strongest pivot overall and let the tiny rows drift (the
            // feasibility check at extraction cleans up any residue).
            for (const auto& c : cands_) {
              if (std::abs(c.w) > best_pivot) {
                best_pivot = std::abs(c.w);
                leave_row = c.row;
                leave_state = c.st;
                t_best = c.t_strict;
              }
            }
          }
        }
      }

      if (leave_row < 0 && !std::isfinite(flip)) {
        if (phase_one_) throw SolverError("phase-1 ratio test found no blocking bound");
        return LpStatus::Unbounded;
      }

      if (t_best <= kDegenerateStep) {
        if (++stall_ > kStallLimit) bland_ = true;
      } else {
        stall_ = 0;
        bland_ = false;
      }

      if (leave_row < 0 || flip <= t_best) {
        // Bound flip: the entering column traverses its whole range.
        const double t = flip;
        for (int i = 0; i < P.m; ++i) {
          if (w[i] != 0.0) xB_[i] -= dir * t * w[i];
        }
        vstat_[q] = (vstat_[q] == kAtLower) ? kAtUpper : kAtLower;
        continue;
      }

      // Pivot: q enters on leave_row, the old basic leaves at leave_state.
      const double t = t_best;
      const int l = basic_[leave_row];
      for (int i = 0; i < P.m; ++i) {
        if (i != leave_row && w[i] != 0.0) xB_[i] -= dir * t * w[i];
      }
      const double enter_value = nb_value(q) + dir * t;

      Eta e;
      e.row = leave_row;
      e.pivot = w[leave_row];
      for (int i = 0; i < P.m; ++i) {
        if (w[i] != 0.0) e.nz.emplace_back(i, w[i]);
      }
      etas_.push_back(std::move(e));

      basic_[leave_row] = q;
      basic_row_[q] = leave_row;
      basic_row_[l] = -1;
      vstat_[q] = kBasic;
      vstat_[l] = leave_state;
      xB_[leave_row] = enter_value;
    }
  }

  LpSolution extract(LpStatus status) {
    LpSolution sol;
    sol.status = status;
    sol.iterations = iterations_;
    if (status != LpStatus::Optimal) {
      sol.objective = (status == LpStatus::Unbounded) ? (P.maximize ? kInf : -kInf)
                                                      : std::numeric_limits<double>::quiet_NaN();
      return sol;
    }

    // Clean extraction from a fresh factorization; if the recomputed point
    // drifts outside tolerances, resume pivoting (bounded number of times).
    for (int restart = 0; restart < 3; ++restart) {
      if (!refactorize()) {
        recover_from_singular_basis();
        LpStatus s = run();
        if (s != LpStatus::Optimal) return extract(s);
        continue;
      }
      phase_one_ = false;
      if (max_bound_violation() > tol_.feasibility || price() >= 0) {
        LpStatus s = run();
        if (s != LpStatus::Optimal) return extract(s);
        continue;
      }
      break;
    }

    sol.primal.resize(P.n);
    std::vector<double> full(N_);
    for (int j = 0; j < N_; ++j) {
      full[j] = (vstat_[j] == kBasic) ? xB_[basic_row_[j]] : nb_value(j);
    }
    for (int j = 0; j < P.n; ++j) sol.primal[j] = full[j];

    // Residuals of A x + s = rhs with x recomputed from the final basis.
    Eigen::VectorXd act = Eigen::VectorXd::Zero(P.m);
    for (int j = 0; j < N_; ++j) {
      if (full[j] != 0.0) add_column(j, full[j], act);
    }
    double resid = 0.0;
    for (int i = 0; i < P.m; ++i) resid = std::max(resid, std::abs(act[i] - P.rhs[i]));
    resid = std::max(resid, max_bound_violation());
    sol.max_residual = resid;

    double internal_obj = 0.0;
    for (int j = 0; j < N_; ++j) internal_obj += P.cost[j] * full[j];

    // Dual values and the algebraic dual objective y'rhs + sum_N d_j x_j;
    // the gap against the primal objective measures numerical error only.
    phase_one_ = false;
    for (int i = 0; i < P.m; ++i) y_[i] = P.cost[basic_[i]];
    btran(y_, y_);
    double dual_obj = 0.0;
    for (int i = 0; i < P.m; ++i) dual_obj += y_[i] * P.rhs[i];
    for (int j = 0; j < N_; ++j) {
      if (vstat_[j] == kBasic) continue;
      const double d = P.cost[j] - dot_column(j, y_);
      const double x = full[j];
      if (x != 0.0) dual_obj += d * x;
    }
    sol.duality_gap = std::abs(internal_obj - dual_obj);

    const double scale = std::max(1.0, std::abs(internal_obj));
    if (resid > tol_.feasibility || sol.duality_gap > 1e-7 * scale) {
      throw SolverError("optimal basis failed post-solve validation (residual " +
                        format_double(resid) + ", gap " + format_double(sol.duality_gap) + ")");
    }

    sol.objective = P.maximize ? -internal_obj : internal_obj;
    sol.dual.resize(P.m);
    for (int i = 0; i < P.m; ++i) sol.dual[i] = P.maximize ? -y_[i] : y_[i];

    atomic_max(g_max_residual, resid);
    atomic_max(g_max_gap, sol.duality_gap / scale);
    g_solves.fetch_add(1, std::memory_order_relaxed);
    return sol;
  }
};

LpSolution solve_compiled(const CompiledLp& c, const LinearProgram& lp,
                          const SolverTolerances& tol) {
  SimplexSolver solver(c, tol);
  LpSolution sol = solver.solve();
  if (sol.status == LpStatus::Optimal) {
    sol.objective += lp.objective().constant;
  }
  return sol;
}

}  // namespace

int LinearProgram::add_variable(std::string name, double lower, double upper) {
  if (std::isnan(lower) || std::isnan(upper)) throw ValidationError("variable bound is NaN");
  if (lower > upper) {
    throw ValidationError("variable '" + name + "' has lower bound " + format_double(lower) +
                          " above upper bound " + format_double(upper));
  }
  variables_.push_back({std::move(name), lower, upper});
  objective_.coeffs.push_back(0.0);
  return static_cast<int>(variables_.size()) - 1;
}

int LinearProgram::add_constraint(std::vector<LinearTerm> terms, Relation rel, double rhs) {
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= num_variables()) {
      throw ValidationError("constraint references undeclared variable " + std::to_string(t.var));
    }
  }
  constraints_.push_back({std::move(terms), rel, rhs});
  return static_cast<int>(constraints_.size()) - 1;
}

void LinearProgram::set_objective(Sense sense, std::vector<double> coeffs, double constant) {
  if (static_cast<int>(coeffs.size()) != num_variables()) {
    throw ValidationError("objective length does not match variable count");
  }
  objective_.sense = sense;
  objective_.coeffs = std::move(coeffs);
  objective_.constant = constant;
}

void LinearProgram::set_objective_coeff(int var, double coeff) {
  objective_.coeffs.at(var) = coeff;
}

void LinearProgram::set_variable_bounds(int var, double lower, double upper) {
  if (lower > upper) throw ValidationError("variable bounds crossed");
  variables_.at(var).lower = lower;
  variables_.at(var).upper = upper;
}

LpSolution solve_lp(const LinearProgram& lp, const SolverTolerances& tol) {
  return solve_compiled(compile(lp), lp, tol);
}

MilpSolution solve_milp(const LinearProgram& lp, const std::vector<int>& binaries,
                        const SolverTolerances& tol) {
  for (int b : binaries) {
    if (b < 0 || b >= lp.num_variables()) throw ValidationError("binary index out of range");
    if (lp.variables()[b].lower < -1e-12 || lp.variables()[b].upper > 1.0 + 1e-12) {
      throw ValidationError("binary variable '" + lp.variables()[b].name +
                            "' must have bounds within [0,1]");
    }
  }

  CompiledLp base = compile(lp);
  const bool maximize = base.maximize;

  struct Node {
    double bound;  // internal (minimization) LP bound of the parent
    long seq;
    std::vector<std::pair<int, int>> fixes;  // (binary var, 0/1)
  };
  auto cmp = [](const Node& a, const Node& b) {
    return a.bound > b.bound || (a.bound == b.bound && a.seq > b.seq);
  };
  std::priority_queue<Node, std::vector<Node>, decltype(cmp)> open(cmp);

  // Node solutions carry the user-sense objective without the constant term;
  // the constant is applied once to the final incumbent.
  auto solve_node = [&](const std::vector<std::pair<int, int>>& fixes) {
    CompiledLp c = base;
    for (auto [var, val] : fixes) {
      c.lower[var] = c.upper[var] = static_cast<double>(val);
    }
    SimplexSolver solver(c, tol);
    return solver.solve();
  };

  MilpSolution result;
  result.status = MilpStatus::Infeasible;
  double best_internal = kInf;
  long seq = 0;
  open.push({-kInf, seq++, {}});

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    const double prune_eps = 1e-9 * std::max(1.0, std::abs(best_internal));
    if (node.bound >= best_internal - prune_eps) continue;

    LpSolution rel = solve_node(node.fixes);
    ++result.nodes;
    if (rel.status == LpStatus::Infeasible) continue;
    if (rel.status == LpStatus::Unbounded) {
      throw SolverError("MILP relaxation is unbounded");
    }
    const double node_obj = maximize ? -rel.objective : rel.objective;
    if (node_obj >= best_internal - prune_eps) continue;

    // Most-fractional unfixed binary; ties to the lowest index.
    int branch_var = -1;
    double best_frac = tol.integrality;
    for (int b : binaries) {
      const double x = rel.primal[b];
      const double frac = std::abs(x - std::round(x));
      if (frac > best_frac) {
        best_frac = frac;
        branch_var = b;
      }
    }

    if (branch_var < 0) {
      // Integral within tolerance: re-solve with every binary pinned to its
      // rounded value so the reported objective matches an exact assignment.
      std::vector<std::pair<int, int>> fixes = node.fixes;
      std::vector<char> fixed(lp.num_variables(), 0);
      for (auto [var, val] : fixes) fixed[var] = 1;
      std::vector<int> assignment;
      for (int b : binaries) {
        const int v = static_cast<int>(std::round(rel.primal[b]));
        assignment.push_back(v);
        if (!fixed[b]) fixes.emplace_back(b, v);
      }
      LpSolution exact = solve_node(fixes);
      ++result.nodes;
      if (exact.status == LpStatus::Optimal) {
        const double obj = maximize ? -exact.objective : exact.objective;
        if (obj < best_internal - 1e-9 * std::max(1.0, std::abs(obj))) {
          best_internal = obj;
          result.status = MilpStatus::Optimal;
          result.objective = exact.objective;
          result.primal = exact.primal;
          result.assignment = assignment;
        }
        continue;
      }
      // Rounding was not exactly feasible: force a branch on the first
      // unfixed binary so the subtree is still covered.
      for (int b : binaries) {
        if (!fixed[b]) {
          branch_var = b;
          break;
        }
      }
      if (branch_var < 0) continue;
    }

    for (int v = 0; v <= 1; ++v) {
      Node child;
      child.bound = node_obj;
      child.seq = seq++;
      child.fixes = node.fixes;
      child.fixes.emplace_back(branch_var, v);
      open.push(std::move(child));
    }
  }

  if (result.status == MilpStatus::Optimal) {
    result.objective += lp.objective().constant;
  }
  return result;
}

std::vector<CostPiece> piecewise_linearize(double c0, double c1, double c2, double p_min,
                                           double p_max, int segments) {
  if (c2 < 0.0) throw ValidationError("non-convex cost (c2 < 0) unsupported");
  if (segments < 1) throw ValidationError("segment count must be >= 1");
  if (p_min > p_max) throw ValidationError("cost interval is empty");

  auto f = [&](double p) { return c0 + c1 * p + c2 * p * p; };
  std::vector<CostPiece> pieces;
  if (c2 == 0.0 || p_max == p_min) {
    // Already linear (or a point): one exact piece; for a point use the
    // tangent so the value at p_min is reproduced.
    const double slope = c1 + 2.0 * c2 * p_min;
    pieces.push_back({slope, f(p_min) - slope * p_min});
    return pieces;
  }
  const double step = (p_max - p_min) / segments;
  for (int k = 0; k < segments; ++k) {
    const double a = p_min + k * step;
    const double b = (k == segments - 1) ? p_max : a + step;
    const double slope = c1 + c2 * (a + b);  // secant of the quadratic
    pieces.push_back({slope, f(a) - slope * a});
  }
  return pieces;
}

std::string dump_lp(const LinearProgram& lp) {
  std::ostringstream os;
  auto num = [](double v) {
    if (v == kInf) return std::string("+inf");
    if (v == -kInf) return std::string("-inf");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%16.9g", v);
    return std::string(buf);
  };
  os << "LP " << (lp.objective().sense == Sense::Min ? "minimize" : "maximize") << "  vars "
     << lp.num_variables() << "  rows " << lp.num_constraints() << "\n";
  os << "VARIABLES\n";
  for (int j = 0; j < lp.num_variables(); ++j) {
    const auto& v = lp.variables()[j];
    os << "  " << j << "  " << v.name << "  lo " << num(v.lower) << "  up " << num(v.upper)
       << "  obj " << num(lp.objective().coeffs[j]) << "\n";
  }
  os << "ROWS\n";
  for (int i = 0; i < lp.num_constraints(); ++i) {
    const auto& c = lp.constraints()[i];
    const char* rel = c.rel == Relation::Eq ? "=" : (c.rel == Relation::Le ? "<=" : ">=");
    os << "  " << i << "  " << rel << " " << num(c.rhs) << " :";
    for (const auto& t : c.terms) os << "  " << t.coeff << "*x" << t.var;
    os << "\n";
  }
  return os.str();
}

LpStats lp_stats() {
  return {g_solves.load(), g_max_residual.load(), g_max_gap.load()};
}

void reset_lp_stats() {
  g_solves.store(0);
  g_max_residual.store(0.0);
  g_max_gap.store(0.0);
}

}  // namespace gridscreen
