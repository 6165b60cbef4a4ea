#pragma once

// Test-only brute-force LP oracle: enumerates candidate vertices (every
// square subsystem of active rows with the remaining variables pinned at a
// bound) and takes the best feasible one. Exponential and only for tiny
// instances with fully bounded variables; independent of the simplex path.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "gridscreen/lpcore.hpp"

namespace lp_oracle {

struct Result {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> point;
};

inline bool point_feasible(const gridscreen::LinearProgram& lp, const std::vector<double>& x,
                           double tol) {
  for (int j = 0; j < lp.num_variables(); ++j) {
    const auto& v = lp.variables()[j];
    if (x[j] < v.lower - tol || x[j] > v.upper + tol) return false;
  }
  for (const auto& c : lp.constraints()) {
    double act = 0.0;
    for (const auto& t : c.terms) act += t.coeff * x[t.var];
    switch (c.rel) {
      case gridscreen::Relation::Eq:
        if (std::abs(act - c.rhs) > tol) return false;
        break;
      case gridscreen::Relation::Le:
        if (act > c.rhs + tol) return false;
        break;
      case gridscreen::Relation::Ge:
        if (act < c.rhs - tol) return false;
        break;
    }
  }
  return true;
}

inline double objective_value(const gridscreen::LinearProgram& lp, const std::vector<double>& x) {
  double obj = lp.objective().constant;
  for (int j = 0; j < lp.num_variables(); ++j) obj += lp.objective().coeffs[j] * x[j];
  return obj;
}

// All variables must have finite bounds (so the feasible set, if nonempty,
// is a polytope and the optimum sits on a vertex).
inline Result best_vertex(const gridscreen::LinearProgram& lp, double tol = 1e-7) {
  const int n = lp.num_variables();
  const int m = lp.num_constraints();
  const bool maximize = lp.objective().sense == gridscreen::Sense::Max;
  Result best;

  // Choose a subset F of "free" variables and an equally sized subset R of
  // rows treated as active; pin the rest of the variables at one of their
  // bounds and solve the square system.
  std::vector<int> vars(n), rows(m);
  for (int j = 0; j < n; ++j) vars[j] = j;
  for (int i = 0; i < m; ++i) rows[i] = i;

  for (int fmask = 0; fmask < (1 << n); ++fmask) {
    std::vector<int> freev;
    for (int j = 0; j < n; ++j) {
      if (fmask & (1 << j)) freev.push_back(j);
    }
    const int k = static_cast<int>(freev.size());
    if (k > m) continue;
    for (int rmask = 0; rmask < (1 << m); ++rmask) {
      std::vector<int> act;
      for (int i = 0; i < m; ++i) {
        if (rmask & (1 << i)) act.push_back(i);
      }
      if (static_cast<int>(act.size()) != k) continue;

      const int npinned = n - k;
      for (int bmask = 0; bmask < (1 << npinned); ++bmask) {
        std::vector<double> x(n, 0.0);
        int bi = 0;
        bool ok = true;
        for (int j = 0; j < n; ++j) {
          if (fmask & (1 << j)) continue;
          const auto& v = lp.variables()[j];
          const double val = (bmask & (1 << bi)) ? v.upper : v.lower;
          if (!std::isfinite(val)) ok = false;
          x[j] = val;
          ++bi;
        }
        if (!ok) continue;

        if (k > 0) {
          Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
          Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
          for (int r = 0; r < k; ++r) {
            const auto& c = lp.constraints()[act[r]];
            b[r] = c.rhs;
            for (const auto& t : c.terms) {
              bool isfree = false;
              for (int f = 0; f < k; ++f) {
                if (freev[f] == t.var) {
                  A(r, f) += t.coeff;
                  isfree = true;
                  break;
                }
              }
              if (!isfree) b[r] -= t.coeff * x[t.var];
            }
          }
          Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
          if (!lu.isInvertible()) continue;
          Eigen::VectorXd xf = lu.solve(b);
          for (int f = 0; f < k; ++f) x[freev[f]] = xf[f];
        }

        if (!point_feasible(lp, x, tol)) continue;
        const double obj = objective_value(lp, x);
        if (!best.feasible || (maximize ? obj > best.objective : obj < best.objective)) {
          best.feasible = true;
          best.objective = obj;
          best.point = x;
        }
      }
    }
  }
  return best;
}

}  // namespace lp_oracle
