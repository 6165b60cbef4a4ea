#include "gridscreen/opfsolve.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace gridscreen {

namespace {

bool contains(const std::vector<FlowBound>& set, FlowBound b) {
  return std::find(set.begin(), set.end(), b) != set.end();
}

constexpr double kBindingTol = 1e-6;

}  // namespace

OpfSolver::OpfSolver(Network network, int segments)
    : network_(std::move(network)), dc_(network_), segments_(segments) {
  if (segments_ < 1) throw ValidationError("segment count must be >= 1");
}

const PtdfMatrix& OpfSolver::ptdf() const {
  std::call_once(ptdf_once_, [this] { ptdf_ = build_ptdf(dc_); });
  return *ptdf_;
}

// Power balance and the enforced flow limits, either in the theta form (one
// balance row per bus, sparse flow rows) or the PTDF form (one system-wide
// balance row, dense flow rows with the load folded into the rhs). The p
// variables must already occupy indices [0, ng); returns the theta offset or
// -1 for the PTDF form.
int OpfSolver::add_network_rows(LinearProgram& lp, const Eigen::VectorXd& load,
                                const std::vector<FlowBound>& redundant, OpfForm form) const {
  const int ng = static_cast<int>(network_.generators.size());
  const int nb = static_cast<int>(network_.buses.size());
  if (load.size() != nb) throw ValidationError("load vector has wrong dimension");

  if (form == OpfForm::Theta) {
    const int theta0 = lp.num_variables();
    for (int i = 0; i < nb; ++i) {
      const bool slack = (i == dc_.slack_index());
      lp.add_variable("theta" + std::to_string(network_.buses[i].id), slack ? 0.0 : -kInf,
                      slack ? 0.0 : kInf);
    }
    std::vector<std::vector<LinearTerm>> balance(nb);
    for (int g = 0; g < ng; ++g) balance[dc_.gen_bus()[g]].push_back({g, 1.0});
    for (const auto& br : network_.branches) {
      const int f = dc_.bus_index(br.from_bus);
      const int t = dc_.bus_index(br.to_bus);
      balance[f].push_back({theta0 + f, -br.b});
      balance[f].push_back({theta0 + t, br.b});
      balance[t].push_back({theta0 + t, -br.b});
      balance[t].push_back({theta0 + f, br.b});
    }
    for (int i = 0; i < nb; ++i) {
      lp.add_constraint(std::move(balance[i]), Relation::Eq, load[i]);
    }
    for (const auto& br : network_.branches) {
      if (!br.rated()) continue;
      const int f = dc_.bus_index(br.from_bus);
      const int t = dc_.bus_index(br.to_bus);
      std::vector<LinearTerm> row = {{theta0 + f, br.b}, {theta0 + t, -br.b}};
      if (!contains(redundant, {br.id, BoundSide::Upper})) {
        lp.add_constraint(row, Relation::Le, br.f_max);
      }
      if (!contains(redundant, {br.id, BoundSide::Lower})) {
        lp.add_constraint(row, Relation::Ge, -br.f_max);
      }
    }
    return theta0;
  }

  std::vector<LinearTerm> balance;
  for (int g = 0; g < ng; ++g) balance.push_back({g, 1.0});
  lp.add_constraint(balance, Relation::Eq, load.sum());
  const PtdfMatrix& m = ptdf();
  for (const auto& br : network_.branches) {
    if (!br.rated()) continue;
    const double base = m.entries.row(br.id).dot(load);
    std::vector<LinearTerm> row;
    for (int g = 0; g < ng; ++g) {
      const double c = m.entries(br.id, dc_.gen_bus()[g]);
      if (c != 0.0) row.push_back({g, c});
    }
    if (!contains(redundant, {br.id, BoundSide::Upper})) {
      lp.add_constraint(row, Relation::Le, br.f_max + base);
    }
    if (!contains(redundant, {br.id, BoundSide::Lower})) {
      lp.add_constraint(row, Relation::Ge, -br.f_max + base);
    }
  }
  return -1;
}

LinearProgram OpfSolver::build_opf_lp(const Eigen::VectorXd& load,
                                      const std::vector<FlowBound>& redundant,
                                      OpfForm form) const {
  const int ng = static_cast<int>(network_.generators.size());
  LinearProgram lp;
  for (int g = 0; g < ng; ++g) {
    lp.add_variable("p" + std::to_string(g), network_.generators[g].p_min,
                    network_.generators[g].p_max);
  }
  add_network_rows(lp, load, redundant, form);

  const int t0 = lp.num_variables();
  for (int g = 0; g < ng; ++g) lp.add_variable("t" + std::to_string(g), -kInf, kInf);
  std::vector<double> obj(lp.num_variables(), 0.0);
  for (int g = 0; g < ng; ++g) {
    const auto& gen = network_.generators[g];
    for (const auto& piece :
         piecewise_linearize(gen.c0, gen.c1, gen.c2, gen.p_min, gen.p_max, segments_)) {
      lp.add_constraint({{t0 + g, 1.0}, {g, -piece.slope}}, Relation::Ge, piece.intercept);
    }
    obj[t0 + g] = 1.0;
  }
  lp.set_objective(Sense::Min, std::move(obj));
  return lp;
}

OpfSolver::UcModel OpfSolver::build_uc_lp(const Eigen::VectorXd& load,
                                          const std::vector<FlowBound>& redundant,
                                          OpfForm form) const {
  const int ng = static_cast<int>(network_.generators.size());
  UcModel model;
  LinearProgram& lp = model.lp;
  for (int g = 0; g < ng; ++g) {
    lp.add_variable("p" + std::to_string(g), 0.0, network_.generators[g].p_max);
  }
  add_network_rows(lp, load, redundant, form);

  const int t0 = lp.num_variables();
  for (int g = 0; g < ng; ++g) lp.add_variable("t" + std::to_string(g), -kInf, kInf);
  const int z0 = lp.num_variables();
  for (int g = 0; g < ng; ++g) {
    model.binaries.push_back(lp.add_variable("z" + std::to_string(g), 0.0, 1.0));
  }

  std::vector<double> obj(lp.num_variables(), 0.0);
  for (int g = 0; g < ng; ++g) {
    const auto& gen = network_.generators[g];
    // p_min z <= p <= p_max z; the no-load cost c0 is incurred via z, and the
    // epigraph t covers the variable cost on [0, p_max].
    lp.add_constraint({{g, 1.0}, {z0 + g, -gen.p_max}}, Relation::Le, 0.0);
    lp.add_constraint({{g, 1.0}, {z0 + g, -gen.p_min}}, Relation::Ge, 0.0);
    for (const auto& piece : piecewise_linearize(0.0, gen.c1, gen.c2, 0.0, gen.p_max, segments_)) {
      lp.add_constraint({{t0 + g, 1.0}, {g, -piece.slope}}, Relation::Ge, piece.intercept);
    }
    obj[t0 + g] = 1.0;
    obj[z0 + g] = gen.c0;
  }
  lp.set_objective(Sense::Min, std::move(obj));
  return model;
}

DispatchSolution OpfSolver::solve_dcopf(const Eigen::VectorXd& load,
                                        const std::vector<FlowBound>& redundant,
                                        OpfForm form) const {
  WallTimer timer;
  LinearProgram lp = build_opf_lp(load, redundant, form);
  LpSolution sol = solve_lp(lp);
  DispatchSolution out;
  out.iterations = sol.iterations;
  if (sol.status == LpStatus::Infeasible) {
    out.status = SolveStatus::Infeasible;
    out.solve_ms = timer.elapsed_ms();
    return out;
  }
  if (sol.status == LpStatus::Unbounded) {
    throw SolverError("dispatch LP unbounded; cost model is malformed");
  }

  const int ng = static_cast<int>(network_.generators.size());
  const int nb = static_cast<int>(network_.buses.size());
  out.status = SolveStatus::Optimal;
  out.objective = sol.objective;
  out.p.resize(ng);
  for (int g = 0; g < ng; ++g) out.p[g] = sol.primal[g];
  if (form == OpfForm::Theta) {
    out.theta.resize(nb);
    for (int i = 0; i < nb; ++i) out.theta[i] = sol.primal[ng + i];
  } else {
    out.theta = dc_.solve_angles(net_injections(dc_, out.p, load));
  }

  const Eigen::VectorXd flows = line_flows(dc_, out.theta);
  for (const auto& br : network_.branches) {
    if (!br.rated()) continue;
    if (!contains(redundant, {br.id, BoundSide::Upper}) &&
        br.f_max - flows[br.id] <= kBindingTol) {
      out.binding.push_back({br.id, BoundSide::Upper});
    }
    if (!contains(redundant, {br.id, BoundSide::Lower}) &&
        flows[br.id] + br.f_max <= kBindingTol) {
      out.binding.push_back({br.id, BoundSide::Lower});
    }
  }
  out.solve_ms = timer.elapsed_ms();
  return out;
}

CommitmentSolution OpfSolver::solve_uc(const Eigen::VectorXd& load,
                                       const std::vector<FlowBound>& redundant,
                                       OpfForm form) const {
  WallTimer timer;
  UcModel model = build_uc_lp(load, redundant, form);
  MilpSolution milp = solve_milp(model.lp, model.binaries);
  CommitmentSolution out;
  out.nodes = milp.nodes;
  if (milp.status == MilpStatus::Infeasible) {
    out.status = SolveStatus::Infeasible;
    out.solve_ms = timer.elapsed_ms();
    return out;
  }
  const int ng = static_cast<int>(network_.generators.size());
  out.status = SolveStatus::Optimal;
  out.objective = milp.objective;
  out.z = milp.assignment;
  out.p.resize(ng);
  for (int g = 0; g < ng; ++g) out.p[g] = milp.primal[g];
  out.theta = dc_.solve_angles(net_injections(dc_, out.p, load));
  out.solve_ms = timer.elapsed_ms();
  return out;
}

CommitmentSolution OpfSolver::brute_force_uc(const Eigen::VectorXd& load,
                                             const std::vector<FlowBound>& redundant,
                                             OpfForm form) const {
  const int ng = static_cast<int>(network_.generators.size());
  if (ng > 20) {
    throw ValidationError("brute-force commitment refused for " + std::to_string(ng) +
                          " generators (2^g enumeration)");
  }
  WallTimer timer;
  UcModel model = build_uc_lp(load, redundant, form);

  CommitmentSolution best;
  best.status = SolveStatus::Infeasible;
  for (long mask = 0; mask < (1L << ng); ++mask) {
    LinearProgram lp = model.lp;
    std::vector<int> z(ng);
    for (int g = 0; g < ng; ++g) {
      // Lexicographic order over (z_0, z_1, ...): z_0 is the most
      // significant bit of the enumeration counter, and only strictly
      // better objectives replace the incumbent.
      z[g] = static_cast<int>((mask >> (ng - 1 - g)) & 1);
      lp.set_variable_bounds(model.binaries[g], z[g], z[g]);
    }
    LpSolution sol = solve_lp(lp);
    ++best.nodes;
    if (sol.status != LpStatus::Optimal) continue;  // e.g. all-off under load
    if (best.status == SolveStatus::Infeasible || sol.objective < best.objective) {
      best.status = SolveStatus::Optimal;
      best.objective = sol.objective;
      best.z = z;
      best.p.resize(ng);
      for (int g = 0; g < ng; ++g) best.p[g] = sol.primal[g];
    }
  }
  if (best.status == SolveStatus::Optimal) {
    best.theta = dc_.solve_angles(net_injections(dc_, best.p, load));
  }
  best.solve_ms = timer.elapsed_ms();
  return best;
}

ViolationReport verify_dispatch(const Network& network, const DcSystem& dc,
                                const Eigen::VectorXd& p, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& load) {
  std::vector<int> all_on(network.generators.size(), 1);
  return verify_commitment(network, dc, p, all_on, theta, load);
}

ViolationReport verify_commitment(const Network& network, const DcSystem& dc,
                                  const Eigen::VectorXd& p, const std::vector<int>& z,
                                  const Eigen::VectorXd& theta, const Eigen::VectorXd& load) {
  ViolationReport rep;
  rep.branch_flows = line_flows(dc, theta);

  Eigen::VectorXd inj = net_injections(dc, p, load);
  Eigen::VectorXd residual = inj - dc.incidence().transpose() * rep.branch_flows;
  rep.balance = residual.cwiseAbs().maxCoeff();

  for (size_t g = 0; g < network.generators.size(); ++g) {
    const auto& gen = network.generators[g];
    const double zi = z[g];
    rep.generation = std::max(rep.generation, gen.p_min * zi - p[g]);
    rep.generation = std::max(rep.generation, p[g] - gen.p_max * zi);
  }
  rep.generation = std::max(rep.generation, 0.0);

  for (const auto& br : network.branches) {
    if (!br.rated()) continue;
    rep.flow = std::max(rep.flow, std::abs(rep.branch_flows[br.id]) - br.f_max);
  }
  rep.flow = std::max(rep.flow, 0.0);
  return rep;
}

double max_violation_on(const ViolationReport& report, const Network& network,
                        const std::vector<FlowBound>& bounds) {
  double worst = 0.0;
  for (const auto& b : bounds) {
    const auto& br = network.branches.at(b.branch_id);
    const double f = report.branch_flows[b.branch_id];
    const double v = (b.side == BoundSide::Upper) ? f - br.f_max : -br.f_max - f;
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace gridscreen
