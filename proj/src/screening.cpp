#include "gridscreen/screening.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "json.hpp"

namespace gridscreen {

namespace {

// Variable layout of the screening LP: p block, then theta, then d.
struct VarLayout {
  int p0 = 0;
  int theta0 = 0;
  int d0 = 0;
};

VarLayout layout_for(const Network& n) {
  VarLayout l;
  l.p0 = 0;
  l.theta0 = static_cast<int>(n.generators.size());
  l.d0 = l.theta0 + static_cast<int>(n.buses.size());
  return l;
}

bool contains(const std::vector<FlowBound>& set, FlowBound b) {
  return std::find(set.begin(), set.end(), b) != set.end();
}

}  // namespace

LoadSet make_load_set(const Network& network, double v) {
  if (v < 0.0) throw ValidationError("load variation fraction must be >= 0");
  LoadSet ls;
  ls.v = v;
  ls.range.reserve(network.buses.size());
  for (const auto& bus : network.buses) {
    const double a = (1.0 - v) * bus.d_nom;
    const double b = (1.0 + v) * bus.d_nom;
    ls.range.push_back({std::min(a, b), std::max(a, b)});
  }
  return ls;
}

double default_margin_epsilon(double f_max) { return 1e-6 * std::max(1.0, f_max); }

std::vector<ParallelVerdict> parallel_dominated(const Network& network) {
  // Group rated, positive-susceptance branches by unordered terminal pair.
  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (const auto& br : network.branches) {
    if (!br.rated() || br.b <= 0.0) continue;
    groups[{std::min(br.from_bus, br.to_bus), std::max(br.from_bus, br.to_bus)}].push_back(br.id);
  }

  std::vector<ParallelVerdict> out;
  for (const auto& [key, ids] : groups) {
    if (ids.size() < 2) continue;
    // Keep the branch with the largest b/f_max (it reaches its limit first);
    // ratio ties keep the lowest branch id.
    int keep = -1;
    double keep_ratio = 0.0;
    for (int id : ids) {
      const auto& br = network.branches[id];
      const double r = br.b / br.f_max;
      if (keep < 0 || r > keep_ratio * (1.0 + 1e-12)) {
        keep = id;
        keep_ratio = r;
      }
    }
    for (int id : ids) {
      if (id == keep) continue;
      const auto& br = network.branches[id];
      const double r = br.b / br.f_max;
      const bool strict = r < keep_ratio * (1.0 - 1e-12);
      out.push_back({{id, BoundSide::Upper}, strict});
      out.push_back({{id, BoundSide::Lower}, strict});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ParallelVerdict& a, const ParallelVerdict& b) { return a.bound < b.bound; });
  return out;
}

std::vector<ScreeningCertificate> screen_parallel(const Network& network) {
  std::vector<ScreeningCertificate> certs;
  for (const auto& pv : parallel_dominated(network)) {
    ScreeningCertificate c;
    c.bound = pv.bound;
    c.verdict = Verdict::RedundantParallel;
    certs.push_back(std::move(c));
  }
  return certs;
}

LinearProgram build_screening_lp(const Network& network, const DcSystem& dc,
                                 const LoadSet& loads, FlowBound bound, bool relax_pmin,
                                 const std::vector<FlowBound>& exclusions) {
  if (loads.range.size() != network.buses.size()) {
    throw ValidationError("load set does not match the network's bus count");
  }
  const int nb = static_cast<int>(network.buses.size());
  const VarLayout lay = layout_for(network);

  LinearProgram lp;
  for (size_t g = 0; g < network.generators.size(); ++g) {
    const auto& gen = network.generators[g];
    lp.add_variable("p" + std::to_string(g), relax_pmin ? 0.0 : gen.p_min, gen.p_max);
  }
  for (int i = 0; i < nb; ++i) {
    const bool slack = (i == dc.slack_index());
    lp.add_variable("theta" + std::to_string(network.buses[i].id), slack ? 0.0 : -kInf,
                    slack ? 0.0 : kInf);
  }
  for (int i = 0; i < nb; ++i) {
    lp.add_variable("d" + std::to_string(network.buses[i].id), loads.range[i].lower,
                    loads.range[i].upper);
  }

  // Nodal balance: sum of local generation - demand - outflow = 0.
  std::vector<std::vector<LinearTerm>> balance(nb);
  for (size_t g = 0; g < network.generators.size(); ++g) {
    balance[dc.gen_bus()[g]].push_back({lay.p0 + static_cast<int>(g), 1.0});
  }
  for (int i = 0; i < nb; ++i) balance[i].push_back({lay.d0 + i, -1.0});
  for (const auto& br : network.branches) {
    const int f = dc.bus_index(br.from_bus);
    const int t = dc.bus_index(br.to_bus);
    balance[f].push_back({lay.theta0 + f, -br.b});
    balance[f].push_back({lay.theta0 + t, br.b});
    balance[t].push_back({lay.theta0 + t, -br.b});
    balance[t].push_back({lay.theta0 + f, br.b});
  }
  for (int i = 0; i < nb; ++i) lp.add_constraint(std::move(balance[i]), Relation::Eq, 0.0);

  // Every flow limit stays in the problem unless explicitly excluded,
  // including the screened line's own limit.
  for (const auto& br : network.branches) {
    if (!br.rated()) continue;
    const int f = dc.bus_index(br.from_bus);
    const int t = dc.bus_index(br.to_bus);
    std::vector<LinearTerm> row = {{lay.theta0 + f, br.b}, {lay.theta0 + t, -br.b}};
    if (!contains(exclusions, {br.id, BoundSide::Upper})) {
      lp.add_constraint(row, Relation::Le, br.f_max);
    }
    if (!contains(exclusions, {br.id, BoundSide::Lower})) {
      lp.add_constraint(row, Relation::Ge, -br.f_max);
    }
  }

  const auto& target = network.branches.at(bound.branch_id);
  std::vector<double> obj(lp.num_variables(), 0.0);
  obj[lay.theta0 + dc.bus_index(target.from_bus)] = target.b;
  obj[lay.theta0 + dc.bus_index(target.to_bus)] = -target.b;
  lp.set_objective(bound.side == BoundSide::Upper ? Sense::Max : Sense::Min, std::move(obj));
  return lp;
}

ScreeningCertificate screen_bound(const Network& network, const DcSystem& dc,
                                  const LoadSet& loads, FlowBound bound, bool relax_pmin,
                                  const std::vector<FlowBound>& exclusions,
                                  std::optional<double> margin_epsilon) {
  const auto& br = network.branches.at(bound.branch_id);
  if (!br.rated()) throw ValidationError("cannot screen an unlimited branch");

  LinearProgram lp = build_screening_lp(network, dc, loads, bound, relax_pmin, exclusions);
  LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::Infeasible) {
    throw ValidationError("INFEASIBLE_SCREEN: screening problem infeasible for branch " +
                          std::to_string(bound.branch_id) + " (" + to_string(bound.side) + ")");
  }
  if (sol.status == LpStatus::Unbounded) {
    throw SolverError("screening LP unbounded; flow limits missing for branch " +
                      std::to_string(bound.branch_id));
  }

  const VarLayout lay = layout_for(network);
  ScreeningCertificate cert;
  cert.bound = bound;
  cert.extreme_flow = sol.objective;
  cert.margin = br.f_max - std::abs(sol.objective);
  const double eps = margin_epsilon.value_or(default_margin_epsilon(br.f_max));
  if (*cert.margin >= eps) {
    cert.verdict = Verdict::RedundantOpt;
  } else {
    cert.verdict = Verdict::NonRedundant;
    Witness w;
    const int ng = static_cast<int>(network.generators.size());
    const int nb = static_cast<int>(network.buses.size());
    w.p.resize(ng);
    w.theta.resize(nb);
    w.d.resize(nb);
    for (int g = 0; g < ng; ++g) w.p[g] = sol.primal[lay.p0 + g];
    for (int i = 0; i < nb; ++i) w.theta[i] = sol.primal[lay.theta0 + i];
    for (int i = 0; i < nb; ++i) w.d[i] = sol.primal[lay.d0 + i];
    cert.witness = std::move(w);
  }
  return cert;
}

ScreeningReport screen_all(const Network& network, const LoadSet& loads,
                           const ScreeningOptions& options) {
  if (options.workers < 1) throw ValidationError("worker count must be >= 1");

  ScreeningReport report;
  report.v = loads.v;
  report.relax_pmin = options.relax_pmin;
  report.margin_epsilon = options.margin_epsilon;
  report.workers = options.workers;
  report.cascade = options.cascade;

  WallTimer t1;
  std::vector<ScreeningCertificate> parallel_certs = screen_parallel(network);
  report.step1_ms = t1.elapsed_ms();

  std::vector<FlowBound> parallel_bounds;
  for (const auto& c : parallel_certs) parallel_bounds.push_back(c.bound);

  std::vector<FlowBound> tasks;
  for (const auto& b : enumerate_flow_bounds(network)) {
    if (!contains(parallel_bounds, b)) tasks.push_back(b);
  }

  const std::vector<FlowBound> exclusions =
      options.cascade ? parallel_bounds : std::vector<FlowBound>{};

  WallTimer t2;
  const DcSystem dc = build_dc(network);
  std::vector<ScreeningCertificate> results(tasks.size());
  std::vector<std::string> errors(tasks.size());

  const int workers = std::min<int>(options.workers, std::max<size_t>(tasks.size(), 1));
  auto run_range = [&](size_t begin, size_t end) {
    for (size_t k = begin; k < end; ++k) {
      try {
        results[k] = screen_bound(network, dc, loads, tasks[k], options.relax_pmin, exclusions,
                                  options.margin_epsilon);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  if (workers <= 1) {
    run_range(0, tasks.size());
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (tasks.size() + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const size_t begin = w * chunk;
      const size_t end = std::min(tasks.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  for (size_t k = 0; k < tasks.size(); ++k) {
    if (!errors[k].empty()) {
      throw SolverError("screening failed at branch " + std::to_string(tasks[k].branch_id) +
                        " (" + to_string(tasks[k].side) + "): " + errors[k]);
    }
  }
  report.step2_ms = t2.elapsed_ms();

  report.certificates = std::move(parallel_certs);
  report.certificates.insert(report.certificates.end(), results.begin(), results.end());
  std::sort(report.certificates.begin(), report.certificates.end(),
            [](const ScreeningCertificate& a, const ScreeningCertificate& b) {
              return a.bound < b.bound;
            });

  for (const auto& c : report.certificates) {
    switch (c.verdict) {
      case Verdict::RedundantParallel:
        ++report.counts.parallel;
        report.redundant.push_back(c.bound);
        break;
      case Verdict::RedundantOpt:
        ++report.counts.optimization;
        report.redundant.push_back(c.bound);
        break;
      case Verdict::NonRedundant:
        ++report.counts.remaining;
        break;
    }
  }
  return report;
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::RedundantParallel:
      return "redundant_parallel";
    case Verdict::RedundantOpt:
      return "redundant_opt";
    case Verdict::NonRedundant:
      return "non_redundant";
  }
  return "?";
}

std::string report_to_json(const ScreeningReport& report, const Network& network) {
  nlohmann::json j;
  j["config"] = {{"v", report.v ? nlohmann::json(*report.v) : nlohmann::json(nullptr)},
                 {"relax_pmin", report.relax_pmin},
                 {"margin_epsilon", report.margin_epsilon ? nlohmann::json(*report.margin_epsilon)
                                                          : nlohmann::json(nullptr)},
                 {"workers", report.workers},
                 {"cascade", report.cascade}};
  j["counts"] = {{"parallel", report.counts.parallel},
                 {"optimization", report.counts.optimization},
                 {"remaining", report.counts.remaining},
                 {"total", report.counts.parallel + report.counts.optimization +
                               report.counts.remaining}};
  j["timings_ms"] = {{"step1", report.step1_ms}, {"step2", report.step2_ms}};
  j["bounds"] = nlohmann::json::array();
  for (const auto& c : report.certificates) {
    nlohmann::json jc = {{"branch", c.bound.branch_id},
                         {"side", to_string(c.bound.side)},
                         {"verdict", to_string(c.verdict)}};
    jc["extreme_flow"] =
        c.extreme_flow ? nlohmann::json(*c.extreme_flow) : nlohmann::json(nullptr);
    jc["margin"] = c.margin ? nlohmann::json(*c.margin) : nlohmann::json(nullptr);
    if (c.bound.branch_id >= 0 && c.bound.branch_id < static_cast<int>(network.branches.size())) {
      const auto& br = network.branches[c.bound.branch_id];
      jc["from_bus"] = br.from_bus;
      jc["to_bus"] = br.to_bus;
      jc["f_max"] = br.f_max;
    }
    j["bounds"].push_back(jc);
  }
  j["redundant"] = nlohmann::json::array();
  for (const auto& b : report.redundant) {
    j["redundant"].push_back({{"branch", b.branch_id}, {"side", to_string(b.side)}});
  }
  return j.dump(2);
}

ScreeningReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("screening report: ") + e.what());
  }
  ScreeningReport r;
  try {
    const auto& cfg = j.at("config");
    if (!cfg.at("v").is_null()) r.v = cfg.at("v").get<double>();
    r.relax_pmin = cfg.at("relax_pmin").get<bool>();
    if (!cfg.at("margin_epsilon").is_null()) {
      r.margin_epsilon = cfg.at("margin_epsilon").get<double>();
    }
    r.workers = cfg.at("workers").get<int>();
    r.cascade = cfg.at("cascade").get<bool>();
    r.counts.parallel = j.at("counts").at("parallel").get<int>();
    r.counts.optimization = j.at("counts").at("optimization").get<int>();
    r.counts.remaining = j.at("counts").at("remaining").get<int>();
    for (const auto& jb : j.at("bounds")) {
      ScreeningCertificate c;
      c.bound.branch_id = jb.at("branch").get<int>();
      c.bound.side =
          jb.at("side").get<std::string>() == "upper" ? BoundSide::Upper : BoundSide::Lower;
      const std::string verdict = jb.at("verdict").get<std::string>();
      c.verdict = verdict == "redundant_parallel"
                      ? Verdict::RedundantParallel
                      : (verdict == "redundant_opt" ? Verdict::RedundantOpt
                                                    : Verdict::NonRedundant);
      if (!jb.at("extreme_flow").is_null()) c.extreme_flow = jb.at("extreme_flow").get<double>();
      if (!jb.at("margin").is_null()) c.margin = jb.at("margin").get<double>();
      r.certificates.push_back(std::move(c));
    }
    for (const auto& jb : j.at("redundant")) {
      r.redundant.push_back(
          {jb.at("branch").get<int>(),
           jb.at("side").get<std::string>() == "upper" ? BoundSide::Upper : BoundSide::Lower});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("screening report: ") + e.what());
  }
  return r;
}

}  // namespace gridscreen
