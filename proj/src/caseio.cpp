#include "gridscreen/caseio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace gridscreen {

namespace {

struct Matrix {
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;  // source line of each row
};

// Tokenizes the `mpc.<name> = [ ... ];` blocks. One matrix row per line,
// which is how MATPOWER case files are written in practice.
struct CaseText {
  double base_mva = 0.0;
  bool has_base = false;
  std::unordered_map<std::string, Matrix> matrices;
};

double parse_number(const std::string& tok, int line) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError("case text line " + std::to_string(line) + ": malformed number '" + tok +
                     "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError("case text line " + std::to_string(line) + ": non-finite value '" + tok +
                     "'");
  }
  return v;
}

CaseText scan_case(const std::string& text) {
  CaseText out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  std::string current;  // matrix being filled, empty if none
  while (std::getline(is, line)) {
    ++lineno;
    if (auto pos = line.find('%'); pos != std::string::npos) line.erase(pos);

    if (current.empty()) {
      auto mpc = line.find("mpc.");
      if (mpc == std::string::npos) continue;
      auto eq = line.find('=', mpc);
      if (eq == std::string::npos) continue;
      std::string name = line.substr(mpc + 4, eq - mpc - 4);
      name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
      std::string rest = line.substr(eq + 1);
      if (name == "baseMVA") {
        rest.erase(std::remove_if(rest.begin(), rest.end(),
                                  [](char c) { return ::isspace(c) || c == ';'; }),
                   rest.end());
        out.base_mva = parse_number(rest, lineno);
        out.has_base = true;
        continue;
      }
      auto bracket = rest.find('[');
      if (bracket == std::string::npos) continue;  // version strings etc.
      current = name;
      out.matrices[current];
      line = rest.substr(bracket + 1);
    }

    // Inside a matrix: rows end with ';', the block ends with ']'.
    bool closing = false;
    if (auto pos = line.find(']'); pos != std::string::npos) {
      line.erase(pos);
      closing = true;
    }
    std::istringstream ls(line);
    std::string tok;
    std::vector<double> row;
    bool row_done = false;
    while (ls >> tok) {
      if (!tok.empty() && tok.back() == ';') {
        tok.pop_back();
        row_done = true;
      }
      if (!tok.empty()) row.push_back(parse_number(tok, lineno));
      if (row_done) break;
    }
    if (!row.empty()) {
      out.matrices[current].rows.push_back(std::move(row));
      out.matrices[current].line_numbers.push_back(lineno);
    }
    if (closing) current.clear();
  }
  return out;
}

void require_columns(const Matrix& m, size_t need, const std::string& what) {
  for (size_t r = 0; r < m.rows.size(); ++r) {
    if (m.rows[r].size() < need) {
      throw ParseError("case text line " + std::to_string(m.line_numbers[r]) + ": " + what +
                       " row has " + std::to_string(m.rows[r].size()) + " columns, need >= " +
                       std::to_string(need));
    }
  }
}

void validate_network(const Network& n) {
  if (n.buses.empty()) throw ValidationError("network has no buses");

  std::unordered_map<int, int> index;
  for (size_t i = 0; i < n.buses.size(); ++i) {
    if (!index.emplace(n.buses[i].id, static_cast<int>(i)).second) {
      throw ValidationError("duplicate bus id " + std::to_string(n.buses[i].id));
    }
  }
  if (!index.count(n.slack_bus)) throw ValidationError("slack bus id is not a bus");

  for (const auto& g : n.generators) {
    if (!index.count(g.bus)) {
      throw ValidationError("generator references unknown bus " + std::to_string(g.bus));
    }
    if (g.p_min > g.p_max) {
      throw ValidationError("generator at bus " + std::to_string(g.bus) + " has p_min > p_max");
    }
  }

  std::vector<int> parent(n.buses.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& br : n.branches) {
    if (!index.count(br.from_bus) || !index.count(br.to_bus)) {
      throw ValidationError("branch " + std::to_string(br.id) + " references an unknown bus");
    }
    if (br.b == 0.0) {
      throw ValidationError("branch " + std::to_string(br.id) + " has zero susceptance");
    }
    if (br.rated() && br.f_max <= 0.0) {
      throw ValidationError("branch " + std::to_string(br.id) + " has non-positive rating");
    }
    parent[find(index.at(br.from_bus))] = find(index.at(br.to_bus));
  }
  const int root = find(0);
  for (size_t i = 1; i < n.buses.size(); ++i) {
    if (find(static_cast<int>(i)) != root) {
      throw ValidationError("network is disconnected (bus " + std::to_string(n.buses[i].id) +
                            " unreachable)");
    }
  }
}

}  // namespace

int Network::bus_index(int bus_id) const {
  for (size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == bus_id) return static_cast<int>(i);
  }
  throw ValidationError("unknown bus id " + std::to_string(bus_id));
}

Network parse_matpower(const std::string& text) {
  CaseText ct = scan_case(text);
  if (!ct.has_base) throw ParseError("missing mpc.baseMVA");
  for (const char* req : {"bus", "gen", "branch"}) {
    if (!ct.matrices.count(req)) throw ParseError(std::string("missing mpc.") + req + " matrix");
  }
  if (ct.base_mva <= 0.0) throw ValidationError("baseMVA must be positive");

  Network n;
  n.base_mva = ct.base_mva;

  const Matrix& bus = ct.matrices.at("bus");
  require_columns(bus, 3, "bus");
  int slack = -1;
  for (const auto& row : bus.rows) {
    Bus b;
    b.id = static_cast<int>(row[0]);
    b.d_nom = row[2] / n.base_mva;
    n.buses.push_back(b);
    if (static_cast<int>(row[1]) == 3 && (slack < 0 || b.id < slack)) {
      if (slack >= 0) {
        std::cerr << "warning: multiple slack-typed buses; keeping bus " << std::min(slack, b.id)
                  << "\n";
      }
      slack = (slack < 0) ? b.id : std::min(slack, b.id);
    }
  }
  if (slack < 0) throw ValidationError("no slack (type 3) bus in case");
  n.slack_bus = slack;

  const Matrix& gen = ct.matrices.at("gen");
  require_columns(gen, 10, "gen");
  std::vector<size_t> live_gens;
  for (size_t r = 0; r < gen.rows.size(); ++r) {
    const auto& row = gen.rows[r];
    if (row[7] <= 0.0) continue;  // GEN_STATUS
    Generator g;
    g.bus = static_cast<int>(row[0]);
    g.p_max = row[8] / n.base_mva;
    g.p_min = row[9] / n.base_mva;
    n.generators.push_back(g);
    live_gens.push_back(r);
  }

  if (auto it = ct.matrices.find("gencost"); it != ct.matrices.end()) {
    const Matrix& cost = it->second;
    require_columns(cost, 4, "gencost");
    const size_t ng = gen.rows.size();
    if (cost.rows.size() != ng && cost.rows.size() != 2 * ng) {
      throw ParseError("gencost has " + std::to_string(cost.rows.size()) + " rows for " +
                       std::to_string(ng) + " generators");
    }
    for (size_t k = 0; k < live_gens.size(); ++k) {
      const size_t r = live_gens[k];
      const auto& row = cost.rows[r];
      const int line = cost.line_numbers[r];
      const int model = static_cast<int>(row[0]);
      if (model == 1) {
        throw ValidationError("case text line " + std::to_string(line) +
                              ": piecewise-linear gencost unsupported");
      }
      if (model != 2) {
        throw ParseError("case text line " + std::to_string(line) + ": unknown gencost model " +
                         std::to_string(model));
      }
      const int ncost = static_cast<int>(row[3]);
      if (ncost > 3) {
        throw ValidationError("case text line " + std::to_string(line) +
                              ": polynomial cost degree > 2 unsupported");
      }
      if (ncost < 1 || row.size() < static_cast<size_t>(4 + ncost)) {
        throw ParseError("case text line " + std::to_string(line) + ": bad gencost row");
      }
      double c[3] = {0.0, 0.0, 0.0};  // c0, c1, c2
      for (int i = 0; i < ncost; ++i) c[i] = row[4 + ncost - 1 - i];
      Generator& g = n.generators[k];
      g.c0 = c[0];
      g.c1 = c[1] * n.base_mva;
      g.c2 = c[2] * n.base_mva * n.base_mva;
    }
  }

  const Matrix& branch = ct.matrices.at("branch");
  require_columns(branch, 11, "branch");
  int next_id = 0;
  for (size_t r = 0; r < branch.rows.size(); ++r) {
    const auto& row = branch.rows[r];
    if (row[10] <= 0.0) continue;  // BR_STATUS
    Branch br;
    br.id = next_id++;
    br.from_bus = static_cast<int>(row[0]);
    br.to_bus = static_cast<int>(row[1]);
    const double x = row[3];
    if (x == 0.0) {
      throw ValidationError("case text line " + std::to_string(branch.line_numbers[r]) +
                            ": branch reactance is zero");
    }
    br.b = 1.0 / x;  // taps and shifts are ignored in the DC model
    const double rate = row[5];
    br.f_max = (rate == 0.0) ? kUnlimited : rate / n.base_mva;
    n.branches.push_back(br);
  }

  validate_network(n);
  return n;
}

Network load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_matpower(ss.str());
}

Network apply_pmin_floor(Network network, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw ValidationError("pmin floor fraction must lie in [0,1]");
  }
  for (auto& g : network.generators) {
    g.p_min = std::max(g.p_min, fraction * g.p_max);
  }
  return network;
}

std::vector<FlowBound> enumerate_flow_bounds(const Network& network) {
  std::vector<FlowBound> bounds;
  for (const auto& br : network.branches) {
    if (!br.rated()) continue;
    bounds.push_back({br.id, BoundSide::Upper});
    bounds.push_back({br.id, BoundSide::Lower});
  }
  return bounds;
}

std::string network_to_json(const Network& n) {
  nlohmann::json j;
  j["base_mva"] = n.base_mva;
  j["slack_bus"] = n.slack_bus;
  j["buses"] = nlohmann::json::array();
  for (const auto& b : n.buses) j["buses"].push_back({{"id", b.id}, {"d_nom", b.d_nom}});
  j["generators"] = nlohmann::json::array();
  for (const auto& g : n.generators) {
    j["generators"].push_back({{"bus", g.bus},
                               {"p_min", g.p_min},
                               {"p_max", g.p_max},
                               {"c0", g.c0},
                               {"c1", g.c1},
                               {"c2", g.c2}});
  }
  j["branches"] = nlohmann::json::array();
  for (const auto& br : n.branches) {
    nlohmann::json jb = {
        {"id", br.id}, {"from_bus", br.from_bus}, {"to_bus", br.to_bus}, {"b", br.b}};
    jb["f_max"] = br.rated() ? nlohmann::json(br.f_max) : nlohmann::json(nullptr);
    j["branches"].push_back(jb);
  }
  return j.dump(2);
}

Network network_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("network snapshot: ") + e.what());
  }
  Network n;
  try {
    n.base_mva = j.at("base_mva").get<double>();
    n.slack_bus = j.at("slack_bus").get<int>();
    for (const auto& jb : j.at("buses")) {
      n.buses.push_back({jb.at("id").get<int>(), jb.at("d_nom").get<double>()});
    }
    for (const auto& jg : j.at("generators")) {
      n.generators.push_back({jg.at("bus").get<int>(), jg.at("p_min").get<double>(),
                              jg.at("p_max").get<double>(), jg.at("c0").get<double>(),
                              jg.at("c1").get<double>(), jg.at("c2").get<double>()});
    }
    for (const auto& jb : j.at("branches")) {
      Branch br;
      br.id = jb.at("id").get<int>();
      br.from_bus = jb.at("from_bus").get<int>();
      br.to_bus = jb.at("to_bus").get<int>();
      br.b = jb.at("b").get<double>();
      br.f_max = jb.at("f_max").is_null() ? kUnlimited : jb.at("f_max").get<double>();
      n.branches.push_back(br);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("network snapshot: ") + e.what());
  }
  validate_network(n);
  return n;
}

const char* to_string(BoundSide side) {
  return side == BoundSide::Upper ? "upper" : "lower";
}

}  // namespace gridscreen
