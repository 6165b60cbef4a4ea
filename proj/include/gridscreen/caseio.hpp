#pragma once

#include <string>
#include <vector>

#include "gridscreen/lpcore.hpp"
#include "gridscreen/util.hpp"

namespace gridscreen {

struct Bus {
  int id = 0;
  double d_nom = 0.0;  // nominal active demand, per-unit
};

struct Generator {
  int bus = 0;
  double p_min = 0.0;  // per-unit
  double p_max = 0.0;  // per-unit
  double c0 = 0.0;     // $/h
  double c1 = 0.0;     // $/h per per-unit MW
  double c2 = 0.0;     // $/h per per-unit MW^2
};

/// f_max == kUnlimited marks a branch without a thermal rating; such a
/// branch produces no flow bounds and is never screened or enforced.
inline constexpr double kUnlimited = kInf;

struct Branch {
  int id = 0;  // ordinal among in-service branches
  int from_bus = 0;
  int to_bus = 0;
  double b = 0.0;      // susceptance, per-unit (1/x)
  double f_max = kUnlimited;  // per-unit rating
  bool rated() const { return f_max != kUnlimited; }
};

struct Network {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;
  int slack_bus = 0;

  int bus_index(int bus_id) const;  // throws ValidationError on unknown id
};

enum class BoundSide { Upper, Lower };

struct FlowBound {
  int branch_id = 0;
  BoundSide side = BoundSide::Upper;

  friend bool operator==(const FlowBound&, const FlowBound&) = default;
  friend auto operator<=>(const FlowBound&, const FlowBound&) = default;
};

/// Parses MATPOWER case text (mpc.baseMVA / mpc.bus / mpc.gen / mpc.branch,
/// optional mpc.gencost) into a validated per-unit Network. Out-of-service
/// rows are dropped, RATE_A = 0 becomes an unlimited rating, and the slack is
/// the lowest-numbered type-3 bus.
Network parse_matpower(const std::string& text);

Network load_case(const std::string& path);

/// Raises every generator's p_min to fraction * p_max (fraction in [0,1]).
Network apply_pmin_floor(Network network, double fraction);

/// Two bounds per rated branch, ordered (branch_id, upper, lower).
std::vector<FlowBound> enumerate_flow_bounds(const Network& network);

/// Canonical JSON snapshot; round-trips to a field-identical Network.
std::string network_to_json(const Network& network);
Network network_from_json(const std::string& text);

const char* to_string(BoundSide side);

}  // namespace gridscreen
