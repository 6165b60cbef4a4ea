#pragma once

#include <string>

#include "gridscreen/caseio.hpp"

namespace test_helpers {

inline std::string case_path(const std::string& name) {
  return std::string(GRIDSCREEN_CASE_DIR) + "/" + name;
}

// bus 1 (slack, gen p in [0,1] pu) -- x=0.1 --> bus 2 (load d_nom = 1.0 pu),
// rating 2.0 pu. Mirrors the pedagogical screening example.
inline gridscreen::Network two_bus() {
  gridscreen::Network n;
  n.base_mva = 100.0;
  n.buses = {{1, 0.0}, {2, 1.0}};
  n.generators = {{1, 0.0, 1.0, 0.0, 10.0, 0.0}};
  n.branches = {{0, 1, 2, 10.0, 2.0}};
  n.slack_bus = 1;
  return n;
}

// Equal-susceptance triangle 1-2, 2-3, 1-3 with slack at bus 3.
inline gridscreen::Network triangle() {
  gridscreen::Network n;
  n.base_mva = 100.0;
  n.buses = {{1, 0.0}, {2, 0.0}, {3, 0.0}};
  n.generators = {{1, 0.0, 2.0, 0.0, 1.0, 0.0}, {3, 0.0, 2.0, 0.0, 2.0, 0.0}};
  n.branches = {{0, 1, 2, 5.0, 1.0}, {1, 2, 3, 5.0, 1.0}, {2, 1, 3, 5.0, 1.0}};
  n.slack_bus = 3;
  return n;
}

}  // namespace test_helpers
