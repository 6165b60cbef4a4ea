#include <cmath>

#include "doctest.h"
#include "gridscreen/dcmodel.hpp"
#include "gridscreen/util.hpp"
#include "test_helpers.hpp"

using namespace gridscreen;

TEST_CASE("two-bus dc system: incidence, susceptance and flows") {
  DcSystem dc = build_dc(test_helpers::two_bus());
  CHECK(dc.num_branches() == 1);
  CHECK(dc.num_buses() == 2);
  Eigen::MatrixXd a = Eigen::MatrixXd(dc.incidence());
  CHECK(a(0, 0) == 1.0);
  CHECK(a(0, 1) == -1.0);
  CHECK(dc.susceptances()[0] == 10.0);

  Eigen::VectorXd theta(2);
  theta << 0.1, 0.0;
  auto f = line_flows(dc, theta);
  CHECK(f[0] == doctest::Approx(1.0));

  // Linearity and translation invariance.
  CHECK(line_flows(dc, 2.0 * theta)[0] == doctest::Approx(2.0));
  Eigen::VectorXd shifted = theta.array() + 5.0;
  CHECK(line_flows(dc, shifted)[0] == doctest::Approx(1.0));
}

TEST_CASE("triangle at flat angles carries no flow") {
  DcSystem dc = build_dc(test_helpers::triangle());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
  CHECK(line_flows(dc, theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-bus ptdf: all power injected at bus 2 flows back to the slack") {
  DcSystem dc = build_dc(test_helpers::two_bus());
  PtdfMatrix m = build_ptdf(dc);
  CHECK(m.entries(0, dc.bus_index(2)) == doctest::Approx(-1.0));
  CHECK(m.entries(0, dc.bus_index(1)) == 0.0);  // slack column
}

TEST_CASE("triangle ptdf splits unit injection 2/3 vs 1/3") {
  DcSystem dc = build_dc(test_helpers::triangle());
  PtdfMatrix m = build_ptdf(dc);
  const int b1 = dc.bus_index(1);
  // Branches: 0 = 1-2, 1 = 2-3, 2 = 1-3. Injection at bus 1, withdrawal at
  // slack bus 3: the direct path carries twice the two-hop path.
  CHECK(m.entries(0, b1) == doctest::Approx(1.0 / 3.0));
  CHECK(m.entries(1, b1) == doctest::Approx(1.0 / 3.0));
  CHECK(m.entries(2, b1) == doctest::Approx(2.0 / 3.0));

  Eigen::VectorXd inj(3);
  inj << 1.0, 0.0, -1.0;
  auto f = line_flows_ptdf(m, inj);
  CHECK(f[0] == doctest::Approx(1.0 / 3.0));
  CHECK(f[1] == doctest::Approx(1.0 / 3.0));
  CHECK(f[2] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ptdf slack column is identically zero") {
  for (const char* name : {"case14.m", "case30.m"}) {
    Network n = load_case(test_helpers::case_path(name));
    DcSystem dc = build_dc(n);
    PtdfMatrix m = build_ptdf(dc);
    CHECK(m.entries.col(dc.slack_index()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("ptdf and theta-solve flows agree on random balanced injections") {
  for (const char* name : {"case14.m", "case30.m"}) {
    Network n = load_case(test_helpers::case_path(name));
    DcSystem dc = build_dc(n);
    PtdfMatrix m = build_ptdf(dc);
    SplitMix64 rng(4242);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd inj(dc.num_buses());
      for (int i = 0; i < dc.num_buses(); ++i) inj[i] = 2.0 * rng.uniform() - 1.0;
      inj[dc.slack_index()] -= inj.sum();  // balance
      Eigen::VectorXd via_ptdf = line_flows_ptdf(m, inj);
      Eigen::VectorXd via_theta = line_flows(dc, dc.solve_angles(inj));
      CHECK((via_ptdf - via_theta).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("self-ptdf of every branch lies in [-1, 1]") {
  Network n = load_case(test_helpers::case_path("case118.m"));
  DcSystem dc = build_dc(n);
  PtdfMatrix m = build_ptdf(dc);
  for (int l = 0; l < dc.num_branches(); ++l) {
    const auto& br = n.branches[l];
    const double self =
        m.entries(l, dc.bus_index(br.from_bus)) - m.entries(l, dc.bus_index(br.to_bus));
    CHECK(self >= -1.0 - 1e-9);
    CHECK(self <= 1.0 + 1e-9);
  }
}

TEST_CASE("ptdf superposition is exact to fp associativity") {
  Network n = load_case(test_helpers::case_path("case14.m"));
  DcSystem dc = build_dc(n);
  PtdfMatrix m = build_ptdf(dc);
  SplitMix64 rng(7);
  Eigen::VectorXd g1(dc.num_buses()), g2(dc.num_buses());
  for (int i = 0; i < dc.num_buses(); ++i) {
    g1[i] = rng.uniform() - 0.5;
    g2[i] = rng.uniform() - 0.5;
  }
  Eigen::VectorXd lhs = m.entries * (g1 + g2);
  Eigen::VectorXd rhs = m.entries * g1 + m.entries * g2;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ptdf flows require balanced injections") {
  DcSystem dc = build_dc(test_helpers::two_bus());
  PtdfMatrix m = build_ptdf(dc);

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK(line_flows_ptdf(m, zero).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd inj(2);
  inj << -0.5, 0.5;
  CHECK(line_flows_ptdf(m, inj)[0] == doctest::Approx(-0.5));

  inj << 0.2, 0.5;
  CHECK_THROWS_AS(line_flows_ptdf(m, inj), ValidationError);
}

TEST_CASE("dimension mismatches are rejected") {
  DcSystem dc = build_dc(test_helpers::two_bus());
  Eigen::VectorXd bad(3);
  bad.setZero();
  CHECK_THROWS_AS(line_flows(dc, bad), ValidationError);
  CHECK_THROWS_AS(dc.solve_angles(bad), ValidationError);
}
