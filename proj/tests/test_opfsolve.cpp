#include <cmath>

#include "doctest.h"
#include "gridscreen/opfsolve.hpp"
#include "test_helpers.hpp"

using namespace gridscreen;

namespace {

Eigen::VectorXd nominal_load(const Network& n) {
  Eigen::VectorXd d(n.buses.size());
  for (size_t i = 0; i < n.buses.size(); ++i) d[i] = n.buses[i].d_nom;
  return d;
}

Eigen::VectorXd sampled_load(const LoadSet& ls, SplitMix64& rng) {
  Eigen::VectorXd d(ls.range.size());
  for (size_t i = 0; i < ls.range.size(); ++i) {
    d[i] = ls.range[i].lower + rng.uniform() * (ls.range[i].upper - ls.range[i].lower);
  }
  return d;
}

}  // namespace

TEST_CASE("two-bus opf dispatches the marginal unit") {
  Network n = test_helpers::two_bus();
  n.generators[0].c0 = 2.0;
  OpfSolver solver(n);
  Eigen::VectorXd d(2);
  d << 0.0, 0.5;

  auto sol = solver.solve_dcopf(d, {}, OpfForm::Theta);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.p[0] == doctest::Approx(0.5));
  CHECK(sol.objective == doctest::Approx(10.0 * 0.5 + 2.0));

  // Dropping both (slack) bounds of the only line changes nothing.
  auto reduced = solver.solve_dcopf(
      d, {{0, BoundSide::Upper}, {0, BoundSide::Lower}}, OpfForm::Theta);
  REQUIRE(reduced.status == SolveStatus::Optimal);
  CHECK(reduced.objective == doctest::Approx(sol.objective));
  CHECK(reduced.p[0] == doctest::Approx(sol.p[0]));
}

TEST_CASE("theta and ptdf forms agree") {
  Network n = apply_pmin_floor(load_case(test_helpers::case_path("case14.m")), 0.1);
  OpfSolver solver(n);
  SplitMix64 rng(555);
  LoadSet ls = make_load_set(n, 0.5);
  for (int s = 0; s < 10; ++s) {
    Eigen::VectorXd d = sampled_load(ls, rng);
    auto a = solver.solve_dcopf(d, {}, OpfForm::Theta);
    auto b = solver.solve_dcopf(d, {}, OpfForm::Ptdf);
    REQUIRE(a.status == b.status);
    if (a.status == SolveStatus::Optimal) {
      CHECK(std::abs(a.objective - b.objective) <=
            1e-6 * std::max(1.0, std::abs(a.objective)));
    }
  }
}

TEST_CASE("binding bounds are reported at the limit") {
  Network n = test_helpers::two_bus();
  n.branches[0].f_max = 0.4;  // force congestion below the 0.5 load
  n.generators.push_back({2, 0.0, 1.0, 0.0, 50.0, 0.0});  // expensive local unit
  OpfSolver solver(n);
  Eigen::VectorXd d(2);
  d << 0.0, 0.5;
  auto sol = solver.solve_dcopf(d, {}, OpfForm::Theta);
  REQUIRE(sol.status == SolveStatus::Optimal);
  REQUIRE(sol.binding.size() == 1);
  CHECK(sol.binding[0] == FlowBound{0, BoundSide::Upper});
  CHECK(sol.p[0] == doctest::Approx(0.4));
  CHECK(sol.p[1] == doctest::Approx(0.1));
}

TEST_CASE("infeasible load is a status, not an error") {
  Network n = test_helpers::two_bus();
  OpfSolver solver(n);
  Eigen::VectorXd d(2);
  d << 0.0, 5.0;  // beyond p_max
  CHECK(solver.solve_dcopf(d, {}, OpfForm::Theta).status == SolveStatus::Infeasible);
}

TEST_CASE("single-generator uc shuts down under zero load") {
  Network n = test_helpers::two_bus();
  n.generators[0] = {1, 0.2, 1.0, 100.0, 1.0, 0.0};
  OpfSolver solver(n);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(2);

  auto off = solver.solve_uc(d, {}, OpfForm::Theta);
  REQUIRE(off.status == SolveStatus::Optimal);
  CHECK(off.z == std::vector<int>{0});
  CHECK(off.objective == doctest::Approx(0.0));

  d[1] = 0.5;
  auto on = solver.solve_uc(d, {}, OpfForm::Theta);
  REQUIRE(on.status == SolveStatus::Optimal);
  CHECK(on.z == std::vector<int>{1});
  CHECK(on.p[0] == doctest::Approx(0.5));
  CHECK(on.objective == doctest::Approx(100.5));
}

TEST_CASE("uc matches the exhaustive oracle on case14") {
  Network n = apply_pmin_floor(load_case(test_helpers::case_path("case14.m")), 0.1);
  OpfSolver solver(n);

  SUBCASE("nominal load") {
    Eigen::VectorXd d = nominal_load(n);
    auto bb = solver.solve_uc(d, {}, OpfForm::Theta);
    auto oracle = solver.brute_force_uc(d, {}, OpfForm::Theta);
    REQUIRE(bb.status == SolveStatus::Optimal);
    REQUIRE(oracle.status == SolveStatus::Optimal);
    CHECK(oracle.nodes == 32);  // 2^5 commitments
    CHECK(std::abs(bb.objective - oracle.objective) <=
          1e-7 * std::max(1.0, std::abs(oracle.objective)));
  }

  SUBCASE("sampled loads, including infeasible ones") {
    SplitMix64 rng(808);
    LoadSet ls = make_load_set(n, 0.5);
    for (int s = 0; s < 8; ++s) {
      Eigen::VectorXd d = sampled_load(ls, rng);
      auto bb = solver.solve_uc(d, {}, OpfForm::Theta);
      auto oracle = solver.brute_force_uc(d, {}, OpfForm::Theta);
      REQUIRE(bb.status == oracle.status);
      if (bb.status == SolveStatus::Optimal) {
        CHECK(std::abs(bb.objective - oracle.objective) <=
              1e-7 * std::max(1.0, std::abs(oracle.objective)));
      }
    }
  }
}

TEST_CASE("zero load with positive no-load cost turns everything off") {
  Network n = test_helpers::triangle();
  for (auto& g : n.generators) g.c0 = 5.0;
  OpfSolver solver(n);
  auto sol = solver.brute_force_uc(Eigen::VectorXd::Zero(3), {});
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.z == std::vector<int>{0, 0});
  CHECK(sol.objective == doctest::Approx(0.0));
}

TEST_CASE("brute force refuses oversized commitment spaces") {
  Network n = test_helpers::two_bus();
  for (int k = 0; k < 21; ++k) n.generators.push_back({1, 0.0, 0.1, 0.0, 1.0, 0.0});
  OpfSolver solver(n);
  CHECK_THROWS_AS(solver.brute_force_uc(Eigen::VectorXd::Zero(2), {}), ValidationError);
}

TEST_CASE("verify_dispatch flags a hand-built line violation") {
  Network n = test_helpers::two_bus();
  DcSystem dc = build_dc(n);
  // theta chosen so the flow is 2.1 against a rating of 2.0.
  Eigen::VectorXd p(1), theta(2), d(2);
  p << 2.1;
  theta << 0.21, 0.0;
  d << 0.0, 2.1;
  auto rep = verify_dispatch(n, dc, p, theta, d);
  CHECK(rep.flow == doctest::Approx(0.1));
  CHECK(rep.balance <= 1e-12);
  CHECK(max_violation_on(rep, n, {{0, BoundSide::Upper}}) == doctest::Approx(0.1));
  CHECK(max_violation_on(rep, n, {{0, BoundSide::Lower}}) == 0.0);
}

TEST_CASE("verify_dispatch on an idle network reports zero violations") {
  Network n = test_helpers::two_bus();
  n.buses[1].d_nom = 0.0;
  DcSystem dc = build_dc(n);
  auto rep = verify_dispatch(n, dc, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(2),
                             Eigen::VectorXd::Zero(2));
  CHECK(rep.balance == 0.0);
  CHECK(rep.generation == 0.0);
  CHECK(rep.flow == 0.0);
}

TEST_CASE("linearized objective approaches the quadratic cost from above") {
  Network n = apply_pmin_floor(load_case(test_helpers::case_path("case14.m")), 0.1);
  Eigen::VectorXd d = nominal_load(n);

  auto quadratic_cost = [&](const Eigen::VectorXd& p) {
    double c = 0.0;
    for (size_t g = 0; g < n.generators.size(); ++g) {
      const auto& gen = n.generators[g];
      c += gen.c0 + gen.c1 * p[g] + gen.c2 * p[g] * p[g];
    }
    return c;
  };

  double prev = kInf;
  for (int K : {1, 2, 4, 8, 16, 32}) {
    OpfSolver solver(n, K);
    auto sol = solver.solve_dcopf(d, {}, OpfForm::Theta);
    REQUIRE(sol.status == SolveStatus::Optimal);
    // The piecewise model over-prices the dispatch it returns, so the LP
    // objective sits above the true quadratic optimum and tightens with K.
    CHECK(sol.objective >= quadratic_cost(sol.p) - 1e-6);
    CHECK(sol.objective <= prev + 1e-9);
    prev = sol.objective;
  }
}
