#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gridscreen/cli.hpp"
#include "test_helpers.hpp"

using namespace gridscreen;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

// Rewrites a CSV with the named columns blanked, so byte comparisons ignore
// wall-clock measurements.
std::string strip_columns(const std::string& csv, const std::vector<std::string>& names) {
  auto lines = split(csv, '\n');
  REQUIRE(!lines.empty());
  auto header = split(lines[0], ',');
  std::vector<size_t> drop;
  for (size_t c = 0; c < header.size(); ++c) {
    for (const auto& n : names) {
      if (header[c] == n) drop.push_back(c);
    }
  }
  std::ostringstream out;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    for (size_t c = 0; c < cells.size(); ++c) {
      if (std::find(drop.begin(), drop.end(), c) != drop.end()) cells[c] = "-";
      out << cells[c] << (c + 1 < cells.size() ? "," : "");
    }
    out << "\n";
  }
  return out.str();
}

RunConfig base_config(const std::string& case_name, const std::string& out_dir) {
  RunConfig c;
  c.case_path = test_helpers::case_path(case_name);
  c.out_dir = out_dir;
  c.workers = 2;
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / tag) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cmd_screen writes one summary row per v with the pinned schema") {
  TempDir dir("gs_cli_screen");
  RunConfig config = base_config("case14.m", dir.path.string());
  REQUIRE(cmd_screen(config) == 0);

  auto lines = split(slurp((dir.path / "screen_summary_case14.csv").string()), '\n');
  CHECK(lines[0] ==
        "case,v,total_bounds,parallel_redundant,opt_redundant,remaining,pct_eliminated,"
        "step1_ms,step2_ms");
  REQUIRE(lines.size() >= 6);
  for (int r = 1; r <= 5; ++r) {
    auto cells = split(lines[r], ',');
    CHECK(cells[0] == "case14");
    CHECK(cells[2] == "40");
  }
  CHECK(fs::exists(dir.path / "screen_case14_v0.25.json"));
  CHECK(fs::exists(dir.path / "case14_network.json"));
}

TEST_CASE("cmd_screen with a single v emits a single row") {
  TempDir dir("gs_cli_screen1");
  RunConfig config = base_config("case14.m", dir.path.string());
  config.v_grid = {0.0};
  REQUIRE(cmd_screen(config) == 0);
  auto lines = split(slurp((dir.path / "screen_summary_case14.csv").string()), '\n');
  int rows = 0;
  for (size_t i = 1; i < lines.size(); ++i) rows += !lines[i].empty();
  CHECK(rows == 1);
}

TEST_CASE("cmd_screen on a missing case exits 1 and names the path") {
  RunConfig config;
  config.case_path = "/nonexistent/case999.m";
  config.out_dir = (fs::temp_directory_path() / "gs_cli_missing").string();
  CHECK(cmd_screen(config) == 1);
}

TEST_CASE("identical configs reproduce byte-identical csv output") {
  TempDir a("gs_cli_rep_a"), b("gs_cli_rep_b");
  RunConfig ca = base_config("case14.m", a.path.string());
  RunConfig cb = base_config("case14.m", b.path.string());
  ca.v_grid = cb.v_grid = {0.25, 1.0};
  cb.workers = 1;  // worker count must not matter either
  REQUIRE(cmd_screen(ca) == 0);
  REQUIRE(cmd_screen(cb) == 0);
  REQUIRE(cmd_solve(ca, SolveMode::Opf, true, LoadSource::Sample, 5) == 0);
  REQUIRE(cmd_solve(cb, SolveMode::Opf, true, LoadSource::Sample, 5) == 0);

  const std::vector<std::string> timing = {"step1_ms", "step2_ms", "solve_ms", "mean_full_ms",
                                           "mean_reduced_ms"};
  for (const char* f :
       {"screen_summary_case14.csv", "solve_opf_case14_samples.csv",
        "solve_opf_case14_aggregate.csv"}) {
    CAPTURE(f);
    CHECK(strip_columns(slurp((a.path / f).string()), timing) ==
          strip_columns(slurp((b.path / f).string()), timing));
  }
}

TEST_CASE("cmd_solve full versus reduced agrees at nominal load") {
  TempDir dir("gs_cli_solve");
  RunConfig config = base_config("case14.m", dir.path.string());
  config.v_grid = {0.0};
  REQUIRE(cmd_screen(config) == 0);
  REQUIRE(cmd_solve(config, SolveMode::Opf, true, LoadSource::Nominal, 1) == 0);

  auto agg = split(slurp((dir.path / "solve_opf_case14_aggregate.csv").string()), '\n');
  CHECK(agg[0] ==
        "case,v,mode,form,samples,feasible,status_mismatches,mean_full_ms,mean_reduced_ms,"
        "max_rel_obj_gap");
  auto cells = split(agg[1], ',');
  CHECK(cells[5] == "1");                  // feasible
  CHECK(cells[6] == "0");                  // no status mismatches
  CHECK(std::stod(cells[9]) <= 1e-6);      // objective gap
  CHECK(fs::exists(dir.path / "solution_opf_full_case14_v0.json"));
  CHECK(fs::exists(dir.path / "solution_opf_reduced_case14_v0.json"));
}

TEST_CASE("cmd_solve per-sample csv uses the pinned schema") {
  TempDir dir("gs_cli_schema");
  RunConfig config = base_config("case14.m", dir.path.string());
  config.v_grid = {0.5};
  REQUIRE(cmd_solve(config, SolveMode::Opf, false, LoadSource::Sample, 3) == 0);
  auto lines = split(slurp((dir.path / "solve_opf_case14_samples.csv").string()), '\n');
  CHECK(lines[0] == "case,v,sample,form,constraints_enforced,objective,solve_ms,status");
  int rows = 0;
  for (size_t i = 1; i < lines.size(); ++i) rows += !lines[i].empty();
  CHECK(rows == 3);  // full-only rows
}

TEST_CASE("cmd_solve refuses a zero sample count") {
  RunConfig config = base_config("case14.m", (fs::temp_directory_path() / "gs_s0").string());
  CHECK(cmd_solve(config, SolveMode::Opf, false, LoadSource::Sample, 0) == 1);
}

TEST_CASE("cmd_solve reduced without a screening report instructs to screen") {
  TempDir dir("gs_cli_noreport");
  RunConfig config = base_config("case14.m", dir.path.string());
  config.v_grid = {0.75};
  CHECK(cmd_solve(config, SolveMode::Opf, true, LoadSource::Nominal, 1) == 1);
}

TEST_CASE("cmd_oracle passes exactly on the pedagogical two-bus case") {
  TempDir dir("gs_cli_oracle");
  RunConfig config = base_config("case2.m", dir.path.string());
  config.v_grid = {0.0, 0.25};
  config.pmin_floor = 0.0;
  REQUIRE(cmd_oracle(config, 9, 2) == 0);
  auto lines = split(slurp((dir.path / "oracle_case2.csv").string()), '\n');
  CHECK(lines[0] == "case,check,v,branch,side,lp_extreme,oracle_extreme,gap,status");
  bool saw_exact = false;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cells = split(lines[i], ',');
    CHECK(cells.back() == "pass");
    if (cells[1] == "flow" && cells[5] == "1" && cells[6] == "1") saw_exact = true;
  }
  CHECK(saw_exact);  // grid extreme == lp extreme == 1.0 exactly
}

TEST_CASE("sampled loads are deterministic and stay inside the box") {
  Network n = load_case(test_helpers::case_path("case14.m"));
  LoadSet ls = make_load_set(n, 0.5);
  auto a = sample_load(ls, 7, 1, 3);
  auto b = sample_load(ls, 7, 1, 3);
  CHECK(a == b);
  auto c = sample_load(ls, 7, 1, 4);
  CHECK(a != c);
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a[i] >= ls.range[i].lower - 1e-15);
    CHECK(a[i] <= ls.range[i].upper + 1e-15);
  }
}
