#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gridscreen {

/// Malformed input text (case files, JSON snapshots).
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Structurally invalid model (disconnected network, zero reactance, ...).
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure inside the LP/MILP solver. Never used to signal an
/// infeasible or unbounded problem; those are ordinary statuses.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// SplitMix64 stream. Used for all sampled experiments so that results are
/// reproducible bit-for-bit across platforms and worker counts.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

/// Shortest round-trip decimal representation of a double. Used everywhere a
/// number ends up in a CSV or JSON file so that re-parsing recovers the exact
/// value and byte-level output comparisons are meaningful.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class WallTimer {
public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    auto d = std::chrono::steady_clock::now() - start_;
    return std::chrono::duration<double, std::milli>(d).count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace gridscreen
