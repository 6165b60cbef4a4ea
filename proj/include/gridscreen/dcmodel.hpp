#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <memory>
#include <unordered_map>
#include <vector>

#include "gridscreen/caseio.hpp"

namespace gridscreen {

/// DC power flow structures for one network: branch-bus incidence, branch
/// susceptances, the generator-to-bus map and a factorization of the reduced
/// bus susceptance matrix (slack row/column deleted, theta_slack = 0).
/// Immutable after construction; concurrent reads are safe.
class DcSystem {
public:
  explicit DcSystem(const Network& network);

  const Eigen::SparseMatrix<double>& incidence() const { return incidence_; }
  const Eigen::VectorXd& susceptances() const { return susceptance_; }
  const std::vector<int>& gen_bus() const { return gen_bus_; }

  int num_buses() const { return static_cast<int>(bus_ids_.size()); }
  int num_branches() const { return incidence_.rows(); }
  int slack_index() const { return slack_index_; }
  int slack_bus_id() const { return bus_ids_[slack_index_]; }
  int bus_index(int bus_id) const;
  int bus_id(int index) const { return bus_ids_.at(index); }
  const std::vector<int>& bus_ids() const { return bus_ids_; }

  /// Bus angles with theta_slack = 0 for the given net injection vector
  /// (indexed by bus); any imbalance is absorbed at the slack.
  Eigen::VectorXd solve_angles(const Eigen::VectorXd& injections) const;

private:
  Eigen::SparseMatrix<double> incidence_;  // branches x buses, +1 from / -1 to
  Eigen::VectorXd susceptance_;
  std::vector<int> gen_bus_;
  std::vector<int> bus_ids_;
  std::unordered_map<int, int> bus_index_;
  int slack_index_ = 0;

  // LDLT of the reduced susceptance matrix; LU fallback covers branches with
  // negative reactance, where the matrix loses definiteness.
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

struct PtdfMatrix {
  Eigen::MatrixXd entries;  // branches x buses; slack column identically zero
  int slack_bus = 0;
  std::vector<int> bus_ids;
};

DcSystem build_dc(const Network& network);
PtdfMatrix build_ptdf(const DcSystem& dc);

/// Per-branch flows b_ij (theta_i - theta_j).
Eigen::VectorXd line_flows(const DcSystem& dc, const Eigen::VectorXd& theta);

/// Flows M * injections; the injections must balance to zero within 1e-9.
Eigen::VectorXd line_flows_ptdf(const PtdfMatrix& ptdf, const Eigen::VectorXd& injections);

/// Net injection vector (generation minus demand) by bus index.
Eigen::VectorXd net_injections(const DcSystem& dc, const Eigen::VectorXd& gen_p,
                               const Eigen::VectorXd& demand);

}  // namespace gridscreen
