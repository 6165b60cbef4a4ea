#include "gridscreen/dcmodel.hpp"

#include <cmath>

namespace gridscreen {

DcSystem::DcSystem(const Network& network) {
  const int nb = static_cast<int>(network.buses.size());
  const int nl = static_cast<int>(network.branches.size());

  bus_ids_.reserve(nb);
  for (const auto& b : network.buses) {
    bus_index_.emplace(b.id, static_cast<int>(bus_ids_.size()));
    bus_ids_.push_back(b.id);
  }
  slack_index_ = bus_index_.at(network.slack_bus);

  incidence_.resize(nl, nb);
  susceptance_.resize(nl);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * nl);
  for (int l = 0; l < nl; ++l) {
    const auto& br = network.branches[l];
    trip.emplace_back(l, bus_index_.at(br.from_bus), 1.0);
    trip.emplace_back(l, bus_index_.at(br.to_bus), -1.0);
    susceptance_[l] = br.b;
  }
  incidence_.setFromTriplets(trip.begin(), trip.end());

  gen_bus_.reserve(network.generators.size());
  for (const auto& g : network.generators) gen_bus_.push_back(bus_index_.at(g.bus));

  // Reduced Laplacian L = A' diag(b) A with the slack row/column deleted.
  std::vector<Eigen::Triplet<double>> lap;
  auto red = [&](int i) { return i < slack_index_ ? i : i - 1; };
  for (int l = 0; l < nl; ++l) {
    const auto& br = network.branches[l];
    const int i = bus_index_.at(br.from_bus);
    const int j = bus_index_.at(br.to_bus);
    const double b = susceptance_[l];
    if (i != slack_index_) lap.emplace_back(red(i), red(i), b);
    if (j != slack_index_) lap.emplace_back(red(j), red(j), b);
    if (i != slack_index_ && j != slack_index_) {
      lap.emplace_back(red(i), red(j), -b);
      lap.emplace_back(red(j), red(i), -b);
    }
  }
  Eigen::SparseMatrix<double> L(nb - 1, nb - 1);
  L.setFromTriplets(lap.begin(), lap.end());
  L.makeCompressed();

  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  ldlt_->compute(L);
  if (ldlt_->info() != Eigen::Success) {
    ldlt_.reset();
    lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(L);
    if (lu_->info() != Eigen::Success) {
      throw ValidationError("reduced susceptance matrix is singular");
    }
  }
}

int DcSystem::bus_index(int bus_id) const {
  auto it = bus_index_.find(bus_id);
  if (it == bus_index_.end()) throw ValidationError("unknown bus id " + std::to_string(bus_id));
  return it->second;
}

Eigen::VectorXd DcSystem::solve_angles(const Eigen::VectorXd& injections) const {
  const int nb = num_buses();
  if (injections.size() != nb) throw ValidationError("injection vector has wrong dimension");
  Eigen::VectorXd rhs(nb - 1);
  for (int i = 0, r = 0; i < nb; ++i) {
    if (i != slack_index_) rhs[r++] = injections[i];
  }
  Eigen::VectorXd red;
  if (ldlt_) {
    red = ldlt_->solve(rhs);
  } else {
    red = lu_->solve(rhs);
  }
  Eigen::VectorXd theta(nb);
  for (int i = 0, r = 0; i < nb; ++i) {
    theta[i] = (i == slack_index_) ? 0.0 : red[r++];
  }
  return theta;
}

DcSystem build_dc(const Network& network) { return DcSystem(network); }

PtdfMatrix build_ptdf(const DcSystem& dc) {
  const int nb = dc.num_buses();
  const int nl = dc.num_branches();
  PtdfMatrix m;
  m.slack_bus = dc.slack_bus_id();
  m.bus_ids = dc.bus_ids();
  m.entries.setZero(nl, nb);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(nb);
  for (int k = 0; k < nb; ++k) {
    if (k == dc.slack_index()) continue;  // slack column stays zero
    e[k] = 1.0;
    Eigen::VectorXd theta = dc.solve_angles(e);
    m.entries.col(k) = dc.susceptances().asDiagonal() * (dc.incidence() * theta);
    e[k] = 0.0;
  }
  return m;
}

Eigen::VectorXd line_flows(const DcSystem& dc, const Eigen::VectorXd& theta) {
  if (theta.size() != dc.num_buses()) throw ValidationError("theta vector has wrong dimension");
  return dc.susceptances().asDiagonal() * (dc.incidence() * theta);
}

Eigen::VectorXd line_flows_ptdf(const PtdfMatrix& ptdf, const Eigen::VectorXd& injections) {
  if (injections.size() != ptdf.entries.cols()) {
    throw ValidationError("injection vector has wrong dimension");
  }
  if (std::abs(injections.sum()) > 1e-9) {
    throw ValidationError("injections do not balance (sum " + format_double(injections.sum()) +
                          ")");
  }
  return ptdf.entries * injections;
}

Eigen::VectorXd net_injections(const DcSystem& dc, const Eigen::VectorXd& gen_p,
                               const Eigen::VectorXd& demand) {
  Eigen::VectorXd inj = -demand;
  for (size_t g = 0; g < dc.gen_bus().size(); ++g) inj[dc.gen_bus()[g]] += gen_p[g];
  return inj;
}

}  // namespace gridscreen
