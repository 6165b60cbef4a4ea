#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gridscreen/cli.hpp"
#include "gridscreen/opfsolve.hpp"
#include "gridscreen/screening.hpp"

namespace py = pybind11;
using namespace gridscreen;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transmission-constraint screening for DC OPF and unit commitment";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::enum_<BoundSide>(m, "BoundSide")
      .value("UPPER", BoundSide::Upper)
      .value("LOWER", BoundSide::Lower);
  py::enum_<Verdict>(m, "Verdict")
      .value("REDUNDANT_PARALLEL", Verdict::RedundantParallel)
      .value("REDUNDANT_OPT", Verdict::RedundantOpt)
      .value("NON_REDUNDANT", Verdict::NonRedundant);
  py::enum_<OpfForm>(m, "OpfForm").value("THETA", OpfForm::Theta).value("PTDF", OpfForm::Ptdf);
  py::enum_<SolveStatus>(m, "SolveStatus")
      .value("OPTIMAL", SolveStatus::Optimal)
      .value("INFEASIBLE", SolveStatus::Infeasible);

  py::class_<Bus>(m, "Bus")
      .def_readonly("id", &Bus::id)
      .def_readonly("d_nom", &Bus::d_nom);
  py::class_<Generator>(m, "Generator")
      .def_readonly("bus", &Generator::bus)
      .def_readonly("p_min", &Generator::p_min)
      .def_readonly("p_max", &Generator::p_max)
      .def_readonly("c0", &Generator::c0)
      .def_readonly("c1", &Generator::c1)
      .def_readonly("c2", &Generator::c2);
  py::class_<Branch>(m, "Branch")
      .def_readonly("id", &Branch::id)
      .def_readonly("from_bus", &Branch::from_bus)
      .def_readonly("to_bus", &Branch::to_bus)
      .def_readonly("b", &Branch::b)
      .def_readonly("f_max", &Branch::f_max)
      .def("rated", &Branch::rated);
  py::class_<Network>(m, "Network")
      .def_readonly("base_mva", &Network::base_mva)
      .def_readonly("buses", &Network::buses)
      .def_readonly("generators", &Network::generators)
      .def_readonly("branches", &Network::branches)
      .def_readonly("slack_bus", &Network::slack_bus)
      .def("nominal_load",
           [](const Network& n) {
             Eigen::VectorXd d(n.buses.size());
             for (size_t i = 0; i < n.buses.size(); ++i) d[i] = n.buses[i].d_nom;
             return d;
           })
      .def("to_json", &network_to_json);

  py::class_<FlowBound>(m, "FlowBound")
      .def(py::init<int, BoundSide>(), py::arg("branch_id"), py::arg("side"))
      .def_readonly("branch_id", &FlowBound::branch_id)
      .def_readonly("side", &FlowBound::side)
      .def("__eq__", [](const FlowBound& a, const FlowBound& b) { return a == b; })
      .def("__hash__",
           [](const FlowBound& b) { return b.branch_id * 2 + (b.side == BoundSide::Lower); })
      .def("__repr__", [](const FlowBound& b) {
        return "FlowBound(" + std::to_string(b.branch_id) + ", " + to_string(b.side) + ")";
      });

  m.def("parse_matpower", &parse_matpower, py::arg("text"));
  m.def("load_case", &load_case, py::arg("path"));
  m.def("apply_pmin_floor", &apply_pmin_floor, py::arg("network"), py::arg("fraction"));
  m.def("enumerate_flow_bounds", &enumerate_flow_bounds, py::arg("network"));
  m.def("network_from_json", &network_from_json, py::arg("text"));

  py::class_<DcSystem>(m, "DcSystem")
      .def(py::init<const Network&>())
      .def_property_readonly("num_buses", &DcSystem::num_buses)
      .def_property_readonly("num_branches", &DcSystem::num_branches)
      .def_property_readonly("slack_bus", &DcSystem::slack_bus_id)
      .def("solve_angles", &DcSystem::solve_angles, py::arg("injections"));
  py::class_<PtdfMatrix>(m, "PtdfMatrix")
      .def_readonly("entries", &PtdfMatrix::entries)
      .def_readonly("slack_bus", &PtdfMatrix::slack_bus)
      .def_readonly("bus_ids", &PtdfMatrix::bus_ids);
  m.def("build_dc", &build_dc, py::arg("network"));
  m.def("build_ptdf", &build_ptdf, py::arg("dc"));
  m.def("line_flows", &line_flows, py::arg("dc"), py::arg("theta"));
  m.def("line_flows_ptdf", &line_flows_ptdf, py::arg("ptdf"), py::arg("injections"));

  py::class_<BusLoadRange>(m, "BusLoadRange")
      .def_readonly("lower", &BusLoadRange::lower)
      .def_readonly("upper", &BusLoadRange::upper);
  py::class_<LoadSet>(m, "LoadSet").def_readonly("range", &LoadSet::range);
  m.def("make_load_set", &make_load_set, py::arg("network"), py::arg("v"));

  py::class_<ScreeningCertificate>(m, "ScreeningCertificate")
      .def_readonly("bound", &ScreeningCertificate::bound)
      .def_readonly("verdict", &ScreeningCertificate::verdict)
      .def_readonly("extreme_flow", &ScreeningCertificate::extreme_flow)
      .def_readonly("margin", &ScreeningCertificate::margin);
  py::class_<StepCounts>(m, "StepCounts")
      .def_readonly("parallel", &StepCounts::parallel)
      .def_readonly("optimization", &StepCounts::optimization)
      .def_readonly("remaining", &StepCounts::remaining);
  py::class_<ScreeningReport>(m, "ScreeningReport")
      .def_readonly("redundant", &ScreeningReport::redundant)
      .def_readonly("counts", &ScreeningReport::counts)
      .def_readonly("certificates", &ScreeningReport::certificates)
      .def_readonly("step1_ms", &ScreeningReport::step1_ms)
      .def_readonly("step2_ms", &ScreeningReport::step2_ms)
      .def("to_json",
           [](const ScreeningReport& r, const Network& n) { return report_to_json(r, n); });

  m.def(
      "screen_all",
      [](const Network& network, const LoadSet& loads, bool relax_pmin, int workers,
         std::optional<double> margin_epsilon) {
        ScreeningOptions opt;
        opt.relax_pmin = relax_pmin;
        opt.workers = workers;
        opt.margin_epsilon = margin_epsilon;
        py::gil_scoped_release release;
        return screen_all(network, loads, opt);
      },
      py::arg("network"), py::arg("loads"), py::arg("relax_pmin") = true, py::arg("workers") = 1,
      py::arg("margin_epsilon") = std::nullopt);
  m.def(
      "screen_bound",
      [](const Network& network, const DcSystem& dc, const LoadSet& loads, FlowBound bound,
         bool relax_pmin) { return screen_bound(network, dc, loads, bound, relax_pmin); },
      py::arg("network"), py::arg("dc"), py::arg("loads"), py::arg("bound"),
      py::arg("relax_pmin") = true);
  m.def("screen_parallel", &screen_parallel, py::arg("network"));

  py::class_<DispatchSolution>(m, "DispatchSolution")
      .def_readonly("status", &DispatchSolution::status)
      .def_readonly("p", &DispatchSolution::p)
      .def_readonly("theta", &DispatchSolution::theta)
      .def_readonly("objective", &DispatchSolution::objective)
      .def_readonly("binding", &DispatchSolution::binding)
      .def_readonly("solve_ms", &DispatchSolution::solve_ms);
  py::class_<CommitmentSolution>(m, "CommitmentSolution")
      .def_readonly("status", &CommitmentSolution::status)
      .def_readonly("z", &CommitmentSolution::z)
      .def_readonly("p", &CommitmentSolution::p)
      .def_readonly("theta", &CommitmentSolution::theta)
      .def_readonly("objective", &CommitmentSolution::objective)
      .def_readonly("nodes", &CommitmentSolution::nodes)
      .def_readonly("solve_ms", &CommitmentSolution::solve_ms);
  py::class_<ViolationReport>(m, "ViolationReport")
      .def_readonly("balance", &ViolationReport::balance)
      .def_readonly("generation", &ViolationReport::generation)
      .def_readonly("flow", &ViolationReport::flow)
      .def_readonly("branch_flows", &ViolationReport::branch_flows);

  py::class_<OpfSolver>(m, "OpfSolver")
      .def(py::init<Network, int>(), py::arg("network"), py::arg("segments") = 10)
      .def("solve_dcopf", &OpfSolver::solve_dcopf, py::arg("load"),
           py::arg("redundant") = std::vector<FlowBound>{}, py::arg("form") = OpfForm::Theta)
      .def("solve_uc", &OpfSolver::solve_uc, py::arg("load"),
           py::arg("redundant") = std::vector<FlowBound>{}, py::arg("form") = OpfForm::Theta)
      .def("brute_force_uc", &OpfSolver::brute_force_uc, py::arg("load"),
           py::arg("redundant") = std::vector<FlowBound>{}, py::arg("form") = OpfForm::Theta);

  m.def("verify_dispatch", &verify_dispatch, py::arg("network"), py::arg("dc"), py::arg("p"),
        py::arg("theta"), py::arg("load"));
  m.def("verify_commitment", &verify_commitment, py::arg("network"), py::arg("dc"), py::arg("p"),
        py::arg("z"), py::arg("theta"), py::arg("load"));
  m.def("max_violation_on", &max_violation_on, py::arg("report"), py::arg("network"),
        py::arg("bounds"));
  m.def("sample_load", &sample_load, py::arg("loads"), py::arg("seed"), py::arg("v_index"),
        py::arg("sample"));
}
