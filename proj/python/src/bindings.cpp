#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sidebandit/bandit.hpp"
#include "sidebandit/experiment.hpp"

namespace py = pybind11;
using namespace sidebandit;

PYBIND11_MODULE(_sidebandit, m) {
    m.doc() = "Contextual linear bandits with side information from partially observed offline logs.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<ArmError>(m, "ArmError", PyExc_RuntimeError);

    py::class_<DeconfounderMatrix>(m, "DeconfounderMatrix")
        .def_property_readonly("visible_dim", &DeconfounderMatrix::visible_dim)
        .def_property_readonly("dim", &DeconfounderMatrix::dim)
        .def_property_readonly("matrix", &DeconfounderMatrix::matrix)
        .def_property_readonly("pinv", &DeconfounderMatrix::pinv)
        .def_property_readonly("proj", &DeconfounderMatrix::proj)
        .def_property_readonly("kernel_basis", &DeconfounderMatrix::kernel_basis);
    m.def("build_deconfounder", &build_deconfounder, py::arg("L"), py::arg("d"), py::arg("block"));

    py::class_<ConfidenceParams>(m, "ConfidenceParams")
        .def(py::init<>())
        .def_readwrite("lambda_", &ConfidenceParams::lambda)
        .def_readwrite("delta", &ConfidenceParams::delta)
        .def_readwrite("sigma", &ConfidenceParams::sigma)
        .def_readwrite("S_x", &ConfidenceParams::S_x)
        .def_readwrite("S_w", &ConfidenceParams::S_w)
        .def_readwrite("S_xo", &ConfidenceParams::S_xo)
        .def_readwrite("S_wo", &ConfidenceParams::S_wo)
        .def_readwrite("alpha", &ConfidenceParams::alpha)
        .def_readwrite("C_B1", &ConfidenceParams::C_B1)
        .def_readwrite("C_B2", &ConfidenceParams::C_B2)
        .def_readwrite("horizon_T", &ConfidenceParams::horizon_T);

    m.def("beta_known", &beta_known, py::arg("params"), py::arg("t"), py::arg("d"), py::arg("L"), py::arg("K"));
    m.def("beta_doubling", &beta_doubling, py::arg("params"), py::arg("n"), py::arg("t"), py::arg("d"), py::arg("L"),
          py::arg("K"));
    m.def("theorem1_bound", &theorem1_bound, py::arg("params"), py::arg("T"), py::arg("d"), py::arg("L"), py::arg("K"));

    py::class_<BanditEnvironment>(m, "BanditEnvironment")
        .def_readonly("d", &BanditEnvironment::d)
        .def_readonly("K", &BanditEnvironment::K)
        .def_readonly("W", &BanditEnvironment::W)
        .def_readonly("phi", &BanditEnvironment::phi)
        .def_readonly("sigma", &BanditEnvironment::sigma);
    m.def("make_environment", &make_environment, py::arg("d"), py::arg("K"), py::arg("sigma"), py::arg("seed"),
          py::arg("phi_attempt") = 0);

    py::class_<RegretTrace>(m, "RegretTrace")
        .def_readonly("algo_id", &RegretTrace::algo_id)
        .def_readonly("seed", &RegretTrace::seed)
        .def_readonly("L", &RegretTrace::L)
        .def_readonly("actions", &RegretTrace::actions)
        .def_readonly("inst_regret", &RegretTrace::inst_regret)
        .def_readonly("cum_regret", &RegretTrace::cum_regret)
        .def_property_readonly("final_regret", &RegretTrace::final_regret);
    m.def("run_plain_oful", &run_plain_oful, py::arg("env"), py::arg("params"), py::arg("T"), py::arg("seed"));

    m.def("preset_names", &preset_names);
    m.def("preset_config", [](const std::string& name) { return config_to_json(preset_config(name)); },
          py::arg("name"), "Preset as a JSON string.");
    m.def("validate_config", [](const std::string& json) { return validate(parse_config(json)); }, py::arg("json"));
    m.def(
        "run_experiment_csv",
        [](const std::string& json) {
            const auto cfg = parse_config(json);
            ExperimentResult res;
            {
                py::gil_scoped_release release;
                res = run_experiment(cfg);
            }
            std::ostringstream out;
            write_csv(out, cfg, res);
            return out.str();
        },
        py::arg("json"), "Runs every cell of a JSON config and returns the CSV text.");
}
