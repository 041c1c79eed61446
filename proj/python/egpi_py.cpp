#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "egpi/envelope.hpp"
#include "egpi/error.hpp"
#include "egpi/fitting.hpp"
#include "egpi/io.hpp"
#include "egpi/metrics.hpp"
#include "egpi/model.hpp"
#include "egpi/operators.hpp"
#include "egpi/signals.hpp"

namespace py = pybind11;
using namespace egpi;

namespace {

py::array_t<double> to_array(const std::vector<double>& v)
{
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

Trajectory make_trajectory(std::vector<double> t, std::vector<double> v,
                           std::optional<std::vector<double>> theta)
{
    Trajectory tr{std::move(t), std::move(v), std::move(theta), std::nullopt};
    tr.validate();
    return tr;
}

// Models are not default-constructible, so std::variant is converted by hand.
HysteresisModel to_model(const py::object& obj)
{
    if (py::isinstance<GpiModel>(obj)) {
        return obj.cast<GpiModel>();
    }
    if (py::isinstance<EgpiModel>(obj)) {
        return obj.cast<EgpiModel>();
    }
    throw py::type_error("expected GpiModel or EgpiModel");
}

py::object from_model(const HysteresisModel& model)
{
    return std::visit([](const auto& m) { return py::cast(m); }, model);
}

py::dict trace_dict(const EgpiTrace& tr)
{
    py::dict d;
    d["z"] = to_array(tr.z);
    d["z1"] = to_array(tr.z1);
    d["z2"] = to_array(tr.z2);
    d["active"] = py::array_t<int>(static_cast<py::ssize_t>(tr.active.size()), tr.active.data());
    return d;
}

}  // namespace

PYBIND11_MODULE(_egpi, m)
{
    m.doc() = "Generalized and extended Prandtl-Ishlinskii hysteresis models";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", error);
    py::register_exception<RangeError>(m, "RangeError", error);
    py::register_exception<ConfigError>(m, "ConfigError", error);
    auto input_error = py::register_exception<InputError>(m, "InputError", error);
    py::register_exception<ParseError>(m, "ParseError", input_error);
    py::register_exception<StateError>(m, "StateError", error);
    py::register_exception<ParameterError>(m, "ParameterError", error);
    auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error);
    py::register_exception<LmFailure>(m, "LmFailure", numerical);
    py::register_exception<DetectionError>(m, "DetectionError", error);
    py::register_exception<InitializationError>(m, "InitializationError", error);
    py::register_exception<NrmseUndefinedError>(m, "NrmseUndefinedError", error);

    // Envelopes --------------------------------------------------------------

    py::enum_<EnvelopeFamily>(m, "EnvelopeFamily")
        .value("Linear", EnvelopeFamily::Linear)
        .value("Tanh", EnvelopeFamily::Tanh);

    py::class_<Envelope>(m, "Envelope")
        .def_static("linear", &Envelope::linear, py::arg("slope"), py::arg("intercept"))
        .def_static("tanh", &Envelope::tanh, py::arg("amplitude"), py::arg("gain"),
                    py::arg("shift"), py::arg("offset"))
        .def_static("identity", &Envelope::identity)
        .def_property_readonly("family", &Envelope::family)
        .def("eval", &Envelope::eval, py::arg("v"))
        .def("__call__", &Envelope::eval, py::arg("v"))
        .def("inverse", &Envelope::inverse, py::arg("y"))
        .def("derivative", &Envelope::derivative, py::arg("v"))
        .def("to_json", [](const Envelope& e) { return io::envelope_to_json(e).dump(); })
        .def(py::self == py::self);

    m.def("lipschitz_check", &lipschitz_check, py::arg("env"), py::arg("lo"), py::arg("hi"),
          py::arg("grid"));

    // Operators ---------------------------------------------------------------

    py::class_<DensitySpec>(m, "DensitySpec")
        .def(py::init([](double lambda, double sigma, double r1, double rn, std::size_t n) {
                 DensitySpec d{lambda, sigma, r1, rn, n};
                 d.validate();
                 return d;
             }),
             py::arg("lambda_") = 0.07, py::arg("sigma") = 0.1, py::arg("r1") = 0.25,
             py::arg("rn") = 7.25, py::arg("n") = 30)
        .def_readwrite("lambda_", &DensitySpec::lambda)
        .def_readwrite("sigma", &DensitySpec::sigma)
        .def_readwrite("r1", &DensitySpec::r1)
        .def_readwrite("rn", &DensitySpec::rn)
        .def_readwrite("n", &DensitySpec::n);

    m.def("thresholds", &thresholds, py::arg("density"));
    m.def("weights", &weights, py::arg("density"));

    py::class_<GpiModel>(m, "GpiModel")
        .def(py::init<const DensitySpec&, Envelope, Envelope, double, double>(), py::arg("density"),
             py::arg("asc_env"), py::arg("desc_env"), py::arg("kappa_asc") = 1.0,
             py::arg("kappa_desc") = 1.0)
        .def(py::init<std::vector<double>, std::vector<double>, Envelope, Envelope, double, double>(),
             py::arg("thresholds"), py::arg("weights"), py::arg("asc_env"), py::arg("desc_env"),
             py::arg("kappa_asc") = 1.0, py::arg("kappa_desc") = 1.0)
        .def_property_readonly("thresholds", [](const GpiModel& g) {
            return std::vector<double>(g.thresholds().begin(), g.thresholds().end());
        })
        .def_property_readonly("weights", [](const GpiModel& g) {
            return std::vector<double>(g.weights().begin(), g.weights().end());
        })
        .def_property_readonly("memories", [](const GpiModel& g) {
            return std::vector<double>(g.memories().begin(), g.memories().end());
        })
        .def_property_readonly("kappa_asc", &GpiModel::kappa_asc)
        .def_property_readonly("kappa_desc", &GpiModel::kappa_desc)
        .def("reset", &GpiModel::reset, py::arg("v0"), py::arg("w_init") = 0.0)
        .def("step", &GpiModel::step, py::arg("v_prev"), py::arg("v_curr"))
        .def("output", &GpiModel::output)
        .def("__len__", &GpiModel::size);

    py::enum_<SwitchMode>(m, "SwitchMode")
        .value("TwoFlag", SwitchMode::TwoFlag)
        .value("DescendOnlyFlag", SwitchMode::DescendOnlyFlag);

    py::class_<EgpiModel>(m, "EgpiModel")
        .def(py::init([](GpiModel first, GpiModel second, SwitchMode mode,
                         std::optional<double> v_f_asc, std::optional<double> v_f_desc) {
                 return EgpiModel(std::move(first), std::move(second), mode,
                                  FlagPoints{v_f_asc, v_f_desc});
             }),
             py::arg("first"), py::arg("second"), py::arg("mode"), py::arg("v_f_asc") = py::none(),
             py::arg("v_f_desc") = py::none())
        .def_property_readonly("first", &EgpiModel::first)
        .def_property_readonly("second", &EgpiModel::second)
        .def_property_readonly("mode", &EgpiModel::mode)
        .def_property_readonly("v_f_asc", [](const EgpiModel& e) { return e.flags().ascending; })
        .def_property_readonly("v_f_desc", [](const EgpiModel& e) { return e.flags().descending; });

    m.def(
        "gpi_eval",
        [](GpiModel model, std::vector<double> t, std::vector<double> v, double w_init) {
            return to_array(gpi_eval(model, make_trajectory(std::move(t), std::move(v), std::nullopt), w_init));
        },
        py::arg("model"), py::arg("t"), py::arg("v"), py::arg("w_init") = 0.0,
        "Outputs of a fresh copy of the model over (t, v).");
    m.def(
        "egpi_eval",
        [](EgpiModel model, std::vector<double> t, std::vector<double> v, double w_init) {
            return trace_dict(egpi_eval(model, make_trajectory(std::move(t), std::move(v), std::nullopt), w_init));
        },
        py::arg("model"), py::arg("t"), py::arg("v"), py::arg("w_init") = 0.0,
        "Dict with z, z1, z2 and active for a fresh copy of the model.");

    // Trajectories and signals -------------------------------------------------

    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init(&make_trajectory), py::arg("t"), py::arg("v"), py::arg("theta") = py::none())
        .def_property_readonly("t", [](const Trajectory& tr) { return to_array(tr.t); })
        .def_property_readonly("v", [](const Trajectory& tr) { return to_array(tr.v); })
        .def_property_readonly("theta", [](const Trajectory& tr) -> py::object {
            return tr.theta ? py::object(to_array(*tr.theta)) : py::none();
        })
        .def("__len__", &Trajectory::size)
        .def("absolute", &Trajectory::absolute);

    m.def("decaying_sinusoid", &decaying_sinusoid, py::arg("t_start") = 0.0, py::arg("t_end") = 10.0,
          py::arg("dt") = 0.001);
    m.def("decaying_sinusoid_value", &decaying_sinusoid_value, py::arg("t"));
    m.def("rise_fall_sweep", &rise_fall_sweep, py::arg("v_lo"), py::arg("v_hi"), py::arg("samples"),
          py::arg("duration") = 10.0);
    m.def("staircase", &staircase, py::arg("levels"), py::arg("rate"), py::arg("dwell"), py::arg("dt"));
    m.def("default_flag_eps", &default_flag_eps, py::arg("traj"));
    m.def("detect_flag_point", &detect_flag_point, py::arg("traj"), py::arg("eps"));
    m.def(
        "gen_synthetic",
        [](const py::object& model, const Trajectory& traj, double noise_std, std::uint64_t seed) {
            return gen_synthetic(to_model(model), traj, noise_std, seed);
        },
        py::arg("model"), py::arg("traj"), py::arg("noise_std"), py::arg("seed"));
    m.def(
        "evaluate",
        [](const py::object& obj, const Trajectory& traj) {
            HysteresisModel model = to_model(obj);
            return trace_dict(evaluate(model, traj));
        },
        py::arg("model"), py::arg("traj"));

    // Metrics ----------------------------------------------------------------

    py::class_<Metrics>(m, "Metrics", "Fit quality; mae is the MAXIMUM absolute error.")
        .def_readonly("rmse", &Metrics::rmse)
        .def_readonly("nrmse", &Metrics::nrmse)
        .def_readonly("mae", &Metrics::mae)
        .def_readonly("n", &Metrics::n)
        .def("__repr__", [](const Metrics& x) { return "Metrics(" + io::metrics_to_json(x).dump() + ")"; });

    m.def(
        "compute_metrics",
        [](const std::vector<double>& measured, const std::vector<double>& predicted) {
            return compute_metrics(measured, predicted);
        },
        py::arg("measured"), py::arg("predicted"));

    // Fitting ----------------------------------------------------------------

    py::enum_<FitMode>(m, "FitMode")
        .value("EgpiDescendFlag", FitMode::EgpiDescendFlag)
        .value("Gpi", FitMode::Gpi);

    py::class_<FitParams>(m, "FitParams")
        .def(py::init<>())
        .def_readwrite("a1", &FitParams::a1)
        .def_readwrite("a2", &FitParams::a2)
        .def_readwrite("a3", &FitParams::a3)
        .def_readwrite("a4", &FitParams::a4)
        .def_readwrite("a5", &FitParams::a5)
        .def_readwrite("a6", &FitParams::a6)
        .def_readwrite("lambda_", &FitParams::lambda)
        .def_readwrite("sigma", &FitParams::sigma)
        .def_readwrite("r1", &FitParams::r1)
        .def_readwrite("rn", &FitParams::rn)
        .def_readwrite("kappa", &FitParams::kappa)
        .def("pack", &FitParams::pack, py::arg("mode"))
        .def_static("unpack",
                    [](FitMode mode, const std::vector<double>& v) { return FitParams::unpack(mode, v); },
                    py::arg("mode"), py::arg("values"))
        .def_static("names", &FitParams::names, py::arg("mode"))
        .def("within_bounds", &FitParams::within_bounds, py::arg("mode"))
        .def("projected", &FitParams::projected, py::arg("mode"))
        .def(py::self == py::self);

    py::class_<FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("max_iterations", &FitConfig::max_iterations)
        .def_readwrite("initial_damping", &FitConfig::initial_damping)
        .def_readwrite("damping_up", &FitConfig::damping_up)
        .def_readwrite("damping_down", &FitConfig::damping_down)
        .def_readwrite("rel_loss_tol", &FitConfig::rel_loss_tol)
        .def_readwrite("grad_tol", &FitConfig::grad_tol)
        .def_readwrite("fd_step", &FitConfig::fd_step)
        .def_readwrite("n", &FitConfig::n)
        .def_readwrite("flag_point", &FitConfig::flag_point)
        .def_readwrite("initial", &FitConfig::initial);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("mode", &FitResult::mode)
        .def_readonly("params", &FitResult::params)
        .def_readonly("flag_point", &FitResult::flag_point)
        .def_readonly("n", &FitResult::n)
        .def_readonly("loss_trace", &FitResult::loss_trace)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("reason", &FitResult::reason)
        .def_readonly("metrics", &FitResult::metrics)
        .def_property_readonly("loss", &FitResult::loss)
        .def("model", [](const FitResult& r) { return from_model(r.model()); });

    m.def(
        "build_model",
        [](const FitParams& p, FitMode mode, double v_f, std::size_t n) {
            return from_model(build_model(p, mode, v_f, n));
        },
        py::arg("params"), py::arg("mode"), py::arg("v_f"),
          py::arg("n") = 30);
    m.def(
        "residuals",
        [](const FitParams& p, const Trajectory& tr, double v_f, FitMode mode, std::size_t n) {
            return to_array(residuals(p, tr, v_f, mode, n));
        },
        py::arg("params"), py::arg("traj"), py::arg("v_f"), py::arg("mode"), py::arg("n") = 30);
    m.def("objective", &objective, py::arg("params"), py::arg("traj"), py::arg("v_f"), py::arg("mode"),
          py::arg("n") = 30);
    m.def("default_initial_guess", &default_initial_guess, py::arg("traj"), py::arg("v_f"),
          py::arg("mode") = FitMode::EgpiDescendFlag);
    m.def("lm_fit", &lm_fit, py::arg("traj"), py::arg("config"), py::arg("mode"),
          py::call_guard<py::gil_scoped_release>());

    // Files ------------------------------------------------------------------

    m.def("load_dataset", &io::load_dataset, py::arg("path"));
    m.def("save_dataset", &io::save_dataset, py::arg("path"), py::arg("traj"));
    m.def("reference_model", &io::reference_model);
    m.def(
        "load_model", [](const std::filesystem::path& p) { return from_model(io::load_model(p).model); },
        py::arg("path"));
    m.def(
        "save_model",
        [](const std::filesystem::path& p, const py::object& model, const std::string& source) {
            io::ModelMeta meta;
            meta.source = source;
            io::save_model(p, io::ModelFile{to_model(model), Units{}, meta});
        },
        py::arg("path"), py::arg("model"), py::arg("source") = "");
    m.def(
        "model_to_json",
        [](const py::object& model) {
            return io::model_to_json(io::ModelFile{to_model(model), Units{}, io::ModelMeta{}}).dump(2);
        },
        py::arg("model"));

    m.attr("__version__") = std::string(io::kToolVersion);
}
