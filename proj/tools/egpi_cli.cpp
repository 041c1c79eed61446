// Batch command-line front end: simulate, generate, fit, evaluate, fit-all, report.

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "egpi/error.hpp"
#include "egpi/fitting.hpp"
#include "egpi/io.hpp"
#include "egpi/metrics.hpp"
#include "egpi/signals.hpp"

namespace fs = std::filesystem;
using namespace egpi;

namespace {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kInput = 2,
    kNumerical = 3,
    kDetection = 4,
    kUnsuitableData = 5,
};

/// Dataset parsed fine but lacks what the command needs (e.g. no theta column).
class UnsuitableData : public InputError {
public:
    using InputError::InputError;
};

/// Input source options shared by simulate and generate.
struct SignalOptions {
    std::string input_csv;
    std::string signal = "sinusoid";
    double t0 = 0.0;
    double t1 = 10.0;
    double dt = 0.001;
    double v_lo = 0.0;
    double v_hi = 10.0;
    std::size_t samples = 5000;
    double duration = 10.0;
    std::vector<double> levels;
    double rate = 1.0;
    double dwell = 0.5;
};

void add_signal_options(CLI::App* cmd, SignalOptions& o)
{
    cmd->add_option("--input", o.input_csv, "Dataset CSV supplying t,v (overrides --signal)");
    cmd->add_option("--signal", o.signal, "Built-in input: sinusoid | sweep | staircase")
        ->check(CLI::IsMember({"sinusoid", "sweep", "staircase"}));
    cmd->add_option("--t0", o.t0, "Sinusoid start time [s]");
    cmd->add_option("--t1", o.t1, "Sinusoid end time [s]");
    cmd->add_option("--dt", o.dt, "Sampling step [s] (sinusoid, staircase)");
    cmd->add_option("--v-lo", o.v_lo, "Sweep lower input");
    cmd->add_option("--v-hi", o.v_hi, "Sweep upper input");
    cmd->add_option("--samples", o.samples, "Sweep sample count");
    cmd->add_option("--duration", o.duration, "Sweep duration [s]");
    cmd->add_option("--levels", o.levels, "Staircase levels")->delimiter(',');
    cmd->add_option("--rate", o.rate, "Staircase ramp rate [input/s]");
    cmd->add_option("--dwell", o.dwell, "Staircase dwell [s]");
}

Trajectory make_signal(const SignalOptions& o)
{
    if (!o.input_csv.empty()) {
        Trajectory traj = io::load_dataset(o.input_csv);
        traj.theta.reset();
        return traj;
    }
    if (o.signal == "sweep") {
        return rise_fall_sweep(o.v_lo, o.v_hi, o.samples, o.duration);
    }
    if (o.signal == "staircase") {
        return staircase(o.levels, o.rate, o.dwell, o.dt);
    }
    return decaying_sinusoid(o.t0, o.t1, o.dt);
}

void print_metrics(std::ostream& os, const std::string& label, const Metrics& m)
{
    os << label << ": RMSE=" << io::format_double(m.rmse) << "  NRMSE="
       << (m.nrmse ? io::format_double(*m.nrmse) + "%" : std::string("n/a"))
       << "  MAE(max)=" << io::format_double(m.mae) << "  N=" << m.n << '\n';
}

std::string model_label(FitMode mode)
{
    return mode == FitMode::Gpi ? "GPI" : "EGPI";
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
    bool reference = false;
    std::string model;
    std::string out;
    SignalOptions signal;
};

int run_simulate(const SimulateOptions& o)
{
    if (o.reference == !o.model.empty()) {
        throw ConfigError("simulate: pass exactly one of --reference or --model");
    }
    HysteresisModel model = o.reference ? HysteresisModel{io::reference_model()}
                                        : io::load_model(o.model).model;
    const Trajectory input = make_signal(o.signal);
    const EgpiTrace trace = evaluate(model, input);

    std::string csv = "t,v,z,z1,z2,active\n";
    for (std::size_t i = 0; i < input.size(); ++i) {
        csv += io::format_double(input.t[i]) + "," + io::format_double(input.v[i]) + "," +
               io::format_double(trace.z[i]) + "," + io::format_double(trace.z1[i]) + "," +
               io::format_double(trace.z2[i]) + "," + std::to_string(trace.active[i]) + "\n";
    }
    io::write_file_atomic(o.out, csv);
    std::cout << "wrote " << input.size() << " samples to " << o.out << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateOptions {
    std::string model;
    std::string out;
    double noise = 0.0;
    std::uint64_t seed = 0;
    SignalOptions signal;
};

int run_generate(const GenerateOptions& o)
{
    const io::ModelFile file = io::load_model(o.model);
    Trajectory data = gen_synthetic(file.model, make_signal(o.signal), o.noise, o.seed);
    data.units = file.units;
    io::save_dataset(o.out, data);
    std::cout << "wrote " << data.size() << " samples to " << o.out << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOptions {
    std::string data;
    std::string mode = "egpi";
    std::string config;
    std::optional<double> flag_point;
    std::optional<double> flag_eps;
    std::optional<std::size_t> n;
    std::optional<std::size_t> max_iterations;
    bool absolute = false;
    std::string out_result;
    std::string out_model;
    std::string created;
};

struct FitOutcome {
    std::string dataset;
    FitResult result;
    io::ModelFile model;
};

FitOutcome fit_dataset(const std::string& path, FitMode mode, const FitOptions& o)
{
    Trajectory traj = io::load_dataset(path);
    if (!traj.has_theta()) {
        throw UnsuitableData("dataset '" + path + "' has no theta column; fitting needs measured output");
    }
    if (o.absolute) {
        traj = traj.absolute();
    }

    FitConfig config;
    if (!o.config.empty()) {
        config = io::fit_config_from_json(io::read_json_file(o.config), mode);
    }
    if (o.flag_point) {
        config.flag_point = o.flag_point;
    }
    if (o.n) {
        config.n = *o.n;
    }
    if (o.max_iterations) {
        config.max_iterations = *o.max_iterations;
    }
    if (mode == FitMode::EgpiDescendFlag && !config.flag_point) {
        const double eps = o.flag_eps.value_or(default_flag_eps(traj));
        config.flag_point = detect_flag_point(traj, eps);
    }

    FitOutcome out{path, lm_fit(traj, config, mode),
                   io::ModelFile{GpiModel(DensitySpec{}, Envelope::identity(), Envelope::identity()),
                                 traj.units.value_or(Units{}),
                                 {o.created, std::string(io::kToolVersion), path}}};
    out.model.model = out.result.model();
    return out;
}

int run_fit(const FitOptions& o)
{
    const FitMode mode = fit_mode_from_string(o.mode);
    const FitOutcome fit = fit_dataset(o.data, mode, o);
    if (!o.out_model.empty()) {
        io::save_model(o.out_model, fit.model);
    }
    if (!o.out_result.empty()) {
        io::write_file_atomic(o.out_result,
                              io::fit_result_to_json(fit.result, fit.model, o.data).dump(2) + "\n");
    }
    std::cout << model_label(mode) << " fit of " << o.data << ": " << fit.result.iterations
              << " iterations, " << (fit.result.converged ? "converged" : "not converged") << " ("
              << fit.result.reason << "), loss " << io::format_double(fit.result.loss()) << '\n';
    if (mode == FitMode::EgpiDescendFlag) {
        std::cout << "flag point v_f = " << io::format_double(fit.result.flag_point) << '\n';
    }
    print_metrics(std::cout, model_label(mode), fit.result.metrics);
    return kOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
    std::string data;
    std::string model;
    std::string out;
    std::string metrics_out;
    bool absolute = false;
};

int run_evaluate(const EvaluateOptions& o)
{
    Trajectory traj = io::load_dataset(o.data);
    if (!traj.has_theta()) {
        throw UnsuitableData("dataset '" + o.data + "' has no theta column; evaluation needs measured output");
    }
    if (o.absolute) {
        traj = traj.absolute();
    }
    io::ModelFile file = io::load_model(o.model);
    if (traj.units && *traj.units != file.units) {
        std::cerr << "warning: dataset units (" << traj.units->input << ", " << traj.units->output
                  << ") differ from model units (" << file.units.input << ", " << file.units.output
                  << ")\n";
    }
    const EgpiTrace trace = evaluate(file.model, traj);
    const auto& theta = *traj.theta;
    const Metrics m = compute_metrics(theta, trace.z);

    if (!o.out.empty()) {
        std::string csv = "t,v,theta,theta_hat,error\n";
        for (std::size_t i = 0; i < traj.size(); ++i) {
            csv += io::format_double(traj.t[i]) + "," + io::format_double(traj.v[i]) + "," +
                   io::format_double(theta[i]) + "," + io::format_double(trace.z[i]) + "," +
                   io::format_double(trace.z[i] - theta[i]) + "\n";
        }
        io::write_file_atomic(o.out, csv);
    }
    if (!o.metrics_out.empty()) {
        io::write_file_atomic(o.metrics_out, io::metrics_to_json(m).dump(2) + "\n");
    }
    print_metrics(std::cout, "evaluate", m);
    return kOk;
}

// ---------------------------------------------------------------------------
// fit-all / report
// ---------------------------------------------------------------------------

struct FitAllOptions {
    FitOptions fit;
    std::vector<std::string> data;
    std::string out_dir = ".";
    std::string report;
};

int write_report(const std::vector<io::ReportRow>& rows, const std::string& path)
{
    std::cout << io::report_to_text(rows);
    if (path.empty()) {
        return kOk;
    }
    if (fs::path(path).extension() == ".json") {
        io::write_file_atomic(path, io::report_to_json(rows).dump(2) + "\n");
    }
    else {
        io::write_file_atomic(path, io::report_to_csv(rows));
    }
    return kOk;
}

int run_fit_all(const FitAllOptions& o)
{
    fs::create_directories(o.out_dir);
    std::vector<std::future<FitOutcome>> jobs;
    for (const auto& path : o.data) {
        for (FitMode mode : {FitMode::EgpiDescendFlag, FitMode::Gpi}) {
            jobs.push_back(std::async(std::launch::async, [path, mode, &o] {
                return fit_dataset(path, mode, o.fit);
            }));
        }
    }

    std::vector<io::ReportRow> rows;
    for (auto& job : jobs) {
        FitOutcome fit = job.get();
        const std::string stem = fs::path(fit.dataset).stem().string();
        const std::string tag = fit.result.mode == FitMode::Gpi ? "gpi" : "egpi";
        const fs::path base = fs::path(o.out_dir) / (stem + "." + tag);
        io::save_model(base.string() + ".model.json", fit.model);
        io::write_file_atomic(base.string() + ".result.json",
                              io::fit_result_to_json(fit.result, fit.model, fit.dataset).dump(2) + "\n");
        rows.push_back({stem, model_label(fit.result.mode), fit.result.metrics});
    }
    return write_report(rows, o.report);
}

struct ReportOptions {
    std::vector<std::string> results;
    std::string out;
};

int run_report(const ReportOptions& o)
{
    std::vector<io::ReportRow> rows;
    for (const auto& path : o.results) {
        const io::json j = io::read_json_file(path);
        const FitResult r = io::fit_result_from_json(j);
        const std::string dataset = j.value("dataset", path);
        rows.push_back({fs::path(dataset).stem().string(), model_label(r.mode), r.metrics});
    }
    return write_report(rows, o.out);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"EGPI/GPI hysteresis modeling and identification"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Run a model over an input and write t,v,z,z1,z2,active");
    simulate->add_flag("--reference", sim.reference, "Use the built-in two-flag tanh reference model");
    simulate->add_option("--model", sim.model, "Model parameter JSON");
    simulate->add_option("--out", sim.out, "Output CSV")->required();
    add_signal_options(simulate, sim.signal);

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "Write a synthetic t,v,theta dataset from a model");
    generate->add_option("--model", gen.model, "Model parameter JSON")->required();
    generate->add_option("--noise", gen.noise, "Gaussian noise standard deviation [deg]");
    generate->add_option("--seed", gen.seed, "Noise seed");
    generate->add_option("--out", gen.out, "Output dataset CSV")->required();
    add_signal_options(generate, gen.signal);

    const auto add_fit_options = [](CLI::App* cmd, FitOptions& f) {
        cmd->add_option("--mode", f.mode, "egpi | gpi")->check(CLI::IsMember({"egpi", "gpi"}));
        cmd->add_option("--config", f.config, "Fit configuration JSON");
        cmd->add_option("--flag-point", f.flag_point, "Flag point v_f (skips detection)");
        cmd->add_option("--flag-eps", f.flag_eps, "Rate threshold for flag detection");
        cmd->add_option("--n", f.n, "Number of nonzero thresholds");
        cmd->add_option("--max-iterations", f.max_iterations, "LM iteration cap");
        cmd->add_flag("--absolute", f.absolute, "Fit |v| against |theta|");
        cmd->add_option("--created", f.created, "Text stored in the model meta.created field");
    };

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "Identify model parameters from a dataset");
    fit_cmd->add_option("--data", fit.data, "Dataset CSV with theta")->required();
    add_fit_options(fit_cmd, fit);
    fit_cmd->add_option("--out-result", fit.out_result, "FitResult JSON");
    fit_cmd->add_option("--out-model", fit.out_model, "Fitted model parameter JSON");

    EvaluateOptions ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a model against a dataset");
    evaluate_cmd->add_option("--data", ev.data, "Dataset CSV with theta")->required();
    evaluate_cmd->add_option("--model", ev.model, "Model parameter JSON")->required();
    evaluate_cmd->add_option("--out", ev.out, "Prediction CSV t,v,theta,theta_hat,error");
    evaluate_cmd->add_option("--metrics-out", ev.metrics_out, "Metrics JSON");
    evaluate_cmd->add_flag("--absolute", ev.absolute, "Evaluate on |v| and |theta|");

    FitAllOptions all;
    auto* fit_all = app.add_subcommand("fit-all", "Fit EGPI and GPI to several datasets concurrently");
    fit_all->add_option("--data", all.data, "Dataset CSVs")->required()->expected(1, -1);
    add_fit_options(fit_all, all.fit);
    fit_all->add_option("--out-dir", all.out_dir, "Directory for results and models");
    fit_all->add_option("--report", all.report, "Report file (.csv or .json)");

    ReportOptions rep;
    auto* report = app.add_subcommand("report", "Tabulate metrics from FitResult files");
    report->add_option("--result", rep.results, "FitResult JSON files")->required()->expected(1, -1);
    report->add_option("--out", rep.out, "Report file (.csv or .json)");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*generate) return run_generate(gen);
        if (*fit_cmd) return run_fit(fit);
        if (*evaluate_cmd) return run_evaluate(ev);
        if (*fit_all) return run_fit_all(all);
        if (*report) return run_report(rep);
    }
    catch (const DetectionError& e) {
        std::cerr << "error: " << e.what() << "\n       pass --flag-point to set v_f explicitly\n";
        return kDetection;
    }
    catch (const LmFailure& e) {
        std::cerr << "error: " << e.what() << "\nloss trace:";
        for (double l : e.loss_trace()) {
            std::cerr << ' ' << io::format_double(l);
        }
        std::cerr << '\n';
        return kNumerical;
    }
    catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
    catch (const UnsuitableData& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUnsuitableData;
    }
    catch (const InitializationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUnsuitableData;
    }
    catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    }
    return kUsage;
}
