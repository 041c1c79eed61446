#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "egpi/envelope.hpp"
#include "egpi/fitting.hpp"
#include "egpi/metrics.hpp"
#include "egpi/model.hpp"
#include "egpi/trajectory.hpp"

namespace egpi::io {

inline constexpr std::string_view kToolVersion = "0.1.0";

using nlohmann::json;

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

/// Write `contents` to a sibling temporary and rename it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// ---------------------------------------------------------------------------
// Dataset CSV:  [# units: input=<u>, output=<u>]  then header t,v[,theta]
// ---------------------------------------------------------------------------

Trajectory parse_dataset(std::istream& in, const std::string& source = "<stream>");
Trajectory load_dataset(const std::filesystem::path& path);
std::string format_dataset(const Trajectory& traj);
void save_dataset(const std::filesystem::path& path, const Trajectory& traj);

// ---------------------------------------------------------------------------
// Model parameter file
// ---------------------------------------------------------------------------

struct ModelMeta {
    std::string created;
    std::string tool_version = std::string(kToolVersion);
    std::string source;

    friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

struct ModelFile {
    HysteresisModel model;
    Units units;
    ModelMeta meta;
};

json envelope_to_json(const Envelope& env);
Envelope envelope_from_json(const json& j);

json model_to_json(const ModelFile& file);
/// Validates mode/flag consistency and every model invariant.
ModelFile model_from_json(const json& j);
ModelFile load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const ModelFile& file);

/// The hand-tuned two-flag configuration with tanh envelopes driven by the
/// decaying sinusoid: n=30 thresholds on [0.25, 7.25], lambda=0.07, sigma=0.1,
/// regulators 5 and 10 on the second submodel, flags 1.5 and -0.3.
EgpiModel reference_model();

// ---------------------------------------------------------------------------
// Fitting artifacts
// ---------------------------------------------------------------------------

json params_to_json(const FitParams& p, FitMode mode);
FitParams params_from_json(const json& j, FitMode mode, const FitParams& base = FitParams{});

json metrics_to_json(const Metrics& m);
Metrics metrics_from_json(const json& j);

json fit_config_to_json(const FitConfig& config);
/// Missing keys keep their defaults. "initial" is read for `mode`.
FitConfig fit_config_from_json(const json& j, FitMode mode);

json fit_result_to_json(const FitResult& result, const ModelFile& model, const std::string& dataset);
FitResult fit_result_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Report table: one row per (dataset, model)
// ---------------------------------------------------------------------------

struct ReportRow {
    std::string dataset;
    std::string model;
    Metrics metrics;
};

json report_to_json(const std::vector<ReportRow>& rows);
std::string report_to_csv(const std::vector<ReportRow>& rows);
/// Plain-text table: dataset rows, {RMSE, NRMSE, MAE} for each model kind.
std::string report_to_text(const std::vector<ReportRow>& rows);

}  // namespace egpi::io
