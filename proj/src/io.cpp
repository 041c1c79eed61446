#include "egpi/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <system_error>

#include "egpi/error.hpp"

namespace egpi::io {

namespace fs = std::filesystem;

std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const fs::path& path, std::string_view contents)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InputError("cannot open '" + tmp.string() + "' for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            throw InputError("write failed for '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw InputError("cannot rename onto '" + path.string() + "': " + ec.message());
    }
}

// ---------------------------------------------------------------------------
// Dataset CSV
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

bool parse_number(std::string_view s, double& out)
{
    if (s.empty()) {
        return false;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

// "# units: input=counts, output=deg"
std::optional<Units> parse_units_comment(std::string_view line)
{
    line = trim(line.substr(1));
    if (line.rfind("units:", 0) != 0) {
        return std::nullopt;
    }
    Units u;
    for (auto item : split(line.substr(6), ',')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            continue;
        }
        const auto key = trim(item.substr(0, eq));
        const auto value = std::string(trim(item.substr(eq + 1)));
        if (key == "input") {
            u.input = value;
        }
        else if (key == "output") {
            u.output = value;
        }
    }
    return u;
}

}  // namespace

Trajectory parse_dataset(std::istream& in, const std::string& source)
{
    Trajectory traj;
    std::string raw;
    std::size_t line_no = 0;
    std::size_t columns = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            if (columns == 0) {
                if (auto u = parse_units_comment(line)) {
                    traj.units = *u;
                }
            }
            continue;
        }
        if (columns == 0) {
            const auto header = split(line, ',');
            const bool tv = header.size() >= 2 && header[0] == "t" && header[1] == "v";
            if (tv && header.size() == 2) {
                columns = 2;
            }
            else if (tv && header.size() == 3 && header[2] == "theta") {
                columns = 3;
                traj.theta.emplace();
            }
            else {
                throw ParseError(source + ":" + std::to_string(line_no) +
                                     ": missing header (expected 't,v' or 't,v,theta')",
                                 line_no);
            }
            continue;
        }

        const auto fields = split(line, ',');
        if (fields.size() != columns) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": malformed row, expected " +
                                 std::to_string(columns) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        double values[3] = {0.0, 0.0, 0.0};
        for (std::size_t c = 0; c < columns; ++c) {
            if (!parse_number(fields[c], values[c])) {
                throw ParseError(source + ":" + std::to_string(line_no) +
                                     ": malformed row, cannot parse '" + std::string(fields[c]) +
                                     "' as a finite number",
                                 line_no);
            }
        }
        if (!traj.t.empty() && !(values[0] > traj.t.back())) {
            const char* kind = values[0] == traj.t.back() ? "duplicate timestamp"
                                                          : "timestamp not strictly increasing";
            throw ParseError(source + ":" + std::to_string(line_no) + ": " + kind, line_no);
        }
        traj.t.push_back(values[0]);
        traj.v.push_back(values[1]);
        if (columns == 3) {
            traj.theta->push_back(values[2]);
        }
    }
    if (columns == 0) {
        throw ParseError(source + ": missing header (expected 't,v' or 't,v,theta')", 0);
    }
    if (traj.t.empty()) {
        throw ParseError(source + ": no data rows", line_no);
    }
    return traj;
}

Trajectory load_dataset(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open dataset '" + path.string() + "'");
    }
    return parse_dataset(in, path.string());
}

std::string format_dataset(const Trajectory& traj)
{
    traj.validate();
    std::string out;
    if (traj.units) {
        out += "# units: input=" + traj.units->input + ", output=" + traj.units->output + "\n";
    }
    out += traj.has_theta() ? "t,v,theta\n" : "t,v\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out += format_double(traj.t[i]);
        out += ',';
        out += format_double(traj.v[i]);
        if (traj.has_theta()) {
            out += ',';
            out += format_double((*traj.theta)[i]);
        }
        out += '\n';
    }
    return out;
}

void save_dataset(const fs::path& path, const Trajectory& traj)
{
    write_file_atomic(path, format_dataset(traj));
}

// ---------------------------------------------------------------------------
// Model parameter file
// ---------------------------------------------------------------------------

namespace {

double get_number(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) {
        throw ParseError(std::string("model file: missing numeric field '") + key + "'");
    }
    return j.at(key).get<double>();
}

std::string mode_name(const HysteresisModel& model)
{
    if (std::holds_alternative<GpiModel>(model)) {
        return "gpi";
    }
    return std::get<EgpiModel>(model).mode() == SwitchMode::TwoFlag ? "egpi_two_flag"
                                                                     : "egpi_descend_flag";
}

json submodel_to_json(const GpiModel& m)
{
    return json{{"asc_env", envelope_to_json(m.asc_env())},
                {"desc_env", envelope_to_json(m.desc_env())},
                {"kappa_asc", m.kappa_asc()},
                {"kappa_desc", m.kappa_desc()}};
}

GpiModel submodel_from_json(const json& j, const DensitySpec& density)
{
    if (!j.is_object() || !j.contains("asc_env") || !j.contains("desc_env")) {
        throw ParseError("model file: submodel needs asc_env and desc_env");
    }
    const double ka = j.contains("kappa_asc") ? get_number(j, "kappa_asc") : 1.0;
    const double kd = j.contains("kappa_desc") ? get_number(j, "kappa_desc") : 1.0;
    return GpiModel(density, envelope_from_json(j.at("asc_env")),
                    envelope_from_json(j.at("desc_env")), ka, kd);
}

json density_to_json(const DensitySpec& d)
{
    return json{{"lambda", d.lambda}, {"sigma", d.sigma}, {"r1", d.r1}, {"rn", d.rn}, {"n", d.n}};
}

DensitySpec density_from_json(const json& j)
{
    DensitySpec d;
    d.lambda = get_number(j, "lambda");
    d.sigma = get_number(j, "sigma");
    d.r1 = get_number(j, "r1");
    d.rn = get_number(j, "rn");
    const double n = get_number(j, "n");
    if (n < 1 || n != std::floor(n)) {
        throw ParseError("model file: density.n must be a positive integer");
    }
    d.n = static_cast<std::size_t>(n);
    d.validate();
    return d;
}

}  // namespace

json envelope_to_json(const Envelope& env)
{
    if (env.family() == EnvelopeFamily::Linear) {
        return json{{"family", "linear"}, {"a", env.slope()}, {"b", env.intercept()}};
    }
    return json{{"family", "tanh"},
                {"c", env.amplitude()},
                {"d", env.gain()},
                {"e", env.shift()},
                {"f", env.offset()}};
}

Envelope envelope_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
        throw ParseError("envelope: missing 'family'");
    }
    const auto family = j.at("family").get<std::string>();
    if (family == "linear") {
        return Envelope::linear(get_number(j, "a"), get_number(j, "b"));
    }
    if (family == "tanh") {
        return Envelope::tanh(get_number(j, "c"), get_number(j, "d"), get_number(j, "e"),
                              get_number(j, "f"));
    }
    throw ParseError("envelope: unknown family '" + family + "'");
}

json model_to_json(const ModelFile& file)
{
    std::vector<const GpiModel*> subs;
    json flags = json::object();
    if (const auto* gpi = std::get_if<GpiModel>(&file.model)) {
        subs.push_back(gpi);
    }
    else {
        const auto& egpi = std::get<EgpiModel>(file.model);
        subs.push_back(&egpi.first());
        subs.push_back(&egpi.second());
        if (egpi.flags().ascending) {
            flags["v_f_asc"] = *egpi.flags().ascending;
        }
        if (egpi.flags().descending) {
            flags["v_f_desc"] = *egpi.flags().descending;
        }
    }
    const auto& density = subs.front()->density();
    for (const auto* s : subs) {
        if (!s->density() || *s->density() != *density) {
            throw ConfigError("model file: submodels must share one exponential density");
        }
    }
    json submodels = json::array();
    for (const auto* s : subs) {
        submodels.push_back(submodel_to_json(*s));
    }
    return json{{"mode", mode_name(file.model)},
                {"density", density_to_json(*density)},
                {"submodels", submodels},
                {"flags", flags},
                {"units", {{"input", file.units.input}, {"output", file.units.output}}},
                {"meta",
                 {{"created", file.meta.created},
                  {"tool_version", file.meta.tool_version},
                  {"source", file.meta.source}}}};
}

ModelFile model_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("mode") || !j.at("mode").is_string()) {
        throw ParseError("model file: missing 'mode'");
    }
    if (!j.contains("density") || !j.contains("submodels") || !j.at("submodels").is_array()) {
        throw ParseError("model file: needs 'density' and 'submodels'");
    }
    const auto mode = j.at("mode").get<std::string>();
    const DensitySpec density = density_from_json(j.at("density"));
    const auto& subs = j.at("submodels");

    std::optional<double> v_f_asc;
    std::optional<double> v_f_desc;
    if (j.contains("flags")) {
        const auto& f = j.at("flags");
        if (f.contains("v_f_asc") && !f.at("v_f_asc").is_null()) {
            v_f_asc = get_number(f, "v_f_asc");
        }
        if (f.contains("v_f_desc") && !f.at("v_f_desc").is_null()) {
            v_f_desc = get_number(f, "v_f_desc");
        }
    }

    ModelFile out{GpiModel(density, Envelope::identity(), Envelope::identity()), {}, {}};
    if (mode == "gpi") {
        if (subs.size() != 1) {
            throw ConfigError("model file: gpi mode needs exactly one submodel");
        }
        if (v_f_asc || v_f_desc) {
            throw ConfigError("model file: gpi mode takes no flag points");
        }
        out.model = submodel_from_json(subs[0], density);
    }
    else if (mode == "egpi_two_flag" || mode == "egpi_descend_flag") {
        if (subs.size() != 2) {
            throw ConfigError("model file: egpi modes need exactly two submodels");
        }
        const SwitchMode sm =
            mode == "egpi_two_flag" ? SwitchMode::TwoFlag : SwitchMode::DescendOnlyFlag;
        out.model = EgpiModel(submodel_from_json(subs[0], density),
                              submodel_from_json(subs[1], density), sm, {v_f_asc, v_f_desc});
    }
    else {
        throw ParseError("model file: unknown mode '" + mode + "'");
    }

    if (j.contains("units")) {
        const auto& u = j.at("units");
        out.units.input = u.value("input", out.units.input);
        out.units.output = u.value("output", out.units.output);
    }
    if (j.contains("meta")) {
        const auto& m = j.at("meta");
        out.meta.created = m.value("created", std::string{});
        out.meta.tool_version = m.value("tool_version", std::string(kToolVersion));
        out.meta.source = m.value("source", std::string{});
    }
    return out;
}

json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    try {
        return json::parse(in);
    }
    catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": invalid JSON: " + e.what());
    }
}

ModelFile load_model(const fs::path& path)
{
    try {
        return model_from_json(read_json_file(path));
    }
    catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_model(const fs::path& path, const ModelFile& file)
{
    write_file_atomic(path, model_to_json(file).dump(2) + "\n");
}

EgpiModel reference_model()
{
    const DensitySpec density{0.07, 0.1, 0.25, 7.25, 30};
    GpiModel first(density, Envelope::tanh(8.0, 0.2, -0.5, 0.0), Envelope::tanh(9.0, 0.2, -0.1, 0.0));
    GpiModel second(density, Envelope::tanh(8.0, 0.2, -1.0, 0.0),
                    Envelope::tanh(10.0, 0.2, 0.5, 0.1), 5.0, 10.0);
    return EgpiModel(std::move(first), std::move(second), SwitchMode::TwoFlag, {1.5, -0.3});
}

// ---------------------------------------------------------------------------
// Fitting artifacts
// ---------------------------------------------------------------------------

json params_to_json(const FitParams& p, FitMode mode)
{
    json j = json::object();
    const auto names = FitParams::names(mode);
    const auto values = p.pack(mode);
    for (std::size_t i = 0; i < names.size(); ++i) {
        j[names[i]] = values[i];
    }
    return j;
}

FitParams params_from_json(const json& j, FitMode mode, const FitParams& base)
{
    const auto names = FitParams::names(mode);
    std::vector<double> values = base.pack(mode);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (j.contains(names[i])) {
            values[i] = get_number(j, names[i].c_str());
        }
    }
    return FitParams::unpack(mode, values, base);
}

json metrics_to_json(const Metrics& m)
{
    return json{{"rmse", m.rmse},
                {"nrmse", m.nrmse ? json(*m.nrmse) : json(nullptr)},
                {"mae", m.mae},
                {"n", m.n}};
}

Metrics metrics_from_json(const json& j)
{
    Metrics m;
    m.rmse = get_number(j, "rmse");
    m.mae = get_number(j, "mae");
    if (j.contains("nrmse") && !j.at("nrmse").is_null()) {
        m.nrmse = get_number(j, "nrmse");
    }
    m.n = j.value("n", std::size_t{0});
    return m;
}

json fit_config_to_json(const FitConfig& c)
{
    json j{{"max_iterations", c.max_iterations},
           {"initial_damping", c.initial_damping},
           {"damping_up", c.damping_up},
           {"damping_down", c.damping_down},
           {"rel_loss_tol", c.rel_loss_tol},
           {"grad_tol", c.grad_tol},
           {"fd_step", c.fd_step},
           {"n", c.n}};
    if (c.flag_point) {
        j["flag_point"] = *c.flag_point;
    }
    if (c.initial) {
        j["initial"] = params_to_json(*c.initial, FitMode::EgpiDescendFlag);
    }
    return j;
}

FitConfig fit_config_from_json(const json& j, FitMode mode)
{
    FitConfig c;
    if (!j.is_object()) {
        throw ParseError("fit config: expected a JSON object");
    }
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.initial_damping = j.value("initial_damping", c.initial_damping);
    c.damping_up = j.value("damping_up", c.damping_up);
    c.damping_down = j.value("damping_down", c.damping_down);
    c.rel_loss_tol = j.value("rel_loss_tol", c.rel_loss_tol);
    c.grad_tol = j.value("grad_tol", c.grad_tol);
    c.fd_step = j.value("fd_step", c.fd_step);
    c.n = j.value("n", c.n);
    if (j.contains("flag_point") && !j.at("flag_point").is_null()) {
        c.flag_point = get_number(j, "flag_point");
    }
    if (j.contains("initial") && !j.at("initial").is_null()) {
        c.initial = params_from_json(j.at("initial"), mode);
    }
    c.validate();
    return c;
}

json fit_result_to_json(const FitResult& r, const ModelFile& model, const std::string& dataset)
{
    json j{{"dataset", dataset},
           {"mode", std::string(to_string(r.mode))},
           {"params", params_to_json(r.params, r.mode)},
           {"n", r.n},
           {"loss", r.loss()},
           {"loss_trace", r.loss_trace},
           {"iterations", r.iterations},
           {"converged", r.converged},
           {"reason", r.reason},
           {"metrics", metrics_to_json(r.metrics)},
           {"model", model_to_json(model)}};
    if (r.mode == FitMode::EgpiDescendFlag) {
        j["flag_point"] = r.flag_point;
    }
    return j;
}

FitResult fit_result_from_json(const json& j)
{
    FitResult r;
    try {
        r.mode = fit_mode_from_string(j.at("mode").get<std::string>());
        r.params = params_from_json(j.at("params"), r.mode);
        r.n = j.value("n", std::size_t{30});
        r.loss_trace = j.value("loss_trace", std::vector<double>{});
        r.iterations = j.value("iterations", std::size_t{0});
        r.converged = j.value("converged", false);
        r.reason = j.value("reason", std::string{});
        r.metrics = metrics_from_json(j.at("metrics"));
        if (j.contains("flag_point")) {
            r.flag_point = get_number(j, "flag_point");
        }
    }
    catch (const json::exception& e) {
        throw ParseError(std::string("fit result: ") + e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

json report_to_json(const std::vector<ReportRow>& rows)
{
    json out = json::array();
    for (const auto& r : rows) {
        json row = metrics_to_json(r.metrics);
        row["dataset"] = r.dataset;
        row["model"] = r.model;
        out.push_back(row);
    }
    return json{{"rows", out}};
}

std::string report_to_csv(const std::vector<ReportRow>& rows)
{
    std::string out = "dataset,model,rmse,nrmse,mae,n\n";
    for (const auto& r : rows) {
        out += r.dataset + "," + r.model + "," + format_double(r.metrics.rmse) + "," +
               (r.metrics.nrmse ? format_double(*r.metrics.nrmse) : std::string{}) + "," +
               format_double(r.metrics.mae) + "," + std::to_string(r.metrics.n) + "\n";
    }
    return out;
}

std::string report_to_text(const std::vector<ReportRow>& rows)
{
    std::vector<std::string> datasets;
    std::vector<std::string> models;
    std::map<std::pair<std::string, std::string>, Metrics> cells;
    for (const auto& r : rows) {
        if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) {
            datasets.push_back(r.dataset);
        }
        if (std::find(models.begin(), models.end(), r.model) == models.end()) {
            models.push_back(r.model);
        }
        cells[{r.dataset, r.model}] = r.metrics;
    }

    std::ostringstream os;
    os << std::left << std::setw(28) << "dataset";
    for (const auto& m : models) {
        os << " | " << std::setw(8) << (m + " RMSE") << ' ' << std::setw(8) << "NRMSE%" << ' '
           << std::setw(8) << "MAE";
    }
    os << '\n';
    os << std::fixed << std::setprecision(3);
    for (const auto& d : datasets) {
        os << std::setw(28) << d;
        for (const auto& m : models) {
            const auto it = cells.find({d, m});
            if (it == cells.end()) {
                os << " | " << std::setw(8) << "-" << ' ' << std::setw(8) << "-" << ' '
                   << std::setw(8) << "-";
                continue;
            }
            const Metrics& x = it->second;
            os << " | " << std::setw(8) << x.rmse << ' ' << std::setw(8);
            if (x.nrmse) {
                os << *x.nrmse;
            }
            else {
                os << "n/a";
            }
            os << ' ' << std::setw(8) << x.mae;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace egpi::io
