// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any selected criterion fails.
//
//   egpi_acceptance [criterion...]     criteria: AC-1a AC-1b AC-1t AC-2 ... AC-7

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "egpi/fitting.hpp"
#include "egpi/io.hpp"
#include "egpi/metrics.hpp"
#include "egpi/operators.hpp"
#include "egpi/signals.hpp"
#include "support/fixture.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

#ifndef EGPI_CLI_PATH
#error "EGPI_CLI_PATH must name the egpi executable"
#endif

namespace fs = std::filesystem;
using namespace egpi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

fs::path work_dir()
{
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() /
                           ("egpi_acceptance_" + std::to_string(std::random_device{}()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run_cli(const std::string& args)
{
    const std::string log = (work_dir() / "cli.log").string();
    const std::string cmd = std::string("\"") + EGPI_CLI_PATH + "\" " + args + " >>\"" + log + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string quote(const fs::path& p) { return "\"" + p.string() + "\""; }

// Columns of a simulate CSV.
struct SimTable {
    std::vector<double> t, v, z, z1, z2;
    std::vector<int> active;
};

SimTable read_sim(const fs::path& path)
{
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    SimTable s;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string cell;
        std::vector<double> f;
        while (std::getline(row, cell, ',')) {
            f.push_back(std::stod(cell));
        }
        if (f.size() != 6) {
            continue;
        }
        s.t.push_back(f[0]);
        s.v.push_back(f[1]);
        s.z.push_back(f[2]);
        s.z1.push_back(f[3]);
        s.z2.push_back(f[4]);
        s.active.push_back(static_cast<int>(f[5]));
    }
    return s;
}

const SimTable& reference_run(const std::string& dt)
{
    static std::map<std::string, SimTable> cache;
    auto it = cache.find(dt);
    if (it == cache.end()) {
        const fs::path out = work_dir() / ("reference_" + dt + ".csv");
        if (run_cli("simulate --reference --dt " + dt + " --out " + quote(out)) != 0) {
            throw std::runtime_error("simulate --reference failed");
        }
        it = cache.emplace(dt, read_sim(out)).first;
    }
    return it->second;
}

// ---------------------------------------------------------------------------
// AC-1
// ---------------------------------------------------------------------------

struct Episode {
    std::size_t begin;
    std::size_t end;  // exclusive
    bool ascending;
};

// Maximal runs of samples with |dz| < 1e-6 and |dv| > 1e-4, split by direction.
std::vector<Episode> dead_zones(const SimTable& s, std::size_t from, std::size_t to)
{
    std::vector<Episode> out;
    std::optional<Episode> cur;
    for (std::size_t k = std::max<std::size_t>(from, 1); k < to; ++k) {
        const double dv = s.v[k] - s.v[k - 1];
        const bool flat = std::abs(s.z[k] - s.z[k - 1]) < 1e-6 && std::abs(dv) > 1e-4;
        const bool up = dv > 0.0;
        if (flat && cur && cur->ascending == up && cur->end == k) {
            cur->end = k + 1;
            continue;
        }
        if (cur) {
            out.push_back(*cur);
            cur.reset();
        }
        if (flat) {
            cur = Episode{k, k + 1, up};
        }
    }
    if (cur) {
        out.push_back(*cur);
    }
    return out;
}

// First full input cycle: ascending from the first input minimum, through the
// following maximum, down to the next minimum.
std::pair<std::size_t, std::size_t> first_cycle(const std::vector<double>& v)
{
    std::vector<std::size_t> minima;
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        if (v[k] < v[k - 1] && v[k] <= v[k + 1]) {
            minima.push_back(k);
        }
    }
    if (minima.size() < 2) {
        return {0, v.size()};
    }
    return {minima[0], minima[1] + 1};
}

Outcome ac1a()
{
    const SimTable& s = reference_run("0.001");
    const auto [from, to] = first_cycle(s.v);
    const auto eps = dead_zones(s, from, to);
    const auto asc = std::count_if(eps.begin(), eps.end(), [](const Episode& e) { return e.ascending; });
    const auto desc = static_cast<long>(eps.size()) - asc;
    std::ostringstream d;
    d << "cycle t=[" << s.t[from] << ", " << s.t[to - 1] << "]: " << eps.size()
      << " dead-zone episodes (" << asc << " ascending, " << desc << " descending); need 4 (2+2)";
    for (const auto& e : eps) {
        d << "; " << (e.ascending ? "asc" : "desc") << " t=[" << s.t[e.begin - 1] << ", " << s.t[e.end - 1]
          << "] v=[" << s.v[e.begin - 1] << ", " << s.v[e.end - 1] << "]";
    }
    return {eps.size() == 4 && asc == 2 && desc == 2, d.str()};
}

Outcome ac1b()
{
    const SimTable& s = reference_run("0.001");
    std::size_t mismatches = 0;
    std::size_t transitions = 0;
    for (std::size_t k = 0; k < s.v.size(); ++k) {
        const bool up = k > 0 && s.v[k] > s.v[k - 1];
        const int expected = up ? (s.v[k] < 1.5 ? 1 : 2) : (s.v[k] > -0.3 ? 1 : 2);
        mismatches += s.active[k] == expected ? 0 : 1;
        const int z_pick = s.z[k] == s.z1[k] ? 1 : (s.z[k] == s.z2[k] ? 2 : 0);
        if (s.z1[k] != s.z2[k] && z_pick != s.active[k]) {
            ++mismatches;
        }
        transitions += k > 0 && s.active[k] != s.active[k - 1] ? 1 : 0;
    }
    std::ostringstream d;
    d << transitions << " transitions over " << s.v.size() << " samples, " << mismatches
      << " samples deviate from the flag inequalities";
    return {mismatches == 0 && transitions > 0, d.str()};
}

Outcome ac1_runtime()
{
    const Trajectory input = decaying_sinusoid();
    double best = 1e9;
    for (int rep = 0; rep < 3; ++rep) {
        EgpiModel m = io::reference_model();
        const auto start = Clock::now();
        const auto trace = egpi_eval(m, input);
        best = std::min(best, seconds_since(start));
        if (trace.z.size() != input.size()) {
            return {false, "wrong output length"};
        }
    }
    std::ostringstream d;
    d << input.size() << " samples x 31 operators x 2 submodels in " << best << " s (limit 1 s)";
    return {best < 1.0, d.str()};
}

// ---------------------------------------------------------------------------
// AC-2
// ---------------------------------------------------------------------------

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = a.size() == b.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

Outcome ac2()
{
    gen::Rng rng(20240601);
    double worst = 0.0;
    int active_mismatch = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = gen::density(rng);
        const GpiModel g = gen::gpi_model(rng, d);
        const GpiModel h = gen::gpi_model(rng, d);
        const auto tr = gen::trajectory(rng);
        const auto bank = gen::to_oracle(d);
        GpiModel g_run = g;
        worst = std::max(worst, max_abs_diff(gpi_eval(g_run, tr), oracle::gpi(gen::to_oracle(g), bank, tr.v)));

        const bool two = trial % 2 == 0;
        const double fu = rng.uniform(-6.0, 6.0);
        const double fd = rng.uniform(-6.0, 6.0);
        EgpiModel e(g, h, two ? SwitchMode::TwoFlag : SwitchMode::DescendOnlyFlag,
                    two ? FlagPoints{fu, fd} : FlagPoints{std::nullopt, fd});
        std::vector<int> active;
        const auto z = oracle::egpi(gen::to_oracle(g), gen::to_oracle(h), bank, two, fu, fd, tr.v, &active);
        const auto trace = egpi_eval(e, tr);
        worst = std::max(worst, max_abs_diff(trace.z, z));
        active_mismatch += trace.active == active ? 0 : 1;
    }
    std::ostringstream d;
    d << "100 trajectories, max |library - oracle| = " << worst << " (limit 1e-12), "
      << active_mismatch << " switching mismatches";
    return {worst <= 1e-12 && active_mismatch == 0, d.str()};
}

// ---------------------------------------------------------------------------
// AC-3 / AC-4: fits through the CLI on the seeded fixture
// ---------------------------------------------------------------------------

struct SeedRun {
    std::uint64_t seed = 0;
    bool ok = false;
    double egpi_seconds = 0.0;
    double gpi_seconds = 0.0;
    double egpi_clean_rmse = 0.0;
    Metrics egpi;
    Metrics gpi;
};

const std::vector<SeedRun>& fixture_runs()
{
    static std::optional<std::vector<SeedRun>> runs;
    if (runs) {
        return *runs;
    }
    runs.emplace();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SeedRun r;
        r.seed = seed;
        const auto data = fixture::make(seed);
        const fs::path csv = work_dir() / ("fixture_" + std::to_string(seed) + ".csv");
        io::save_dataset(csv, data.noisy);
        const auto fit = [&](const std::string& mode, double& seconds) -> std::optional<FitResult> {
            const fs::path result = work_dir() / ("fit_" + mode + "_" + std::to_string(seed) + ".json");
            const fs::path model = work_dir() / ("model_" + mode + "_" + std::to_string(seed) + ".json");
            const auto start = Clock::now();
            const int code = run_cli("fit --data " + quote(csv) + " --mode " + mode + " --flag-point " +
                                     io::format_double(fixture::kFlagPoint) + " --out-result " +
                                     quote(result) + " --out-model " + quote(model));
            seconds = seconds_since(start);
            if (code != 0) {
                return std::nullopt;
            }
            return io::fit_result_from_json(io::read_json_file(result));
        };
        const auto e = fit("egpi", r.egpi_seconds);
        const auto g = fit("gpi", r.gpi_seconds);
        if (e && g) {
            r.ok = true;
            r.egpi = e->metrics;
            r.gpi = g->metrics;
            const auto fitted = io::load_model(work_dir() / ("model_egpi_" + std::to_string(seed) + ".json"));
            HysteresisModel m = fitted.model;
            r.egpi_clean_rmse = compute_metrics(*data.clean.theta, evaluate(m, data.clean).z).rmse;
        }
        runs->push_back(r);
    }
    return *runs;
}

Outcome ac3()
{
    int good = 0;
    double slowest = 0.0;
    std::ostringstream rows;
    for (const auto& r : fixture_runs()) {
        slowest = std::max(slowest, r.egpi_seconds);
        const bool pass = r.ok && r.egpi_clean_rmse < 0.2 && r.egpi_seconds < 60.0;
        good += pass ? 1 : 0;
        rows << " s" << r.seed << "=" << (r.ok ? io::format_double(std::round(r.egpi_clean_rmse * 1e4) / 1e4) : "fail");
    }
    std::ostringstream d;
    d << good << "/10 seeds with clean RMSE < 0.2 deg, slowest fit " << slowest << " s (limit 60 s);"
      << rows.str();
    return {good >= 9 && slowest < 60.0, d.str()};
}

Outcome ac4()
{
    int good = 0;
    double min_ratio = INFINITY;
    for (const auto& r : fixture_runs()) {
        if (!r.ok || !r.egpi.nrmse || !r.gpi.nrmse) {
            continue;
        }
        const double ratio = r.gpi.rmse / r.egpi.rmse;
        min_ratio = std::min(min_ratio, ratio);
        const bool pass = r.egpi.rmse < r.gpi.rmse && *r.egpi.nrmse < *r.gpi.nrmse &&
                          r.egpi.mae < r.gpi.mae && ratio >= 2.0;
        good += pass ? 1 : 0;
    }
    std::ostringstream d;
    d << good << "/10 seeds with EGPI strictly lower on RMSE, NRMSE and MAE and GPI/EGPI RMSE >= 2; "
      << "smallest ratio " << min_ratio;
    return {good == 10, d.str()};
}

// ---------------------------------------------------------------------------
// AC-5: invariant suites, each over >= 100 randomized cases
// ---------------------------------------------------------------------------

Outcome ac5()
{
    std::map<std::string, std::pair<int, int>> suites;  // name -> (cases, failures)
    auto tally = [&](const std::string& name, bool ok) {
        auto& s = suites[name];
        ++s.first;
        s.second += ok ? 0 : 1;
    };
    gen::Rng rng(5150);

    for (int trial = 0, complete = 0; complete < 100 && trial < 2000; ++trial) {
        const PlayOperatorSpec spec{rng.uniform(0.0, 4.0), gen::envelope(rng), gen::envelope(rng),
                                    rng.uniform(0.2, 5.0), rng.uniform(0.2, 5.0)};
        const auto tr = gen::trajectory(rng);
        PlayState s = init_state(spec, tr.v[0], rng.uniform(-3.0, 3.0));
        bool history = !s.degenerate_band;
        bool ok = true;
        for (std::size_t k = 1; k < tr.size() && history; ++k) {
            s = play_step(spec, s, tr.v[k - 1], tr.v[k]);
            const double lo = spec.lower(tr.v[k]);
            const double hi = spec.upper(tr.v[k]);
            history = lo <= hi;
            ok = ok && (!history || (s.w >= lo && s.w <= hi));
        }
        if (history) {
            ++complete;
            tally("band containment", ok);
        }
    }

    for (int trial = 0; trial < 100; ++trial) {
        const auto d = gen::density(rng);
        const GpiModel g = gen::gpi_model(rng, d);
        const GpiModel h = gen::gpi_model(rng, d);
        const auto tr = gen::trajectory(rng);

        Trajectory warped = tr;
        double t = rng.uniform(-10.0, 10.0);
        for (double& x : warped.t) {
            x = t;
            t += rng.uniform(1e-4, 10.0);
        }
        GpiModel a = g, b = g;
        EgpiModel ea(g, h, SwitchMode::TwoFlag, FlagPoints{rng.uniform(-5, 5), rng.uniform(-5, 5)});
        EgpiModel eb = ea;
        const auto y = gpi_eval(a, tr);
        tally("rate independence", y == gpi_eval(b, warped) && egpi_eval(ea, tr).z == egpi_eval(eb, warped).z);

        bool mono = true;
        for (std::size_t k = 1; k < tr.size(); ++k) {
            if (tr.v[k] > tr.v[k - 1]) mono = mono && y[k] >= y[k - 1];
            if (tr.v[k] < tr.v[k - 1]) mono = mono && y[k] <= y[k - 1];
        }
        tally("monotone-segment monotonicity", mono);

        const double alpha = rng.uniform(0.1, 10.0);
        DensitySpec scaled = d;
        scaled.lambda *= alpha;
        GpiModel gs(scaled, g.asc_env(), g.desc_env(), g.kappa_asc(), g.kappa_desc());
        const auto ys = gpi_eval(gs, tr);
        bool linear = true;
        for (std::size_t k = 0; k < y.size(); ++k) {
            linear = linear && std::abs(ys[k] - alpha * y[k]) <= 1e-12 * std::max(1.0, std::abs(ys[k]));
        }
        tally("weight linearity", linear);

        const bool two = rng.coin();
        const double f_up = rng.uniform(-8, 8);
        EgpiModel same(g, g, two ? SwitchMode::TwoFlag : SwitchMode::DescendOnlyFlag,
                       FlagPoints{two ? std::optional<double>(f_up) : std::nullopt, rng.uniform(-8, 8)});
        tally("EGPI degeneracy to GPI", egpi_eval(same, tr).z == y);
    }

    for (int trial = 0; trial < 200; ++trial) {
        const int n = rng.integer(1, 300);
        std::vector<double> m(n), p(n);
        for (int i = 0; i < n; ++i) {
            m[i] = rng.uniform(-50.0, 50.0);
            p[i] = m[i] + rng.uniform(-3.0, 3.0) * (rng.coin(0.1) ? 20.0 : 1.0);
        }
        const Metrics r = compute_metrics(m, p);
        tally("mae >= rmse", r.mae >= r.rmse);
    }

    for (int trial = 0; trial < 100; ++trial) {
        const auto seed = static_cast<std::uint64_t>(rng.integer(1, 1 << 30));
        const auto data = fixture::make(seed, static_cast<std::size_t>(rng.integer(60, 200)), rng.uniform(0.0, 0.5));
        FitConfig cfg;
        cfg.flag_point = fixture::kFlagPoint;
        cfg.max_iterations = 15;
        cfg.n = static_cast<std::size_t>(rng.integer(2, 10));
        const FitResult r = lm_fit(data.noisy, cfg, rng.coin() ? FitMode::EgpiDescendFlag : FitMode::Gpi);
        bool ok = !r.loss_trace.empty();
        for (std::size_t k = 1; k < r.loss_trace.size(); ++k) {
            ok = ok && r.loss_trace[k] <= r.loss_trace[k - 1];
        }
        tally("loss-trace monotonicity", ok);
    }

    bool pass = suites.size() == 7;
    std::ostringstream d;
    for (const auto& [name, counts] : suites) {
        pass = pass && counts.first >= 100 && counts.second == 0;
        d << name << " " << counts.first - counts.second << "/" << counts.first << "; ";
    }
    return {pass, d.str()};
}

// ---------------------------------------------------------------------------
// AC-6: Jacobian sanity on the fixture
// ---------------------------------------------------------------------------

Outcome ac6()
{
    constexpr auto mode = FitMode::EgpiDescendFlag;
    const auto data = fixture::make(1);
    const double v_f = fixture::kFlagPoint;
    const FitParams& p = data.params;
    const auto jac = jacobian_fd(p, data.noisy, v_f, mode);

    FitParams unit = p;
    unit.lambda = 1.0;
    HysteresisModel m = build_model(unit, mode, v_f);
    const auto y = evaluate(m, data.noisy).z;
    const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    const double lambda_rel = (jac.col(6) - analytic).norm() / analytic.norm();

    // Step halving at the fit's own step h = 1e-6 (relative): the forward-minus-
    // central gap at the same step must halve with h (first order), unless the
    // parameter enters the residuals affinely between switching events, in
    // which case the gap is rounding noise.
    const auto p0 = p.pack(mode);
    const auto gap = [&](std::size_t k, double rel) {
        const double h = std::max(rel * std::abs(p0[k]), rel);
        auto qp = p0;
        auto qm = p0;
        qp[k] += h;
        qm[k] -= h;
        const auto ep = residuals(FitParams::unpack(mode, qp), data.noisy, v_f, mode);
        const auto em = residuals(FitParams::unpack(mode, qm), data.noisy, v_f, mode);
        const auto e0 = residuals(p, data.noisy, v_f, mode);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < e0.size(); ++i) {
            const double fwd = (ep[i] - e0[i]) / h;
            const double ctr = (ep[i] - em[i]) / (2.0 * h);
            num += (fwd - ctr) * (fwd - ctr);
            den += ctr * ctr;
        }
        return std::sqrt(num) / std::max(std::sqrt(den), 1.0);
    };
    const double h = FitConfig{}.fd_step;
    double worst_gap = 0.0;
    std::size_t first_order = 0;
    std::size_t affine = 0;
    bool halving_ok = true;
    for (std::size_t k = 0; k < p0.size(); ++k) {
        const double g1 = gap(k, h);
        const double g2 = gap(k, h / 2.0);
        worst_gap = std::max(worst_gap, g1);
        if (std::getenv("EGPI_ACCEPTANCE_VERBOSE")) {
            std::cerr << FitParams::names(mode)[k] << " gap(h)=" << g1 << " gap(h/2)=" << g2 << "\n";
        }
        if (g1 <= 1e-8 && g2 <= 1e-8) {
            ++affine;
        }
        else if (g2 / g1 >= 0.4 && g2 / g1 <= 0.6) {
            ++first_order;
        }
        else {
            halving_ok = false;
        }
    }
    std::ostringstream d;
    d << "lambda column relative error " << lambda_rel << " (limit 1e-8); forward-vs-central at h="
      << h << ": " << first_order << " columns halve with h (ratio in [0.4, 0.6]), " << affine
      << " at rounding level (<= 1e-8), largest gap " << worst_gap;
    return {lambda_rel <= 1e-8 && halving_ok, d.str()};
}

// ---------------------------------------------------------------------------
// AC-7
// ---------------------------------------------------------------------------

Outcome ac7()
{
    const SimTable& coarse = reference_run("0.001");
    const SimTable& fine = reference_run("0.0005");
    double sup = 0.0;
    std::size_t matched = 0;
    for (std::size_t i = 0; i < coarse.t.size() && 2 * i < fine.t.size(); ++i) {
        if (std::abs(fine.t[2 * i] - coarse.t[i]) > 1e-9) {
            return {false, "timestamps do not align"};
        }
        sup = std::max(sup, std::abs(fine.z[2 * i] - coarse.z[i]));
        ++matched;
    }
    std::ostringstream d;
    d << "sup |z(dt=0.0005) - z(dt=0.001)| = " << sup << " over " << matched
      << " shared samples (limit 1e-3)";
    return {matched == coarse.t.size() && sup < 1e-3, d.str()};
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC-1a", ac1a}, {"AC-1b", ac1b}, {"AC-1t", ac1_runtime}, {"AC-2", ac2}, {"AC-3", ac3},
        {"AC-4", ac4},   {"AC-5", ac5},   {"AC-6", ac6},          {"AC-7", ac7},
    };
    std::vector<std::string> selected(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), name) == selected.end()) {
            continue;
        }
        Outcome o;
        try {
            o = check();
        }
        catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
        failures += o.pass ? 0 : 1;
    }
    std::error_code ec;
    fs::remove_all(work_dir(), ec);
    return failures == 0 ? 0 : 1;
}
