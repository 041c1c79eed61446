#include "egpi/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "egpi/error.hpp"

namespace egpi {

double decaying_sinusoid_value(double t)
{
    return 8.0 * std::exp(-0.04 * t) * std::sin(2.0 * std::numbers::pi * t + std::numbers::pi / 4.0);
}

Trajectory decaying_sinusoid(double t_start, double t_end, double dt)
{
    if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_start < t_end)) {
        throw ConfigError("decaying_sinusoid: need t_start < t_end");
    }
    if (!std::isfinite(dt) || !(dt > 0.0) || dt >= t_end - t_start) {
        throw ConfigError("decaying_sinusoid: need 0 < dt < t_end - t_start");
    }
    const auto count = static_cast<std::size_t>(std::floor((t_end - t_start) / dt + 1e-9)) + 1;
    Trajectory out;
    out.t.resize(count);
    out.v.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.t[i] = t_start + static_cast<double>(i) * dt;
        out.v[i] = decaying_sinusoid_value(out.t[i]);
    }
    return out;
}

Trajectory rise_fall_sweep(double v_lo, double v_hi, std::size_t samples, double duration)
{
    if (samples < 3 || !(v_lo < v_hi) || !(duration > 0.0)) {
        throw ConfigError("rise_fall_sweep: need >= 3 samples, v_lo < v_hi, duration > 0");
    }
    Trajectory out;
    out.t.resize(samples);
    out.v.resize(samples);
    const double last = static_cast<double>(samples - 1);
    for (std::size_t i = 0; i < samples; ++i) {
        const double u = static_cast<double>(i) / last;
        out.t[i] = u * duration;
        out.v[i] = v_lo + (v_hi - v_lo) * (1.0 - std::abs(2.0 * u - 1.0));
    }
    return out;
}

Trajectory staircase(const std::vector<double>& levels, double rate, double dwell, double dt)
{
    if (levels.size() < 2 || !(rate > 0.0) || dwell < 0.0 || !(dt > 0.0)) {
        throw ConfigError("staircase: need >= 2 levels, rate > 0, dwell >= 0, dt > 0");
    }
    // Piecewise-linear knots (time, value).
    std::vector<double> kt{0.0};
    std::vector<double> kv{levels[0]};
    for (std::size_t i = 1; i < levels.size(); ++i) {
        kt.push_back(kt.back() + std::abs(levels[i] - levels[i - 1]) / rate);
        kv.push_back(levels[i]);
        if (dwell > 0.0) {
            kt.push_back(kt.back() + dwell);
            kv.push_back(levels[i]);
        }
    }
    const auto count = static_cast<std::size_t>(std::floor(kt.back() / dt + 1e-9)) + 1;
    Trajectory out;
    out.t.resize(count);
    out.v.resize(count);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) * dt;
        while (seg + 2 < kt.size() && t > kt[seg + 1]) {
            ++seg;
        }
        const double span = kt[seg + 1] - kt[seg];
        const double u = span > 0.0 ? std::clamp((t - kt[seg]) / span, 0.0, 1.0) : 1.0;
        out.t[i] = t;
        out.v[i] = kv[seg] + u * (kv[seg + 1] - kv[seg]);
    }
    return out;
}

namespace {

std::vector<double> rates(const Trajectory& traj)
{
    const auto& t = traj.t;
    const auto& v = traj.v;
    const std::size_t n = t.size();
    std::vector<double> r(n, 0.0);
    r[0] = (v[1] - v[0]) / (t[1] - t[0]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        r[i] = (v[i + 1] - v[i - 1]) / (t[i + 1] - t[i - 1]);
    }
    r[n - 1] = (v[n - 1] - v[n - 2]) / (t[n - 1] - t[n - 2]);
    return r;
}

}  // namespace

double default_flag_eps(const Trajectory& traj)
{
    traj.validate();
    if (traj.size() < 2) {
        throw InputError("default_flag_eps: need at least 2 samples");
    }
    double peak = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        peak = std::max(peak, std::abs((traj.v[i] - traj.v[i - 1]) / (traj.t[i] - traj.t[i - 1])));
    }
    return 0.01 * peak;
}

double detect_flag_point(const Trajectory& traj, double eps)
{
    traj.validate();
    if (traj.size() < 3) {
        throw InputError("detect_flag_point: need at least 3 samples");
    }
    if (!(eps > 0.0)) {
        throw ConfigError("detect_flag_point: eps must be > 0");
    }
    const std::vector<double> r = rates(traj);
    bool moving = false;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const bool at_rest = std::abs(r[i]) < eps;
        if (!at_rest) {
            moving = true;
        }
        else if (moving) {
            return traj.v[i];
        }
    }
    throw DetectionError("detect_flag_point: no rest point after motion; supply the flag point");
}

Trajectory gen_synthetic(const HysteresisModel& model, const Trajectory& traj, double noise_std,
                         std::uint64_t seed)
{
    if (!std::isfinite(noise_std) || noise_std < 0.0) {
        throw ConfigError("gen_synthetic: noise_std must be >= 0");
    }
    HysteresisModel working = model;
    EgpiTrace clean = evaluate(working, traj);

    Trajectory out = traj;
    out.theta = std::move(clean.z);
    if (noise_std > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, noise_std);
        for (double& x : *out.theta) {
            x += noise(rng);
        }
    }
    return out;
}

Trajectory gen_synthetic(const EgpiModel& model, const Trajectory& traj, double noise_std,
                         std::uint64_t seed)
{
    return gen_synthetic(HysteresisModel{model}, traj, noise_std, seed);
}

}  // namespace egpi
