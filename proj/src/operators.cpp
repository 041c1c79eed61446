#include "egpi/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "egpi/error.hpp"

namespace egpi {

// ---------------------------------------------------------------------------
// Play operator
// ---------------------------------------------------------------------------

void PlayOperatorSpec::validate() const
{
    if (!std::isfinite(r) || r < 0.0) {
        throw ConfigError("play operator: r must be finite and >= 0");
    }
    if (!std::isfinite(kappa_asc) || !(kappa_asc > 0.0) || !std::isfinite(kappa_desc) ||
        !(kappa_desc > 0.0)) {
        throw ConfigError("play operator: magnitude regulators must be > 0");
    }
}

PlayState init_state(const PlayOperatorSpec& spec, double v0, double w_init)
{
    if (!std::isfinite(v0) || !std::isfinite(w_init)) {
        throw DomainError("init_state: non-finite input");
    }
    const double lo = spec.lower(v0);
    const double hi = spec.upper(v0);
    PlayState s;
    s.initialized = true;
    if (lo <= hi) {
        s.w = std::clamp(w_init, lo, hi);
    }
    else {
        s.w = w_init;
        s.degenerate_band = true;
    }
    return s;
}

PlayState play_step(const PlayOperatorSpec& spec, PlayState state, double v_prev, double v_curr)
{
    if (!state.initialized) {
        throw StateError("play_step: state not initialized");
    }
    if (!std::isfinite(v_prev) || !std::isfinite(v_curr)) {
        throw DomainError("play_step: non-finite input");
    }
    if (v_curr > v_prev) {
        state.w = std::max(spec.lower(v_curr), state.w);
    }
    else if (v_curr < v_prev) {
        state.w = std::min(spec.upper(v_curr), state.w);
    }
    return state;
}

ZeroPoints zero_points(const PlayOperatorSpec& spec)
{
    return {spec.asc_env.inverse(spec.kappa_asc * spec.r),
            spec.desc_env.inverse(-spec.kappa_desc * spec.r)};
}

// ---------------------------------------------------------------------------
// Density
// ---------------------------------------------------------------------------

void DensitySpec::validate() const
{
    if (!std::isfinite(lambda) || !(lambda > 0.0)) {
        throw ConfigError("density: lambda must be > 0");
    }
    if (!std::isfinite(sigma) || sigma < 0.0) {
        throw ConfigError("density: sigma must be >= 0");
    }
    if (!std::isfinite(r1) || !(r1 > 0.0)) {
        throw ConfigError("density: r1 must be > 0");
    }
    if (n == 0) {
        throw ConfigError("density: n must be >= 1");
    }
    if (n > 1 && (!std::isfinite(rn) || r1 > rn)) {
        throw ConfigError("density: r1 must not exceed rn");
    }
}

std::vector<double> thresholds(const DensitySpec& density)
{
    density.validate();
    std::vector<double> r(density.n + 1);
    r[0] = 0.0;
    if (density.n == 1) {
        r[1] = density.r1;
        return r;
    }
    const double step = (density.rn - density.r1) / static_cast<double>(density.n - 1);
    for (std::size_t i = 1; i <= density.n; ++i) {
        r[i] = density.r1 + static_cast<double>(i - 1) * step;
    }
    return r;
}

std::vector<double> weights(const DensitySpec& density)
{
    std::vector<double> p = thresholds(density);
    for (double& x : p) {
        x = density.lambda * std::exp(-density.sigma * x);
    }
    return p;
}

// ---------------------------------------------------------------------------
// GpiModel
// ---------------------------------------------------------------------------

GpiModel::GpiModel(const DensitySpec& density, Envelope asc_env, Envelope desc_env,
                   double kappa_asc, double kappa_desc)
    : density_(density),
      thresholds_(egpi::thresholds(density)),
      weights_(egpi::weights(density)),
      asc_(asc_env),
      desc_(desc_env),
      kappa_asc_(kappa_asc),
      kappa_desc_(kappa_desc)
{
    check_config();
}

GpiModel::GpiModel(std::vector<double> thresholds, std::vector<double> weights, Envelope asc_env,
                   Envelope desc_env, double kappa_asc, double kappa_desc)
    : thresholds_(std::move(thresholds)),
      weights_(std::move(weights)),
      asc_(asc_env),
      desc_(desc_env),
      kappa_asc_(kappa_asc),
      kappa_desc_(kappa_desc)
{
    if (thresholds_.empty() || thresholds_.size() != weights_.size()) {
        throw ConfigError("gpi model: thresholds and weights must be nonempty and aligned");
    }
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
        if (!std::isfinite(thresholds_[i]) || thresholds_[i] < 0.0) {
            throw ConfigError("gpi model: thresholds must be >= 0");
        }
        if (!std::isfinite(weights_[i]) || !(weights_[i] > 0.0)) {
            throw ConfigError("gpi model: weights must be > 0");
        }
    }
    check_config();
}

void GpiModel::check_config() const
{
    PlayOperatorSpec probe{0.0, asc_, desc_, kappa_asc_, kappa_desc_};
    probe.validate();
}

PlayOperatorSpec GpiModel::operator_spec(std::size_t i) const
{
    return {thresholds_.at(i), asc_, desc_, kappa_asc_, kappa_desc_};
}

void GpiModel::reset(double v0, double w_init)
{
    w_.resize(thresholds_.size());
    degenerate_ = 0;
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
        const PlayState s = init_state(operator_spec(i), v0, w_init);
        w_[i] = s.w;
        degenerate_ += s.degenerate_band ? 1 : 0;
    }
    initialized_ = true;
}

double GpiModel::step(double v_prev, double v_curr)
{
    if (!initialized_) {
        throw StateError("gpi model: step before reset");
    }
    if (v_curr > v_prev) {
        const double g = asc_(v_curr);
        for (std::size_t i = 0; i < w_.size(); ++i) {
            w_[i] = std::max(g - kappa_asc_ * thresholds_[i], w_[i]);
        }
    }
    else if (v_curr < v_prev) {
        const double g = desc_(v_curr);
        for (std::size_t i = 0; i < w_.size(); ++i) {
            w_[i] = std::min(g + kappa_desc_ * thresholds_[i], w_[i]);
        }
    }
    return output();
}

double GpiModel::output() const noexcept
{
    double y = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) {
        y += weights_[i] * w_[i];
    }
    return y;
}

std::vector<double> gpi_eval(GpiModel& model, const Trajectory& input, double w_init)
{
    input.validate();
    const auto& v = input.v;
    std::vector<double> y(v.size());
    model.reset(v[0], w_init);
    y[0] = model.output();
    for (std::size_t k = 1; k < v.size(); ++k) {
        y[k] = model.step(v[k - 1], v[k]);
    }
    return y;
}

// ---------------------------------------------------------------------------
// EgpiModel
// ---------------------------------------------------------------------------

int select_submodel(SwitchMode mode, const FlagPoints& flags, bool ascending, double v)
{
    if (mode == SwitchMode::TwoFlag) {
        if (ascending) {
            return v < *flags.ascending ? 1 : 2;
        }
        return v > *flags.descending ? 1 : 2;
    }
    if (ascending) {
        return 1;
    }
    return v > *flags.descending ? 1 : 2;
}

EgpiModel::EgpiModel(GpiModel first, GpiModel second, SwitchMode mode, FlagPoints flags)
    : first_(std::move(first)), second_(std::move(second)), mode_(mode), flags_(flags)
{
    const auto finite_or_absent = [](const std::optional<double>& f) {
        return !f || std::isfinite(*f);
    };
    if (!finite_or_absent(flags_.ascending) || !finite_or_absent(flags_.descending)) {
        throw ConfigError("egpi model: flag points must be finite");
    }
    if (mode_ == SwitchMode::TwoFlag && (!flags_.ascending || !flags_.descending)) {
        throw ConfigError("egpi model: two-flag mode requires both flag points");
    }
    if (mode_ == SwitchMode::DescendOnlyFlag) {
        if (!flags_.descending) {
            throw ConfigError("egpi model: descend-only mode requires the descending flag point");
        }
        if (flags_.ascending) {
            throw ConfigError("egpi model: descend-only mode takes no ascending flag point");
        }
    }
}

EgpiModel::Output EgpiModel::reset(double v0, double w_init)
{
    first_.reset(v0, w_init);
    second_.reset(v0, w_init);
    const double z1 = first_.output();
    const double z2 = second_.output();
    const int active = select_submodel(mode_, flags_, false, v0);
    return {active == 1 ? z1 : z2, z1, z2, active};
}

EgpiModel::Output EgpiModel::step(double v_prev, double v_curr)
{
    const double z1 = first_.step(v_prev, v_curr);
    const double z2 = second_.step(v_prev, v_curr);
    const int active = select_submodel(mode_, flags_, v_curr > v_prev, v_curr);
    return {active == 1 ? z1 : z2, z1, z2, active};
}

EgpiTrace egpi_eval(EgpiModel& model, const Trajectory& input, double w_init)
{
    input.validate();
    const auto& v = input.v;
    const std::size_t n = v.size();
    EgpiTrace out;
    out.z.resize(n);
    out.z1.resize(n);
    out.z2.resize(n);
    out.active.resize(n);
    const auto store = [&out](std::size_t k, const EgpiModel::Output& o) {
        out.z[k] = o.z;
        out.z1[k] = o.z1;
        out.z2[k] = o.z2;
        out.active[k] = o.active;
    };
    store(0, model.reset(v[0], w_init));
    for (std::size_t k = 1; k < n; ++k) {
        store(k, model.step(v[k - 1], v[k]));
    }
    return out;
}

}  // namespace egpi
