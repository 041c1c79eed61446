#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "egpi/envelope.hpp"
#include "egpi/trajectory.hpp"

namespace egpi {

// ---------------------------------------------------------------------------
// Single generalized play operator
// ---------------------------------------------------------------------------

/// One generalized play operator with backlash r and per-branch regulators.
///
/// The admissible band at input v is
///     [asc_env(v) - kappa_asc*r,  desc_env(v) + kappa_desc*r].
/// kappa_asc = kappa_desc = 1 is the plain generalized play.
struct PlayOperatorSpec {
    double r = 0.0;
    Envelope asc_env = Envelope::identity();
    Envelope desc_env = Envelope::identity();
    double kappa_asc = 1.0;
    double kappa_desc = 1.0;

    /// Throws ConfigError unless r >= 0 and both regulators are > 0.
    void validate() const;

    double lower(double v) const noexcept { return asc_env(v) - kappa_asc * r; }
    double upper(double v) const noexcept { return desc_env(v) + kappa_desc * r; }
};

struct PlayState {
    double w = 0.0;
    bool initialized = false;
    /// Set when init_state found an empty band and kept w_init unclamped.
    bool degenerate_band = false;
};

/// Clamp w_init into the band at v0. An empty band leaves w_init untouched and
/// sets degenerate_band.
PlayState init_state(const PlayOperatorSpec& spec, double v0, double w_init = 0.0);

/// Advance one sample. Direction is the sign of v_curr - v_prev; equality holds w.
PlayState play_step(const PlayOperatorSpec& spec, PlayState state, double v_prev, double v_curr);

/// Zero points of the operator: beta_asc = asc_env^-1(kappa_asc*r),
/// beta_desc = desc_env^-1(-kappa_desc*r).
struct ZeroPoints {
    double ascending;
    double descending;
};
ZeroPoints zero_points(const PlayOperatorSpec& spec);

// ---------------------------------------------------------------------------
// Threshold grid and density
// ---------------------------------------------------------------------------

/// Exponential density on a uniform threshold grid.
///
/// thresholds: r_0 = 0, r_i = r1 + (i-1)(rn - r1)/(n-1) for i = 1..n
/// weights:    p(r_i) = lambda * exp(-sigma * r_i)
struct DensitySpec {
    double lambda = 0.07;
    double sigma = 0.1;
    double r1 = 0.25;
    double rn = 7.25;
    std::size_t n = 30;

    void validate() const;

    friend bool operator==(const DensitySpec&, const DensitySpec&) = default;
};

std::vector<double> thresholds(const DensitySpec& density);
std::vector<double> weights(const DensitySpec& density);

// ---------------------------------------------------------------------------
// GPI model: weighted bank of plays sharing one envelope pair
// ---------------------------------------------------------------------------

/// Weighted sum of generalized plays. Owns the operator memories, so a model
/// instance is a stateful evaluator; copy it to evaluate independent trajectories.
class GpiModel {
public:
    GpiModel(const DensitySpec& density, Envelope asc_env, Envelope desc_env,
             double kappa_asc = 1.0, double kappa_desc = 1.0);

    /// Explicit bank, bypassing the exponential density. Thresholds must be >= 0
    /// and weights > 0.
    GpiModel(std::vector<double> thresholds, std::vector<double> weights, Envelope asc_env,
             Envelope desc_env, double kappa_asc = 1.0, double kappa_desc = 1.0);

    const std::optional<DensitySpec>& density() const noexcept { return density_; }
    std::span<const double> thresholds() const noexcept { return thresholds_; }
    std::span<const double> weights() const noexcept { return weights_; }
    const Envelope& asc_env() const noexcept { return asc_; }
    const Envelope& desc_env() const noexcept { return desc_; }
    double kappa_asc() const noexcept { return kappa_asc_; }
    double kappa_desc() const noexcept { return kappa_desc_; }
    std::size_t size() const noexcept { return thresholds_.size(); }

    PlayOperatorSpec operator_spec(std::size_t i) const;

    /// Initialize every operator at v0.
    void reset(double v0, double w_init = 0.0);
    bool initialized() const noexcept { return initialized_; }

    /// Step every operator and return the new weighted output.
    double step(double v_prev, double v_curr);

    double output() const noexcept;
    std::span<const double> memories() const noexcept { return w_; }
    std::size_t degenerate_count() const noexcept { return degenerate_; }

private:
    void check_config() const;

    std::optional<DensitySpec> density_;
    std::vector<double> thresholds_;
    std::vector<double> weights_;
    Envelope asc_;
    Envelope desc_;
    double kappa_asc_;
    double kappa_desc_;
    std::vector<double> w_;
    bool initialized_ = false;
    std::size_t degenerate_ = 0;
};

/// Run the model over the trajectory from a fresh reset at the first sample.
/// Returns one output per sample; the model keeps the final state.
std::vector<double> gpi_eval(GpiModel& model, const Trajectory& input, double w_init = 0.0);

// ---------------------------------------------------------------------------
// EGPI model: two GPI submodels with flag-point output switching
// ---------------------------------------------------------------------------

enum class SwitchMode {
    /// Flag on each branch: ascending switches at v >= v_f_asc, non-ascending at v <= v_f_desc.
    TwoFlag,
    /// Ascending always reports submodel 1; non-ascending switches at v <= v_f_desc.
    DescendOnlyFlag,
};

struct FlagPoints {
    std::optional<double> ascending;
    std::optional<double> descending;

    friend bool operator==(const FlagPoints&, const FlagPoints&) = default;
};

/// Which submodel (1 or 2) reports at a sample, given its direction.
int select_submodel(SwitchMode mode, const FlagPoints& flags, bool ascending, double v);

struct EgpiTrace {
    std::vector<double> z;
    std::vector<double> z1;
    std::vector<double> z2;
    std::vector<int> active;
};

/// Two GPI submodels stepped in parallel over the same input. Switching
/// selects the reported output; it never transfers memory between submodels.
class EgpiModel {
public:
    EgpiModel(GpiModel first, GpiModel second, SwitchMode mode, FlagPoints flags);

    const GpiModel& first() const noexcept { return first_; }
    const GpiModel& second() const noexcept { return second_; }
    SwitchMode mode() const noexcept { return mode_; }
    const FlagPoints& flags() const noexcept { return flags_; }

    struct Output {
        double z;
        double z1;
        double z2;
        int active;
    };

    /// Reset both submodels at v0; the first sample counts as non-ascending.
    Output reset(double v0, double w_init = 0.0);
    Output step(double v_prev, double v_curr);

private:
    GpiModel first_;
    GpiModel second_;
    SwitchMode mode_;
    FlagPoints flags_;
};

EgpiTrace egpi_eval(EgpiModel& model, const Trajectory& input, double w_init = 0.0);

}  // namespace egpi
