#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "egpi/error.hpp"
#include "egpi/metrics.hpp"
#include "egpi/model.hpp"
#include "egpi/trajectory.hpp"

namespace egpi {

/// Model structure being identified.
///
/// EgpiDescendFlag (11 parameters): both submodels share the ascending
/// envelope a1*v + a2 and the density; submodel 1 descends along a3*v + a4,
/// submodel 2 along a5*v + a6 with its backlash scaled by kappa. Output
/// switches to submodel 2 on non-ascending samples with v <= v_f.
///
/// Gpi (8 parameters): a single bank with a1*v + a2 / a3*v + a4.
enum class FitMode { EgpiDescendFlag, Gpi };

std::string_view to_string(FitMode mode);
FitMode fit_mode_from_string(std::string_view name);

std::size_t parameter_count(FitMode mode);

/// Named view of the identified parameters. Unused fields (a5, a6, kappa in
/// GPI mode) are carried along but never packed.
struct FitParams {
    double a1 = 1.0;
    double a2 = 0.0;
    double a3 = 1.0;
    double a4 = 0.0;
    double a5 = 1.0;
    double a6 = 0.0;
    double lambda = 0.07;
    double sigma = 0.1;
    double r1 = 0.25;
    double rn = 7.25;
    double kappa = 1.0;

    /// Order: a1..a6, lambda, sigma, r1, rn, kappa (EGPI) or a1..a4, lambda, sigma, r1, rn (GPI).
    std::vector<double> pack(FitMode mode) const;
    static FitParams unpack(FitMode mode, std::span<const double> values,
                            const FitParams& base);
    static FitParams unpack(FitMode mode, std::span<const double> values);
    static std::vector<std::string> names(FitMode mode);

    /// Throws ParameterError when any active bound is violated.
    void check_bounds(FitMode mode) const;
    /// Nearest point satisfying every bound.
    FitParams projected(FitMode mode) const;
    bool within_bounds(FitMode mode) const noexcept;

    friend bool operator==(const FitParams&, const FitParams&) = default;
};

/// Assemble the model described by `params`. v_f is ignored in GPI mode.
HysteresisModel build_model(const FitParams& params, FitMode mode, double v_f, std::size_t n = 30);

/// e_i = model(v_i) - theta_i.
std::vector<double> residuals(const FitParams& params, const Trajectory& traj, double v_f,
                              FitMode mode, std::size_t n = 30);

/// L = sum of squared residuals.
double objective(const FitParams& params, const Trajectory& traj, double v_f, FitMode mode,
                 std::size_t n = 30);

/// Central-difference Jacobian of the residuals, one column per packed parameter.
/// Step h_k = max(rel_step*|p_k|, rel_step); one-sided near bounds.
Eigen::MatrixXd jacobian_fd(const FitParams& params, const Trajectory& traj, double v_f,
                            FitMode mode, std::size_t n = 30, double rel_step = 1e-6);

struct FitConfig {
    std::size_t max_iterations = 200;
    double initial_damping = 1e-3;
    double damping_up = 10.0;
    double damping_down = 10.0;
    double rel_loss_tol = 1e-9;
    double grad_tol = 1e-8;
    double fd_step = 1e-6;
    std::size_t n = 30;
    std::optional<double> flag_point;
    std::optional<FitParams> initial;

    void validate() const;
};

struct FitResult {
    FitMode mode = FitMode::EgpiDescendFlag;
    FitParams params;
    double flag_point = 0.0;
    std::size_t n = 30;
    std::vector<double> loss_trace;
    std::size_t iterations = 0;
    bool converged = false;
    std::string reason;
    Metrics metrics;

    double loss() const { return loss_trace.empty() ? 0.0 : loss_trace.back(); }
    HysteresisModel model() const { return build_model(params, mode, flag_point, n); }
};

/// Raised by lm_fit when the damped system cannot be solved; keeps the losses
/// accepted so far.
class LmFailure : public NumericalError {
public:
    LmFailure(const std::string& what, std::vector<double> loss_trace)
        : NumericalError(what), loss_trace_(std::move(loss_trace)) {}
    const std::vector<double>& loss_trace() const noexcept { return loss_trace_; }

private:
    std::vector<double> loss_trace_;
};

/// Heuristic starting point from data: least-squares lines through the
/// ascending upper half (a1, a2), the descending samples above v_f (a3, a4)
/// and at or below v_f (a5, a6); lambda 0.07, sigma 0.1, r1 and rn at 1% and
/// 25% of the input range, kappa 1. GPI mode fits a3, a4 to every descending sample.
FitParams default_initial_guess(const Trajectory& traj, double v_f,
                                FitMode mode = FitMode::EgpiDescendFlag);

/// Levenberg-Marquardt on the sum of squared residuals with Marquardt diagonal
/// scaling and bound projection. Only improving steps are accepted.
FitResult lm_fit(const Trajectory& traj, const FitConfig& config, FitMode mode);

}  // namespace egpi
