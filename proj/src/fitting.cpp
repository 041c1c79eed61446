#include "egpi/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "egpi/error.hpp"

namespace egpi {

namespace {

// Smallest value a strictly positive parameter is projected onto.
constexpr double kPositiveFloor = 1e-9;
constexpr double kMaxDamping = 1e12;

double sum_squares(const std::vector<double>& e)
{
    double s = 0.0;
    for (double x : e) {
        s += x * x;
    }
    return s;
}

struct Line {
    double slope;
    double intercept;
};

Line least_squares_line(std::span<const double> x, std::span<const double> y)
{
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw InitializationError("initial guess: segment has no input variation");
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

}  // namespace

std::string_view to_string(FitMode mode)
{
    return mode == FitMode::Gpi ? "gpi" : "egpi_descend_flag";
}

FitMode fit_mode_from_string(std::string_view name)
{
    if (name == "gpi") {
        return FitMode::Gpi;
    }
    if (name == "egpi" || name == "egpi_descend_flag") {
        return FitMode::EgpiDescendFlag;
    }
    throw ConfigError("unknown fit mode '" + std::string(name) + "' (expected egpi or gpi)");
}

std::size_t parameter_count(FitMode mode)
{
    return mode == FitMode::Gpi ? 8 : 11;
}

// ---------------------------------------------------------------------------
// FitParams
// ---------------------------------------------------------------------------

std::vector<double> FitParams::pack(FitMode mode) const
{
    if (mode == FitMode::Gpi) {
        return {a1, a2, a3, a4, lambda, sigma, r1, rn};
    }
    return {a1, a2, a3, a4, a5, a6, lambda, sigma, r1, rn, kappa};
}

FitParams FitParams::unpack(FitMode mode, std::span<const double> values, const FitParams& base)
{
    if (values.size() != parameter_count(mode)) {
        throw ParameterError("parameter vector has wrong length for mode " +
                             std::string(to_string(mode)));
    }
    FitParams p = base;
    p.a1 = values[0];
    p.a2 = values[1];
    p.a3 = values[2];
    p.a4 = values[3];
    std::size_t k = 4;
    if (mode == FitMode::EgpiDescendFlag) {
        p.a5 = values[4];
        p.a6 = values[5];
        k = 6;
    }
    p.lambda = values[k];
    p.sigma = values[k + 1];
    p.r1 = values[k + 2];
    p.rn = values[k + 3];
    if (mode == FitMode::EgpiDescendFlag) {
        p.kappa = values[k + 4];
    }
    return p;
}

FitParams FitParams::unpack(FitMode mode, std::span<const double> values)
{
    return unpack(mode, values, FitParams{});
}

std::vector<std::string> FitParams::names(FitMode mode)
{
    if (mode == FitMode::Gpi) {
        return {"a1", "a2", "a3", "a4", "lambda", "sigma", "r1", "rn"};
    }
    return {"a1", "a2", "a3", "a4", "a5", "a6", "lambda", "sigma", "r1", "rn", "kappa"};
}

bool FitParams::within_bounds(FitMode mode) const noexcept
{
    for (double x : pack(mode)) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    const bool common = a1 > 0.0 && a3 > 0.0 && lambda > 0.0 && sigma >= 0.0 && r1 > 0.0 &&
                        rn >= r1;
    if (mode == FitMode::Gpi) {
        return common;
    }
    return common && a5 > 0.0 && kappa > 0.0;
}

void FitParams::check_bounds(FitMode mode) const
{
    if (!within_bounds(mode)) {
        throw ParameterError(
            "parameters out of bounds (need a1, a3, a5, lambda, r1, kappa > 0, sigma >= 0, "
            "rn >= r1, all finite)");
    }
}

FitParams FitParams::projected(FitMode mode) const
{
    FitParams p = *this;
    p.a1 = std::max(p.a1, kPositiveFloor);
    p.a3 = std::max(p.a3, kPositiveFloor);
    p.lambda = std::max(p.lambda, kPositiveFloor);
    p.sigma = std::max(p.sigma, 0.0);
    p.r1 = std::max(p.r1, kPositiveFloor);
    p.rn = std::max(p.rn, p.r1);
    if (mode == FitMode::EgpiDescendFlag) {
        p.a5 = std::max(p.a5, kPositiveFloor);
        p.kappa = std::max(p.kappa, kPositiveFloor);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Model assembly and residuals
// ---------------------------------------------------------------------------

HysteresisModel build_model(const FitParams& params, FitMode mode, double v_f, std::size_t n)
{
    params.check_bounds(mode);
    const DensitySpec density{params.lambda, params.sigma, params.r1, params.rn, n};
    const Envelope ascending = Envelope::linear(params.a1, params.a2);
    GpiModel first(density, ascending, Envelope::linear(params.a3, params.a4));
    if (mode == FitMode::Gpi) {
        return first;
    }
    GpiModel second(density, ascending, Envelope::linear(params.a5, params.a6), 1.0, params.kappa);
    return EgpiModel(std::move(first), std::move(second), SwitchMode::DescendOnlyFlag,
                     FlagPoints{std::nullopt, v_f});
}

std::vector<double> residuals(const FitParams& params, const Trajectory& traj, double v_f,
                              FitMode mode, std::size_t n)
{
    if (!traj.has_theta()) {
        throw InputError("residuals: trajectory has no measured output");
    }
    HysteresisModel model = build_model(params, mode, v_f, n);
    std::vector<double> e = evaluate(model, traj).z;
    const auto& theta = *traj.theta;
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] -= theta[i];
    }
    return e;
}

double objective(const FitParams& params, const Trajectory& traj, double v_f, FitMode mode,
                 std::size_t n)
{
    return sum_squares(residuals(params, traj, v_f, mode, n));
}

Eigen::MatrixXd jacobian_fd(const FitParams& params, const Trajectory& traj, double v_f,
                            FitMode mode, std::size_t n, double rel_step)
{
    params.check_bounds(mode);
    const std::vector<double> p0 = params.pack(mode);
    const std::size_t m = traj.size();
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p0.size()));

    std::optional<std::vector<double>> base;
    const auto at = [&](std::size_t k, double value) -> std::optional<FitParams> {
        std::vector<double> p = p0;
        p[k] = value;
        FitParams q = FitParams::unpack(mode, p, params);
        if (!q.within_bounds(mode)) {
            return std::nullopt;
        }
        return q;
    };

    for (std::size_t k = 0; k < p0.size(); ++k) {
        const double h = std::max(rel_step * std::abs(p0[k]), rel_step);
        const auto plus = at(k, p0[k] + h);
        const auto minus = at(k, p0[k] - h);
        std::vector<double> hi;
        std::vector<double> lo;
        double denom = 0.0;
        if (plus && minus) {
            hi = residuals(*plus, traj, v_f, mode, n);
            lo = residuals(*minus, traj, v_f, mode, n);
            denom = 2.0 * h;
        }
        else {
            if (!base) {
                base = residuals(params, traj, v_f, mode, n);
            }
            if (plus) {
                hi = residuals(*plus, traj, v_f, mode, n);
                lo = *base;
            }
            else if (minus) {
                hi = *base;
                lo = residuals(*minus, traj, v_f, mode, n);
            }
            else {
                // Pinned between two active bounds (r1 = rn at the floor).
                jac.col(static_cast<Eigen::Index>(k)).setZero();
                continue;
            }
            denom = h;
        }
        for (std::size_t i = 0; i < m; ++i) {
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                (hi[i] - lo[i]) / denom;
        }
    }
    return jac;
}

// ---------------------------------------------------------------------------
// Initial guess
// ---------------------------------------------------------------------------

FitParams default_initial_guess(const Trajectory& traj, double v_f, FitMode mode)
{
    traj.validate();
    if (!traj.has_theta()) {
        throw InputError("initial guess: trajectory has no measured output");
    }
    const auto& v = traj.v;
    const auto& theta = *traj.theta;

    std::vector<std::size_t> up;
    std::vector<std::size_t> down;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[i - 1]) {
            up.push_back(i);
        }
        else if (v[i] < v[i - 1]) {
            down.push_back(i);
        }
    }
    if (up.empty() || down.empty()) {
        throw InitializationError("initial guess: data needs both ascending and descending samples");
    }

    const auto fit_subset = [&](const std::vector<std::size_t>& idx, const char* what) {
        if (idx.size() < 3) {
            throw InitializationError(std::string("initial guess: too few samples in ") + what);
        }
        std::vector<double> x;
        std::vector<double> y;
        for (std::size_t i : idx) {
            x.push_back(v[i]);
            y.push_back(theta[i]);
        }
        return least_squares_line(x, y);
    };

    double up_lo = std::numeric_limits<double>::infinity();
    double up_hi = -up_lo;
    for (std::size_t i : up) {
        up_lo = std::min(up_lo, v[i]);
        up_hi = std::max(up_hi, v[i]);
    }
    const double up_mid = 0.5 * (up_lo + up_hi);
    std::vector<std::size_t> upper_half;
    std::copy_if(up.begin(), up.end(), std::back_inserter(upper_half),
                 [&](std::size_t i) { return v[i] >= up_mid; });

    const auto [vmin, vmax] = std::minmax_element(v.begin(), v.end());
    const auto [tmin, tmax] = std::minmax_element(theta.begin(), theta.end());
    const double range = *vmax - *vmin;
    // Fallback slope when a regression comes out non-increasing.
    const double fallback_slope = std::max((*tmax - *tmin) / range, 1e-3);
    const auto positive = [&](Line l, std::span<const std::size_t> idx) {
        if (l.slope > 0.0) {
            return l;
        }
        double mx = 0.0;
        double my = 0.0;
        for (std::size_t i : idx) {
            mx += v[i];
            my += theta[i];
        }
        mx /= static_cast<double>(idx.size());
        my /= static_cast<double>(idx.size());
        return Line{fallback_slope, my - fallback_slope * mx};
    };

    FitParams p;
    const Line asc = positive(fit_subset(upper_half, "ascending upper half"), upper_half);
    p.a1 = asc.slope;
    p.a2 = asc.intercept;

    if (mode == FitMode::Gpi) {
        const Line desc = positive(fit_subset(down, "descending segment"), down);
        p.a3 = desc.slope;
        p.a4 = desc.intercept;
    }
    else {
        std::vector<std::size_t> above;
        std::vector<std::size_t> below;
        for (std::size_t i : down) {
            (v[i] > v_f ? above : below).push_back(i);
        }
        const Line d1 = positive(fit_subset(above, "descending segment above the flag point"), above);
        const Line d2 = positive(fit_subset(below, "descending segment below the flag point"), below);
        p.a3 = d1.slope;
        p.a4 = d1.intercept;
        p.a5 = d2.slope;
        p.a6 = d2.intercept;
    }
    p.lambda = 0.07;
    p.sigma = 0.1;
    p.r1 = 0.01 * range;
    p.rn = 0.25 * range;
    p.kappa = 1.0;
    return p.projected(mode);
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt
// ---------------------------------------------------------------------------

void FitConfig::validate() const
{
    const bool ok = max_iterations >= 1 && initial_damping > 0.0 && damping_up > 1.0 &&
                    damping_down > 1.0 && rel_loss_tol > 0.0 && grad_tol > 0.0 &&
                    fd_step > 0.0 && n >= 1 && (!flag_point || std::isfinite(*flag_point));
    if (!ok) {
        throw ConfigError("fit config: tolerances, damping and step must be positive, "
                          "damping factors > 1, max_iterations and n >= 1");
    }
}

FitResult lm_fit(const Trajectory& traj, const FitConfig& config, FitMode mode)
{
    config.validate();
    traj.validate();
    if (!traj.has_theta()) {
        throw InputError("lm_fit: trajectory has no measured output");
    }
    const std::size_t np = parameter_count(mode);
    if (traj.size() < 2 * np) {
        throw InputError("lm_fit: need at least " + std::to_string(2 * np) + " samples");
    }
    const auto [vmin, vmax] = std::minmax_element(traj.v.begin(), traj.v.end());
    if (!(*vmax > *vmin)) {
        throw InputError("lm_fit: input is constant");
    }
    if (mode == FitMode::EgpiDescendFlag && !config.flag_point) {
        throw ConfigError("lm_fit: EGPI fitting needs a flag point");
    }
    const double v_f = config.flag_point.value_or(0.0);

    FitResult result;
    result.mode = mode;
    result.flag_point = v_f;
    result.n = config.n;

    const auto loss_of = [](const std::vector<double>& e) { return sum_squares(e); };
    const auto to_eigen = [](const std::vector<double>& e) {
        return Eigen::Map<const Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size()));
    };

    FitParams p = (config.initial ? *config.initial : default_initial_guess(traj, v_f, mode))
                      .projected(mode);
    std::vector<double> e = residuals(p, traj, v_f, mode, config.n);
    double loss = loss_of(e);
    result.loss_trace.push_back(loss);

    double mu = config.initial_damping;
    Eigen::VectorXd scale = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(np));
    result.reason = "maximum iterations reached";

    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        if (loss == 0.0) {
            result.converged = true;
            result.reason = "zero residual";
            break;
        }
        const Eigen::MatrixXd jac = jacobian_fd(p, traj, v_f, mode, config.n, config.fd_step);
        const Eigen::VectorXd grad = jac.transpose() * to_eigen(e);
        if (grad.lpNorm<Eigen::Infinity>() < config.grad_tol) {
            result.converged = true;
            result.reason = "gradient tolerance";
            break;
        }
        ++result.iterations;
        const Eigen::MatrixXd normal = jac.transpose() * jac;
        // Marquardt scaling uses the running maximum of diag(J^T J) so columns
        // that momentarily vanish still receive damping.
        scale = scale.cwiseMax(normal.diagonal());
        const double floor = std::max(scale.maxCoeff() * 1e-12, std::numeric_limits<double>::min());
        const Eigen::VectorXd damp = scale.cwiseMax(floor);

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd system = normal;
            system.diagonal() += mu * damp;
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
            Eigen::VectorXd delta;
            bool solved = ldlt.info() == Eigen::Success && ldlt.isPositive();
            if (solved) {
                delta = ldlt.solve(-grad);
                solved = delta.allFinite();
            }
            if (!solved) {
                mu *= config.damping_up;
                if (mu > kMaxDamping) {
                    throw LmFailure("lm_fit: damped normal system singular beyond damping 1e12",
                                    result.loss_trace);
                }
                continue;
            }

            std::vector<double> packed = p.pack(mode);
            for (std::size_t k = 0; k < np; ++k) {
                packed[k] += delta(static_cast<Eigen::Index>(k));
            }
            const FitParams candidate = FitParams::unpack(mode, packed, p).projected(mode);
            std::vector<double> e_new = residuals(candidate, traj, v_f, mode, config.n);
            const double loss_new = loss_of(e_new);
            if (loss_new < loss) {
                accepted = true;
                const double rel = (loss - loss_new) / loss;
                p = candidate;
                e = std::move(e_new);
                loss = loss_new;
                result.loss_trace.push_back(loss);
                mu = std::max(mu / config.damping_down, 1e-15);
                if (rel < config.rel_loss_tol) {
                    result.converged = true;
                    result.reason = "relative loss tolerance";
                }
            }
            else {
                mu *= config.damping_up;
                if (mu > kMaxDamping) {
                    result.converged = true;
                    result.reason = "no improving step at maximum damping";
                    break;
                }
            }
        }
        if (result.converged) {
            break;
        }
    }

    result.params = p;
    HysteresisModel fitted = build_model(p, mode, v_f, config.n);
    const EgpiTrace out = evaluate(fitted, traj);
    result.metrics = compute_metrics(*traj.theta, out.z);
    return result;
}

}  // namespace egpi
