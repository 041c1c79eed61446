#include "egpi/envelope.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "egpi/error.hpp"

namespace egpi {

namespace {

bool finite(double x) { return std::isfinite(x); }

// Beyond this |u| the atanh identity loses too many digits and we polish by bisection.
constexpr double kAtanhEdge = 1.0 - 1e-6;

}  // namespace

Envelope Envelope::linear(double slope, double intercept)
{
    if (!finite(slope) || !finite(intercept)) {
        throw ConfigError("linear envelope: coefficients must be finite");
    }
    if (!(slope > 0.0)) {
        throw ConfigError("linear envelope: slope must be > 0, got " + std::to_string(slope));
    }
    return Envelope(EnvelopeFamily::Linear, slope, intercept, 0.0, 0.0);
}

Envelope Envelope::tanh(double amplitude, double gain, double shift, double offset)
{
    if (!finite(amplitude) || !finite(gain) || !finite(shift) || !finite(offset)) {
        throw ConfigError("tanh envelope: coefficients must be finite");
    }
    if (!(amplitude > 0.0) || !(gain > 0.0)) {
        throw ConfigError("tanh envelope: amplitude and gain must be > 0");
    }
    return Envelope(EnvelopeFamily::Tanh, amplitude, gain, shift, offset);
}

double Envelope::operator()(double v) const noexcept
{
    if (family_ == EnvelopeFamily::Linear) {
        return p_[0] * v + p_[1];
    }
    return p_[0] * std::tanh(p_[1] * v + p_[2]) + p_[3];
}

double Envelope::eval(double v) const
{
    if (!finite(v)) {
        throw DomainError("envelope eval: non-finite input");
    }
    return (*this)(v);
}

double Envelope::derivative(double v) const
{
    if (!finite(v)) {
        throw DomainError("envelope derivative: non-finite input");
    }
    if (family_ == EnvelopeFamily::Linear) {
        return p_[0];
    }
    const double c = std::cosh(p_[1] * v + p_[2]);
    return p_[0] * p_[1] / (c * c);
}

double Envelope::inverse(double y) const
{
    if (!finite(y)) {
        throw DomainError("envelope inverse: non-finite input");
    }
    if (family_ == EnvelopeFamily::Linear) {
        return (y - p_[1]) / p_[0];
    }

    const double u = (y - p_[3]) / p_[0];
    if (!(std::abs(u) < 1.0)) {
        throw RangeError("envelope inverse: " + std::to_string(y) +
                         " outside tanh range (" + std::to_string(p_[3] - p_[0]) + ", " +
                         std::to_string(p_[3] + p_[0]) + ")");
    }
    const double guess = (std::atanh(u) - p_[2]) / p_[1];
    if (std::abs(u) < kAtanhEdge) {
        return guess;
    }

    // Near the asymptotes: bracket around the analytic guess and bisect on eval.
    double step = std::max(1.0, std::abs(guess)) * 1e-3;
    double lo = guess - step;
    double hi = guess + step;
    while ((*this)(lo) > y) {
        step *= 2.0;
        lo = guess - step;
    }
    while ((*this)(hi) < y) {
        step *= 2.0;
        hi = guess + step;
        if (!finite(hi)) {
            return guess;
        }
    }
    for (int i = 0; i < 200 && hi - lo > std::numeric_limits<double>::epsilon() * std::abs(hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((*this)(mid) < y) {
            lo = mid;
        }
        else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double lipschitz_check(const Envelope& env, double lo, double hi, std::size_t grid)
{
    if (!(lo < hi) || grid < 2) {
        throw ConfigError("lipschitz_check: need lo < hi and grid >= 2");
    }
    const double h = (hi - lo) / static_cast<double>(grid - 1);
    double best = 0.0;
    double prev = env.eval(lo);
    for (std::size_t i = 1; i < grid; ++i) {
        const double v = (i + 1 == grid) ? hi : lo + static_cast<double>(i) * h;
        const double cur = env(v);
        const double dv = v - (lo + static_cast<double>(i - 1) * h);
        best = std::max(best, std::abs(cur - prev) / dv);
        prev = cur;
    }
    return best;
}

}  // namespace egpi
