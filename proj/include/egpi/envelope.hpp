#pragma once

#include <cstddef>

namespace egpi {

enum class EnvelopeFamily { Linear, Tanh };

/// Strictly increasing scalar function bounding one branch of a play operator.
///
/// Linear:  gamma(v) = a*v + b,                 a > 0
/// Tanh:    gamma(v) = c*tanh(d*v + e) + f,     c > 0, d > 0
///
/// Construction validates the monotonicity constraints; an Envelope that
/// exists is always invertible on its range.
class Envelope {
public:
    static Envelope linear(double slope, double intercept);
    static Envelope tanh(double amplitude, double gain, double shift, double offset);

    /// Identity envelope gamma(v) = v; reduces a generalized play to the classical one.
    static Envelope identity() { return linear(1.0, 0.0); }

    EnvelopeFamily family() const noexcept { return family_; }

    // Linear coefficients (valid for Linear only).
    double slope() const noexcept { return p_[0]; }
    double intercept() const noexcept { return p_[1]; }

    // Tanh coefficients (valid for Tanh only).
    double amplitude() const noexcept { return p_[0]; }
    double gain() const noexcept { return p_[1]; }
    double shift() const noexcept { return p_[2]; }
    double offset() const noexcept { return p_[3]; }

    /// gamma(v). Throws DomainError for non-finite v.
    double eval(double v) const;

    /// Unchecked evaluation for hot loops; caller guarantees v is finite.
    double operator()(double v) const noexcept;

    double derivative(double v) const;

    /// v such that gamma(v) == y. Throws RangeError when y is outside the open range.
    double inverse(double y) const;

    friend bool operator==(const Envelope&, const Envelope&) = default;

private:
    Envelope(EnvelopeFamily family, double p0, double p1, double p2, double p3)
        : family_(family), p_{p0, p1, p2, p3} {}

    EnvelopeFamily family_;
    double p_[4];
};

/// Largest finite-difference slope of `env` on a uniform grid over [lo, hi].
/// Diagnostic only; no bound is enforced anywhere.
double lipschitz_check(const Envelope& env, double lo, double hi, std::size_t grid);

}  // namespace egpi
