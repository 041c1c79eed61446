#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace egpi {

/// Fit-quality metrics of a predicted angle sequence against measurements.
///
/// Note: `mae` is the MAXIMUM absolute error, not the mean absolute error.
/// `nrmse` is rmse over the measured range, in percent; it is empty when the
/// measured sequence is constant.
struct Metrics {
    double rmse = 0.0;
    std::optional<double> nrmse;
    double mae = 0.0;
    std::size_t n = 0;

    /// nrmse, or NrmseUndefinedError when the measured range is zero.
    double nrmse_or_throw() const;
};

/// Throws InputError on empty or mismatched sequences.
Metrics compute_metrics(std::span<const double> measured, std::span<const double> predicted);

}  // namespace egpi
