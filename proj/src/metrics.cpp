#include "egpi/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "egpi/error.hpp"

namespace egpi {

double Metrics::nrmse_or_throw() const
{
    if (!nrmse) {
        throw NrmseUndefinedError("nrmse undefined: measured sequence has zero range");
    }
    return *nrmse;
}

Metrics compute_metrics(std::span<const double> measured, std::span<const double> predicted)
{
    if (measured.empty() || measured.size() != predicted.size()) {
        throw InputError("compute_metrics: sequences must be nonempty and of equal length");
    }
    double sum_sq = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        const double e = measured[i] - predicted[i];
        sum_sq += e * e;
        max_abs = std::max(max_abs, std::abs(e));
    }
    Metrics m;
    m.n = measured.size();
    m.rmse = std::sqrt(sum_sq / static_cast<double>(m.n));
    m.mae = max_abs;
    // sqrt(mean) can round a hair above the max when all |e| are equal.
    m.rmse = std::min(m.rmse, m.mae);
    const auto [lo, hi] = std::minmax_element(measured.begin(), measured.end());
    if (*hi > *lo) {
        m.nrmse = m.rmse / (*hi - *lo) * 100.0;
    }
    return m;
}

}  // namespace egpi
