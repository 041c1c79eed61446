#include "egpi/trajectory.hpp"

#include <cmath>
#include <string>

#include "egpi/error.hpp"

namespace egpi {

void Trajectory::validate() const
{
    if (t.empty()) {
        throw InputError("trajectory is empty");
    }
    if (v.size() != t.size()) {
        throw InputError("trajectory: t and v lengths differ");
    }
    if (theta && theta->size() != t.size()) {
        throw InputError("trajectory: theta length differs from t");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(v[i]) || (theta && !std::isfinite((*theta)[i]))) {
            throw InputError("trajectory: non-finite value at sample " + std::to_string(i));
        }
        if (i > 0 && !(t[i] > t[i - 1])) {
            throw InputError("trajectory: timestamps not strictly increasing at sample " +
                             std::to_string(i));
        }
    }
}

Trajectory Trajectory::absolute() const
{
    Trajectory out = *this;
    for (double& x : out.v) {
        x = std::abs(x);
    }
    if (out.theta) {
        for (double& x : *out.theta) {
            x = std::abs(x);
        }
    }
    return out;
}

}  // namespace egpi
