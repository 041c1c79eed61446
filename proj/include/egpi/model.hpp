#pragma once

#include <variant>

#include "egpi/operators.hpp"

namespace egpi {

/// Any model the toolkit can evaluate, fit or serialize.
using HysteresisModel = std::variant<GpiModel, EgpiModel>;

/// Evaluate either model kind. A GPI model reports z1 = z2 = z and active = 1.
EgpiTrace evaluate(HysteresisModel& model, const Trajectory& input, double w_init = 0.0);

}  // namespace egpi
