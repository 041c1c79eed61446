#pragma once

#include <cstdint>
#include <vector>

#include "egpi/model.hpp"
#include "egpi/trajectory.hpp"

namespace egpi {

/// v(t) = 8 exp(-0.04 t) sin(2 pi t + pi/4), sampled every dt on [t_start, t_end].
Trajectory decaying_sinusoid(double t_start = 0.0, double t_end = 10.0, double dt = 0.001);

/// Value of the decaying sinusoid at t.
double decaying_sinusoid_value(double t);

/// Linear rise from v_lo to v_hi followed by a linear fall back to v_lo,
/// `samples` points spread uniformly over `duration` seconds.
Trajectory rise_fall_sweep(double v_lo, double v_hi, std::size_t samples, double duration = 10.0);

/// Multi-ramp profile: ramps between consecutive levels at `rate` (input units per
/// second), each followed by a dwell of `dwell` seconds, sampled every dt.
Trajectory staircase(const std::vector<double>& levels, double rate, double dwell, double dt);

/// 1% of the largest absolute finite-difference rate in the trajectory.
double default_flag_eps(const Trajectory& traj);

/// Input value at the first rest point following motion.
///
/// The rate at interior sample i is the central difference
/// (v[i+1] - v[i-1]) / (t[i+1] - t[i-1]); the last sample uses the backward
/// difference. Leading samples at rest are skipped; the first sample with
/// |rate| < eps after at least one moving sample is returned. Throws
/// DetectionError when no such sample exists.
double detect_flag_point(const Trajectory& traj, double eps);

/// theta = model output + N(0, noise_std^2) drawn from a stream seeded with `seed`.
/// Deterministic for identical arguments.
Trajectory gen_synthetic(const EgpiModel& model, const Trajectory& traj, double noise_std,
                         std::uint64_t seed);
Trajectory gen_synthetic(const HysteresisModel& model, const Trajectory& traj, double noise_std,
                         std::uint64_t seed);

}  // namespace egpi
