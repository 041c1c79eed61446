#pragma once

// Seeded identification fixture: descend-only EGPI with linear envelopes,
// rise-fall sweep 0 -> 10 -> 0 over N = 5000 samples, flag point at v = 4.

#include <cstdint>
#include <random>

#include "egpi/fitting.hpp"
#include "egpi/signals.hpp"

namespace fixture {

inline constexpr double kFlagPoint = 4.0;
inline constexpr std::size_t kSamples = 5000;
inline constexpr double kNoise = 0.1;

/// Envelope coefficients are drawn so that each descending line sits 1 to 3
/// degrees above the previous branch at the segment boundary, keeping three
/// distinct slopes in the loop.
inline egpi::FitParams truth(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    egpi::FitParams p;
    p.a1 = u(1.5, 2.5);
    p.a2 = u(-1.0, 1.0);
    p.a3 = u(2.2, 2.8);
    p.a4 = p.a1 * 10.0 + p.a2 - p.a3 * 10.0 + u(1.0, 3.0);
    p.a5 = u(1.0, 1.5);
    p.a6 = p.a3 * kFlagPoint + p.a4 - p.a5 * kFlagPoint + u(1.0, 3.0);
    p.kappa = u(2.0, 3.0);
    p.lambda = 0.05;
    p.sigma = 0.2;
    p.r1 = 0.2;
    p.rn = 3.0;
    return p;
}

inline egpi::Trajectory input(std::size_t samples = kSamples)
{
    return egpi::rise_fall_sweep(0.0, 10.0, samples);
}

/// Clean and noisy datasets for one seed.
struct Data {
    egpi::FitParams params;
    egpi::Trajectory clean;
    egpi::Trajectory noisy;
};

inline Data make(std::uint64_t seed, std::size_t samples = kSamples, double noise = kNoise)
{
    Data d;
    d.params = truth(seed);
    const auto model = egpi::build_model(d.params, egpi::FitMode::EgpiDescendFlag, kFlagPoint);
    const auto in = input(samples);
    d.clean = egpi::gen_synthetic(model, in, 0.0, seed);
    d.noisy = egpi::gen_synthetic(model, in, noise, seed);
    return d;
}

}  // namespace fixture
