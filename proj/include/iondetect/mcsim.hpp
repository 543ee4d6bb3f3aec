#pragma once

#include <cstdint>
#include <string>

#include "iondetect/detmodel.hpp"

namespace iondetect {

enum class McMode { RateEquation, PhotonLevel };

std::string to_string(McMode mode);
McMode parse_mc_mode(const std::string& text);

struct McConfig {
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    McMode mode = McMode::RateEquation;
    InitialState initial = InitialState::Dark;
    unsigned threads = 0;  // 0 = hardware concurrency
};

/// Draws one trajectory's detected photon count for trial index `trial`.
std::int64_t simulate_trial(const LeakParams& params, double eta, const McConfig& config,
                            std::uint64_t trial);

/// Monte Carlo histogram of detected counts with a single leak event per
/// trajectory.
///
/// rate_equation: the leak time is exponential with mean tau_L (recovered as
/// tau_D eta / (alpha lambda0)) and counts are Poisson with the mean
/// accumulated while the ion is bright.
/// photon_level: the ion scatters a Poisson number of photons at the bright
/// rate for the whole window; each scatter leaks with probability alpha and
/// each emitted photon is detected with probability eta.
///
/// Bit-identical for a fixed seed regardless of the thread count.
PhotonHistogram simulate_histogram(const LeakParams& params, double eta, const McConfig& config);

}  // namespace iondetect
