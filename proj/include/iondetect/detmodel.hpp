#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iondetect/angular.hpp"
#include "iondetect/species.hpp"

namespace iondetect {

struct DetectionConfig {
    Scheme scheme = Scheme::P32;
    double s = 0.0;        // saturation parameter I / I_sat
    double delta = 0.0;    // laser detuning, rad/s
    double tau_d = 0.0;    // detection time, s
    double eta = 1.0;      // total collection efficiency
    double p_pi = 0.0;     // pi-polarized power fraction
    double p_minus = 0.0;  // sigma- power fraction

    /// Throws DomainError on any violated invariant.
    void validate() const;
};

/// Mean detected bright-state counts and per-emitted-photon leak probabilities.
struct LeakParams {
    double lambda0 = 0.0;
    double alpha1 = 0.0;  // dark -> bright
    double alpha2 = 0.0;  // bright -> dark
};

/// Derives (lambda0, alpha1, alpha2) from atomic data and laser settings.
LeakParams detection_params(const IonSpecies& species, const DetectionConfig& config);

/// Low-intensity, zero-detuning, pure-polarization leak floors (alpha1, alpha2)
/// for a scheme; lambda0 is left at zero.
LeakParams ideal_leak_floor(const IonSpecies& species, Scheme scheme);

/// Mean leak times implied by the per-photon leak probabilities,
/// tau_L = tau_D eta / (alpha lambda0). Infinite when alpha is zero.
double dark_leak_time(const LeakParams& p, double eta, double tau_d);
double bright_leak_time(const LeakParams& p, double eta, double tau_d);

/// Continuous part g(lambda) of the Poisson-mean distribution for a dark ion
/// on (0, lambda0].
double dark_leak_density(double lambda, const LeakParams& p, double eta);

/// Probability exp(-alpha1 lambda0 / eta) that a dark ion never leaks.
double dark_point_mass(const LeakParams& p, double eta);

double p_dark(std::int64_t n, const LeakParams& p, double eta);
double p_bright(std::int64_t n, const LeakParams& p, double eta);

/// p_dark / p_bright for n = 0..n_max (inclusive).
std::vector<double> dark_distribution(const LeakParams& p, double eta, std::int64_t n_max);
std::vector<double> bright_distribution(const LeakParams& p, double eta, std::int64_t n_max);

enum class HistogramKind { Analytic, Simulated, Measured };
enum class InitialState { Dark, Bright };

std::string to_string(HistogramKind kind);
std::string to_string(InitialState state);
InitialState parse_initial_state(const std::string& text);

/// Counts or probabilities indexed by photon number.
struct PhotonHistogram {
    std::vector<double> values;
    std::optional<std::uint64_t> trials;
    HistogramKind kind = HistogramKind::Analytic;
    std::optional<std::uint64_t> seed;
    std::string mode;

    double total() const;
    double mean() const;
    std::vector<double> probabilities() const;

    /// Checks the kind-specific sum invariant; throws DomainError.
    void validate() const;
};

/// Closed-form histogram truncated at histogram_nmax(lambda0).
PhotonHistogram analytic_histogram(const LeakParams& p, double eta, InitialState initial);

/// Total-variation distance, zero-padding the shorter distribution.
double total_variation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace iondetect
