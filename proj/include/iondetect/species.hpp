#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "iondetect/angular.hpp"

namespace iondetect {

// Published values are ordinary frequencies; everything downstream is rad/s.
inline constexpr double mhz_to_rad_s(double mhz) { return 2.0 * std::numbers::pi * 1e6 * mhz; }
inline constexpr double ghz_to_rad_s(double ghz) { return 2.0 * std::numbers::pi * 1e9 * ghz; }
inline constexpr double rad_s_to_mhz(double w) { return w / (2.0 * std::numbers::pi * 1e6); }

/// Data for one excited P_J' line of an ion.
struct ExcitedLine {
    double gamma = 0.0;          // radiative linewidth, rad/s
    double omega_hfp = 0.0;      // excited-level hyperfine splitting, rad/s
    double wavelength_nm = 0.0;  // S1/2 -> P_J' wavelength
};

struct IonSpecies {
    std::string name;
    HalfInt nuclear_spin = HalfInt::half(1);
    double omega_hfs = 0.0;  // ground-state hyperfine splitting, rad/s
    std::optional<ExcitedLine> p32;
    std::optional<ExcitedLine> p12;

    /// The line used by a detection scheme; throws ConfigError when the
    /// species carries no data for it.
    const ExcitedLine& line(Scheme scheme) const;

    /// Throws ConfigError unless all frequencies are positive and finite.
    void validate() const;
};

/// 111Cd+, 171Yb+ and 199Hg+.
const std::vector<IonSpecies>& builtin_species();

/// Looks up a built-in species by name ("Cd111", "cd", "111Cd+", ...).
IonSpecies find_species(const std::string& name);

/// Species documents are JSON objects with units embedded in key names:
///   name, nuclear_spin ("1/2"), hfs_ghz,
///   gamma_p32_mhz, hfp32_mhz, wavelength_p32_nm,
///   gamma_p12_mhz, hfp12_mhz, wavelength_p12_nm.
/// Unknown keys are rejected with ConfigError naming the key.
IonSpecies species_from_json_text(const std::string& text);
std::string species_to_json_text(const IonSpecies& species);

/// A registry document is {"species": [ ... ]}.
std::vector<IonSpecies> registry_from_json_text(const std::string& text);
std::string registry_to_json_text(const std::vector<IonSpecies>& registry);

}  // namespace iondetect
