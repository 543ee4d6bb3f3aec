#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iondetect/detmodel.hpp"

namespace iondetect {

/// One discriminator setting: counts <= d read dark, counts > d read bright.
struct DiscriminationResult {
    std::int64_t d = 0;
    double lambda0_opt = 0.0;
    double fidelity = 0.0;  // min(dark_fidelity, bright_fidelity)
    double dark_fidelity = 0.0;
    double bright_fidelity = 0.0;
};

DiscriminationResult fidelity_at(std::int64_t d, const LeakParams& params, double eta);

/// Exhaustive scan of d in [0, histogram_nmax(lambda0)] at fixed lambda0.
DiscriminationResult best_threshold(const LeakParams& params, double eta);

/// Joint maximization over light level and threshold with the leak
/// probabilities at their s -> 0, delta = 0, pure-polarization floor.
/// lambda0 is searched on (0, 3 ln(eta/alpha1)] with a 200-point grid
/// refined by golden-section search to 1e-4 relative.
DiscriminationResult optimize_detection(const IonSpecies& species, Scheme scheme, double eta);

/// Same search for explicit leak floors (lambda0 field ignored).
DiscriminationResult optimize_light_level(const LeakParams& floor, double eta);

struct ApproxFidelity {
    double fidelity = 0.0;
    double lambda0 = 0.0;  // ln(eta / alpha1)
};

/// Small-leak, d = 0 approximation 1 - (alpha1/eta) ln(eta/alpha1).
ApproxFidelity approx_fidelity(double eta, double alpha1);

/// Upper bound 1 - (4/9)(gamma / 2 omega_hfp)^2 for direct clock-state
/// detection through P3/2.
double max_clock_fidelity(double gamma, double omega_hfp);

struct ClockStateFidelity {
    double max_fidelity = 0.0;             // preparation-loss limit
    DiscriminationResult discrimination;   // optimized threshold readout
    double total = 0.0;                    // product of the two
};

ClockStateFidelity clock_state_fidelity(const IonSpecies& species, double eta);

struct CurveRow {
    double eta = 0.0;
    double infidelity_numeric = 0.0;
    double infidelity_approx = 0.0;
    double lambda0_opt = 0.0;
    std::int64_t d_opt = 0;
};

/// One row per eta, evaluated concurrently and returned in input order.
std::vector<CurveRow> fidelity_curve(const IonSpecies& species, Scheme scheme,
                                     const std::vector<double>& eta_grid);

struct Table1Row {
    std::string species;
    double eta = 0.0;
    DiscriminationResult result;
};

/// P1/2-scheme fidelities for every built-in species with P1/2 data at
/// eta in {0.001, 0.01, 0.3}.
std::vector<Table1Row> p12_fidelity_table();

}  // namespace iondetect
