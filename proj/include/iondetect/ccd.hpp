#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iondetect/detmodel.hpp"

namespace iondetect {

enum class GainDist { Exponential, Fixed };

std::string to_string(GainDist dist);
GainDist parse_gain_dist(const std::string& text);

/// Intensified-CCD readout chain, in super-pixel units after on-chip binning.
struct CcdParams {
    double gain_g = 100.0;            // mean counts per photoelectron
    double readout_rms_r = 2.0;       // counts rms per super-pixel readout
    int bin_factor = 4;               // on-chip binning (bin_factor x bin_factor)
    int roi_super_pixels = 49;        // k: super-pixels integrated per ion
    double offset = 20.0;             // per-super-pixel pedestal, counts
    double counts_per_photon = 100.0; // integrated counts per incident photon
    double psf_sigma = 1.0;           // Gaussian PSF width, super-pixels
    GainDist gain_dist = GainDist::Exponential;

    void validate() const;
};

/// lambda0 / sqrt(lambda0 + (k r / g)^2).
double snr(double lambda0, const CcdParams& params);

/// Intensity of an adjacent ion's fluorescence relative to a saturating
/// laser, 3 lambda^2 / (4 pi x^2). Both lengths in the same unit.
double crosstalk_ratio(double wavelength, double spacing);

struct RoiBox {
    int x0 = 0;
    int y0 = 0;
    int width = 7;
    int height = 7;

    int area() const { return width * height; }
    bool overlaps(const RoiBox& o) const;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct CcdFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> pixels;  // row-major, saturating 16-bit ADC
    CcdParams meta;
    std::uint64_t seed = 0;

    std::uint16_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Geometry and per-ion optics of a register image.
struct RegisterSetup {
    int width = 0;
    int height = 0;
    std::vector<Point> positions;   // ion centres, super-pixel coordinates
    std::vector<RoiBox> rois;       // one per ion, same order
    std::vector<LeakParams> leak;   // per ion; lambda0 is that ion's light level
    double eta = 1e-3;
    CcdParams ccd;
    double crosstalk_eps = 0.0;     // fraction routed into each neighbour's ROI

    std::size_t ions() const { return positions.size(); }
    /// Throws ConfigError on overlapping or out-of-frame ROIs.
    void validate() const;
};

/// Linear chain of n ions, each centred in its own roi_size x roi_size box,
/// boxes adjacent with no overlap.
RegisterSetup linear_chain_setup(const std::vector<LeakParams>& leak, double eta,
                                 const CcdParams& ccd, double crosstalk_eps, int roi_size = 7);

/// Reusable frame generator with per-ion count distributions precomputed.
class FrameSynthesizer {
public:
    explicit FrameSynthesizer(RegisterSetup setup);

    /// states[i] != 0 prepares ion i bright.
    CcdFrame operator()(const std::vector<int>& states, std::uint64_t seed) const;

    const RegisterSetup& setup() const { return setup_; }

private:
    RegisterSetup setup_;
    std::vector<std::vector<double>> dark_cdf_;
    std::vector<std::vector<double>> bright_cdf_;
};

CcdFrame synthesize_frame(const RegisterSetup& setup, const std::vector<int>& states,
                          std::uint64_t seed);

struct RegisterReadout {
    std::vector<double> roi_sums;  // integrated counts minus area x offset
    std::vector<double> thresholds;
    std::vector<int> bits;         // 1 iff roi_sum > threshold
    std::optional<std::vector<int>> truth;
};

RegisterReadout read_register(const CcdFrame& frame, const std::vector<RoiBox>& rois,
                              const std::vector<double>& thresholds);

/// Discriminator that equalizes the fraction of dark samples read bright
/// and bright samples read dark.
double equal_error_threshold(std::vector<double> dark_sums, std::vector<double> bright_sums);

struct CorrelationEntry {
    bool defined = false;
    double conditional = 0.0;  // P(bit_i = 1 | bit_j = 1)
    double marginal = 0.0;     // P(bit_i = 1)
    double deviation = 0.0;    // |conditional - marginal|
    double std_error = 0.0;
};

struct CorrelationMatrix {
    std::size_t ions = 0;
    std::vector<CorrelationEntry> entries;  // row-major (i, j); diagonal undefined

    const CorrelationEntry& at(std::size_t i, std::size_t j) const { return entries[i * ions + j]; }
};

/// Pairwise conditional-probability deviations with binomial standard
/// errors. Requires >= 2 ions and >= 100 readouts.
CorrelationMatrix conditional_correlations(const std::vector<RegisterReadout>& readouts);

/// Fraction of readouts whose bit i matches the prepared state, per ion.
std::vector<double> per_qubit_fidelity(const std::vector<RegisterReadout>& readouts);

/// Calibrate thresholds on all-dark and all-bright frames, then read a
/// register whose qubits are independent fair coin flips.
struct RegisterExperiment {
    std::vector<double> thresholds;
    std::vector<double> calibration_dark_error;
    std::vector<double> calibration_bright_error;
    std::vector<RegisterReadout> readouts;
    CorrelationMatrix correlations;
    std::vector<double> fidelity;

    /// Mean deviation over nearest-neighbour ordered pairs.
    double adjacent_deviation() const;
};

RegisterExperiment run_register_experiment(const RegisterSetup& setup, std::uint64_t trials,
                                           std::uint64_t seed, unsigned threads = 0);

/// Reads a batch of frames for fixed prepared states, frames seeded from
/// (seed, index); used for threshold calibration.
std::vector<std::vector<double>> batch_roi_sums(const FrameSynthesizer& synth,
                                                const std::vector<int>& states,
                                                std::uint64_t count, std::uint64_t seed,
                                                unsigned threads = 0);

}  // namespace iondetect
