#include "iondetect/ccd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "iondetect/errors.hpp"
#include "iondetect/rng.hpp"
#include "iondetect/specfun.hpp"
#include "parallel.hpp"

namespace iondetect {

std::string to_string(GainDist dist)
{
    return dist == GainDist::Exponential ? "exponential" : "fixed";
}

GainDist parse_gain_dist(const std::string& text)
{
    if (text == "exponential")
        return GainDist::Exponential;
    if (text == "fixed")
        return GainDist::Fixed;
    throw ConfigError("gain_dist must be 'exponential' or 'fixed', got '" + text + "'");
}

void CcdParams::validate() const
{
    if (!(gain_g > 0.0))
        throw ConfigError("ccd gain_g must be > 0");
    if (!(readout_rms_r >= 0.0))
        throw ConfigError("ccd readout_rms_r must be >= 0");
    if (bin_factor < 1)
        throw ConfigError("ccd bin_factor must be >= 1");
    if (roi_super_pixels < 1)
        throw ConfigError("ccd roi_super_pixels must be >= 1");
    if (!(offset >= 0.0))
        throw ConfigError("ccd offset must be >= 0");
    if (!(counts_per_photon >= 0.0))
        throw ConfigError("ccd counts_per_photon must be >= 0");
    if (!(psf_sigma >= 0.0))
        throw ConfigError("ccd psf_sigma must be >= 0");
}

double snr(double lambda0, const CcdParams& params)
{
    if (!(lambda0 >= 0.0) || !(params.readout_rms_r >= 0.0) || !(params.gain_g > 0.0) ||
        params.roi_super_pixels < 1)
        throw DomainError("snr: lambda0, r must be >= 0, g > 0 and k >= 1");
    if (lambda0 == 0.0)
        return 0.0;
    const double noise = params.roi_super_pixels * params.readout_rms_r / params.gain_g;
    return lambda0 / std::sqrt(lambda0 + noise * noise);
}

double crosstalk_ratio(double wavelength, double spacing)
{
    if (!(wavelength > 0.0) || !(spacing > 0.0))
        throw DomainError("crosstalk_ratio: wavelength and spacing must be positive");
    return 3.0 * wavelength * wavelength / (4.0 * std::numbers::pi * spacing * spacing);
}

bool RoiBox::overlaps(const RoiBox& o) const
{
    return x0 < o.x0 + o.width && o.x0 < x0 + width && y0 < o.y0 + o.height &&
           o.y0 < y0 + height;
}

namespace {

void check_rois(const std::vector<RoiBox>& rois, int width, int height)
{
    for (std::size_t i = 0; i < rois.size(); ++i) {
        const RoiBox& r = rois[i];
        if (r.width < 1 || r.height < 1 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.width > width ||
            r.y0 + r.height > height)
            throw ConfigError("ROI " + std::to_string(i) + " lies outside the frame");
        for (std::size_t j = 0; j < i; ++j)
            if (r.overlaps(rois[j]))
                throw ConfigError("ROIs " + std::to_string(j) + " and " + std::to_string(i) +
                                  " overlap");
    }
}

}  // namespace

void RegisterSetup::validate() const
{
    if (width < 1 || height < 1)
        throw ConfigError("frame dimensions must be positive");
    if (positions.empty())
        throw ConfigError("register needs at least one ion");
    if (rois.size() != positions.size() || leak.size() != positions.size())
        throw ConfigError("positions, rois and leak parameters must have one entry per ion");
    for (const Point& p : positions)
        if (!(p.x >= 0.0 && p.x < width && p.y >= 0.0 && p.y < height))
            throw ConfigError("ion position lies outside the frame");
    check_rois(rois, width, height);
    if (!(eta > 0.0 && eta <= 1.0))
        throw ConfigError("eta must lie in (0, 1]");
    if (!(crosstalk_eps >= 0.0 && crosstalk_eps <= 0.5))
        throw ConfigError("crosstalk_eps must lie in [0, 0.5]");
    ccd.validate();
}

RegisterSetup linear_chain_setup(const std::vector<LeakParams>& leak, double eta,
                                 const CcdParams& ccd, double crosstalk_eps, int roi_size)
{
    RegisterSetup s;
    const int n = static_cast<int>(leak.size());
    s.width = n * roi_size;
    s.height = roi_size;
    for (int i = 0; i < n; ++i) {
        s.positions.push_back({i * roi_size + 0.5 * roi_size, 0.5 * roi_size});
        s.rois.push_back({i * roi_size, 0, roi_size, roi_size});
    }
    s.leak = leak;
    s.eta = eta;
    s.ccd = ccd;
    s.ccd.roi_super_pixels = roi_size * roi_size;
    s.crosstalk_eps = crosstalk_eps;
    return s;
}

namespace {

std::vector<double> cumulative(std::vector<double> p)
{
    std::partial_sum(p.begin(), p.end(), p.begin());
    return p;
}

std::int64_t sample_cdf(const std::vector<double>& cdf, double u)
{
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end())
        return static_cast<std::int64_t>(cdf.size()) - 1;
    return it - cdf.begin();
}

}  // namespace

FrameSynthesizer::FrameSynthesizer(RegisterSetup setup) : setup_(std::move(setup))
{
    setup_.validate();
    for (const LeakParams& p : setup_.leak) {
        const std::int64_t n_max = histogram_nmax(p.lambda0);
        dark_cdf_.push_back(cumulative(dark_distribution(p, setup_.eta, n_max)));
        bright_cdf_.push_back(cumulative(bright_distribution(p, setup_.eta, n_max)));
    }
}

CcdFrame FrameSynthesizer::operator()(const std::vector<int>& states, std::uint64_t seed) const
{
    const RegisterSetup& s = setup_;
    const std::size_t ions = s.ions();
    if (states.size() != ions)
        throw ConfigError("state string length does not match the number of ions");

    StreamRng rng(seed, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::exponential_distribution<double> gain(1.0);
    const CcdParams& ccd = s.ccd;
    std::vector<double> image(static_cast<std::size_t>(s.width) * s.height, 0.0);

    auto deposit = [&](const Point& centre) {
        const double x = centre.x + ccd.psf_sigma * gauss(rng);
        const double y = centre.y + ccd.psf_sigma * gauss(rng);
        // Exponential(g) / g: the mean per-photon signal is counts_per_photon
        // and g only shapes the fluctuations.
        const double amount = ccd.counts_per_photon *
                              (ccd.gain_dist == GainDist::Exponential ? gain(rng) : 1.0);
        if (x < 0.0 || y < 0.0 || x >= s.width || y >= s.height)
            return;  // spills off the imaged area
        image[static_cast<std::size_t>(y) * s.width + static_cast<std::size_t>(x)] += amount;
    };

    for (std::size_t i = 0; i < ions; ++i) {
        const auto& cdf = states[i] ? bright_cdf_[i] : dark_cdf_[i];
        const std::int64_t photons = sample_cdf(cdf, rng.uniform());
        const bool has_left = i > 0;
        const bool has_right = i + 1 < ions;
        for (std::int64_t k = 0; k < photons; ++k) {
            const double u = rng.uniform();
            std::size_t target = i;
            if (has_left && u < s.crosstalk_eps)
                target = i - 1;
            else if (has_right && u >= (has_left ? s.crosstalk_eps : 0.0) &&
                     u < (has_left ? 2.0 : 1.0) * s.crosstalk_eps)
                target = i + 1;
            deposit(s.positions[target]);
        }
    }

    CcdFrame frame;
    frame.width = s.width;
    frame.height = s.height;
    frame.meta = ccd;
    frame.seed = seed;
    frame.pixels.resize(image.size());
    for (std::size_t p = 0; p < image.size(); ++p) {
        double v = image[p] + ccd.offset;
        if (ccd.readout_rms_r > 0.0)
            v += ccd.readout_rms_r * gauss(rng);
        v = std::clamp(std::round(v), 0.0, 65535.0);
        frame.pixels[p] = static_cast<std::uint16_t>(v);
    }
    return frame;
}

CcdFrame synthesize_frame(const RegisterSetup& setup, const std::vector<int>& states,
                          std::uint64_t seed)
{
    return FrameSynthesizer(setup)(states, seed);
}

RegisterReadout read_register(const CcdFrame& frame, const std::vector<RoiBox>& rois,
                              const std::vector<double>& thresholds)
{
    if (thresholds.size() != rois.size())
        throw ConfigError("one threshold per ROI is required");
    check_rois(rois, frame.width, frame.height);
    RegisterReadout out;
    out.thresholds = thresholds;
    for (std::size_t i = 0; i < rois.size(); ++i) {
        const RoiBox& r = rois[i];
        double sum = 0.0;
        for (int y = r.y0; y < r.y0 + r.height; ++y)
            for (int x = r.x0; x < r.x0 + r.width; ++x)
                sum += frame.at(x, y);
        sum -= r.area() * frame.meta.offset;
        out.roi_sums.push_back(sum);
        out.bits.push_back(sum > thresholds[i] ? 1 : 0);
    }
    return out;
}

double equal_error_threshold(std::vector<double> dark_sums, std::vector<double> bright_sums)
{
    if (dark_sums.empty() || bright_sums.empty())
        throw DomainError("equal_error_threshold: both calibration sets must be non-empty");
    std::sort(dark_sums.begin(), dark_sums.end());
    std::sort(bright_sums.begin(), bright_sums.end());
    std::vector<double> candidates = dark_sums;
    candidates.insert(candidates.end(), bright_sums.begin(), bright_sums.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const auto nd = static_cast<double>(dark_sums.size());
    const auto nb = static_cast<double>(bright_sums.size());
    double best_t = candidates.front();
    double best_err = 2.0;
    double best_gap = 2.0;
    for (double t : candidates) {
        const double dark_err =
            (dark_sums.end() - std::upper_bound(dark_sums.begin(), dark_sums.end(), t)) / nd;
        const double bright_err =
            (std::upper_bound(bright_sums.begin(), bright_sums.end(), t) - bright_sums.begin()) / nb;
        const double err = std::max(dark_err, bright_err);
        const double gap = std::fabs(dark_err - bright_err);
        if (err < best_err || (err == best_err && gap < best_gap)) {
            best_err = err;
            best_gap = gap;
            best_t = t;
        }
    }
    return best_t;
}

CorrelationMatrix conditional_correlations(const std::vector<RegisterReadout>& readouts)
{
    if (readouts.size() < 100)
        throw DomainError("conditional_correlations: needs at least 100 readouts");
    const std::size_t ions = readouts.front().bits.size();
    if (ions < 2)
        throw DomainError("conditional_correlations: needs at least 2 ions");

    std::vector<double> ones(ions, 0.0);
    std::vector<double> both(ions * ions, 0.0);
    for (const auto& r : readouts) {
        if (r.bits.size() != ions)
            throw DomainError("conditional_correlations: readouts disagree on ion count");
        for (std::size_t i = 0; i < ions; ++i) {
            ones[i] += r.bits[i];
            for (std::size_t j = 0; j < ions; ++j)
                both[i * ions + j] += r.bits[i] & r.bits[j];
        }
    }

    const auto total = static_cast<double>(readouts.size());
    CorrelationMatrix m;
    m.ions = ions;
    m.entries.resize(ions * ions);
    for (std::size_t i = 0; i < ions; ++i) {
        for (std::size_t j = 0; j < ions; ++j) {
            CorrelationEntry& e = m.entries[i * ions + j];
            e.marginal = ones[i] / total;
            if (i == j || ones[j] == 0.0)
                continue;
            e.defined = true;
            e.conditional = both[i * ions + j] / ones[j];
            e.deviation = std::fabs(e.conditional - e.marginal);
            // Var(conditional - marginal) under independence; the conditioning
            // subset is part of the full sample.
            const double var = e.marginal * (1.0 - e.marginal) * (1.0 / ones[j] - 1.0 / total);
            e.std_error = std::sqrt(std::max(var, 0.0));
        }
    }
    return m;
}

std::vector<double> per_qubit_fidelity(const std::vector<RegisterReadout>& readouts)
{
    if (readouts.empty())
        throw DomainError("per_qubit_fidelity: no readouts");
    const std::size_t ions = readouts.front().bits.size();
    std::vector<double> correct(ions, 0.0);
    for (const auto& r : readouts) {
        if (!r.truth)
            throw DomainError("per_qubit_fidelity: readout has no prepared state");
        for (std::size_t i = 0; i < ions; ++i)
            correct[i] += r.bits[i] == (*r.truth)[i];
    }
    for (double& c : correct)
        c /= static_cast<double>(readouts.size());
    return correct;
}

double RegisterExperiment::adjacent_deviation() const
{
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i + 1 < correlations.ions; ++i) {
        for (auto [a, b] : {std::pair{i, i + 1}, std::pair{i + 1, i}}) {
            const auto& e = correlations.at(a, b);
            if (e.defined) {
                sum += e.deviation;
                ++count;
            }
        }
    }
    return count ? sum / count : 0.0;
}

std::vector<std::vector<double>> batch_roi_sums(const FrameSynthesizer& synth,
                                                const std::vector<int>& states,
                                                std::uint64_t count, std::uint64_t seed,
                                                unsigned threads)
{
    const auto& setup = synth.setup();
    const std::vector<double> never(setup.ions(), 0.0);
    std::vector<std::vector<double>> sums(setup.ions(), std::vector<double>(count));
    detail::parallel_chunks(count, threads, [&](std::uint64_t begin, std::uint64_t end, unsigned) {
        for (std::uint64_t f = begin; f < end; ++f) {
            const auto r = read_register(synth(states, derive_seed(seed, f)), setup.rois, never);
            for (std::size_t i = 0; i < r.roi_sums.size(); ++i)
                sums[i][f] = r.roi_sums[i];
        }
    });
    return sums;
}

RegisterExperiment run_register_experiment(const RegisterSetup& setup, std::uint64_t trials,
                                           std::uint64_t seed, unsigned threads)
{
    if (trials == 0)
        throw DomainError("run_register_experiment: trials must be >= 1");
    const FrameSynthesizer synth(setup);
    const std::size_t ions = setup.ions();

    const auto dark = batch_roi_sums(synth, std::vector<int>(ions, 0), trials,
                                     derive_seed(seed, 1), threads);
    const auto bright = batch_roi_sums(synth, std::vector<int>(ions, 1), trials,
                                       derive_seed(seed, 2), threads);
    RegisterExperiment out;
    for (std::size_t i = 0; i < ions; ++i) {
        const double t = equal_error_threshold(dark[i], bright[i]);
        out.thresholds.push_back(t);
        const auto n = static_cast<double>(trials);
        out.calibration_dark_error.push_back(
            std::count_if(dark[i].begin(), dark[i].end(), [t](double v) { return v > t; }) / n);
        out.calibration_bright_error.push_back(
            std::count_if(bright[i].begin(), bright[i].end(), [t](double v) { return v <= t; }) / n);
    }

    const std::uint64_t run_seed = derive_seed(seed, 3);
    out.readouts.resize(trials);
    detail::parallel_chunks(trials, threads, [&](std::uint64_t begin, std::uint64_t end, unsigned) {
        for (std::uint64_t f = begin; f < end; ++f) {
            StreamRng coin(run_seed, ~f);
            std::vector<int> truth(ions);
            for (auto& b : truth)
                b = static_cast<int>(coin() >> 63);
            RegisterReadout r = read_register(synth(truth, derive_seed(run_seed, f)), setup.rois,
                                              out.thresholds);
            r.truth = std::move(truth);
            out.readouts[f] = std::move(r);
        }
    });
    out.correlations = conditional_correlations(out.readouts);
    out.fidelity = per_qubit_fidelity(out.readouts);
    return out;
}

}  // namespace iondetect
