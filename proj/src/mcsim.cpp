#include "iondetect/mcsim.hpp"

#include <algorithm>
#include <random>
#include <thread>
#include <vector>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "iondetect/errors.hpp"
#include "iondetect/rng.hpp"

namespace iondetect {

std::string to_string(McMode mode)
{
    return mode == McMode::RateEquation ? "rate_equation" : "photon_level";
}

McMode parse_mc_mode(const std::string& text)
{
    if (text == "rate_equation" || text == "rate")
        return McMode::RateEquation;
    if (text == "photon_level" || text == "photon")
        return McMode::PhotonLevel;
    throw ConfigError("unknown Monte Carlo mode '" + text +
                      "' (expected rate_equation or photon_level)");
}

namespace {

std::int64_t poisson(StreamRng& rng, double mean)
{
    if (mean <= 0.0)
        return 0;
    return boost::random::poisson_distribution<std::int64_t, double>(mean)(rng);
}

// Elapsed fraction of the detection window before the leak.
double leak_fraction(StreamRng& rng, double alpha, double lambda0, double eta)
{
    const double rate = alpha * lambda0 / eta;  // leaks per detection window
    if (rate <= 0.0)
        return 2.0;
    return std::exponential_distribution<double>(rate)(rng);
}

// Index (1-based) of the first scatter that leaks; huge when alpha is zero.
std::int64_t first_leak(StreamRng& rng, double alpha)
{
    if (alpha <= 0.0)
        return std::numeric_limits<std::int64_t>::max();
    if (alpha >= 1.0)
        return 1;
    return std::geometric_distribution<std::int64_t>(alpha)(rng) + 1;
}

std::int64_t binomial(StreamRng& rng, std::int64_t n, double p)
{
    // libstdc++'s binomial sampler is biased by ~0.1% at n ~ 1e4, p ~ 1e-3.
    if (n <= 0)
        return 0;
    return boost::random::binomial_distribution<std::int64_t, double>(n, p)(rng);
}

}  // namespace

std::int64_t simulate_trial(const LeakParams& p, double eta, const McConfig& config,
                            std::uint64_t trial)
{
    StreamRng rng(config.seed, trial);
    const bool dark = config.initial == InitialState::Dark;
    if (config.mode == McMode::RateEquation) {
        if (dark) {
            const double t = leak_fraction(rng, p.alpha1, p.lambda0, eta);
            return t >= 1.0 ? 0 : poisson(rng, (1.0 - t) * p.lambda0);
        }
        const double t = leak_fraction(rng, p.alpha2, p.lambda0, eta);
        return poisson(rng, std::min(t, 1.0) * p.lambda0);
    }

    const std::int64_t scatters = poisson(rng, p.lambda0 / eta);
    if (dark) {
        const std::int64_t k = first_leak(rng, p.alpha1);
        if (k > scatters)
            return 0;
        return binomial(rng, scatters - k, eta);
    }
    const std::int64_t k = first_leak(rng, p.alpha2);
    return binomial(rng, std::min(k, scatters), eta);
}

PhotonHistogram simulate_histogram(const LeakParams& params, double eta, const McConfig& config)
{
    if (config.trials == 0)
        throw DomainError("simulate_histogram: trials must be >= 1");
    if (!(eta > 0.0 && eta <= 1.0))
        throw DomainError("simulate_histogram: eta must lie in (0, 1]");
    if (!(params.lambda0 >= 0.0) || !(params.alpha1 >= 0.0) || !(params.alpha2 >= 0.0))
        throw DomainError("simulate_histogram: leak parameters must be >= 0");
    if (config.initial == InitialState::Dark && !(params.alpha1 / eta < 1.0))
        throw DomainError("simulate_histogram: dark trajectories require alpha1/eta < 1");

    unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
    threads = static_cast<unsigned>(
        std::clamp<std::uint64_t>(threads, 1, std::max<std::uint64_t>(1, config.trials / 1024)));

    std::vector<std::vector<std::uint64_t>> partial(threads);
    auto worker = [&](unsigned w) {
        auto& bins = partial[w];
        const std::uint64_t begin = config.trials * w / threads;
        const std::uint64_t end = config.trials * (w + 1) / threads;
        for (std::uint64_t i = begin; i < end; ++i) {
            const auto n = static_cast<std::size_t>(simulate_trial(params, eta, config, i));
            if (n >= bins.size())
                bins.resize(n + 1, 0);
            ++bins[n];
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back(worker, w);
    }

    std::vector<std::uint64_t> merged;
    for (const auto& bins : partial) {
        if (bins.size() > merged.size())
            merged.resize(bins.size(), 0);
        for (std::size_t n = 0; n < bins.size(); ++n)
            merged[n] += bins[n];
    }

    PhotonHistogram h;
    h.kind = HistogramKind::Simulated;
    h.trials = config.trials;
    h.seed = config.seed;
    h.mode = to_string(config.mode);
    h.values.assign(merged.begin(), merged.end());
    return h;
}

}  // namespace iondetect
