#include "iondetect/detmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "iondetect/errors.hpp"
#include "iondetect/specfun.hpp"

namespace iondetect {

void DetectionConfig::validate() const
{
    if (!(s >= 0.0) || !std::isfinite(s))
        throw DomainError("saturation s must be finite and >= 0");
    if (!std::isfinite(delta))
        throw DomainError("detuning must be finite");
    if (!(tau_d > 0.0) || !std::isfinite(tau_d))
        throw DomainError("detection time tau_d must be positive");
    if (!(eta > 0.0 && eta <= 1.0))
        throw DomainError("collection efficiency eta must lie in (0, 1]");
    if (!(p_pi >= 0.0 && p_pi < 1.0) || !(p_minus >= 0.0 && p_minus < 1.0))
        throw DomainError("polarization impurities must lie in [0, 1)");
    if (p_pi + p_minus >= 1.0)
        throw DomainError("p_pi + p_minus must be < 1");
}

namespace {

void check_eta(double eta)
{
    if (!(eta > 0.0 && eta <= 1.0))
        throw DomainError("collection efficiency eta must lie in (0, 1]");
}

void check_params(const LeakParams& p)
{
    if (!(p.lambda0 >= 0.0) || !std::isfinite(p.lambda0))
        throw DomainError("lambda0 must be finite and >= 0");
    if (!(p.alpha1 >= 0.0) || !(p.alpha2 >= 0.0))
        throw DomainError("leak probabilities must be >= 0");
}

double sq(double x) { return x * x; }

}  // namespace

LeakParams detection_params(const IonSpecies& species, const DetectionConfig& config)
{
    config.validate();
    const ExcitedLine& line = species.line(config.scheme);
    const BranchingRatios br = branching_ratios(species.nuclear_spin, config.scheme);

    const double gamma = line.gamma;
    const double broadening = 1.0 + config.s + sq(2.0 * config.delta / gamma);

    LeakParams out;
    out.lambda0 = config.tau_d * config.eta * config.s * (gamma / 2.0) / broadening;

    if (config.scheme == Scheme::P32) {
        const double delta1 = species.omega_hfs - line.omega_hfp;
        const double delta2 = line.omega_hfp;
        if (delta1 == 0.0)
            throw DomainError("P3/2 scheme needs omega_hfs != omega_hfp (zero detuning to the leak level)");
        out.alpha1 = br.m1 * broadening * sq(gamma / (2.0 * delta1));
        const double impurity = config.p_pi + config.p_minus;
        out.alpha2 = broadening * sq(gamma / (2.0 * delta2)) *
                     (br.m2_pi * config.p_pi + br.m2_minus * config.p_minus) /
                     (1.0 - impurity);
    } else {
        const double delta1 = species.omega_hfs + line.omega_hfp;
        const double delta2 = line.omega_hfp;
        out.alpha1 = br.m1 * broadening * sq(gamma / (2.0 * delta1));
        out.alpha2 = br.m2_pi * broadening * sq(gamma / (2.0 * delta2));
    }
    return out;
}

LeakParams ideal_leak_floor(const IonSpecies& species, Scheme scheme)
{
    DetectionConfig cfg;
    cfg.scheme = scheme;
    cfg.tau_d = 1.0;
    LeakParams p = detection_params(species, cfg);
    p.lambda0 = 0.0;
    return p;
}

namespace {

double leak_time(double alpha, double lambda0, double eta, double tau_d)
{
    check_eta(eta);
    if (alpha == 0.0 || lambda0 == 0.0)
        return std::numeric_limits<double>::infinity();
    return tau_d * eta / (alpha * lambda0);
}

}  // namespace

double dark_leak_time(const LeakParams& p, double eta, double tau_d)
{
    return leak_time(p.alpha1, p.lambda0, eta, tau_d);
}

double bright_leak_time(const LeakParams& p, double eta, double tau_d)
{
    return leak_time(p.alpha2, p.lambda0, eta, tau_d);
}

double dark_leak_density(double lambda, const LeakParams& p, double eta)
{
    check_params(p);
    check_eta(eta);
    if (!(lambda > 0.0 && lambda <= p.lambda0))
        throw DomainError("dark_leak_density: lambda must lie in (0, lambda0]");
    const double a = p.alpha1 / eta;
    return a * std::exp((lambda - p.lambda0) * a);
}

double dark_point_mass(const LeakParams& p, double eta)
{
    check_params(p);
    check_eta(eta);
    return std::exp(-p.alpha1 * p.lambda0 / eta);
}

double p_dark(std::int64_t n, const LeakParams& p, double eta)
{
    check_params(p);
    check_eta(eta);
    if (n < 0)
        throw DomainError("p_dark: n must be >= 0");
    const double a = p.alpha1 / eta;
    if (!(a < 1.0))
        throw DomainError("p_dark: the closed form requires alpha1/eta < 1");
    const double point = std::exp(-a * p.lambda0);
    double leaked = 0.0;
    if (a > 0.0 && p.lambda0 > 0.0) {
        const double gp = reg_inc_gamma(n + 1, (1.0 - a) * p.lambda0);
        if (gp > 0.0)
            leaked = std::exp(std::log(a) - static_cast<double>(n + 1) * std::log1p(-a) +
                              std::log(gp));
    }
    return point * ((n == 0 ? 1.0 : 0.0) + leaked);
}

double p_bright(std::int64_t n, const LeakParams& p, double eta)
{
    check_params(p);
    check_eta(eta);
    if (n < 0)
        throw DomainError("p_bright: n must be >= 0");
    const double a = p.alpha2 / eta;
    const double lp = log_poisson_pmf(n, p.lambda0);
    double value = std::isfinite(lp) ? std::exp(lp - a * p.lambda0) : 0.0;
    if (a > 0.0 && p.lambda0 > 0.0) {
        const double gp = reg_inc_gamma(n + 1, (1.0 + a) * p.lambda0);
        if (gp > 0.0)
            value += std::exp(std::log(a) - static_cast<double>(n + 1) * std::log1p(a) +
                              std::log(gp));
    }
    return value;
}

std::vector<double> dark_distribution(const LeakParams& p, double eta, std::int64_t n_max)
{
    std::vector<double> out(static_cast<std::size_t>(n_max + 1));
    for (std::int64_t n = 0; n <= n_max; ++n)
        out[static_cast<std::size_t>(n)] = p_dark(n, p, eta);
    return out;
}

std::vector<double> bright_distribution(const LeakParams& p, double eta, std::int64_t n_max)
{
    std::vector<double> out(static_cast<std::size_t>(n_max + 1));
    for (std::int64_t n = 0; n <= n_max; ++n)
        out[static_cast<std::size_t>(n)] = p_bright(n, p, eta);
    return out;
}

std::string to_string(HistogramKind kind)
{
    switch (kind) {
    case HistogramKind::Analytic: return "analytic";
    case HistogramKind::Simulated: return "simulated";
    case HistogramKind::Measured: return "measured";
    }
    return "unknown";
}

std::string to_string(InitialState state)
{
    return state == InitialState::Dark ? "dark" : "bright";
}

InitialState parse_initial_state(const std::string& text)
{
    if (text == "dark" || text == "0")
        return InitialState::Dark;
    if (text == "bright" || text == "1")
        return InitialState::Bright;
    throw ConfigError("initial state must be 'dark' or 'bright', got '" + text + "'");
}

double PhotonHistogram::total() const
{
    return std::accumulate(values.begin(), values.end(), 0.0);
}

double PhotonHistogram::mean() const
{
    double m = 0.0;
    for (std::size_t n = 0; n < values.size(); ++n)
        m += static_cast<double>(n) * values[n];
    const double t = total();
    return t > 0.0 ? m / t : 0.0;
}

std::vector<double> PhotonHistogram::probabilities() const
{
    const double t = total();
    if (!(t > 0.0))
        throw DomainError("histogram is empty");
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [t](double v) { return v / t; });
    return out;
}

void PhotonHistogram::validate() const
{
    for (double v : values)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw DomainError("histogram values must be finite and >= 0");
    const double t = total();
    if (kind == HistogramKind::Analytic) {
        if (std::fabs(t - 1.0) > 1e-9)
            throw DomainError("analytic histogram does not sum to 1");
    } else if (trials && std::fabs(t - static_cast<double>(*trials)) > 0.5) {
        throw DomainError("histogram counts do not sum to the trial count");
    }
}

PhotonHistogram analytic_histogram(const LeakParams& p, double eta, InitialState initial)
{
    const std::int64_t n_max = histogram_nmax(p.lambda0);
    PhotonHistogram h;
    h.kind = HistogramKind::Analytic;
    h.values = initial == InitialState::Dark ? dark_distribution(p, eta, n_max)
                                             : bright_distribution(p, eta, n_max);
    return h;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b)
{
    const std::size_t n = std::max(a.size(), b.size());
    double tv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < a.size() ? a[i] : 0.0;
        const double y = i < b.size() ? b[i] : 0.0;
        tv += std::fabs(x - y);
    }
    return 0.5 * tv;
}

}  // namespace iondetect
