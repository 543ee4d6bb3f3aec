#include "iondetect/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "iondetect/errors.hpp"
#include "iondetect/specfun.hpp"

namespace iondetect {

namespace {

DiscriminationResult make_result(std::int64_t d, double lambda0, double dark_cdf,
                                 double bright_cdf)
{
    DiscriminationResult r;
    r.d = d;
    r.lambda0_opt = lambda0;
    r.dark_fidelity = std::min(dark_cdf, 1.0);
    r.bright_fidelity = std::max(1.0 - bright_cdf, 0.0);
    r.fidelity = std::min(r.dark_fidelity, r.bright_fidelity);
    return r;
}

}  // namespace

DiscriminationResult fidelity_at(std::int64_t d, const LeakParams& params, double eta)
{
    if (d < 0)
        throw DomainError("fidelity_at: threshold d must be >= 0");
    double dark = 0.0, bright = 0.0;
    for (std::int64_t n = 0; n <= d; ++n) {
        dark += p_dark(n, params, eta);
        bright += p_bright(n, params, eta);
    }
    return make_result(d, params.lambda0, dark, bright);
}

DiscriminationResult best_threshold(const LeakParams& params, double eta)
{
    const std::int64_t n_max = histogram_nmax(params.lambda0);
    DiscriminationResult best;
    best.fidelity = -1.0;
    double dark = 0.0, bright = 0.0;
    for (std::int64_t d = 0; d <= n_max; ++d) {
        dark += p_dark(d, params, eta);
        bright += p_bright(d, params, eta);
        const auto r = make_result(d, params.lambda0, dark, bright);
        if (r.fidelity > best.fidelity)
            best = r;
        // Past the crossing the bright side only loses.
        if (r.bright_fidelity < best.fidelity)
            break;
    }
    return best;
}

DiscriminationResult optimize_light_level(const LeakParams& floor, double eta)
{
    if (!(eta > 0.0 && eta <= 1.0))
        throw DomainError("optimize_detection: eta must lie in (0, 1]");
    if (!(floor.alpha1 > 0.0) || !(floor.alpha1 < eta))
        throw DomainError("optimize_detection: requires 0 < alpha1 < eta");

    const double upper = 3.0 * std::log(eta / floor.alpha1);
    auto evaluate = [&](double lambda0) {
        LeakParams p = floor;
        p.lambda0 = lambda0;
        return best_threshold(p, eta);
    };

    constexpr int kGrid = 200;
    DiscriminationResult best;
    best.fidelity = -1.0;
    int best_k = 1;
    for (int k = 1; k <= kGrid; ++k) {
        const auto r = evaluate(upper * k / kGrid);
        if (r.fidelity > best.fidelity) {
            best = r;
            best_k = k;
        }
    }

    // Golden-section refinement on the bracket around the best grid point.
    double lo = upper * (best_k - 1) / kGrid;
    double hi = upper * std::min(best_k + 1, kGrid) / kGrid;
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    auto r1 = evaluate(x1);
    auto r2 = evaluate(x2);
    while (hi - lo > 1e-4 * best.lambda0_opt) {
        if (r1.fidelity >= r2.fidelity) {
            hi = x2;
            x2 = x1;
            r2 = r1;
            x1 = hi - ratio * (hi - lo);
            r1 = evaluate(x1);
        } else {
            lo = x1;
            x1 = x2;
            r1 = r2;
            x2 = lo + ratio * (hi - lo);
            r2 = evaluate(x2);
        }
    }
    for (const auto& r : {r1, r2})
        if (r.fidelity > best.fidelity)
            best = r;
    return best;
}

DiscriminationResult optimize_detection(const IonSpecies& species, Scheme scheme, double eta)
{
    if (!(eta > 0.0 && eta <= 1.0))
        throw DomainError("optimize_detection: eta must lie in (0, 1]");
    return optimize_light_level(ideal_leak_floor(species, scheme), eta);
}

ApproxFidelity approx_fidelity(double eta, double alpha1)
{
    if (!(alpha1 > 0.0) || !(eta > 0.0) || !(alpha1 < eta))
        throw DomainError("approx_fidelity: requires 0 < alpha1 < eta");
    const double ratio = alpha1 / eta;
    const double lambda0 = std::log(eta / alpha1);
    return {1.0 - ratio * lambda0, lambda0};
}

double max_clock_fidelity(double gamma, double omega_hfp)
{
    if (!(gamma > 0.0) || !(omega_hfp > 0.0))
        throw DomainError("max_clock_fidelity: gamma and omega_hfp must be positive");
    const double x = gamma / (2.0 * omega_hfp);
    return 1.0 - (4.0 / 9.0) * x * x;
}

ClockStateFidelity clock_state_fidelity(const IonSpecies& species, double eta)
{
    const ExcitedLine& line = species.line(Scheme::P32);
    ClockStateFidelity out;
    out.max_fidelity = max_clock_fidelity(line.gamma, line.omega_hfp);
    out.discrimination = optimize_detection(species, Scheme::P32, eta);
    out.total = out.max_fidelity * out.discrimination.fidelity;
    return out;
}

std::vector<CurveRow> fidelity_curve(const IonSpecies& species, Scheme scheme,
                                     const std::vector<double>& eta_grid)
{
    for (double eta : eta_grid)
        if (!(eta > 0.0 && eta <= 1.0))
            throw DomainError("fidelity_curve: every eta must lie in (0, 1]");
    const LeakParams floor = ideal_leak_floor(species, scheme);

    std::vector<std::future<CurveRow>> jobs;
    jobs.reserve(eta_grid.size());
    for (double eta : eta_grid) {
        jobs.push_back(std::async(std::launch::async, [floor, eta] {
            const auto opt = optimize_light_level(floor, eta);
            CurveRow row;
            row.eta = eta;
            row.infidelity_numeric = 1.0 - opt.fidelity;
            row.infidelity_approx = 1.0 - approx_fidelity(eta, floor.alpha1).fidelity;
            row.lambda0_opt = opt.lambda0_opt;
            row.d_opt = opt.d;
            return row;
        }));
    }
    std::vector<CurveRow> rows;
    rows.reserve(jobs.size());
    for (auto& j : jobs)
        rows.push_back(j.get());
    return rows;
}

std::vector<Table1Row> p12_fidelity_table()
{
    const double etas[] = {0.001, 0.01, 0.3};
    std::vector<Table1Row> rows;
    for (const auto& species : builtin_species()) {
        if (!species.p12)
            continue;
        for (double eta : etas)
            rows.push_back({species.name, eta, optimize_detection(species, Scheme::P12, eta)});
    }
    return rows;
}

}  // namespace iondetect
