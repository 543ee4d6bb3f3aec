#include "iondetect/fitkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <gsl/gsl_eigen.h>
#include <gsl/gsl_matrix.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include "iondetect/errors.hpp"
#include "iondetect/specfun.hpp"

namespace iondetect {

namespace {

constexpr double kPenalty = 1e30;

// Log-space bounds for eta, s, p_impure, lambda_bg.
constexpr std::array<double, 4> kLower = {-18.420680743952367,   // 1e-8
                                          -13.815510557964274,   // 1e-6
                                          -23.025850929940457,   // 1e-10
                                          -18.420680743952367};  // 1e-8
constexpr std::array<double, 4> kUpper = {0.0,                   // 1
                                          9.210340371976184,     // 1e4
                                          -0.6931471805599453,   // 0.5
                                          4.605170185988092};    // 100

DetectionConfig to_config(const FitResult& r, const FitOptions& o)
{
    DetectionConfig c;
    c.scheme = o.scheme;
    c.s = r.s;
    c.delta = 0.0;
    c.tau_d = o.tau_d;
    c.eta = r.eta;
    c.p_pi = 0.5 * r.p_impure;
    c.p_minus = 0.5 * r.p_impure;
    return c;
}

std::vector<double> convolve_background(const std::vector<double>& p, double lambda_bg)
{
    if (lambda_bg <= 0.0)
        return p;
    std::vector<double> bg(p.size());
    for (std::size_t k = 0; k < bg.size(); ++k)
        bg[k] = poisson_pmf(static_cast<std::int64_t>(k), lambda_bg);
    std::vector<double> out(p.size(), 0.0);
    for (std::size_t n = 0; n < p.size(); ++n)
        for (std::size_t k = 0; k <= n; ++k)
            out[n] += p[k] * bg[n - k];
    return out;
}

struct Data {
    const PhotonHistogram* dark = nullptr;
    const PhotonHistogram* bright = nullptr;
    const FitOptions* options = nullptr;
    double total = 1.0;
    std::size_t dims = 3;
};

FitResult from_vector(const double* x, std::size_t dims)
{
    FitResult r;
    r.eta = std::exp(x[0]);
    r.s = std::exp(x[1]);
    r.p_impure = std::exp(x[2]);
    r.lambda_bg = dims > 3 ? std::exp(x[3]) : 0.0;
    return r;
}

double nll_one(const std::vector<double>& counts, const std::vector<double>& model)
{
    double f = 0.0;
    for (std::size_t n = 0; n < counts.size(); ++n) {
        if (counts[n] <= 0.0)
            continue;
        const double q = n < model.size() ? model[n] : 0.0;
        f -= counts[n] * std::log(std::max(q, 1e-300));
    }
    return f;
}

// NLL in the histogram's own units, or +inf when the parameters leave the
// closed form's domain.
double nll(const FitResult& r, const FitOptions& o, const PhotonHistogram* dark,
           const PhotonHistogram* bright)
{
    LeakParams p;
    try {
        p = detection_params(o.species, to_config(r, o));
    } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
    }
    if (!(p.alpha1 / r.eta < 1.0))
        return std::numeric_limits<double>::infinity();
    std::size_t len = static_cast<std::size_t>(histogram_nmax(p.lambda0 + r.lambda_bg)) + 1;
    for (const auto* h : {dark, bright})
        if (h)
            len = std::max(len, h->values.size());
    const auto n_max = static_cast<std::int64_t>(len) - 1;
    double f = 0.0;
    if (dark)
        f += nll_one(dark->values, convolve_background(dark_distribution(p, r.eta, n_max), r.lambda_bg));
    if (bright)
        f += nll_one(bright->values,
                     convolve_background(bright_distribution(p, r.eta, n_max), r.lambda_bg));
    return f;
}

double objective(const gsl_vector* v, void* params)
{
    const auto* d = static_cast<const Data*>(params);
    for (std::size_t i = 0; i < d->dims; ++i) {
        const double x = gsl_vector_get(v, i);
        if (!std::isfinite(x) || x < kLower[i] || x > kUpper[i])
            return kPenalty;
    }
    const FitResult r = from_vector(v->data, d->dims);
    const double f = nll(r, *d->options, d->dark, d->bright) / d->total;
    return std::isfinite(f) ? f : kPenalty;
}

struct Minimum {
    std::vector<double> x;
    double f = kPenalty;
    int iterations = 0;
    bool converged = false;
};

Minimum nelder_mead(Data& data, const std::vector<double>& start, double step)
{
    const std::size_t n = data.dims;
    gsl_multimin_function fn{&objective, n, &data};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* ss = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i)
        gsl_vector_set(x, i, start[i]);
    gsl_vector_set_all(ss, step);
    gsl_multimin_fminimizer* m =
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(m, &fn, x, ss);

    Minimum out;
    int status = GSL_CONTINUE;
    for (; out.iterations < 5000 && status == GSL_CONTINUE; ++out.iterations) {
        if (gsl_multimin_fminimizer_iterate(m))
            break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-7);
    }
    out.converged = status == GSL_SUCCESS;
    out.f = m->fval;
    out.x.assign(m->x->data, m->x->data + n);
    gsl_multimin_fminimizer_free(m);
    gsl_vector_free(ss);
    gsl_vector_free(x);
    return out;
}

// Restart the simplex at its own optimum until it stops improving.
Minimum polish(Data& data, Minimum best)
{
    for (int restart = 0; restart < 6; ++restart) {
        Minimum next = nelder_mead(data, best.x, 0.05);
        next.iterations += best.iterations;
        const bool improved = next.f < best.f - 1e-14;
        if (next.f <= best.f)
            best = next;
        if (!improved)
            break;
    }
    return best;
}

// Smallest-to-largest eigenvalue ratio of the finite-difference Hessian.
double curvature_ratio(Data& data, const std::vector<double>& x0)
{
    const std::size_t n = data.dims;
    const double h = 1e-3;
    gsl_vector* v = gsl_vector_alloc(n);
    auto f = [&](const std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i)
            gsl_vector_set(v, i, x[i]);
        return objective(v, &data);
    };
    const double f0 = f(x0);
    gsl_matrix* H = gsl_matrix_alloc(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double hij;
            auto x = x0;
            if (i == j) {
                x[i] = x0[i] + h;
                const double fp = f(x);
                x[i] = x0[i] - h;
                const double fm = f(x);
                hij = (fp - 2.0 * f0 + fm) / (h * h);
            } else {
                double acc = 0.0;
                for (int si : {1, -1})
                    for (int sj : {1, -1}) {
                        x = x0;
                        x[i] += si * h;
                        x[j] += sj * h;
                        acc += si * sj * f(x);
                    }
                hij = acc / (4.0 * h * h);
            }
            gsl_matrix_set(H, i, j, hij);
            gsl_matrix_set(H, j, i, hij);
        }
    }
    gsl_vector* eval = gsl_vector_alloc(n);
    gsl_eigen_symm_workspace* w = gsl_eigen_symm_alloc(n);
    gsl_eigen_symm(H, eval, w);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        lo = std::min(lo, gsl_vector_get(eval, i));
        hi = std::max(hi, std::fabs(gsl_vector_get(eval, i)));
    }
    gsl_eigen_symm_free(w);
    gsl_vector_free(eval);
    gsl_matrix_free(H);
    gsl_vector_free(v);
    return hi > 0.0 ? lo / hi : 0.0;
}

void check_histogram(const PhotonHistogram& h, const char* which)
{
    h.validate();
    const double total = h.total();
    if (total <= 0.0)
        throw DomainError(std::string(which) + " histogram is empty");
    if (h.kind != HistogramKind::Analytic && total < 100.0)
        throw DomainError(std::string(which) + " histogram needs at least 100 counts");
}

FitResult fit_impl(const PhotonHistogram* dark, const PhotonHistogram* bright,
                   const FitOptions& options)
{
    if (!(options.tau_d > 0.0))
        throw DomainError("fit: tau_d must be positive");
    options.species.validate();
    const ExcitedLine& line = options.species.line(options.scheme);

    Data data;
    data.dark = dark;
    data.bright = bright;
    data.options = &options;
    data.dims = options.fit_background ? 4 : 3;
    data.total = (dark ? dark->total() : 0.0) + (bright ? bright->total() : 0.0);

    // Start light levels from the bright mean when available.
    double lambda_guess = 8.0;
    if (bright) {
        lambda_guess = bright->mean();
        if (!(lambda_guess > 0.0))
            throw DomainError("bright histogram has no counts above n = 0; the light level is not identifiable");
    } else if (dark && dark->mean() > 0.0) {
        lambda_guess = std::max(1.0, 10.0 * dark->mean());
    }

    Minimum best;
    std::size_t start_index = 0;
    for (double s0 : {0.05, 0.3, 2.0}) {
        const double eta_base =
            lambda_guess * (1.0 + s0) / (options.tau_d * s0 * 0.5 * line.gamma);
        for (double mult : {0.5, 1.0, 2.0}) {
            const double eta0 = std::clamp(eta_base * mult, 1e-7, 0.9);
            for (double p0 : {1e-4, 1e-3, 1e-2}) {
                std::vector<double> x0 = {std::log(eta0), std::log(s0), std::log(p0)};
                if (data.dims > 3)
                    x0.push_back(std::log(0.05));
                Minimum m = nelder_mead(data, x0, 0.3);
                // Strict improvement keeps ties on the earliest start.
                if (m.f < best.f || start_index == 0)
                    best = std::move(m);
                ++start_index;
            }
        }
    }
    if (!(best.f < kPenalty))
        throw DomainError("fit: no start point gave a finite likelihood");
    best = polish(data, best);

    FitResult out = from_vector(best.x.data(), data.dims);
    out.iterations = best.iterations;
    out.neg_log_likelihood = nll(out, options, dark, bright);
    out.converged = best.converged;
    if (!best.converged)
        out.note = "simplex did not reach its size tolerance";
    for (std::size_t i = 0; i < data.dims && out.converged; ++i) {
        if (best.x[i] - kLower[i] < 1e-4 || kUpper[i] - best.x[i] < 1e-4) {
            out.converged = false;
            out.note = "optimum sits on a parameter bound";
        }
    }
    if (out.converged && curvature_ratio(data, best.x) < 1e-7) {
        out.converged = false;
        out.note = "likelihood is flat along some parameter direction (not identifiable)";
    }
    return out;
}

}  // namespace

LeakParams FitResult::leak(const FitOptions& options) const
{
    return detection_params(options.species, to_config(*this, options));
}

FitResult fit_histograms(const PhotonHistogram& dark, const PhotonHistogram& bright,
                         const FitOptions& options)
{
    check_histogram(dark, "dark");
    check_histogram(bright, "bright");
    return fit_impl(&dark, &bright, options);
}

FitResult fit_dark_histogram(const PhotonHistogram& dark, const FitOptions& options)
{
    check_histogram(dark, "dark");
    return fit_impl(&dark, nullptr, options);
}

std::vector<double> fitted_distribution(const FitResult& fit, const FitOptions& options,
                                        InitialState state, std::int64_t n_max)
{
    const LeakParams p = fit.leak(options);
    auto dist = state == InitialState::Dark ? dark_distribution(p, fit.eta, n_max)
                                            : bright_distribution(p, fit.eta, n_max);
    return convolve_background(dist, fit.lambda_bg);
}

std::vector<ModelRow> model_vs_data(const FitResult& fit, const FitOptions& options,
                                    const PhotonHistogram& dark, const PhotonHistogram& bright)
{
    std::vector<ModelRow> rows;
    for (auto [state, h] : {std::pair{InitialState::Dark, &dark}, std::pair{InitialState::Bright, &bright}}) {
        const auto n_max = static_cast<std::int64_t>(h->values.size()) - 1;
        const auto model = fitted_distribution(fit, options, state, std::max<std::int64_t>(n_max, 0));
        const double total = h->total();
        for (std::int64_t n = 0; n <= n_max; ++n) {
            ModelRow r;
            r.state = state;
            r.n = n;
            r.observed = h->values[static_cast<std::size_t>(n)];
            r.expected = total * model[static_cast<std::size_t>(n)];
            r.residual = r.expected > 0.0 ? (r.observed - r.expected) / std::sqrt(r.expected) : 0.0;
            rows.push_back(r);
        }
    }
    return rows;
}

double histogram_nll(const FitResult& params, const FitOptions& options,
                     const PhotonHistogram& dark, const PhotonHistogram& bright)
{
    return nll(params, options, &dark, &bright);
}

}  // namespace iondetect
