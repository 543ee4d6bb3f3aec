#include "iondetect/specfun.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "iondetect/errors.hpp"

namespace iondetect {
namespace {

constexpr double kEps = 1e-17;
constexpr int kMaxIter = 100000;

void check_args(std::int64_t a, double x)
{
    if (a < 1)
        throw DomainError("reg_inc_gamma: a must be a positive integer, got " +
                          std::to_string(a));
    if (!std::isfinite(x) || x < 0.0)
        throw DomainError("reg_inc_gamma: x must be finite and >= 0");
}

// log(e^-x x^a / a!)
double log_prefactor(double a, double x)
{
    return a * std::log(x) - x - std::lgamma(a + 1.0);
}

// P(a,x) by the series e^-x x^a / a! * sum_k x^k / ((a+1)...(a+k)).
double series_p(double a, double x)
{
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < kMaxIter; ++k) {
        term *= x / (a + k);
        sum += term;
        if (term < sum * kEps)
            break;
    }
    return std::exp(log_prefactor(a, x) + std::log(sum));
}

// Q(a,x) by the modified Lentz evaluation of the Legendre continued fraction.
double continued_fraction_q(double a, double x)
{
    constexpr double tiny = std::numeric_limits<double>::min() / kEps;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps)
            break;
    }
    // e^-x x^a / Gamma(a) = a * (e^-x x^a / a!)
    return std::exp(log_prefactor(a, x) + std::log(a)) * h;
}

}  // namespace

double reg_inc_gamma(std::int64_t a, double x)
{
    check_args(a, x);
    if (x == 0.0)
        return 0.0;
    const auto ad = static_cast<double>(a);
    if (x < ad + 1.0)
        return series_p(ad, x);
    return 1.0 - continued_fraction_q(ad, x);
}

double reg_inc_gamma_upper(std::int64_t a, double x)
{
    check_args(a, x);
    if (x == 0.0)
        return 1.0;
    const auto ad = static_cast<double>(a);
    if (x < ad + 1.0)
        return 1.0 - series_p(ad, x);
    return continued_fraction_q(ad, x);
}

double log_poisson_pmf(std::int64_t n, double mean)
{
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw DomainError("poisson_pmf: mean must be finite and >= 0");
    if (n < 0)
        throw DomainError("poisson_pmf: n must be >= 0");
    if (mean == 0.0)
        return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const auto nd = static_cast<double>(n);
    return nd * std::log(mean) - mean - std::lgamma(nd + 1.0);
}

double poisson_pmf(std::int64_t n, double mean)
{
    return std::exp(log_poisson_pmf(n, mean));
}

std::int64_t histogram_nmax(double mean)
{
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw DomainError("histogram_nmax: mean must be finite and >= 0");
    return static_cast<std::int64_t>(std::ceil(mean + 12.0 * std::sqrt(mean) + 30.0));
}

}  // namespace iondetect
