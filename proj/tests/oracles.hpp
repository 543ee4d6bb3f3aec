#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace iondetect::oracle {

inline double integrate(auto&& f, double a, double b)
{
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 8, 1e-13, &err);
}

// P(a, x) straight from its defining integral.
inline double reg_inc_gamma_quadrature(int a, double x)
{
    if (x == 0.0)
        return 0.0;
    const double log_norm = std::lgamma(static_cast<double>(a));
    return integrate([&](double y) { return std::exp(-y + (a - 1) * std::log(y) - log_norm); }, 0.0, x);
}

inline double poisson(std::int64_t n, double lambda)
{
    if (lambda <= 0.0)
        return n == 0 ? 1.0 : 0.0;
    return std::exp(n * std::log(lambda) - lambda - std::lgamma(n + 1.0));
}

// Dark ion: point mass at lambda = 0 plus the exponential ramp density
// a exp((lambda - lambda0) a) on (0, lambda0], each convolved with Poisson.
inline double p_dark_convolution(std::int64_t n, double lambda0, double a)
{
    const double point = std::exp(-a * lambda0) * (n == 0 ? 1.0 : 0.0);
    if (a == 0.0)
        return point;
    return point + integrate([&](double l) { return poisson(n, l) * a * std::exp((l - lambda0) * a); },
                             0.0, lambda0);
}

// Bright ion: leaks at a uniform rate while accumulating mean counts, so the
// Poisson mean has density a exp(-a lambda) on (0, lambda0) and a point mass
// exp(-a lambda0) at lambda0.
inline double p_bright_convolution(std::int64_t n, double lambda0, double a)
{
    const double point = std::exp(-a * lambda0) * poisson(n, lambda0);
    if (a == 0.0)
        return point;
    return point + integrate([&](double l) { return poisson(n, l) * a * std::exp(-a * l); }, 0.0, lambda0);
}

// Expected total-variation distance between a multinomial sample of size
// `trials` and its parent distribution (half-normal mean per bin).
inline double expected_tv_noise(const std::vector<double>& probs, double trials)
{
    double sum = 0.0;
    for (double p : probs)
        sum += std::sqrt(2.0 * p * (1.0 - p) / (M_PI * trials));
    return 0.5 * sum;
}

}  // namespace iondetect::oracle
