#include "iondetect/angular.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "iondetect/errors.hpp"

namespace iondetect {

namespace mp = boost::multiprecision;
using Rational = mp::cpp_rational;
using BigInt = mp::cpp_int;

std::string HalfInt::str() const
{
    if (is_integer())
        return std::to_string(twice_ / 2);
    return std::to_string(twice_) + "/2";
}

HalfInt half_int_from_double(double value)
{
    const double twice = 2.0 * value;
    const double rounded = std::round(twice);
    if (!std::isfinite(value) || std::fabs(twice - rounded) > 1e-9)
        throw DomainError("not a multiple of 1/2: " + std::to_string(value));
    return HalfInt::from_twice(static_cast<int>(rounded));
}

HalfInt parse_half_int(const std::string& text)
{
    const auto slash = text.find('/');
    try {
        if (slash == std::string::npos)
            return half_int_from_double(std::stod(text));
        const int num = std::stoi(text.substr(0, slash));
        const int den = std::stoi(text.substr(slash + 1));
        if (den == 1)
            return HalfInt::integer(num);
        if (den == 2)
            return HalfInt::from_twice(num);
    } catch (const std::logic_error&) {
    }
    throw DomainError("cannot parse half-integer '" + text + "'");
}

std::string to_string(Scheme scheme)
{
    return scheme == Scheme::P32 ? "p32" : "p12";
}

Scheme parse_scheme(const std::string& text)
{
    std::string lower = text;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "p32" || lower == "p3/2")
        return Scheme::P32;
    if (lower == "p12" || lower == "p1/2")
        return Scheme::P12;
    throw ConfigError("unknown scheme '" + text + "' (expected p32 or p12)");
}

namespace {

BigInt factorial(int n)
{
    BigInt r = 1;
    for (int i = 2; i <= n; ++i)
        r *= i;
    return r;
}

void require_nonnegative(std::initializer_list<HalfInt> js, const char* who)
{
    for (HalfInt j : js)
        if (j.twice() < 0)
            throw DomainError(std::string(who) + ": negative angular momentum " + j.str());
}

// Triangle rule on doubled values, including integer perimeter.
bool triangle(int a, int b, int c)
{
    return c <= a + b && c >= std::abs(a - b) && (a + b + c) % 2 == 0;
}

// Delta(abc) = (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)! with doubled arguments.
Rational triangle_coefficient(int a, int b, int c)
{
    return Rational(factorial((a + b - c) / 2) * factorial((a - b + c) / 2) *
                        factorial((-a + b + c) / 2),
                    factorial((a + b + c) / 2 + 1));
}

// sign(s) * sqrt(radicand * s^2) with a single floating-point square root.
double signed_root(const Rational& radicand, const Rational& sum)
{
    if (sum == 0)
        return 0.0;
    const double magnitude = std::sqrt(static_cast<double>(radicand * sum * sum));
    return sum < 0 ? -magnitude : magnitude;
}

}  // namespace

double wigner_3j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3)
{
    require_nonnegative({j1, j2, j3}, "wigner_3j");
    const int a = j1.twice(), b = j2.twice(), c = j3.twice();
    const int ma = m1.twice(), mb = m2.twice(), mc = m3.twice();
    if ((a + ma) % 2 != 0 || (b + mb) % 2 != 0 || (c + mc) % 2 != 0)
        throw DomainError("wigner_3j: j and m parities differ");
    if (ma + mb + mc != 0 || !triangle(a, b, c))
        return 0.0;
    if (std::abs(ma) > a || std::abs(mb) > b || std::abs(mc) > c)
        return 0.0;

    Rational radicand = triangle_coefficient(a, b, c);
    radicand *= Rational(factorial((a + ma) / 2) * factorial((a - ma) / 2) *
                         factorial((b + mb) / 2) * factorial((b - mb) / 2) *
                         factorial((c + mc) / 2) * factorial((c - mc) / 2));

    // Summation bounds keep every factorial argument non-negative.
    const int k_min = std::max({0, (b - c - ma) / 2, (a - c + mb) / 2});
    const int k_max = std::min({(a + b - c) / 2, (a - ma) / 2, (b + mb) / 2});
    Rational sum = 0;
    for (int k = k_min; k <= k_max; ++k) {
        BigInt den = factorial(k) * factorial((c - b + ma) / 2 + k) *
                     factorial((c - a - mb) / 2 + k) * factorial((a + b - c) / 2 - k) *
                     factorial((a - ma) / 2 - k) * factorial((b + mb) / 2 - k);
        sum += Rational(k % 2 == 0 ? 1 : -1, den);
    }
    // Phase (-1)^(j1 - j2 - m3).
    if (((a - b - mc) / 2) % 2 != 0)
        sum = -sum;
    return signed_root(radicand, sum);
}

double wigner_6j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5, HalfInt j6)
{
    require_nonnegative({j1, j2, j3, j4, j5, j6}, "wigner_6j");
    const int a = j1.twice(), b = j2.twice(), c = j3.twice();
    const int d = j4.twice(), e = j5.twice(), f = j6.twice();
    if (!triangle(a, b, c) || !triangle(a, e, f) || !triangle(d, b, f) || !triangle(d, e, c))
        return 0.0;

    const Rational radicand = triangle_coefficient(a, b, c) * triangle_coefficient(a, e, f) *
                              triangle_coefficient(d, b, f) * triangle_coefficient(d, e, c);

    const int t1 = (a + b + c) / 2, t2 = (a + e + f) / 2;
    const int t3 = (d + b + f) / 2, t4 = (d + e + c) / 2;
    const int u1 = (a + b + d + e) / 2, u2 = (b + c + e + f) / 2, u3 = (c + a + f + d) / 2;
    const int t_min = std::max({t1, t2, t3, t4});
    const int t_max = std::min({u1, u2, u3});
    Rational sum = 0;
    for (int t = t_min; t <= t_max; ++t) {
        BigInt den = factorial(t - t1) * factorial(t - t2) * factorial(t - t3) *
                     factorial(t - t4) * factorial(u1 - t) * factorial(u2 - t) *
                     factorial(u3 - t);
        BigInt num = factorial(t + 1);
        if (t % 2 != 0)
            num = -num;
        sum += Rational(num, den);
    }
    return signed_root(radicand, sum);
}

namespace {

constexpr HalfInt kS = HalfInt::half(1);
constexpr HalfInt kJ = HalfInt::half(1);
constexpr HalfInt kL = HalfInt::integer(0);
constexpr HalfInt kLexc = HalfInt::integer(1);
constexpr HalfInt kOne = HalfInt::integer(1);

HalfInt excited_j(Scheme scheme)
{
    return scheme == Scheme::P32 ? HalfInt::half(3) : HalfInt::half(1);
}

void check_scheme(HalfInt nuclear_spin, Scheme scheme)
{
    if (nuclear_spin.twice() <= 0)
        throw DomainError("nuclear spin must be positive, got " + nuclear_spin.str());
    if (scheme == Scheme::P12 && nuclear_spin.twice() != 1)
        throw DomainError("the P1/2 scheme requires nuclear spin 1/2, got " +
                          nuclear_spin.str());
}

// Bracketed product of the dipole strength before normalization.
double raw_strength(HalfInt F, HalfInt F_exc, HalfInt f, HalfInt f_exc, HalfInt q,
                    HalfInt spin, Scheme scheme)
{
    if (f + q != f_exc)
        return 0.0;
    const HalfInt Jexc = excited_j(scheme);
    const double w6a = wigner_6j(kLexc, Jexc, kS, kJ, kL, kOne);
    const double w6b = wigner_6j(Jexc, F_exc, spin, F, kJ, kOne);
    const double w3 = wigner_3j(F, kOne, F_exc, f, q, -f_exc);
    const double weight = (kJ.twice() + 1) * (Jexc.twice() + 1) * (F.twice() + 1) *
                          (F_exc.twice() + 1);
    const double amp = w6a * w6b * w3;
    return weight * amp * amp;
}

// Total decay strength from the cycling excited level back to its ground
// manifold: P3/2 |I+3/2, I+3/2> or P1/2 |I-1/2, I-1/2>.
double normalization(HalfInt spin, Scheme scheme)
{
    const HalfInt half = HalfInt::half(1);
    const HalfInt F = spin + half;
    const HalfInt F_exc = scheme == Scheme::P32 ? spin + HalfInt::half(3) : spin - half;
    const HalfInt f_exc = F_exc;
    double total = 0.0;
    for (int q2 = -2; q2 <= 2; q2 += 2) {
        const HalfInt q = HalfInt::from_twice(q2);
        total += raw_strength(F, F_exc, f_exc - q, f_exc, q, spin, scheme);
    }
    return total;
}

}  // namespace

double cg_squared(HalfInt F, HalfInt F_exc, HalfInt f, HalfInt f_exc, HalfInt q,
                  HalfInt nuclear_spin, Scheme scheme)
{
    check_scheme(nuclear_spin, scheme);
    require_nonnegative({F, F_exc}, "cg_squared");
    if (std::abs(q.twice()) > 2 || !q.is_integer())
        throw DomainError("cg_squared: dipole polarization q must be -1, 0 or +1");
    if (f + q != f_exc)
        return 0.0;
    return raw_strength(F, F_exc, f, f_exc, q, nuclear_spin, scheme) /
           normalization(nuclear_spin, scheme);
}

BranchingRatios branching_ratios(HalfInt nuclear_spin, Scheme scheme)
{
    check_scheme(nuclear_spin, scheme);
    if (scheme == Scheme::P12)
        return {2.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0};
    const double I = nuclear_spin.value();
    const double t = 1.0 + 2.0 * I;
    return {4.0 * I * (3.0 + 2.0 * I) / (9.0 * t * t), 4.0 * I / (9.0 + 18.0 * I),
            16.0 * I / (9.0 * t * t * t)};
}

BranchingRatios branching_ratios_from_cg(HalfInt spin, Scheme scheme)
{
    check_scheme(spin, scheme);
    const HalfInt h = HalfInt::half(1);
    auto C = [&](HalfInt F, HalfInt Fe, HalfInt f, HalfInt fe) {
        return cg_squared(F, Fe, f, fe, fe - f, spin, scheme);
    };
    if (scheme == Scheme::P32) {
        const HalfInt up = spin + h;
        const HalfInt dn = spin - h;
        const double m1 = C(dn, up, dn, up) * (C(up, up, dn, up) + C(up, up, up, up));
        const double m2_pi = C(up, up, up, up) * C(dn, up, dn, up);
        const double m2_minus = C(up, up, up, dn) * C(dn, up, dn, dn);
        return {m1, m2_pi, m2_minus};
    }
    // I = 1/2 through P1/2: ground F = 0 (dark) and F = 1 (bright).
    const HalfInt zero = HalfInt::integer(0);
    const HalfInt one = HalfInt::integer(1);
    const double m1 = C(zero, one, zero, one) * (C(one, one, one, one) + C(one, one, zero, one));
    const double m2 = (C(one, one, zero, one) + C(one, one, zero, -one)) * C(zero, one, zero, one);
    return {m1, m2, m2};
}

}  // namespace iondetect
