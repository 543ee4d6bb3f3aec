#pragma once

#include <compare>
#include <string>

namespace iondetect {

/// Angular momentum quantum number stored as twice its value, so half-integers
/// are exact.
class HalfInt {
public:
    constexpr HalfInt() = default;
    static constexpr HalfInt from_twice(int twice) { return HalfInt(twice); }
    static constexpr HalfInt integer(int value) { return HalfInt(2 * value); }
    static constexpr HalfInt half(int odd_numerator) { return HalfInt(odd_numerator); }

    constexpr int twice() const { return twice_; }
    constexpr double value() const { return 0.5 * twice_; }
    constexpr bool is_integer() const { return twice_ % 2 == 0; }

    constexpr HalfInt operator+(HalfInt o) const { return HalfInt(twice_ + o.twice_); }
    constexpr HalfInt operator-(HalfInt o) const { return HalfInt(twice_ - o.twice_); }
    constexpr HalfInt operator-() const { return HalfInt(-twice_); }
    constexpr auto operator<=>(const HalfInt&) const = default;

    std::string str() const;

private:
    constexpr explicit HalfInt(int twice) : twice_(twice) {}
    int twice_ = 0;
};

namespace literals {
constexpr HalfInt operator""_j(unsigned long long v) { return HalfInt::integer(static_cast<int>(v)); }
}  // namespace literals

/// Parses "3/2", "1", "0.5" style spins. Throws DomainError on anything that
/// is not an exact multiple of 1/2.
HalfInt parse_half_int(const std::string& text);
HalfInt half_int_from_double(double value);

enum class Scheme { P32, P12 };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& text);

/// Wigner 3j symbol by the Racah formula, exact rational arithmetic under
/// the square root. Zero when the triangle or projection-sum rule fails.
double wigner_3j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3);

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}. Zero when any triad fails.
double wigner_6j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5, HalfInt j6);

/// Squared, normalized dipole strength for S1/2 |F, f> <-> P_J' |F', f'>
/// with f' = f + q. F and f refer to the ground level.
///
/// The normalization divides by the total decay strength out of the cycling
/// excited level, so the P3/2 stretch cycling transition evaluates to 1 and
/// every allowed I = 1/2 P1/2 transition to 1/3.
double cg_squared(HalfInt F, HalfInt F_exc, HalfInt f, HalfInt f_exc, HalfInt q,
                  HalfInt nuclear_spin, Scheme scheme);

struct BranchingRatios {
    double m1 = 0.0;        // dark -> cycling manifold
    double m2_pi = 0.0;     // bright -> dark through pi impurity
    double m2_minus = 0.0;  // bright -> dark through sigma- impurity
};

/// Closed-form branching ratios. For P12 (I = 1/2 only) all three fields
/// hold the common value 2/9.
BranchingRatios branching_ratios(HalfInt nuclear_spin, Scheme scheme);

/// The same ratios assembled from products of cg_squared values.
BranchingRatios branching_ratios_from_cg(HalfInt nuclear_spin, Scheme scheme);

}  // namespace iondetect
