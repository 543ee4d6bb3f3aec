#include <cmath>

#include <gtest/gtest.h>

#include "iondetect/errors.hpp"
#include "iondetect/fidelity.hpp"
#include "iondetect/specfun.hpp"

using namespace iondetect;

namespace {

const IonSpecies& cadmium()
{
    static const IonSpecies cd = find_species("Cd111");
    return cd;
}

const LeakParams& cd_floor()
{
    static const LeakParams f = ideal_leak_floor(cadmium(), Scheme::P32);
    return f;
}

}  // namespace

TEST(FidelityAt, NoLeakage)
{
    const auto r = fidelity_at(0, {5.6, 0.0, 0.0}, 1.0);
    EXPECT_DOUBLE_EQ(r.dark_fidelity, 1.0);
    EXPECT_NEAR(r.bright_fidelity, 1.0 - std::exp(-5.6), 1e-15);
    EXPECT_DOUBLE_EQ(r.fidelity, r.bright_fidelity);
}

TEST(FidelityAt, CadmiumWorkingPoint)
{
    auto p = cd_floor();
    p.lambda0 = 5.6;
    const auto r = fidelity_at(0, p, 1e-3);
    EXPECT_NEAR(r.fidelity, 0.995, 1e-3);
    EXPECT_DOUBLE_EQ(r.fidelity, std::min(r.dark_fidelity, r.bright_fidelity));
    EXPECT_NEAR(r.dark_fidelity, p_dark(0, p, 1e-3), 1e-15);
    EXPECT_NEAR(r.bright_fidelity, 1.0 - p_bright(0, p, 1e-3), 1e-15);
}

TEST(FidelityAt, ThresholdSemantics)
{
    const LeakParams p{12.0, 0.01, 0.01};
    for (std::int64_t d : {0, 3, 7}) {
        const auto r = fidelity_at(d, p, 1.0);
        double dark = 0.0, bright = 0.0;
        for (std::int64_t n = 0; n <= d; ++n) {
            dark += p_dark(n, p, 1.0);
            bright += p_bright(n, p, 1.0);
        }
        EXPECT_NEAR(r.dark_fidelity, dark, 1e-14);
        EXPECT_NEAR(r.bright_fidelity, 1.0 - bright, 1e-14);
    }
    EXPECT_THROW(fidelity_at(-1, p, 1.0), DomainError);
}

TEST(BestThreshold, MatchesBruteForceScan)
{
    const LeakParams p{12.0, 0.01, 0.01};
    const auto best = best_threshold(p, 1.0);
    double brute = -1.0;
    std::int64_t brute_d = -1;
    for (std::int64_t d = 0; d <= histogram_nmax(12.0); ++d) {
        const double f = fidelity_at(d, p, 1.0).fidelity;
        if (f > brute) {
            brute = f;
            brute_d = d;
        }
    }
    EXPECT_GE(best.d, 1);
    EXPECT_EQ(best.d, brute_d);
    EXPECT_DOUBLE_EQ(best.fidelity, brute);
}

TEST(Monotonicity, OneSidedFidelitiesInLightLevel)
{
    for (std::int64_t d : {0, 1, 4}) {
        double prev_dark = 2.0, prev_bright = -1.0;
        for (double l0 = 0.5; l0 <= 40.0; l0 += 0.5) {
            auto p = cd_floor();
            p.alpha2 = 2e-6;
            p.lambda0 = l0;
            const auto r = fidelity_at(d, p, 1e-3);
            EXPECT_LE(r.dark_fidelity, prev_dark + 1e-15);
            EXPECT_GE(r.bright_fidelity, prev_bright - 1e-15);
            prev_dark = r.dark_fidelity;
            prev_bright = r.bright_fidelity;
        }
    }
}

TEST(OptimizeDetection, CadmiumP32)
{
    const auto low = optimize_detection(cadmium(), Scheme::P32, 1e-3);
    EXPECT_NEAR(low.fidelity, 0.995, 1e-3);
    EXPECT_GE(low.lambda0_opt, 5.0);
    EXPECT_LE(low.lambda0_opt, 6.0);
    EXPECT_EQ(low.d, 0);

    const auto high = optimize_detection(cadmium(), Scheme::P32, 0.3);
    EXPECT_GE(high.fidelity, 0.99995);
    EXPECT_LE(high.fidelity, 0.99998);
}

TEST(OptimizeDetection, CadmiumP12)
{
    EXPECT_NEAR(optimize_detection(cadmium(), Scheme::P12, 1e-3).fidelity, 0.967, 3e-3);
}

TEST(OptimizeDetection, LocalOptimality)
{
    for (double eta : {1e-3, 1e-2, 0.3}) {
        const auto opt = optimize_detection(cadmium(), Scheme::P32, eta);
        for (double scale : {0.95, 1.05}) {
            auto p = cd_floor();
            p.lambda0 = opt.lambda0_opt * scale;
            EXPECT_LE(best_threshold(p, eta).fidelity, opt.fidelity + 1e-6) << eta << " " << scale;
        }
    }
}

TEST(OptimizeDetection, RejectsBadEta)
{
    EXPECT_THROW(optimize_detection(cadmium(), Scheme::P32, 0.0), DomainError);
    EXPECT_THROW(optimize_detection(cadmium(), Scheme::P32, 1.5), DomainError);
}

TEST(ApproxFidelity, Values)
{
    const auto a = approx_fidelity(1e-3, 1.066e-6);
    EXPECT_NEAR(a.fidelity, 0.9927044644778478, 1e-12);
    EXPECT_NEAR(a.lambda0, std::log(1e-3 / 1.066e-6), 1e-12);
    EXPECT_NEAR(approx_fidelity(1.0, 1e-15).fidelity, 1.0, 1e-13);
    EXPECT_THROW(approx_fidelity(1e-3, 1e-3), DomainError);
    EXPECT_THROW(approx_fidelity(1e-3, 0.0), DomainError);
}

TEST(MaxClockFidelity, Values)
{
    const auto& line = *cadmium().p32;
    EXPECT_NEAR(max_clock_fidelity(line.gamma, line.omega_hfp), 0.999375, 1e-15);
    EXPECT_NEAR(max_clock_fidelity(1e-9, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(max_clock_fidelity(2.0, 1.0), 5.0 / 9.0, 1e-15);
    EXPECT_THROW(max_clock_fidelity(0.0, 1.0), DomainError);
    EXPECT_THROW(max_clock_fidelity(1.0, -1.0), DomainError);
}

TEST(MaxClockFidelity, ComposedBound)
{
    for (double eta : {1e-3, 0.1, 1.0}) {
        const auto c = clock_state_fidelity(cadmium(), eta);
        EXPECT_NEAR(c.total, c.max_fidelity * c.discrimination.fidelity, 1e-15);
        EXPECT_LE(c.total, c.max_fidelity);
    }
}

TEST(FidelityCurve, MonotoneAndConsistent)
{
    const std::vector<double> grid{1e-3, 1e-2, 0.1, 0.3};
    const auto rows = fidelity_curve(cadmium(), Scheme::P32, grid);
    ASSERT_EQ(rows.size(), grid.size());
    const auto single = optimize_detection(cadmium(), Scheme::P32, 1e-3);
    EXPECT_DOUBLE_EQ(rows[0].infidelity_numeric, 1.0 - single.fidelity);
    EXPECT_DOUBLE_EQ(rows[0].lambda0_opt, single.lambda0_opt);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_DOUBLE_EQ(rows[i].eta, grid[i]);
        if (i > 0) {
            EXPECT_LT(rows[i].infidelity_numeric, rows[i - 1].infidelity_numeric);
            EXPECT_LT(rows[i].infidelity_approx, rows[i - 1].infidelity_approx);
        }
        const double ratio = rows[i].infidelity_approx / rows[i].infidelity_numeric;
        EXPECT_GT(ratio, 0.5);
        EXPECT_LT(ratio, 2.0);
    }
}

TEST(Table1, NinePoints)
{
    const auto rows = p12_fidelity_table();
    ASSERT_EQ(rows.size(), 9u);
    EXPECT_EQ(rows[0].species, "Cd111");
    for (const auto& r : rows) {
        EXPECT_GT(r.result.fidelity, 0.96);
        EXPECT_LT(r.result.fidelity, 1.0);
    }
}
