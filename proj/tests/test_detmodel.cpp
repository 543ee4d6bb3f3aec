#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "iondetect/detmodel.hpp"
#include "iondetect/errors.hpp"
#include "iondetect/specfun.hpp"
#include "oracles.hpp"

using namespace iondetect;

namespace {

LeakParams leak(double lambda0, double a1, double a2) { return {lambda0, a1, a2}; }

}  // namespace

TEST(Species, BuiltinsAndLookup)
{
    const auto cd = find_species("111Cd+");
    EXPECT_EQ(cd.name, "Cd111");
    EXPECT_NEAR(rad_s_to_mhz(cd.p32->gamma), 60.0, 1e-9);
    EXPECT_NEAR(rad_s_to_mhz(cd.omega_hfs - cd.p32->omega_hfp), 13700.0, 1e-6);
    EXPECT_EQ(find_species("yb").name, "Yb171");
    EXPECT_EQ(find_species("Hg199").name, "Hg199");
    EXPECT_THROW(find_species("Be9"), ConfigError);
    EXPECT_THROW(find_species("Yb171").line(Scheme::P32), ConfigError);
}

TEST(Species, JsonRoundTrip)
{
    for (const auto& sp : builtin_species()) {
        const auto back = species_from_json_text(species_to_json_text(sp));
        EXPECT_EQ(back.name, sp.name);
        EXPECT_EQ(back.nuclear_spin, sp.nuclear_spin);
        EXPECT_NEAR(back.omega_hfs, sp.omega_hfs, 1e-6 * sp.omega_hfs);
        EXPECT_EQ(back.p32.has_value(), sp.p32.has_value());
        EXPECT_EQ(back.p12.has_value(), sp.p12.has_value());
        if (sp.p12)
            EXPECT_NEAR(back.p12->gamma, sp.p12->gamma, 1e-6 * sp.p12->gamma);
    }
    const auto reg = registry_from_json_text(registry_to_json_text(builtin_species()));
    EXPECT_EQ(reg.size(), builtin_species().size());
}

TEST(Species, UnknownKeyIsNamed)
{
    try {
        species_from_json_text(R"({"name":"X","nuclear_spin":"1/2","hfs_ghz":10,"gamma_mhz":3})");
        FAIL() << "accepted an unknown key";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("gamma_mhz"), std::string::npos);
    }
    EXPECT_THROW(species_from_json_text(R"({"name":"X","nuclear_spin":"1/2","hfs_ghz":-1})"), ConfigError);
}

TEST(DetectionParams, CadmiumLeakFloor)
{
    const auto floor = ideal_leak_floor(find_species("Cd111"), Scheme::P32);
    EXPECT_NEAR(floor.alpha1, 1.0655868719697373e-6, 1e-15);
    EXPECT_EQ(floor.alpha2, 0.0);
}

TEST(DetectionParams, FitFigureLightLevel)
{
    DetectionConfig cfg;
    cfg.scheme = Scheme::P32;
    cfg.s = 0.25;
    cfg.tau_d = 150e-6;
    cfg.eta = 1.4e-3;
    cfg.p_pi = cfg.p_minus = 0.75e-3;
    const auto p = detection_params(find_species("Cd111"), cfg);
    EXPECT_NEAR(p.lambda0, 7.916813487046278, 1e-9);
    EXPECT_GT(p.alpha2, 0.0);
}

TEST(DetectionParams, HomogeneousInDetectionTime)
{
    const auto cd = find_species("Cd111");
    DetectionConfig cfg;
    cfg.s = 0.7;
    cfg.delta = mhz_to_rad_s(5.0);
    cfg.tau_d = 100e-6;
    cfg.eta = 0.02;
    cfg.p_pi = 1e-3;
    cfg.p_minus = 2e-3;
    const auto base = detection_params(cd, cfg);
    for (double c : {0.1, 2.0, 37.0}) {
        auto scaled = cfg;
        scaled.tau_d *= c;
        const auto p = detection_params(cd, scaled);
        EXPECT_NEAR(p.lambda0, c * base.lambda0, 1e-12 * c * base.lambda0);
        EXPECT_DOUBLE_EQ(p.alpha1, base.alpha1);
        EXPECT_DOUBLE_EQ(p.alpha2, base.alpha2);
    }
}

TEST(DetectionParams, P12BrightLeaksMore)
{
    for (const auto& sp : builtin_species()) {
        if (!sp.p12)
            continue;
        const auto f = ideal_leak_floor(sp, Scheme::P12);
        EXPECT_GT(f.alpha2, f.alpha1) << sp.name;
    }
}

TEST(DetectionParams, ValidatesConfig)
{
    const auto cd = find_species("Cd111");
    DetectionConfig cfg;
    cfg.tau_d = 1e-4;
    cfg.eta = 0.0;
    EXPECT_THROW(detection_params(cd, cfg), DomainError);
    cfg.eta = 0.1;
    cfg.p_pi = 0.6;
    cfg.p_minus = 0.5;
    EXPECT_THROW(detection_params(cd, cfg), DomainError);
}

TEST(Distributions, ReferenceValues)
{
    const auto p = leak(12.0, 0.05, 0.05);
    EXPECT_NEAR(p_dark(0, p, 1.0), 0.5776961356667461, 1e-12);
    EXPECT_NEAR(p_bright(0, p, 1.0), 0.04762225906212775, 1e-12);
}

TEST(Distributions, ZeroLeakLimits)
{
    const auto p = leak(12.0, 0.0, 0.0);
    EXPECT_EQ(p_dark(0, p, 0.5), 1.0);
    EXPECT_EQ(p_dark(3, p, 0.5), 0.0);
    for (int n = 0; n < 40; ++n)
        EXPECT_DOUBLE_EQ(p_bright(n, p, 0.5), poisson_pmf(n, 12.0));
}

TEST(Distributions, MatchConvolutionQuadrature)
{
    std::mt19937_64 rng(20240917);
    std::uniform_real_distribution<double> lam(1.0, 40.0);
    std::uniform_real_distribution<double> log_a(std::log(1e-6), std::log(0.3));
    for (int tuple = 0; tuple < 20; ++tuple) {
        const double l0 = lam(rng);
        const double a = std::exp(log_a(rng));
        const auto p = leak(l0, a, a);
        const auto n_max = histogram_nmax(l0);
        for (std::int64_t n = 0; n <= n_max; ++n) {
            EXPECT_NEAR(p_dark(n, p, 1.0), oracle::p_dark_convolution(n, l0, a), 1e-10)
                << "l0=" << l0 << " a=" << a << " n=" << n;
            EXPECT_NEAR(p_bright(n, p, 1.0), oracle::p_bright_convolution(n, l0, a), 1e-10)
                << "l0=" << l0 << " a=" << a << " n=" << n;
        }
    }
}

TEST(Distributions, EtaEntersOnlyThroughRatio)
{
    const auto a = leak(9.0, 0.02, 0.03);
    const auto b = leak(9.0, 0.002, 0.003);
    for (int n = 0; n < 30; ++n) {
        EXPECT_NEAR(p_dark(n, a, 1.0), p_dark(n, b, 0.1), 1e-14);
        EXPECT_NEAR(p_bright(n, a, 1.0), p_bright(n, b, 0.1), 1e-14);
    }
}

TEST(Distributions, NormalizedWithinTruncation)
{
    for (double l0 : {0.5, 5.6, 12.0, 100.0, 1000.0})
        for (double a : {0.0, 1e-4, 0.05, 0.3}) {
            const auto p = leak(l0, a, a);
            const auto n_max = histogram_nmax(l0);
            double sd = 0.0, sb = 0.0;
            for (std::int64_t n = 0; n <= n_max; ++n) {
                sd += p_dark(n, p, 1.0);
                sb += p_bright(n, p, 1.0);
            }
            EXPECT_NEAR(sd, 1.0, 1e-9) << l0 << " " << a;
            EXPECT_NEAR(sb, 1.0, 1e-9) << l0 << " " << a;
        }
}

namespace {

// Dark Poisson means are stochastically below bright ones:
// P(mean <= x | dark) = exp(a1 (x - l0)) >= 1 - exp(-a2 x) = P(mean <= x | bright).
// Poisson CDFs decrease in the mean, so the count CDFs inherit the ordering.
bool means_ordered(double l0, double a1, double a2)
{
    for (int i = 0; i < 4000; ++i) {
        const double x = l0 * i / 4000.0;
        if (std::exp(a1 * (x - l0)) + std::exp(-a2 * x) < 1.0)
            return false;
    }
    return true;
}

}  // namespace

TEST(Distributions, DarkCdfDominatesBright)
{
    int checked = 0;
    for (double l0 : {1.0, 3.0, 5.6, 12.0, 30.0, 100.0})
        for (double a1 : {0.0, 1e-6, 1e-3, 0.01, 0.1, 0.5})
            for (double a2 : {0.0, 1e-6, 1e-3, 0.01, 0.1, 0.5}) {
                if (!means_ordered(l0, a1, a2))
                    continue;
                ++checked;
                const auto p = leak(l0, a1, a2);
                const auto n_max = histogram_nmax(l0);
                double cd = 0.0, cb = 0.0;
                for (std::int64_t n = 0; n <= n_max; ++n) {
                    cd += p_dark(n, p, 1.0);
                    cb += p_bright(n, p, 1.0);
                    EXPECT_GE(cd, cb - 1e-12) << l0 << " " << a1 << " " << a2 << " " << n;
                }
            }
    EXPECT_GT(checked, 100);
    // Pure-bright ions are dominated for every dark leak rate.
    for (double a1 : {1e-3, 0.1, 0.5})
        EXPECT_TRUE(means_ordered(100.0, a1, 0.0));
}

TEST(Distributions, DarkPointMassAndDensity)
{
    const auto p = leak(12.0, 0.05, 0.0);
    EXPECT_NEAR(dark_point_mass(p, 1.0), std::exp(-0.6), 1e-15);
    EXPECT_NEAR(dark_leak_density(12.0, p, 1.0), 0.05, 1e-15);
    EXPECT_THROW(dark_leak_density(0.0, p, 1.0), DomainError);
    EXPECT_THROW(dark_leak_density(12.5, p, 1.0), DomainError);
    // Point mass plus the continuous part integrate to one.
    const double cont = oracle::integrate([&](double l) { return dark_leak_density(l, p, 1.0); }, 0.0, 12.0);
    EXPECT_NEAR(cont + dark_point_mass(p, 1.0), 1.0, 1e-13);
}

TEST(Distributions, DarkClosedFormNeedsSmallRatio)
{
    EXPECT_THROW(p_dark(0, leak(5.0, 0.01, 0.0), 0.01), DomainError);
    EXPECT_NO_THROW(p_bright(0, leak(5.0, 0.0, 0.02), 0.01));
}

TEST(Distributions, LeakTimes)
{
    const auto p = leak(10.0, 1e-5, 0.0);
    EXPECT_NEAR(dark_leak_time(p, 1e-3, 1e-4), 1e-4 * 1e-3 / (1e-5 * 10.0), 1e-18);
    EXPECT_TRUE(std::isinf(bright_leak_time(p, 1e-3, 1e-4)));
}

TEST(Histogram, AnalyticAndValidation)
{
    const auto h = analytic_histogram(leak(12.0, 0.01, 0.01), 1.0, InitialState::Bright);
    EXPECT_EQ(h.kind, HistogramKind::Analytic);
    EXPECT_EQ(static_cast<std::int64_t>(h.values.size()), histogram_nmax(12.0) + 1);
    EXPECT_NEAR(h.total(), 1.0, 1e-9);
    EXPECT_NO_THROW(h.validate());

    PhotonHistogram sim;
    sim.kind = HistogramKind::Simulated;
    sim.values = {3, 4, 5};
    sim.trials = 12;
    EXPECT_NO_THROW(sim.validate());
    sim.trials = 13;
    EXPECT_THROW(sim.validate(), DomainError);
}

TEST(Histogram, TotalVariation)
{
    EXPECT_DOUBLE_EQ(total_variation({0.5, 0.5}, {0.5, 0.5}), 0.0);
    EXPECT_DOUBLE_EQ(total_variation({1.0}, {0.0, 1.0}), 1.0);
    EXPECT_DOUBLE_EQ(total_variation({0.5, 0.5}, {0.5, 0.25, 0.25}), 0.25);
}
