#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "iondetect/errors.hpp"
#include "iondetect/fitkit.hpp"
#include "iondetect/specfun.hpp"

using namespace iondetect;

namespace {

constexpr double kEta = 1.4e-3;
constexpr double kS = 0.25;
constexpr double kP = 1.5e-3;
constexpr double kTau = 150e-6;

FitOptions options(bool background = false)
{
    FitOptions o;
    o.species = find_species("Cd111");
    o.scheme = Scheme::P32;
    o.tau_d = kTau;
    o.fit_background = background;
    return o;
}

FitResult truth(double bg = 0.0)
{
    FitResult r;
    r.eta = kEta;
    r.s = kS;
    r.p_impure = kP;
    r.lambda_bg = bg;
    return r;
}

PhotonHistogram expected_counts(InitialState state, double trials, double bg = 0.0)
{
    auto o = options();
    const auto p = truth(bg).leak(o);
    PhotonHistogram h;
    h.kind = HistogramKind::Measured;
    h.values = fitted_distribution(truth(bg), o, state, histogram_nmax(p.lambda0 + bg));
    for (double& v : h.values)
        v *= trials;
    return h;
}

double rel(double a, double b) { return std::fabs(a / b - 1.0); }

}  // namespace

TEST(Fit, NoiselessRecovery)
{
    const auto dark = expected_counts(InitialState::Dark, 20000);
    const auto bright = expected_counts(InitialState::Bright, 20000);
    const auto fit = fit_histograms(dark, bright, options());
    EXPECT_TRUE(fit.converged) << fit.note;
    EXPECT_LT(rel(fit.eta, kEta), 1e-4);
    EXPECT_LT(rel(fit.s, kS), 1e-4);
    EXPECT_LT(rel(fit.p_impure, kP), 1e-4);
    EXPECT_EQ(fit.lambda_bg, 0.0);

    const double at_truth = histogram_nll(truth(), options(), dark, bright);
    EXPECT_LE(fit.neg_log_likelihood, at_truth + 1e-6);
    EXPECT_LT(at_truth - fit.neg_log_likelihood, 3.0);
}

TEST(Fit, NormalizationInvariance)
{
    auto dark = expected_counts(InitialState::Dark, 20000);
    auto bright = expected_counts(InitialState::Bright, 20000);
    const auto counts_fit = fit_histograms(dark, bright, options());
    for (auto* h : {&dark, &bright}) {
        h->kind = HistogramKind::Analytic;
        for (double& v : h->values)
            v /= 20000.0;
    }
    const auto freq_fit = fit_histograms(dark, bright, options());
    EXPECT_NEAR(freq_fit.eta / counts_fit.eta, 1.0, 1e-4);
    EXPECT_NEAR(freq_fit.s / counts_fit.s, 1.0, 1e-4);
    EXPECT_NEAR(freq_fit.p_impure / counts_fit.p_impure, 1.0, 1e-4);
    EXPECT_NEAR(counts_fit.neg_log_likelihood / freq_fit.neg_log_likelihood, 20000.0, 1e-3);
}

TEST(Fit, DarkHistogramAloneIsNotIdentified)
{
    const auto fit = fit_dark_histogram(expected_counts(InitialState::Dark, 20000), options());
    EXPECT_FALSE(fit.converged);
    EXPECT_FALSE(fit.note.empty());
}

TEST(Fit, BackgroundRecovery)
{
    const double bg = 0.3;
    const auto dark = expected_counts(InitialState::Dark, 20000, bg);
    const auto bright = expected_counts(InitialState::Bright, 20000, bg);

    const auto with = fit_histograms(dark, bright, options(true));
    EXPECT_LT(rel(with.lambda_bg, bg), 0.3);

    const auto without = fit_histograms(dark, bright, options(false));
    const auto rows = model_vs_data(without, options(false), dark, bright);
    const auto worst = std::max_element(rows.begin(), rows.end(), [](const ModelRow& a, const ModelRow& b) {
        return a.state == InitialState::Dark && b.state == InitialState::Dark
                   ? std::fabs(a.residual) < std::fabs(b.residual)
                   : a.state == InitialState::Bright;
    });
    EXPECT_EQ(worst->state, InitialState::Dark);
    EXPECT_EQ(worst->n, 1);
    EXPECT_GT(without.neg_log_likelihood, with.neg_log_likelihood);
}

TEST(Fit, ModelRowsAreConsistent)
{
    const auto dark = expected_counts(InitialState::Dark, 1000);
    const auto bright = expected_counts(InitialState::Bright, 1000);
    const auto rows = model_vs_data(truth(), options(), dark, bright);
    EXPECT_EQ(rows.size(), dark.values.size() + bright.values.size());
    for (const auto& r : rows)
        EXPECT_NEAR(r.residual, 0.0, 1e-9);
}

TEST(Fit, InputErrors)
{
    PhotonHistogram empty;
    empty.kind = HistogramKind::Measured;
    const auto bright = expected_counts(InitialState::Bright, 1000);
    EXPECT_THROW(fit_histograms(empty, bright, options()), DomainError);

    PhotonHistogram small;
    small.kind = HistogramKind::Measured;
    small.values = {50.0, 2.0};
    EXPECT_THROW(fit_histograms(small, bright, options()), DomainError);

    PhotonHistogram zeros;
    zeros.kind = HistogramKind::Measured;
    zeros.values = {500.0};
    try {
        fit_histograms(expected_counts(InitialState::Dark, 1000), zeros, options());
        FAIL() << "all-zero bright histogram accepted";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("bright"), std::string::npos);
    }

    auto bad = options();
    bad.tau_d = 0.0;
    EXPECT_THROW(fit_histograms(expected_counts(InitialState::Dark, 1000), bright, bad), DomainError);
}
