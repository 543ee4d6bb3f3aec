#pragma once

#include <string>
#include <vector>

#include "iondetect/detmodel.hpp"

namespace iondetect {

struct FitOptions {
    IonSpecies species;
    Scheme scheme = Scheme::P32;
    double tau_d = 0.0;          // s, known and held fixed
    bool fit_background = false; // add a Poisson(lambda_bg) count to both states
};

struct FitResult {
    double eta = 0.0;
    double s = 0.0;
    double p_impure = 0.0;       // P_pi + P_minus, split equally between the two
    double lambda_bg = 0.0;
    double neg_log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string note;            // why converged is false, if it is

    LeakParams leak(const FitOptions& options) const;
};

/// Maximum-likelihood fit of dark- and bright-prepared histograms to the
/// closed-form count distributions (detuning fixed at zero).
///
/// Multinomial negative log-likelihood summed over both histograms,
/// minimized by a Nelder-Mead simplex over log parameters from a 3x3x3
/// deterministic start grid. converged is false when the optimum sits on a
/// parameter bound or when the curvature shows a direction the data do not
/// constrain.
FitResult fit_histograms(const PhotonHistogram& dark, const PhotonHistogram& bright,
                         const FitOptions& options);

/// Fit of a dark-prepared histogram alone. The impurity parameter then has
/// no influence on the likelihood, so this always reports converged = false.
FitResult fit_dark_histogram(const PhotonHistogram& dark, const FitOptions& options);

/// Model probabilities at fitted parameters, background included, for
/// n = 0..n_max (inclusive).
std::vector<double> fitted_distribution(const FitResult& fit, const FitOptions& options,
                                        InitialState state, std::int64_t n_max);

/// Model-vs-data rows; residual is the Pearson residual (obs - exp)/sqrt(exp).
struct ModelRow {
    InitialState state = InitialState::Dark;
    std::int64_t n = 0;
    double observed = 0.0;
    double expected = 0.0;
    double residual = 0.0;
};

std::vector<ModelRow> model_vs_data(const FitResult& fit, const FitOptions& options,
                                    const PhotonHistogram& dark, const PhotonHistogram& bright);

/// Multinomial NLL of both histograms at the given parameters.
double histogram_nll(const FitResult& params, const FitOptions& options,
                     const PhotonHistogram& dark, const PhotonHistogram& bright);

}  // namespace iondetect
