#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mrct/errors.hpp"

namespace mrct {

// Hyperparameters of the regional-effect prior D_r ~ N(delta, tau2).
struct RandomEffectsParams {
    double delta = 0.0;
    double tau2 = 0.0;
};

// Per-region estimate and its conditional variance; the unit of analysis input.
struct RegionalSummary {
    std::string region_id;
    double d_hat = 0.0;
    double sigma2 = 0.0;  // var(D_hat_r | D_r), must be > 0
};

// Precision-weighted pooled inference across regions.
struct PooledInference {
    double d_tilde = 0.0;
    std::vector<double> weights;  // w_r = 1/(tau2 + sigma2_r)
    double total_weight = 0.0;    // w
    double variance = 0.0;        // w^-1
    double tau2 = 0.0;            // tau2 the weights were built with
    double test_statistic = 0.0;  // filled by wald_test
    bool significant = false;
};

// Empirical Bayes shrinkage estimate of one region's effect.
struct ShrinkageResult {
    std::string region_id;
    double d_tilde_r = 0.0;
    double variance = 0.0;                // var(D_tilde_r)
    double covariance_with_pooled = 0.0;  // = w^-1
    double rho_inv = 1.0;                 // var(D_tilde_r)/var(D_tilde) >= 1
    double h = 0.0;                       // tau2 / sigma2_r
    double posterior_mean = 0.0;          // delta*_r with the pooled estimate as prior mean
    double posterior_variance = 0.0;      // sigma2*_r
};

// w_r = 1/(tau2 + sigma2_r) and their sum.
std::pair<std::vector<double>, double> compute_weights(double tau2,
                                                       std::span<const double> sigma2s);

// Weighted overall estimate D_tilde = sum w_r D_hat_r / w with variance w^-1.
PooledInference pooled_estimate(std::span<const RegionalSummary> summaries, double tau2);

// DerSimonian-Laird moment estimator of the between-region variance,
// truncated at zero. Fixed-effect weights (tau2 = 0) throughout.
double moment_tau2(std::span<const RegionalSummary> summaries);

// Naive hyperparameter estimates: mean and sample variance (divisor R-1).
RandomEffectsParams naive_hyperparams(std::span<const double> regional_effects);

// Posterior mean/variance of D_r given the prior N(delta, tau2).
// tau2 = 0 degenerates to (delta, 0).
std::pair<double, double> posterior_params(const RegionalSummary& summary,
                                           const RandomEffectsParams& prior);

// Shrinkage estimate D_tilde_r: replaces the prior mean with the pooled
// estimate. `pooled` must have been computed with the same tau2.
ShrinkageResult shrinkage_estimate(const RegionalSummary& summary, double tau2,
                                   const PooledInference& pooled);

// rho_r^{-1} = 1 + (h_r/(h_r+1)) * sum_{j != r} h_j/(h_j+1).
double rho_inverse(std::span<const double> h_values, std::size_t r);

// Total precision expressed through the h_j = tau2/sigma2_j ratios,
// w = tau^-2 sum h_j/(h_j+1); equals compute_weights' sum.
double total_weight_from_h(double tau2, std::span<const double> h_values);

// One-sided Wald test T = (D_tilde + margin) * w^{1/2} against z_{1-alpha}.
// margin = 0 is the superiority test.
PooledInference wald_test(PooledInference pooled, double alpha, double margin = 0.0);

}  // namespace mrct
