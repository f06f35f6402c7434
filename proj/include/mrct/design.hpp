#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mrct/model.hpp"
#include "mrct/numerics.hpp"

namespace mrct {

// Trial-level design parameters. `margin` = 0 gives the superiority framing;
// non-inferiority substitutes delta + margin for delta throughout.
struct DesignConfig {
    double alpha = 0.025;  // one-sided size
    double beta = 0.1;     // type II error
    double pi = 0.5;       // consistency fraction, >= 0.5
    double ell = 1.0;      // randomization ratio n1/n0
    double margin = 0.0;   // NI margin M >= 0
    std::vector<double> fractions;  // f_r, sum to 1
    double assurance = 0.8;         // CP threshold 1 - gamma

    void validate() const;
};

struct RegionDesignInput {
    std::string region_id;
    double omega = 0.0;  // Omega_r: var(D_hat_r | D_r) = Omega_r / (n0 f_r)
};

struct DesignResult {
    long n0 = 0;                        // control-group total, ceiled root of the size equation
    long n1 = 0;                        // ceil(ell * n0)
    std::vector<long> regional_n0;      // largest-remainder split of n0 over fractions
    double achieved_w = 0.0;            // sum_r (tau2 + Omega_r/(n0 f_r))^-1 at the ceiled n0
    double continuous_root = 0.0;
    std::vector<double> cp_per_region;  // Method-1 consistency probability, each region
    std::vector<bool> cp_meets_assurance;
    bool feasible = false;              // all regions meet the assurance threshold
};

enum class BoundStatus { attained, unattained };

struct FeasibilityReport {
    bool feasible = false;
    double ratio = 0.0;                 // tau / (delta + M)
    double limit = 0.0;                 // sqrt(R) / (z_{1-a} + z_{1-b})
    double corollary1_threshold = 0.0;  // sqrt(2) / (z_{1-a} + z_{1-b})
};

struct ProfilePoint {
    double f_r = 0.0;
    long n0 = 0;
    long regional_n0 = 0;  // ceil(n0 * f_r), the paper's reporting convention
    double cp = 0.0;
};

// Splits n0 into integers proportional to fractions; remainders assigned
// largest-first (ties to the lower index) so the parts sum to n0 exactly.
std::vector<long> apportion_largest_remainder(long n0, std::span<const double> fractions);

// Overall control-group size solving
//   sum_r (tau2 + Omega_r/(n0 f_r))^-1 = (z_{1-a}+z_{1-b})^2 / (delta+M)^2,
// ceiled; the LHS is strictly increasing in n0 so the root is unique.
// Throws infeasible_error naming the violated bound when no root exists.
DesignResult solve_overall_n0(const RandomEffectsParams& effects, const DesignConfig& config,
                              std::span<const RegionDesignInput> regions);

// Closed form under homogeneous Omega and equal fractions:
//   n0 = R Omega z^2 / (R (delta+M)^2 - tau2 z^2), n1 = ceil(ell n0).
std::pair<long, long> closed_form_n0(const RandomEffectsParams& effects,
                                     const DesignConfig& config, double omega, int n_regions);

// Method-1 consistency probability of region r at sample size n0:
//   (1/(1-beta)) int_{u>z_beta} Phi((1-pi)(u+z_{1-a}+z_{1-b})/sqrt(rho_r^-1 - 1)) dPhi(u).
// Degenerate shrinkage (rho^-1 - 1 below 1e-14, including tau = 0) returns 1.
double consistency_probability(const RandomEffectsParams& effects, const DesignConfig& config,
                               std::span<const RegionDesignInput> regions, long n0,
                               std::size_t r,
                               const QuadratureSettings& quad = {});

// Configuration-free lower bound of the consistency probability. Attained
// when tau2 z^2 / (2 (delta+M)^2) < 1; otherwise the unattained bound applies.
std::pair<double, BoundStatus> cp_lower_bound(const RandomEffectsParams& effects,
                                              const DesignConfig& config,
                                              const QuadratureSettings& quad = {});

// Closed-form CP for equal allocation and homogeneous variance. Throws
// not_available_error when tau/(delta+M) >= sqrt(R)/(z_{1-a}+z_{1-b}).
double cp_equal_allocation(const RandomEffectsParams& effects, const DesignConfig& config,
                           int n_regions, const QuadratureSettings& quad = {});

// tau/(delta+M) against sqrt(R)/(z_{1-a}+z_{1-b}), plus the Corollary-1
// attainability threshold for the configured (alpha, beta).
FeasibilityReport check_feasibility(const RandomEffectsParams& effects,
                                    const DesignConfig& config, int n_regions);

// The attainability thresholds sqrt(2)/(z_{1-a}+z_{1-b}) for the four
// standard (alpha, beta) pairs (0.025,0.1), (0.025,0.2), (0.05,0.1), (0.05,0.2).
std::vector<std::pair<std::pair<double, double>, double>> standard_attainability_thresholds();

// One configuration at which the attained lower bound is achieved for the
// region of interest: the n0 making kappa_r = tau2 z^2 / (2 (delta+M)^2) given
// its omega and fraction. Requires the attained branch.
long n0_attaining_bound(const RandomEffectsParams& effects, const DesignConfig& config,
                        double omega_r, double f_r);

// Re-solves n0 and evaluates region r's CP over a grid of f_r, the remaining
// fraction split evenly across the other regions.
std::vector<ProfilePoint> cp_profile(const RandomEffectsParams& effects,
                                     const DesignConfig& config,
                                     std::span<const RegionDesignInput> regions, std::size_t r,
                                     std::span<const double> f_grid);

}  // namespace mrct
