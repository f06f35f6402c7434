#pragma once

#include <string>

#include "mrct/errors.hpp"
#include "mrct/numerics.hpp"

namespace mrct {

// Parametric event-time law used both for variance derivation and for data
// generation. Piecewise form has hazard early_rate on (0, change_point] and
// late_rate afterwards.
struct SurvivalModel {
    enum class Kind { exponential, piecewise_exponential, weibull };
    Kind kind = Kind::exponential;
    double rate = 0.0;                                          // exponential
    double early_rate = 0.0, late_rate = 0.0, change_point = 0.0;  // piecewise
    double shape = 0.0, scale = 0.0;                            // weibull

    static SurvivalModel exponential(double rate);
    static SurvivalModel piecewise(double early_rate, double late_rate, double change_point);
    static SurvivalModel weibull(double shape, double scale);

    double survival(double t) const;
    double hazard(double t) const;
    double cumulative_hazard(double t) const;
    // Inverse-CDF draw from a uniform u in (0,1).
    double sample(double u) const;
    std::string describe() const;
};

struct CensoringModel {
    enum class Kind { none, administrative, uniform };
    Kind kind = Kind::none;
    double time_limit = 0.0;  // administrative
    double lo = 0.0, hi = 0.0;  // uniform(lo, hi)

    static CensoringModel none();
    static CensoringModel administrative(double time_limit);
    static CensoringModel uniform(double lo, double hi);

    double survival(double t) const;  // G(t) = P(C > t)
    double sample(double u) const;    // +inf for none
};

// Per-endpoint-family parameters sufficient to derive Omega_r and to
// generate subject-level data for one region.
struct EndpointSpec {
    enum class Kind { continuous, binary, survival_ph, survival_rmst };
    Kind kind = Kind::continuous;

    // continuous: response variances and the region's mean difference
    double var0 = 1.0, var1 = 1.0, mean_difference = 0.0;
    // binary: control/treatment event probabilities
    double p0 = 0.0, p1 = 0.0;
    // survival_ph: control rate, hazard ratio, fixed follow-up L
    double lambda0 = 0.0, hazard_ratio = 1.0, follow_up = 0.0;
    // survival_rmst: parametric arms, horizon eta, censoring law
    SurvivalModel control_model, treatment_model;
    double horizon = 0.0;
    CensoringModel censoring;

    static EndpointSpec continuous(double mean_difference, double var0, double var1);
    static EndpointSpec binary(double p0, double p1);
    static EndpointSpec survival_ph(double lambda0, double hazard_ratio, double follow_up);
    static EndpointSpec survival_rmst(SurvivalModel control, SurvivalModel treatment,
                                      double horizon, CensoringModel censoring);

    // The regional treatment effect D_r implied by the parameters.
    double true_effect() const;
    void validate() const;
};

// Omega_r = sigma1^2/ell + sigma0^2 (continuous and RMST endpoints).
double omega_continuous(double sigma2_0, double sigma2_1, double ell);

// Omega_r = p1(1-p1)/ell + p0(1-p0).
double omega_binary(double p0, double p1, double ell);

// P(event within follow-up L) under an exponential rate.
double event_probability(double rate, double L);

// Omega_r = (ell+1)^2 / (ell (P0 + ell P1)) for exponential event times with
// administrative censoring at L; lambda1 = lambda0 * hr.
double omega_survival_ph(double lambda0, double hr, double L, double ell);

// Same contract as omega_continuous; the sigmas are the Pepe asymptotic
// variances of sqrt(n_k) * muhat_k.
double omega_survival_rmst(double sigma2_0, double sigma2_1, double ell);

// Restricted mean survival time int_0^eta S(t) dt. Closed form for
// exponential / piecewise exponential, adaptive quadrature for Weibull.
double rmst(const SurvivalModel& model, double eta);

// int_t^eta S(u) du.
double rmst_tail(const SurvivalModel& model, double t, double eta);

// Asymptotic variance of sqrt(n_k) * muhat_k:
//   sigma_k^2 = int_0^eta {int_t^eta S du}^2 / (S(t) G-(t)) dLambda(t).
// Throws support_error when the censoring support ends before the horizon.
double rmst_true_variance(const SurvivalModel& event_model, const CensoringModel& censor_model,
                          double eta);

// Solves for the late-period treatment hazard gamma1 such that the RMST
// difference (treatment - control) equals target_d. Control is
// piecewise(lambda0, gamma0, psi); treatment is piecewise(lambda1, gamma1, psi).
double calibrate_piecewise_late_rate(double lambda0, double gamma0, double lambda1, double psi,
                                     double eta, double target_d);

// Solves for the treatment Weibull shape nu1 (scale theta1 fixed) matching
// the RMST difference against control Weibull(nu0, theta0).
double calibrate_weibull_shape(double nu0, double theta0, double theta1, double eta,
                               double target_d);

// Achievable (min, max) RMST difference over the calibration brackets; the
// interval a target must lie in for the solvers above to succeed.
std::pair<double, double> piecewise_calibration_range(double lambda0, double gamma0,
                                                      double lambda1, double psi, double eta);
std::pair<double, double> weibull_calibration_range(double nu0, double theta0, double theta1,
                                                    double eta);

// Dispatch to the kind-specific Omega_r.
double omega_for(const EndpointSpec& spec, double ell);

}  // namespace mrct
