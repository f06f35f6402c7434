#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mrct/errors.hpp"

namespace mrct {

struct SubjectRecord {
    double time = 0.0;   // observed min(T, C)
    bool event = false;  // true = event, false = censored
    int group = 0;       // 0 = control, 1 = treatment
};

// Right-continuous step function: initial_value before the first knot,
// values[i] on [knots[i], knots[i+1]), last value carried forward.
struct StepFunction {
    double initial_value = 1.0;
    std::vector<double> knots;
    std::vector<double> values;

    double operator()(double t) const;
    double left_value(double t) const;     // limit from below
    double integrate(double upper) const;  // int_0^upper of the step function
};

enum class KMTarget { event, censoring };

// Product-limit estimator. target = censoring flips the event indicator so
// censorings become the "events" of the estimated distribution. Ties between
// events and censorings at one time are resolved events-first.
StepFunction kaplan_meier(std::span<const SubjectRecord> data, KMTarget target = KMTarget::event);

// Cumulative hazard: Lambda(t) = sum_{t_i <= t} d_i / n_i.
StepFunction nelson_aalen(std::span<const SubjectRecord> data);

// Area under the Kaplan-Meier curve on [0, eta]; the last value is carried
// forward when the largest observation falls short of eta.
double rmst_estimate(std::span<const SubjectRecord> data, double eta);

// Plug-in estimate of the asymptotic variance of sqrt(n) * muhat:
//   sum over event times t_i <= eta of
//     {int_{t_i}^eta S du}^2 / (S(t_i) G-(t_i)) * dLambda(t_i).
// The caller divides by n to get var(muhat).
double rmst_variance_estimate(std::span<const SubjectRecord> data, double eta);

// Two-group Cox partial likelihood with Breslow tie handling, solved by
// safeguarded Newton iteration. Returns (D_hat, sigma2) where D_hat is the
// negative log hazard ratio (positive favors treatment) and sigma2 the
// inverse observed information at the maximum.
std::pair<double, double> cox_loghr(std::span<const SubjectRecord> data);

}  // namespace mrct
