#pragma once

#include <string>
#include <vector>

#include "mrct/model.hpp"

namespace mrct {

enum class AnalysisScale { identity, log_hr };

// Completed-trial re-analysis input. Summaries are on the analysis scale
// (for log_hr: d_hat = -log HR with sigma2 = (ell+1)^2/(ell * events)).
// `alpha` is the two-sided level: intervals use z_{1-alpha/2} and the Wald
// tests run one-sided at alpha/2.
struct TrialAnalysisInput {
    std::vector<RegionalSummary> summaries;
    double margin = 0.0;  // NI margin on the analysis scale
    double alpha = 0.05;
    double pi = 0.5;
    AnalysisScale scale = AnalysisScale::identity;
};

struct RegionReport {
    std::string region_id;
    double d_hat = 0.0;
    double sigma2 = 0.0;
    ShrinkageResult shrinkage;
    double ci_lo = 0.0, ci_hi = 0.0;  // for the shrunken effect, analysis scale
    // log_hr scale only: exp(-x) transforms of estimate and interval
    double hr = 0.0, hr_lo = 0.0, hr_hi = 0.0;
    bool consistent_superiority = false;
    bool consistent_ni = false;
};

struct TrialAnalysisReport {
    double tau2_hat = 0.0;
    PooledInference pooled;        // includes the superiority test statistic
    double ni_test_statistic = 0.0;
    bool significant_superiority = false;
    bool significant_ni = false;
    double pooled_ci_lo = 0.0, pooled_ci_hi = 0.0;
    double pooled_hr = 0.0, pooled_hr_lo = 0.0, pooled_hr_hi = 0.0;
    std::vector<RegionReport> regions;
};

// The Section-4 workflow: moment estimate of tau2, pooled and shrunken
// effects with Wald intervals, Method-1 consistency flags for superiority
// (D_tilde_r >= pi D_tilde) and NI (D_tilde_r + M >= pi (D_tilde + M)).
TrialAnalysisReport analyze_trial(const TrialAnalysisInput& input);

// sigma2 = (ell+1)^2 / (ell * events), the Schoenfeld variance with the
// observed event count plugged in.
double schoenfeld_sigma2(long events, double ell);

}  // namespace mrct
