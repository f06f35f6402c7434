#include "mrct/analysis.hpp"

#include <cmath>

#include "mrct/numerics.hpp"

namespace mrct {

double schoenfeld_sigma2(long events, double ell) {
    if (events < 1) throw domain_error("schoenfeld_sigma2: need at least one event");
    if (!(ell > 0.0)) throw domain_error("schoenfeld_sigma2: ell must be > 0");
    return (ell + 1.0) * (ell + 1.0) / (ell * static_cast<double>(events));
}

TrialAnalysisReport analyze_trial(const TrialAnalysisInput& input) {
    if (input.summaries.size() < 2) throw domain_error("analyze_trial: need at least 2 regions");
    if (!(input.alpha > 0.0 && input.alpha < 1.0))
        throw domain_error("analyze_trial: alpha must be in (0,1)");
    if (!(input.pi >= 0.5 && input.pi <= 1.0))
        throw domain_error("analyze_trial: pi must be in [0.5,1]");
    if (input.margin < 0.0) throw domain_error("analyze_trial: margin must be >= 0");

    TrialAnalysisReport rep;
    rep.tau2_hat = moment_tau2(input.summaries);
    auto pooled = pooled_estimate(input.summaries, rep.tau2_hat);

    const double one_sided = input.alpha / 2.0;
    const auto sup = wald_test(pooled, one_sided, 0.0);
    rep.significant_superiority = sup.significant;
    const auto ni = wald_test(pooled, one_sided, input.margin);
    rep.significant_ni = ni.significant;
    rep.ni_test_statistic = ni.test_statistic;
    rep.pooled = sup;

    const double z = std_normal_quantile(1.0 - input.alpha / 2.0);
    const double pooled_sd = std::sqrt(rep.pooled.variance);
    rep.pooled_ci_lo = rep.pooled.d_tilde - z * pooled_sd;
    rep.pooled_ci_hi = rep.pooled.d_tilde + z * pooled_sd;
    if (input.scale == AnalysisScale::log_hr) {
        rep.pooled_hr = std::exp(-rep.pooled.d_tilde);
        rep.pooled_hr_lo = std::exp(-rep.pooled_ci_hi);
        rep.pooled_hr_hi = std::exp(-rep.pooled_ci_lo);
    }

    const double d_tilde = rep.pooled.d_tilde;
    const double m = input.margin;
    for (const auto& summary : input.summaries) {
        RegionReport r;
        r.region_id = summary.region_id;
        r.d_hat = summary.d_hat;
        r.sigma2 = summary.sigma2;
        r.shrinkage = shrinkage_estimate(summary, rep.tau2_hat, rep.pooled);
        const double sd = std::sqrt(r.shrinkage.variance);
        r.ci_lo = r.shrinkage.d_tilde_r - z * sd;
        r.ci_hi = r.shrinkage.d_tilde_r + z * sd;
        if (input.scale == AnalysisScale::log_hr) {
            r.hr = std::exp(-r.shrinkage.d_tilde_r);
            r.hr_lo = std::exp(-r.ci_hi);
            r.hr_hi = std::exp(-r.ci_lo);
        }
        r.consistent_superiority = r.shrinkage.d_tilde_r >= input.pi * d_tilde;
        r.consistent_ni = r.shrinkage.d_tilde_r + m >= input.pi * (d_tilde + m);
        rep.regions.push_back(std::move(r));
    }
    return rep;
}

}  // namespace mrct
