#include "mrct/model.hpp"

#include <cmath>

#include "mrct/numerics.hpp"

namespace mrct {

std::pair<std::vector<double>, double> compute_weights(double tau2,
                                                       std::span<const double> sigma2s) {
    if (sigma2s.empty()) throw domain_error("compute_weights: no regions");
    if (tau2 < 0.0) throw domain_error("compute_weights: tau2 < 0");
    std::vector<double> w;
    w.reserve(sigma2s.size());
    double total = 0.0;
    for (double s2 : sigma2s) {
        if (!(s2 > 0.0)) throw domain_error("compute_weights: sigma2 must be > 0");
        w.push_back(1.0 / (tau2 + s2));
        total += w.back();
    }
    return {std::move(w), total};
}

PooledInference pooled_estimate(std::span<const RegionalSummary> summaries, double tau2) {
    if (summaries.size() < 2) throw domain_error("pooled_estimate: need at least 2 regions");
    std::vector<double> sigma2s;
    sigma2s.reserve(summaries.size());
    for (const auto& s : summaries) sigma2s.push_back(s.sigma2);
    auto [w, total] = compute_weights(tau2, sigma2s);

    double num = 0.0;
    for (std::size_t r = 0; r < summaries.size(); ++r) num += w[r] * summaries[r].d_hat;

    PooledInference out;
    out.d_tilde = num / total;
    out.weights = std::move(w);
    out.total_weight = total;
    out.variance = 1.0 / total;
    out.tau2 = tau2;
    return out;
}

double moment_tau2(std::span<const RegionalSummary> summaries) {
    if (summaries.size() < 2) throw domain_error("moment_tau2: need at least 2 regions");
    const auto R = summaries.size();
    double w = 0.0, sum_w2 = 0.0, num = 0.0;
    for (const auto& s : summaries) {
        if (!(s.sigma2 > 0.0)) throw domain_error("moment_tau2: sigma2 must be > 0");
        const double wr = 1.0 / s.sigma2;
        w += wr;
        sum_w2 += wr * wr;
        num += wr * s.d_hat;
    }
    const double d_fixed = num / w;
    double q = 0.0;
    for (const auto& s : summaries) {
        const double dev = s.d_hat - d_fixed;
        q += (1.0 / s.sigma2) * dev * dev;
    }
    const double denom = w - sum_w2 / w;
    if (!(denom > 0.0)) throw domain_error("moment_tau2: degenerate weight denominator");
    return std::max(0.0, (q - (static_cast<double>(R) - 1.0)) / denom);
}

RandomEffectsParams naive_hyperparams(std::span<const double> regional_effects) {
    const auto R = regional_effects.size();
    if (R < 2) throw domain_error("naive_hyperparams: need at least 2 regional effects");
    double mean = 0.0;
    for (double d : regional_effects) mean += d;
    mean /= static_cast<double>(R);
    double ss = 0.0;
    for (double d : regional_effects) ss += (d - mean) * (d - mean);
    return {mean, ss / (static_cast<double>(R) - 1.0)};
}

std::pair<double, double> posterior_params(const RegionalSummary& summary,
                                           const RandomEffectsParams& prior) {
    if (!(summary.sigma2 > 0.0)) throw domain_error("posterior_params: sigma2 must be > 0");
    if (prior.tau2 < 0.0) throw domain_error("posterior_params: tau2 < 0");
    if (prior.tau2 == 0.0) return {prior.delta, 0.0};
    const double kappa = prior.tau2 / (prior.tau2 + summary.sigma2);
    const double mean = kappa * summary.d_hat + (1.0 - kappa) * prior.delta;
    const double var = 1.0 / (1.0 / prior.tau2 + 1.0 / summary.sigma2);
    return {mean, var};
}

ShrinkageResult shrinkage_estimate(const RegionalSummary& summary, double tau2,
                                   const PooledInference& pooled) {
    if (!(summary.sigma2 > 0.0)) throw domain_error("shrinkage_estimate: sigma2 must be > 0");
    if (tau2 < 0.0) throw domain_error("shrinkage_estimate: tau2 < 0");
    if (tau2 != pooled.tau2)
        throw domain_error("shrinkage_estimate: pooled inference was built with a different tau2");

    const double s2 = summary.sigma2;
    const double w = pooled.total_weight;
    const double wr = 1.0 / (tau2 + s2);
    const double kappa = (tau2 == 0.0) ? 0.0 : tau2 / (tau2 + s2);

    ShrinkageResult out;
    out.region_id = summary.region_id;
    out.d_tilde_r = kappa * summary.d_hat + (1.0 - kappa) * pooled.d_tilde;
    // var(D_tilde_r) = w_r tau^4 + sigma2 (2 tau2 + sigma2) / (w (tau2+sigma2)^2)
    out.variance = wr * tau2 * tau2 + s2 * (2.0 * tau2 + s2) / (w * (tau2 + s2) * (tau2 + s2));
    out.covariance_with_pooled = 1.0 / w;
    out.rho_inv = w * out.variance;
    out.h = tau2 / s2;
    auto [pm, pv] = posterior_params(summary, {pooled.d_tilde, tau2});
    out.posterior_mean = pm;
    out.posterior_variance = pv;
    return out;
}

double rho_inverse(std::span<const double> h_values, std::size_t r) {
    if (r >= h_values.size()) throw domain_error("rho_inverse: region index out of range");
    double sum = 0.0, own = 0.0;
    for (std::size_t j = 0; j < h_values.size(); ++j) {
        if (h_values[j] < 0.0) throw domain_error("rho_inverse: h must be >= 0");
        const double k = h_values[j] / (h_values[j] + 1.0);
        sum += k;
        if (j == r) own = k;
    }
    return 1.0 + own * (sum - own);
}

double total_weight_from_h(double tau2, std::span<const double> h_values) {
    if (!(tau2 > 0.0)) throw domain_error("total_weight_from_h: tau2 must be > 0");
    double sum = 0.0;
    for (double h : h_values) sum += h / (h + 1.0);
    return sum / tau2;
}

PooledInference wald_test(PooledInference pooled, double alpha, double margin) {
    if (!(pooled.variance > 0.0)) throw domain_error("wald_test: pooled variance must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw domain_error("wald_test: alpha must be in (0,1)");
    if (margin < 0.0) throw domain_error("wald_test: margin must be >= 0");
    pooled.test_statistic = (pooled.d_tilde + margin) * std::sqrt(pooled.total_weight);
    pooled.significant = pooled.test_statistic > std_normal_quantile(1.0 - alpha);
    return pooled;
}

}  // namespace mrct
