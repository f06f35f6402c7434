#include "mrct/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mrct {

namespace {

double z_sum(const DesignConfig& c) {
    return std_normal_quantile(1.0 - c.alpha) + std_normal_quantile(1.0 - c.beta);
}

double effective_delta(const RandomEffectsParams& e, const DesignConfig& c) {
    return e.delta + c.margin;
}

// sum_r (tau2 + Omega_r/(n0 f_r))^-1
double total_precision(double n0, double tau2, std::span<const RegionDesignInput> regions,
                       std::span<const double> fractions) {
    double w = 0.0;
    for (std::size_t r = 0; r < regions.size(); ++r)
        w += 1.0 / (tau2 + regions[r].omega / (n0 * fractions[r]));
    return w;
}

// CP integral with coefficient c: (1/(1-b)) int_{u>z_b} Phi(c (u + zs)) dPhi(u)
double cp_from_coefficient(double coef, const DesignConfig& config,
                           const QuadratureSettings& quad) {
    const double zs = z_sum(config);
    const double z_beta = std_normal_quantile(config.beta);
    return truncated_normal_expectation(
        [&](double u) { return std_normal_cdf(coef * (u + zs)); }, z_beta, quad);
}

}  // namespace

void DesignConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 0.5)) throw domain_error("DesignConfig: alpha must be in (0,0.5)");
    if (!(beta > 0.0 && beta < 0.5)) throw domain_error("DesignConfig: beta must be in (0,0.5)");
    if (!(pi >= 0.5 && pi <= 1.0)) throw domain_error("DesignConfig: pi must be in [0.5,1]");
    if (!(ell > 0.0)) throw domain_error("DesignConfig: ell must be > 0");
    if (margin < 0.0) throw domain_error("DesignConfig: margin must be >= 0");
    if (!(assurance > 0.0 && assurance < 1.0))
        throw domain_error("DesignConfig: assurance must be in (0,1)");
    if (fractions.empty()) throw domain_error("DesignConfig: fractions are empty");
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw domain_error("DesignConfig: fractions must be > 0");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw domain_error("DesignConfig: fractions sum to " + std::to_string(sum));
}

std::vector<long> apportion_largest_remainder(long n0, std::span<const double> fractions) {
    std::vector<long> parts(fractions.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    long assigned = 0;
    for (std::size_t r = 0; r < fractions.size(); ++r) {
        const double raw = static_cast<double>(n0) * fractions[r];
        parts[r] = static_cast<long>(std::floor(raw));
        assigned += parts[r];
        remainders.emplace_back(raw - std::floor(raw), r);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (long i = 0; i < n0 - assigned; ++i) parts[remainders[static_cast<std::size_t>(i)].second]++;
    return parts;
}

DesignResult solve_overall_n0(const RandomEffectsParams& effects, const DesignConfig& config,
                              std::span<const RegionDesignInput> regions) {
    config.validate();
    if (regions.size() != config.fractions.size())
        throw domain_error("solve_overall_n0: one omega per fraction required");
    for (const auto& reg : regions)
        if (!(reg.omega > 0.0)) throw domain_error("solve_overall_n0: omega must be > 0");
    const double delta_eff = effective_delta(effects, config);
    if (!(delta_eff > 0.0)) throw domain_error("solve_overall_n0: delta + margin must be > 0");

    const double zs = z_sum(config);
    const double target = zs * zs / (delta_eff * delta_eff);
    const auto R = static_cast<double>(regions.size());
    if (effects.tau2 > 0.0 && R / effects.tau2 <= target) {
        const auto rep = check_feasibility(effects, config, static_cast<int>(regions.size()));
        throw infeasible_error(
            "solve_overall_n0: infeasible design, tau/(delta+M) = " + std::to_string(rep.ratio) +
            " must be below sqrt(R)/(z_{1-alpha}+z_{1-beta}) = " + std::to_string(rep.limit));
    }

    auto g = [&](double n0) {
        return total_precision(n0, effects.tau2, regions, config.fractions) - target;
    };
    double lo = 1.0, hi = 1e9;
    while (g(hi) < 0.0) {
        hi *= 10.0;
        if (hi > 1e18) throw numerical_error("solve_overall_n0: bracket expansion failed");
    }
    if (g(lo) > 0.0) lo = 1e-9;  // tiny trials: root below one subject
    const double root = find_root(g, lo, hi, 1e-8);

    DesignResult out;
    out.continuous_root = root;
    out.n0 = static_cast<long>(std::ceil(root - 1e-9));
    out.n0 = std::max(out.n0, static_cast<long>(regions.size()));
    out.n1 = static_cast<long>(std::ceil(config.ell * static_cast<double>(out.n0) - 1e-9));
    out.regional_n0 = apportion_largest_remainder(out.n0, config.fractions);
    out.achieved_w =
        total_precision(static_cast<double>(out.n0), effects.tau2, regions, config.fractions);
    out.cp_per_region.reserve(regions.size());
    for (std::size_t r = 0; r < regions.size(); ++r) {
        const double cp = consistency_probability(effects, config, regions, out.n0, r);
        out.cp_per_region.push_back(cp);
        out.cp_meets_assurance.push_back(cp >= config.assurance);
    }
    out.feasible = std::all_of(out.cp_meets_assurance.begin(), out.cp_meets_assurance.end(),
                               [](bool b) { return b; });
    return out;
}

std::pair<long, long> closed_form_n0(const RandomEffectsParams& effects,
                                     const DesignConfig& config, double omega, int n_regions) {
    if (!(omega > 0.0)) throw domain_error("closed_form_n0: omega must be > 0");
    if (n_regions < 2) throw domain_error("closed_form_n0: need at least 2 regions");
    const double delta_eff = effective_delta(effects, config);
    if (!(delta_eff > 0.0)) throw domain_error("closed_form_n0: delta + margin must be > 0");
    const double zs = z_sum(config);
    const double z2 = zs * zs;
    const double R = n_regions;
    const double denom = R * delta_eff * delta_eff - effects.tau2 * z2;
    if (!(denom > 0.0)) {
        const auto rep = check_feasibility(effects, config, n_regions);
        throw infeasible_error("closed_form_n0: non-positive denominator, tau/(delta+M) = " +
                               std::to_string(rep.ratio) + " >= " + std::to_string(rep.limit));
    }
    const double n0 = R * omega * z2 / denom;
    const long n0i = static_cast<long>(std::ceil(n0 - 1e-9));
    const long n1i = static_cast<long>(std::ceil(config.ell * static_cast<double>(n0i) - 1e-9));
    return {n0i, n1i};
}

double consistency_probability(const RandomEffectsParams& effects, const DesignConfig& config,
                               std::span<const RegionDesignInput> regions, long n0,
                               std::size_t r, const QuadratureSettings& quad) {
    if (r >= regions.size()) throw domain_error("consistency_probability: region index out of range");
    if (n0 < 1) throw domain_error("consistency_probability: n0 must be >= 1");
    if (regions.size() != config.fractions.size())
        throw domain_error("consistency_probability: one omega per fraction required");
    if (!(effective_delta(effects, config) > 0.0))
        throw domain_error("consistency_probability: delta + margin must be > 0");

    std::vector<double> h(regions.size());
    for (std::size_t j = 0; j < regions.size(); ++j)
        h[j] = effects.tau2 * static_cast<double>(n0) * config.fractions[j] / regions[j].omega;
    const double rho_inv_m1 = rho_inverse(h, r) - 1.0;
    if (rho_inv_m1 < 1e-14) return 1.0;  // D_tilde_r degenerates to D_tilde
    const double coef = (1.0 - config.pi) / std::sqrt(rho_inv_m1);
    return cp_from_coefficient(coef, config, quad);
}

std::pair<double, BoundStatus> cp_lower_bound(const RandomEffectsParams& effects,
                                              const DesignConfig& config,
                                              const QuadratureSettings& quad) {
    const double delta_eff = effective_delta(effects, config);
    if (!(delta_eff > 0.0)) throw domain_error("cp_lower_bound: delta + margin must be > 0");
    if (!(effects.tau2 > 0.0)) throw domain_error("cp_lower_bound: tau2 must be > 0");
    const double zs = z_sum(config);
    const double z2 = zs * zs;
    // C = sum of h_j/(h_j+1) implied by the size equation; the bound maximizes
    // kappa_r (C - kappa_r) over kappa_r in [0,1).
    const double C = effects.tau2 * z2 / (delta_eff * delta_eff);
    if (C / 2.0 < 1.0) {
        const double coef = 2.0 * delta_eff * delta_eff * (1.0 - config.pi) / (effects.tau2 * z2);
        return {cp_from_coefficient(coef, config, quad), BoundStatus::attained};
    }
    // Unattained branch: C >= 2, so C - 1 >= 1 and the denominator is safe.
    const double coef = (1.0 - config.pi) / std::sqrt(C - 1.0);
    return {cp_from_coefficient(coef, config, quad), BoundStatus::unattained};
}

double cp_equal_allocation(const RandomEffectsParams& effects, const DesignConfig& config,
                           int n_regions, const QuadratureSettings& quad) {
    if (n_regions < 2) throw domain_error("cp_equal_allocation: need at least 2 regions");
    const double delta_eff = effective_delta(effects, config);
    if (!(delta_eff > 0.0)) throw domain_error("cp_equal_allocation: delta + margin must be > 0");
    const auto rep = check_feasibility(effects, config, n_regions);
    if (!rep.feasible)
        throw not_available_error("cp_equal_allocation: proviso violated, tau/(delta+M) = " +
                                  std::to_string(rep.ratio) + " >= sqrt(R)/(z-sum) = " +
                                  std::to_string(rep.limit));
    if (effects.tau2 == 0.0) return 1.0;
    const double zs = z_sum(config);
    const double R = n_regions;
    const double coef = delta_eff * delta_eff * R * (1.0 - config.pi) /
                        (effects.tau2 * std::sqrt(R - 1.0) * zs * zs);
    return cp_from_coefficient(coef, config, quad);
}

FeasibilityReport check_feasibility(const RandomEffectsParams& effects,
                                    const DesignConfig& config, int n_regions) {
    const double delta_eff = effective_delta(effects, config);
    const double zs = z_sum(config);
    FeasibilityReport rep;
    rep.limit = std::sqrt(static_cast<double>(n_regions)) / zs;
    rep.corollary1_threshold = std::sqrt(2.0) / zs;
    rep.ratio = (delta_eff > 0.0) ? std::sqrt(effects.tau2) / delta_eff
                                  : std::numeric_limits<double>::infinity();
    rep.feasible = rep.ratio < rep.limit;
    return rep;
}

std::vector<std::pair<std::pair<double, double>, double>> standard_attainability_thresholds() {
    std::vector<std::pair<std::pair<double, double>, double>> out;
    for (auto [a, b] : {std::pair{0.025, 0.1}, std::pair{0.025, 0.2}, std::pair{0.05, 0.1},
                        std::pair{0.05, 0.2}}) {
        const double zs = std_normal_quantile(1.0 - a) + std_normal_quantile(1.0 - b);
        out.push_back({{a, b}, std::sqrt(2.0) / zs});
    }
    return out;
}

long n0_attaining_bound(const RandomEffectsParams& effects, const DesignConfig& config,
                        double omega_r, double f_r) {
    if (!(omega_r > 0.0) || !(f_r > 0.0 && f_r < 1.0))
        throw domain_error("n0_attaining_bound: need omega_r > 0 and f_r in (0,1)");
    if (!(effects.tau2 > 0.0)) throw domain_error("n0_attaining_bound: tau2 must be > 0");
    const double delta_eff = effective_delta(effects, config);
    if (!(delta_eff > 0.0)) throw domain_error("n0_attaining_bound: delta + margin must be > 0");
    const double zs = z_sum(config);
    const double kappa = effects.tau2 * zs * zs / (2.0 * delta_eff * delta_eff);
    if (!(kappa < 1.0))
        throw not_available_error("n0_attaining_bound: bound not attained (kappa_r >= 1)");
    const double h = kappa / (1.0 - kappa);
    return static_cast<long>(std::ceil(h * omega_r / (effects.tau2 * f_r) - 1e-9));
}

std::vector<ProfilePoint> cp_profile(const RandomEffectsParams& effects,
                                     const DesignConfig& config,
                                     std::span<const RegionDesignInput> regions, std::size_t r,
                                     std::span<const double> f_grid) {
    if (r >= regions.size()) throw domain_error("cp_profile: region index out of range");
    if (regions.size() < 2) throw domain_error("cp_profile: need at least 2 regions");
    std::vector<ProfilePoint> out;
    out.reserve(f_grid.size());
    const auto R = regions.size();
    for (double fr : f_grid) {
        if (!(fr > 0.0 && fr < 1.0)) throw domain_error("cp_profile: grid f_r must be in (0,1)");
        DesignConfig c = config;
        c.fractions.assign(R, (1.0 - fr) / static_cast<double>(R - 1));
        c.fractions[r] = fr;
        const auto design = solve_overall_n0(effects, c, regions);
        ProfilePoint p;
        p.f_r = fr;
        p.n0 = design.n0;
        p.regional_n0 =
            static_cast<long>(std::ceil(static_cast<double>(design.n0) * fr - 1e-9));
        p.cp = design.cp_per_region[r];
        out.push_back(p);
    }
    return out;
}

}  // namespace mrct
