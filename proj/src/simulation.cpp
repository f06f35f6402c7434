#include "mrct/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#include "mrct/survival.hpp"

namespace mrct {

namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

struct TrainingEstimate {
    double d_hat = 0.0;
    double omega = 0.0;
    bool ok = true;
};

void sample_mean_var(std::span<const double> x, double& mean, double& var) {
    mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size() - 1);
}

// Step-2 estimators: plug-in (D_r, Omega_r) from one region's training sample.
TrainingEstimate estimate_from_training(const EndpointSpec& spec, double ell, int n_per_group,
                                        RngStream& rng) {
    TrainingEstimate est;
    switch (spec.kind) {
        case EndpointSpec::Kind::continuous: {
            std::vector<double> y0(static_cast<std::size_t>(n_per_group)),
                y1(static_cast<std::size_t>(n_per_group));
            for (auto& v : y0) v = rng.normal(0.0, std::sqrt(spec.var0));
            for (auto& v : y1) v = rng.normal(spec.mean_difference, std::sqrt(spec.var1));
            double m0, v0, m1, v1;
            sample_mean_var(y0, m0, v0);
            sample_mean_var(y1, m1, v1);
            est.d_hat = m1 - m0;
            if (!(v0 > 0.0 && v1 > 0.0)) {
                est.ok = false;
                break;
            }
            est.omega = omega_continuous(v0, v1, ell);
            break;
        }
        case EndpointSpec::Kind::binary: {
            long s0 = 0, s1 = 0;
            for (int i = 0; i < n_per_group; ++i) s0 += rng.bernoulli(spec.p0) ? 1 : 0;
            for (int i = 0; i < n_per_group; ++i) s1 += rng.bernoulli(spec.p1) ? 1 : 0;
            const double p0 = static_cast<double>(s0) / n_per_group;
            const double p1 = static_cast<double>(s1) / n_per_group;
            est.d_hat = p1 - p0;
            if (!(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0)) {
                est.ok = false;
                break;
            }
            est.omega = omega_binary(p0, p1, ell);
            break;
        }
        case EndpointSpec::Kind::survival_ph: {
            const double L = spec.follow_up;
            std::vector<SubjectRecord> records;
            records.reserve(static_cast<std::size_t>(2 * n_per_group));
            long events0 = 0, events1 = 0;
            for (int g = 0; g <= 1; ++g) {
                const double rate = g == 0 ? spec.lambda0 : spec.lambda0 * spec.hazard_ratio;
                for (int i = 0; i < n_per_group; ++i) {
                    const double t = rng.exponential(rate);
                    const bool event = t <= L;
                    records.push_back({event ? t : L, event, g});
                    if (event) (g == 0 ? events0 : events1)++;
                }
            }
            if (events0 == 0 || events1 == 0) {
                est.ok = false;
                break;
            }
            try {
                est.d_hat = cox_loghr(records).first;
            } catch (const nonconvergence_error&) {
                est.ok = false;
                break;
            }
            const double p0 = static_cast<double>(events0) / n_per_group;
            const double p1 = static_cast<double>(events1) / n_per_group;
            est.omega = (ell + 1.0) * (ell + 1.0) / (ell * (p0 + ell * p1));
            break;
        }
        case EndpointSpec::Kind::survival_rmst: {
            const double eta = spec.horizon;
            double mu[2], v[2];
            for (int g = 0; g <= 1; ++g) {
                const SurvivalModel& model = g == 0 ? spec.control_model : spec.treatment_model;
                std::vector<SubjectRecord> arm(static_cast<std::size_t>(n_per_group));
                for (auto& rec : arm) {
                    const double t = rng.sample_survival(model);
                    const double c = rng.sample_censoring(spec.censoring);
                    rec = {std::min(t, c), t <= c, g};
                }
                mu[g] = rmst_estimate(arm, eta);
                v[g] = rmst_variance_estimate(arm, eta);
            }
            est.d_hat = mu[1] - mu[0];
            if (!(v[0] > 0.0 && v[1] > 0.0)) {
                est.ok = false;
                break;
            }
            est.omega = omega_survival_rmst(v[0], v[1], ell);
            break;
        }
    }
    return est;
}

std::vector<RegionDesignInput> as_region_inputs(std::span<const double> omegas) {
    std::vector<RegionDesignInput> regions(omegas.size());
    for (std::size_t r = 0; r < omegas.size(); ++r) {
        regions[r].region_id = "region" + std::to_string(r + 1);
        regions[r].omega = omegas[r];
    }
    return regions;
}

// Plug-in regional summary from one verification region's data.
RegionalSummary summarize_region(const EndpointSpec& spec, const RegionalData& data,
                                 double ell, int* flags) {
    RegionalSummary s;
    switch (spec.kind) {
        case EndpointSpec::Kind::continuous: {
            double m0, v0, m1, v1;
            sample_mean_var(data.continuous0, m0, v0);
            sample_mean_var(data.continuous1, m1, v1);
            s.d_hat = m1 - m0;
            s.sigma2 = v0 / static_cast<double>(data.continuous0.size()) +
                       v1 / static_cast<double>(data.continuous1.size());
            break;
        }
        case EndpointSpec::Kind::binary: {
            const auto n0 = static_cast<double>(data.binary0.size());
            const auto n1 = static_cast<double>(data.binary1.size());
            const double p0 =
                std::accumulate(data.binary0.begin(), data.binary0.end(), 0.0) / n0;
            const double p1 =
                std::accumulate(data.binary1.begin(), data.binary1.end(), 0.0) / n1;
            s.d_hat = p1 - p0;
            s.sigma2 = p0 * (1.0 - p0) / n0 + p1 * (1.0 - p1) / n1;
            break;
        }
        case EndpointSpec::Kind::survival_ph: {
            const auto [d_hat, sigma2] = cox_loghr(data.survival);
            (void)sigma2;  // Schoenfeld form below is the spec'd plug-in
            long events = 0;
            for (const auto& rec : data.survival) events += rec.event ? 1 : 0;
            s.d_hat = d_hat;
            s.sigma2 = (ell + 1.0) * (ell + 1.0) / (ell * static_cast<double>(events));
            break;
        }
        case EndpointSpec::Kind::survival_rmst: {
            std::vector<SubjectRecord> arm0, arm1;
            for (const auto& rec : data.survival)
                (rec.group == 0 ? arm0 : arm1).push_back(rec);
            const double eta = spec.horizon;
            s.d_hat = rmst_estimate(arm1, eta) - rmst_estimate(arm0, eta);
            s.sigma2 = rmst_variance_estimate(arm0, eta) / static_cast<double>(arm0.size()) +
                       rmst_variance_estimate(arm1, eta) / static_cast<double>(arm1.size());
            break;
        }
    }
    if (!(s.sigma2 > 0.0)) {
        s.sigma2 = 1e-12;  // degenerate sample; keep the pooled algebra total
        if (flags) *flags |= flag_degenerate_variance;
    }
    return s;
}

struct BenchmarkInputs {
    std::vector<double> effects;
    std::vector<double> omegas;
};

BenchmarkInputs true_inputs(const SimulationConfig& config) {
    BenchmarkInputs in;
    for (const auto& spec : config.regions) {
        in.effects.push_back(spec.true_effect());
        in.omegas.push_back(omega_for(spec, config.design.ell));
    }
    return in;
}

DesignReplication design_from_estimates(const SimulationConfig& config,
                                        std::vector<double> effects,
                                        std::vector<double> omegas, bool apply_cap) {
    DesignReplication rep;
    rep.effects = std::move(effects);
    rep.omegas = std::move(omegas);
    auto hyper = naive_hyperparams(rep.effects);
    double delta = hyper.delta, tau = std::sqrt(hyper.tau2);
    if (config.round_hyperparams) {
        delta = round2(delta);
        tau = round2(tau);
    }
    rep.delta = delta;
    rep.tau = tau;
    const RandomEffectsParams params{delta, tau * tau};
    const auto regions = as_region_inputs(rep.omegas);
    if (!check_feasibility(params, config.design, static_cast<int>(regions.size())).feasible) {
        rep.feasible = false;
        return rep;
    }
    const auto design = solve_overall_n0(params, config.design, regions);
    if (apply_cap && design.n0 > config.max_design_n0) {
        rep.feasible = false;
        return rep;
    }
    rep.feasible = true;
    rep.n0 = design.n0;
    rep.cp = design.cp_per_region[0];
    return rep;
}

}  // namespace

RegionalData generate_regional_data(const EndpointSpec& endpoint, double d_true, long n0_region,
                                    double ell, RngStream& rng, int* flags) {
    if (n0_region < 1) throw domain_error("generate_regional_data: region size must be >= 1");
    const long n1_region = std::lround(ell * static_cast<double>(n0_region));
    RegionalData data;
    switch (endpoint.kind) {
        case EndpointSpec::Kind::continuous: {
            data.continuous0.resize(static_cast<std::size_t>(n0_region));
            data.continuous1.resize(static_cast<std::size_t>(n1_region));
            const double sd0 = std::sqrt(endpoint.var0), sd1 = std::sqrt(endpoint.var1);
            for (auto& v : data.continuous0) v = rng.normal(0.0, sd0);
            for (auto& v : data.continuous1) v = rng.normal(d_true, sd1);
            break;
        }
        case EndpointSpec::Kind::binary: {
            double p1 = endpoint.p0 + d_true;
            if (p1 <= 0.0 || p1 >= 1.0) {
                p1 = std::clamp(p1, 1e-6, 1.0 - 1e-6);
                if (flags) *flags |= flag_bernoulli_clamped;
            }
            data.binary0.resize(static_cast<std::size_t>(n0_region));
            data.binary1.resize(static_cast<std::size_t>(n1_region));
            for (auto& v : data.binary0) v = rng.bernoulli(endpoint.p0) ? 1 : 0;
            for (auto& v : data.binary1) v = rng.bernoulli(p1) ? 1 : 0;
            break;
        }
        case EndpointSpec::Kind::survival_ph: {
            const double lambda1 = endpoint.lambda0 * std::exp(-d_true);
            const double L = endpoint.follow_up;
            data.survival.reserve(static_cast<std::size_t>(n0_region + n1_region));
            for (int g = 0; g <= 1; ++g) {
                const double rate = g == 0 ? endpoint.lambda0 : lambda1;
                const long n = g == 0 ? n0_region : n1_region;
                for (long i = 0; i < n; ++i) {
                    const double t = rng.exponential(rate);
                    const bool event = t <= L;
                    data.survival.push_back({event ? t : L, event, g});
                }
            }
            break;
        }
        case EndpointSpec::Kind::survival_rmst: {
            // Arm models are sampled as-is; calibrating the treatment arm to a
            // target effect happens upstream (see run_verification).
            data.survival.reserve(static_cast<std::size_t>(n0_region + n1_region));
            for (int g = 0; g <= 1; ++g) {
                const SurvivalModel& model =
                    g == 0 ? endpoint.control_model : endpoint.treatment_model;
                const long n = g == 0 ? n0_region : n1_region;
                for (long i = 0; i < n; ++i) {
                    const double t = rng.sample_survival(model);
                    const double c = rng.sample_censoring(endpoint.censoring);
                    data.survival.push_back({std::min(t, c), t <= c, g});
                }
            }
            break;
        }
    }
    return data;
}

DesignReplication run_benchmark_full(const SimulationConfig& config) {
    config.design.validate();
    if (config.regions.size() != config.design.fractions.size())
        throw domain_error("run_benchmark: one endpoint spec per fraction required");
    auto in = true_inputs(config);
    auto rep = design_from_estimates(config, std::move(in.effects), std::move(in.omegas),
                                     /*apply_cap=*/false);
    if (!rep.feasible) {
        const RandomEffectsParams params{rep.delta, rep.tau * rep.tau};
        const auto fr = check_feasibility(params, config.design,
                                          static_cast<int>(config.regions.size()));
        throw infeasible_error("run_benchmark: tau/(delta+M) = " + std::to_string(fr.ratio) +
                               " exceeds the bound " + std::to_string(fr.limit));
    }
    return rep;
}

std::pair<long, double> run_benchmark(const SimulationConfig& config) {
    const auto rep = run_benchmark_full(config);
    return {rep.n0, rep.cp};
}

DesignReplication run_design_replication(const SimulationConfig& config, int replication_index) {
    RngStream rng(derive_seed(config.master_seed, static_cast<std::uint64_t>(replication_index), 0));
    std::vector<double> effects, omegas;
    for (const auto& spec : config.regions) {
        const auto est =
            estimate_from_training(spec, config.design.ell, config.training_n_per_group, rng);
        if (!est.ok) {
            DesignReplication bad;
            bad.feasible = false;
            return bad;
        }
        effects.push_back(est.d_hat);
        omegas.push_back(est.omega);
    }
    return design_from_estimates(config, std::move(effects), std::move(omegas),
                                 /*apply_cap=*/true);
}

VerificationResult run_verification(const DesignReplication& designed,
                                    const SimulationConfig& config, int design_index,
                                    int verify_index) {
    RngStream rng(derive_seed(config.master_seed, static_cast<std::uint64_t>(design_index),
                              static_cast<std::uint64_t>(verify_index) + 1));
    const auto R = config.regions.size();
    const auto regional_n0 = apportion_largest_remainder(designed.n0, config.design.fractions);

    VerificationResult out;
    std::vector<RegionalSummary> summaries;
    summaries.reserve(R);
    for (std::size_t r = 0; r < R; ++r) {
        EndpointSpec spec = config.regions[r];
        double d_v = rng.normal(designed.delta, designed.tau);
        if (spec.kind == EndpointSpec::Kind::survival_rmst) {
            // Recalibrate the treatment arm so the true RMST difference is d_v.
            // A failed draw is redrawn once; a second failure clamps d_v to the
            // achievable range (the transparent-and-counted route, like the
            // Bernoulli overflow below).
            auto apply = [&](double target) {
                if (spec.control_model.kind == SurvivalModel::Kind::weibull) {
                    const double nu1 = calibrate_weibull_shape(
                        spec.control_model.shape, spec.control_model.scale,
                        spec.treatment_model.scale, spec.horizon, target);
                    spec.treatment_model =
                        SurvivalModel::weibull(nu1, spec.treatment_model.scale);
                } else {
                    const double gamma1 = calibrate_piecewise_late_rate(
                        spec.control_model.early_rate, spec.control_model.late_rate,
                        spec.treatment_model.early_rate, spec.control_model.change_point,
                        spec.horizon, target);
                    spec.treatment_model =
                        SurvivalModel::piecewise(spec.treatment_model.early_rate, gamma1,
                                                 spec.control_model.change_point);
                }
            };
            for (int attempt = 0;; ++attempt) {
                try {
                    apply(d_v);
                    break;
                } catch (const calibration_error&) {
                    if (attempt == 0) {
                        out.flags |= flag_calibration_retry;
                        d_v = rng.normal(designed.delta, designed.tau);
                        continue;
                    }
                    const auto [lo, hi] =
                        spec.control_model.kind == SurvivalModel::Kind::weibull
                            ? weibull_calibration_range(spec.control_model.shape,
                                                        spec.control_model.scale,
                                                        spec.treatment_model.scale, spec.horizon)
                            : piecewise_calibration_range(
                                  spec.control_model.early_rate, spec.control_model.late_rate,
                                  spec.treatment_model.early_rate,
                                  spec.control_model.change_point, spec.horizon);
                    const double pad = 1e-6 * (hi - lo);
                    d_v = std::clamp(d_v, lo + pad, hi - pad);
                    out.flags |= flag_calibration_clamped;
                    apply(d_v);
                    break;
                }
            }
        }
        const auto data = generate_regional_data(spec, d_v, regional_n0[r], config.design.ell,
                                                 rng, &out.flags);
        auto summary = summarize_region(spec, data, config.design.ell, &out.flags);
        summary.region_id = "region" + std::to_string(r + 1);
        summaries.push_back(std::move(summary));
    }

    const double tau2 = moment_tau2(summaries);
    auto pooled = pooled_estimate(summaries, tau2);
    pooled = wald_test(pooled, config.design.alpha, config.design.margin);
    out.significant = pooled.significant;
    if (out.significant) {
        const auto shrunk = shrinkage_estimate(summaries[0], tau2, pooled);
        const double m = config.design.margin;
        out.consistent = shrunk.d_tilde_r + m >= config.design.pi * (pooled.d_tilde + m);
    }
    return out;
}

SimulationReport simulate_study(const SimulationConfig& config) {
    config.design.validate();
    if (config.m_design < 1 || config.m_verify < 1)
        throw domain_error("simulate_study: m_design and m_verify must be >= 1");
    if (config.training_n_per_group < 2)
        throw domain_error("simulate_study: training size must be >= 2");

    SimulationReport report;
    {
        const auto bench = run_benchmark_full(config);
        report.benchmark_n0 = bench.n0;
        report.benchmark_cp = bench.cp;
        report.benchmark_delta = bench.delta;
        report.benchmark_tau2 = bench.tau * bench.tau;
    }

    auto run_one = [&](int i) {
        ReplicationRecord rec;
        rec.index = i;
        const auto designed = run_design_replication(config, i);
        rec.feasible = designed.feasible;
        if (!designed.feasible) return rec;
        rec.n0_design = designed.n0;
        rec.cp_design = designed.cp;
        long significant = 0, consistent = 0;
        for (int j = 0; j < config.m_verify; ++j) {
            VerificationResult v;
            try {
                v = run_verification(designed, config, i, j);
            } catch (const std::exception& e) {
                std::ostringstream os;
                os << "replication " << i << "/" << j << ": " << e.what();
                throw numerical_error(os.str());
            }
            if (v.significant) {
                ++significant;
                if (v.consistent) ++consistent;
            }
            if (v.flags != flag_none) {
                rec.flags |= v.flags;
                rec.flagged_verifications++;
            }
        }
        rec.empirical_power = static_cast<double>(significant) / config.m_verify;
        if (significant > 0) {
            rec.empirical_cp = static_cast<double>(consistent) / static_cast<double>(significant);
        } else {
            rec.empirical_cp = std::numeric_limits<double>::quiet_NaN();
            rec.flags |= flag_no_significance;
        }
        return rec;
    };

    std::vector<ReplicationRecord> records(static_cast<std::size_t>(config.m_design));
    const int threads = std::max(1, config.threads);
    if (threads == 1) {
        for (int i = 0; i < config.m_design; ++i) records[static_cast<std::size_t>(i)] = run_one(i);
    } else {
        std::vector<std::future<void>> futures;
        std::atomic<int> next{0};
        for (int t = 0; t < threads; ++t)
            futures.push_back(std::async(std::launch::async, [&]() {
                for (int i = next.fetch_add(1); i < config.m_design; i = next.fetch_add(1))
                    records[static_cast<std::size_t>(i)] = run_one(i);
            }));
        for (auto& f : futures) f.get();
    }

    std::vector<double> n0s, cps;
    double dev_power_sum = 0.0, dev_cp_sum = 0.0;
    long dev_cp_count = 0;
    for (const auto& rec : records) {
        if (!rec.feasible) {
            report.infeasible_design_count++;
            continue;
        }
        n0s.push_back(static_cast<double>(rec.n0_design));
        cps.push_back(rec.cp_design);
        dev_power_sum += std::abs(rec.empirical_power - (1.0 - config.design.beta));
        if (!std::isnan(rec.empirical_cp)) {
            dev_cp_sum += std::abs(rec.empirical_cp - rec.cp_design);
            ++dev_cp_count;
        }
        report.flagged_verification_count += rec.flagged_verifications;
        report.total_verification_count += config.m_verify;
    }
    auto median = [](std::vector<double> v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::sort(v.begin(), v.end());
        const auto n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    report.median_n0_design = median(n0s);
    std::vector<double> abs_dev;
    abs_dev.reserve(n0s.size());
    for (double v : n0s) abs_dev.push_back(std::abs(v - report.median_n0_design));
    report.mad_n0_design = median(abs_dev);
    report.mean_cp_design =
        cps.empty() ? std::numeric_limits<double>::quiet_NaN()
                    : std::accumulate(cps.begin(), cps.end(), 0.0) / static_cast<double>(cps.size());
    const auto feasible = static_cast<double>(n0s.size());
    report.mean_dev_power = feasible > 0 ? dev_power_sum / feasible
                                         : std::numeric_limits<double>::quiet_NaN();
    report.mean_dev_cp = dev_cp_count > 0 ? dev_cp_sum / static_cast<double>(dev_cp_count)
                                          : std::numeric_limits<double>::quiet_NaN();
    report.replications = std::move(records);
    return report;
}

}  // namespace mrct
