#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mrct/design.hpp"
#include "mrct/endpoints.hpp"
#include "mrct/model.hpp"
#include "mrct/rng.hpp"
#include "mrct/survival.hpp"

namespace mrct {

// Verification-stage anomaly flags, OR-ed per replication.
enum ReplicationFlag : int {
    flag_none = 0,
    flag_bernoulli_clamped = 1,     // p0 + D^V left (0,1); parameter clamped
    flag_calibration_retry = 2,     // D^V redrawn once after a calibration failure
    flag_no_significance = 4,       // empirical CP undefined (denominator zero)
    flag_degenerate_variance = 8,   // a regional plug-in variance collapsed to zero
    flag_calibration_clamped = 16,  // D^V clamped to the achievable RMST range
};

struct SimulationConfig {
    std::vector<EndpointSpec> regions;  // one spec per region, carries the true effect
    DesignConfig design;
    int training_n_per_group = 1000;
    int m_design = 1000;
    int m_verify = 1000;
    std::uint64_t master_seed = 0;
    // Round (delta, tau) estimates to two decimals before solving, the
    // convention behind the published benchmark tables.
    bool round_hyperparams = false;
    int threads = 1;
    // Design replications whose n0 exceeds this are treated like infeasible
    // ones (excluded from medians, counted): the root diverges as the
    // estimated tau/(delta+M) approaches the feasibility bound.
    long max_design_n0 = 1000000;
};

struct DesignReplication {
    bool feasible = false;
    long n0 = 0;
    double cp = 0.0;
    double delta = 0.0;
    double tau = 0.0;
    std::vector<double> omegas;
    std::vector<double> effects;  // D_r^D
};

struct VerificationResult {
    bool significant = false;
    bool consistent = false;  // region 1, conditional on significance
    int flags = flag_none;
};

struct ReplicationRecord {
    int index = 0;
    bool feasible = false;
    long n0_design = 0;
    double cp_design = 0.0;
    double empirical_power = 0.0;
    double empirical_cp = 0.0;  // NaN when no verification replication was significant
    int flags = flag_none;      // union of verification flags
    long flagged_verifications = 0;
};

struct SimulationReport {
    long benchmark_n0 = 0;
    double benchmark_cp = 0.0;
    double benchmark_delta = 0.0;
    double benchmark_tau2 = 0.0;
    double median_n0_design = 0.0;
    double mad_n0_design = 0.0;
    double mean_cp_design = 0.0;
    double mean_dev_power = 0.0;
    double mean_dev_cp = 0.0;
    int infeasible_design_count = 0;     // excluded from the medians above
    long flagged_verification_count = 0;  // clamps / calibration retries / empty CP
    long total_verification_count = 0;
    std::vector<ReplicationRecord> replications;
};

// Step 1: benchmark (n0, CP of region 1) from the true (D_r, Omega_r).
std::pair<long, double> run_benchmark(const SimulationConfig& config);

// As above but also exposing the hyperparameters used.
DesignReplication run_benchmark_full(const SimulationConfig& config);

// Step 2: estimate (D_r, Omega_r) from fresh training data, then re-design.
// Infeasible estimates give feasible = false.
DesignReplication run_design_replication(const SimulationConfig& config, int replication_index);

// Step 3: one verification replication under the designed parameters.
VerificationResult run_verification(const DesignReplication& designed,
                                    const SimulationConfig& config, int design_index,
                                    int verify_index);

// Full three-step protocol: m_design design replications, each verified
// m_verify times. Deterministic for a given (config, master_seed) regardless
// of the thread count.
SimulationReport simulate_study(const SimulationConfig& config);

// Subject-level or response-level data for one region and group.
struct RegionalData {
    std::vector<double> continuous0, continuous1;
    std::vector<int> binary0, binary1;
    std::vector<SubjectRecord> survival;  // both groups, group field set
};

// Draws per-group samples of size n0_region / round(ell * n0_region) from the
// endpoint's law with the regional effect set to d_true. Binary parameters
// falling outside (0,1) are clamped to [1e-6, 1-1e-6] and flagged.
RegionalData generate_regional_data(const EndpointSpec& endpoint, double d_true, long n0_region,
                                    double ell, RngStream& rng, int* flags);

}  // namespace mrct
