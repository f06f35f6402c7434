#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mrct/analysis.hpp"
#include "mrct/design.hpp"
#include "mrct/simulation.hpp"

namespace mrct {

inline constexpr int kSchemaVersion = 1;

struct ProfileRequest {
    std::size_t region = 0;  // zero-based after parsing (config uses 1-based)
    std::vector<double> grid;
};

// Parsed, type-checked view of a JSON run configuration. Sections are
// optional; each command checks for what it needs.
struct LoadedConfig {
    int schema_version = kSchemaVersion;
    std::string time_unit = "unspecified";
    std::optional<DesignConfig> design;
    std::optional<RandomEffectsParams> effects;
    std::vector<RegionDesignInput> regions;       // explicit omegas
    std::vector<EndpointSpec> endpoint_specs;     // one per region when "endpoint" given
    std::optional<TrialAnalysisInput> analysis;
    std::optional<ProfileRequest> profile;
    std::optional<long> n0_override;              // for the cp command
    // simulation section
    int training_n_per_group = 1000;
    int m_design = 1000;
    int m_verify = 1000;
    std::uint64_t master_seed = 0;
    bool round_hyperparams = false;
    int threads = 1;
    bool has_simulation = false;
};

// Parses and type-checks; throws schema_error on I/O, parse, or type issues
// and domain_error on invariant violations surfaced by the typed layer.
LoadedConfig load_config(const std::string& path);

struct Diagnostic {
    bool fatal = false;
    std::string message;
};

// Dry-run validation: schema pass plus semantic checks (fraction sums,
// feasibility preview naming the violated bound, omega previews).
std::vector<Diagnostic> validate_config(const std::string& path);

// Subject-level CSV with header time,event,group (event/group in {0,1}).
std::vector<SubjectRecord> load_subjects_csv(const std::string& path);

}  // namespace mrct
