// Command-line front-end: design | cp | bound | profile | analyze | simulate.
// Exit status: 0 success, 1 domain/infeasibility error, 2 I/O or schema error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrct/analysis.hpp"
#include "mrct/config.hpp"
#include "mrct/design.hpp"
#include "mrct/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::string format = "json";  // json | csv | both
    std::optional<std::uint64_t> seed;
    std::optional<int> m_design;
    std::optional<int> m_verify;
    bool dry_run = false;
};

std::string num(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.10g", v);
    return buffer;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mrct::schema_error("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const CliOptions& opt, const std::string& name, const json& doc) {
    if (opt.format == "csv") return;
    write_text(fs::path(opt.out_dir) / (name + ".json"), doc.dump(2) + "\n");
}

void write_csv(const CliOptions& opt, const std::string& name, const std::string& text) {
    if (opt.format == "json") return;
    write_text(fs::path(opt.out_dir) / (name + ".csv"), text);
}

mrct::LoadedConfig load_for(const CliOptions& opt) {
    auto cfg = mrct::load_config(opt.config_path);
    if (opt.seed) cfg.master_seed = *opt.seed;
    if (opt.m_design) cfg.m_design = *opt.m_design;
    if (opt.m_verify) cfg.m_verify = *opt.m_verify;
    return cfg;
}

// Regions with explicit omegas, deriving them from the endpoint specs if needed.
std::vector<mrct::RegionDesignInput> resolve_regions(const mrct::LoadedConfig& cfg) {
    if (!cfg.regions.empty()) return cfg.regions;
    if (cfg.endpoint_specs.empty())
        throw mrct::domain_error("config needs either 'regions' (omegas) or 'endpoint'");
    std::vector<mrct::RegionDesignInput> regions;
    const double ell = cfg.design ? cfg.design->ell : 1.0;
    for (std::size_t r = 0; r < cfg.endpoint_specs.size(); ++r)
        regions.push_back({"region" + std::to_string(r + 1),
                           mrct::omega_for(cfg.endpoint_specs[r], ell)});
    return regions;
}

mrct::RandomEffectsParams resolve_effects(const mrct::LoadedConfig& cfg) {
    if (cfg.effects) return *cfg.effects;
    if (!cfg.endpoint_specs.empty()) {
        std::vector<double> effects;
        for (const auto& spec : cfg.endpoint_specs) effects.push_back(spec.true_effect());
        return mrct::naive_hyperparams(effects);
    }
    throw mrct::domain_error("config needs 'effects' or an 'endpoint' to derive them");
}

int dispatch_dry_run(const CliOptions& opt) {
    const auto diagnostics = mrct::validate_config(opt.config_path);
    bool fatal = false;
    for (const auto& d : diagnostics) {
        (d.fatal ? std::cerr : std::cout) << (d.fatal ? "error: " : "") << d.message << "\n";
        fatal = fatal || d.fatal;
    }
    return fatal ? 1 : 0;
}

int cmd_design(const CliOptions& opt) {
    const auto cfg = load_for(opt);
    if (!cfg.design) throw mrct::domain_error("design command needs a 'design' section");
    const auto regions = resolve_regions(cfg);
    const auto effects = resolve_effects(cfg);
    const auto result = mrct::solve_overall_n0(effects, *cfg.design, regions);

    json doc;
    doc["schema_version"] = mrct::kSchemaVersion;
    doc["time_unit"] = cfg.time_unit;
    doc["n0"] = result.n0;
    doc["n1"] = result.n1;
    doc["continuous_root"] = result.continuous_root;
    doc["achieved_w"] = result.achieved_w;
    doc["regional_n0"] = result.regional_n0;
    doc["cp_per_region"] = result.cp_per_region;
    doc["cp_meets_assurance"] = result.cp_meets_assurance;
    doc["feasible"] = result.feasible;
    doc["delta"] = effects.delta;
    doc["tau2"] = effects.tau2;
    write_json(opt, "design", doc);

    std::string csv = "region,fraction,omega,regional_n0,cp\n";
    for (std::size_t r = 0; r < regions.size(); ++r)
        csv += regions[r].region_id + "," + num(cfg.design->fractions[r]) + "," +
               num(regions[r].omega) + "," + std::to_string(result.regional_n0[r]) + "," +
               num(result.cp_per_region[r]) + "\n";
    write_csv(opt, "design", csv);
    std::cout << "n0=" << result.n0 << " n1=" << result.n1 << "\n";
    return 0;
}

int cmd_cp(const CliOptions& opt) {
    const auto cfg = load_for(opt);
    if (!cfg.design) throw mrct::domain_error("cp command needs a 'design' section");
    const auto regions = resolve_regions(cfg);
    const auto effects = resolve_effects(cfg);
    long n0 = 0;
    if (cfg.n0_override) {
        n0 = *cfg.n0_override;
    } else {
        n0 = mrct::solve_overall_n0(effects, *cfg.design, regions).n0;
    }
    json doc;
    doc["schema_version"] = mrct::kSchemaVersion;
    doc["n0"] = n0;
    json table = json::array();
    std::string csv = "region,fraction,cp\n";
    for (std::size_t r = 0; r < regions.size(); ++r) {
        const double cp = mrct::consistency_probability(effects, *cfg.design, regions, n0, r);
        table.push_back({{"region", regions[r].region_id},
                         {"fraction", cfg.design->fractions[r]},
                         {"cp", cp}});
        csv += regions[r].region_id + "," + num(cfg.design->fractions[r]) + "," + num(cp) + "\n";
        std::cout << regions[r].region_id << ": CP=" << num(cp) << "\n";
    }
    doc["cp"] = table;
    if (effects.tau2 == 0.0)
        doc["note"] = "tau2 = 0: shrinkage degenerates to the pooled estimate, CP = 1";
    write_json(opt, "cp", doc);
    write_csv(opt, "cp", csv);
    return 0;
}

int cmd_bound(const CliOptions& opt) {
    const auto cfg = load_for(opt);
    if (!cfg.design || !cfg.effects)
        throw mrct::domain_error("bound command needs 'design' and 'effects' sections");
    const auto [bound, status] = mrct::cp_lower_bound(*cfg.effects, *cfg.design);
    json doc;
    doc["schema_version"] = mrct::kSchemaVersion;
    doc["cp_lower_bound"] = bound;
    doc["status"] = status == mrct::BoundStatus::attained ? "attained" : "unattained";
    write_json(opt, "bound", doc);
    write_csv(opt, "bound", "cp_lower_bound,status\n" + num(bound) + "," +
                                std::string(doc["status"]) + "\n");
    std::cout << "CP lower bound = " << num(bound) << " (" << std::string(doc["status"]) << ")\n";
    return 0;
}

int cmd_profile(const CliOptions& opt) {
    const auto cfg = load_for(opt);
    if (!cfg.design || !cfg.profile)
        throw mrct::domain_error("profile command needs 'design' and 'profile' sections");
    const auto regions = resolve_regions(cfg);
    const auto effects = resolve_effects(cfg);
    const auto points = mrct::cp_profile(effects, *cfg.design, regions, cfg.profile->region,
                                         cfg.profile->grid);
    std::string csv = "f_r,n0,regional_n0,cp\n";
    json table = json::array();
    for (const auto& p : points) {
        csv += num(p.f_r) + "," + std::to_string(p.n0) + "," + std::to_string(p.regional_n0) +
               "," + num(p.cp) + "\n";
        table.push_back(
            {{"f_r", p.f_r}, {"n0", p.n0}, {"regional_n0", p.regional_n0}, {"cp", p.cp}});
    }
    json doc;
    doc["schema_version"] = mrct::kSchemaVersion;
    doc["region"] = cfg.profile->region + 1;
    doc["profile"] = table;
    write_json(opt, "profile", doc);
    write_csv(opt, "profile", csv);
    std::cout << "profiled " << points.size() << " grid points\n";
    return 0;
}

int cmd_analyze(const CliOptions& opt) {
    const auto cfg = load_for(opt);
    if (!cfg.analysis) throw mrct::domain_error("analyze command needs an 'analysis' section");
    const auto report = mrct::analyze_trial(*cfg.analysis);
    const bool hr_scale = cfg.analysis->scale == mrct::AnalysisScale::log_hr;

    json doc;
    doc["schema_version"] = mrct::kSchemaVersion;
    doc["tau2_hat"] = report.tau2_hat;
    doc["pooled"] = {{"estimate", report.pooled.d_tilde},
                     {"variance", report.pooled.variance},
                     {"ci", {report.pooled_ci_lo, report.pooled_ci_hi}},
                     {"t_superiority", report.pooled.test_statistic},
                     {"t_noninferiority", report.ni_test_statistic},
                     {"significant_superiority", report.significant_superiority},
                     {"significant_noninferiority", report.significant_ni}};
    if (hr_scale)
        doc["pooled"]["hr"] = {{"estimate", report.pooled_hr},
                               {"ci", {report.pooled_hr_lo, report.pooled_hr_hi}}};
    json regions = json::array();
    std::string csv =
        "region,estimate,variance,shrunk_estimate,shrunk_sd,ci_lo,ci_hi,hr,hr_lo,hr_hi,"
        "consistent_superiority,consistent_ni\n";
    for (const auto& r : report.regions) {
        json jr = {{"region", r.region_id},
                   {"estimate", r.d_hat},
                   {"variance", r.sigma2},
                   {"shrunk_estimate", r.shrinkage.d_tilde_r},
                   {"shrunk_variance", r.shrinkage.variance},
                   {"rho_inv", r.shrinkage.rho_inv},
                   {"ci", {r.ci_lo, r.ci_hi}},
                   {"consistent_superiority", r.consistent_superiority},
                   {"consistent_ni", r.consistent_ni}};
        if (hr_scale) jr["hr"] = {{"estimate", r.hr}, {"ci", {r.hr_lo, r.hr_hi}}};
        regions.push_back(jr);
        csv += r.region_id + "," + num(r.d_hat) + "," + num(r.sigma2) + "," +
               num(r.shrinkage.d_tilde_r) + "," + num(std::sqrt(r.shrinkage.variance)) + "," +
               num(r.ci_lo) + "," + num(r.ci_hi) + ",";
        csv += hr_scale ? num(r.hr) + "," + num(r.hr_lo) + "," + num(r.hr_hi) : ",,";
        csv += std::string(",") + (r.consistent_superiority ? "1" : "0") + "," +
               (r.consistent_ni ? "1" : "0") + "\n";
    }
    doc["regions"] = regions;
    write_json(opt, "analysis", doc);
    write_csv(opt, "analysis", csv);  // forest-plot ready
    std::cout << "tau2_hat=" << num(report.tau2_hat)
              << " pooled=" << num(report.pooled.d_tilde) << "\n";
    return 0;
}

int cmd_simulate(const CliOptions& opt) {
    const auto cfg = load_for(opt);
    if (!cfg.design || cfg.endpoint_specs.empty() || !cfg.has_simulation)
        throw mrct::domain_error(
            "simulate command needs 'design', 'endpoint', and 'simulation' sections");
    mrct::SimulationConfig sim;
    sim.regions = cfg.endpoint_specs;
    sim.design = *cfg.design;
    sim.training_n_per_group = cfg.training_n_per_group;
    sim.m_design = cfg.m_design;
    sim.m_verify = cfg.m_verify;
    sim.master_seed = cfg.master_seed;
    sim.round_hyperparams = cfg.round_hyperparams;
    sim.threads = cfg.threads;
    const auto report = mrct::simulate_study(sim);

    json doc;
    doc["schema_version"] = mrct::kSchemaVersion;
    doc["benchmark"] = {{"n0", report.benchmark_n0},
                        {"cp", report.benchmark_cp},
                        {"delta", report.benchmark_delta},
                        {"tau2", report.benchmark_tau2}};
    doc["design_stage"] = {{"median_n0", report.median_n0_design},
                           {"mad_n0", report.mad_n0_design},
                           {"mean_cp", report.mean_cp_design},
                           {"infeasible_count", report.infeasible_design_count}};
    doc["verification"] = {{"mean_dev_power", report.mean_dev_power},
                           {"mean_dev_cp", report.mean_dev_cp},
                           {"flagged_count", report.flagged_verification_count},
                           {"total_count", report.total_verification_count}};
    doc["master_seed"] = sim.master_seed;
    write_json(opt, "simulation_summary", doc);

    std::string csv = "index,feasible,n0_design,cp_design,empirical_power,empirical_cp,flags\n";
    for (const auto& rec : report.replications) {
        csv += std::to_string(rec.index) + "," + (rec.feasible ? "1" : "0") + "," +
               std::to_string(rec.n0_design) + "," + num(rec.cp_design) + "," +
               num(rec.empirical_power) + "," + num(rec.empirical_cp) + "," +
               std::to_string(rec.flags) + "\n";
    }
    write_csv(opt, "replications", csv);
    std::cout << "benchmark n0=" << report.benchmark_n0 << " cp=" << num(report.benchmark_cp)
              << " | median n0^D=" << num(report.median_n0_design)
              << " (MAD " << num(report.mad_n0_design) << ")"
              << " dev(beta)=" << num(report.mean_dev_power)
              << " dev(CP)=" << num(report.mean_dev_cp) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Design and analysis engine for multi-regional clinical trials"};
    app.require_subcommand(1);

    CliOptions opt;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON configuration file")->required();
        sub->add_option("--out", opt.out_dir, "output directory (default: .)");
        sub->add_option("--seed", opt.seed, "override simulation.master_seed");
        sub->add_option("--format", opt.format, "json | csv | both")
            ->check(CLI::IsMember({"json", "csv", "both"}));
        sub->add_option("--m-design", opt.m_design, "override simulation.m_design");
        sub->add_option("--m-verify", opt.m_verify, "override simulation.m_verify");
        sub->add_flag("--dry-run", opt.dry_run, "validate the config and exit");
    };

    auto* design = app.add_subcommand("design", "solve the overall sample size");
    auto* cp = app.add_subcommand("cp", "per-region consistency probability");
    auto* bound = app.add_subcommand("bound", "configuration-free CP lower bound");
    auto* profile = app.add_subcommand("profile", "CP profile over a fraction grid");
    auto* analyze = app.add_subcommand("analyze", "re-analyze a completed trial");
    auto* simulate = app.add_subcommand("simulate", "three-step simulation protocol");
    for (auto* sub : {design, cp, bound, profile, analyze, simulate}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        std::error_code ec;
        fs::create_directories(opt.out_dir, ec);
        if (opt.dry_run) return dispatch_dry_run(opt);
        if (design->parsed()) return cmd_design(opt);
        if (cp->parsed()) return cmd_cp(opt);
        if (bound->parsed()) return cmd_bound(opt);
        if (profile->parsed()) return cmd_profile(opt);
        if (analyze->parsed()) return cmd_analyze(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
    } catch (const mrct::schema_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
