#include "mrct/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mrct/survival.hpp"

namespace mrct {

using nlohmann::json;

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
    throw schema_error("config " + where + ": " + what);
}

double require_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) schema_fail(where, "missing required key '" + key + "'");
    if (!j.at(key).is_number()) schema_fail(where + "/" + key, "expected a number");
    return j.at(key).get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<double>();
}

SurvivalModel parse_model(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("model")) schema_fail(where, "expected a model object");
    const std::string kind = j.at("model").get<std::string>();
    if (kind == "exponential") return SurvivalModel::exponential(require_number(j, "rate", where));
    if (kind == "piecewise")
        return SurvivalModel::piecewise(require_number(j, "early", where),
                                        require_number(j, "late", where),
                                        require_number(j, "change", where));
    if (kind == "weibull")
        return SurvivalModel::weibull(require_number(j, "shape", where),
                                      require_number(j, "scale", where));
    schema_fail(where, "unknown model '" + kind + "'");
}

CensoringModel parse_censoring(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind")) schema_fail(where, "expected a censoring object");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "none") return CensoringModel::none();
    if (kind == "administrative")
        return CensoringModel::administrative(require_number(j, "at", where));
    if (kind == "uniform")
        return CensoringModel::uniform(number_or(j, "lo", 0.0), require_number(j, "hi", where));
    schema_fail(where, "unknown censoring kind '" + kind + "'");
}

std::vector<EndpointSpec> parse_endpoint(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind")) schema_fail(where, "expected an endpoint object");
    const std::string kind = j.at("kind").get<std::string>();
    std::vector<EndpointSpec> specs;
    if (kind == "continuous" || kind == "normal") {
        const double var0 = number_or(j, "var0", 1.0);
        const double var1 = number_or(j, "var1", 1.0);
        if (!j.contains("effects")) schema_fail(where, "continuous endpoint needs 'effects'");
        for (const auto& d : j.at("effects"))
            specs.push_back(EndpointSpec::continuous(d.get<double>(), var0, var1));
    } else if (kind == "binary") {
        const double p0 = require_number(j, "p0", where);
        if (!j.contains("effects")) schema_fail(where, "binary endpoint needs 'effects'");
        for (const auto& d : j.at("effects"))
            specs.push_back(EndpointSpec::binary(p0, p0 + d.get<double>()));
    } else if (kind == "survival_ph") {
        const double lambda0 = require_number(j, "lambda0", where);
        const double L = require_number(j, "follow_up", where);
        if (!j.contains("hazard_ratios")) schema_fail(where, "survival_ph needs 'hazard_ratios'");
        for (const auto& hr : j.at("hazard_ratios"))
            specs.push_back(EndpointSpec::survival_ph(lambda0, hr.get<double>(), L));
    } else if (kind == "survival_rmst") {
        const double eta = require_number(j, "horizon", where);
        if (!j.contains("censoring")) schema_fail(where, "survival_rmst needs 'censoring'");
        const auto censoring = parse_censoring(j.at("censoring"), where + "/censoring");
        if (!j.contains("regions")) schema_fail(where, "survival_rmst needs 'regions'");
        for (const auto& region : j.at("regions")) {
            specs.push_back(EndpointSpec::survival_rmst(
                parse_model(region.at("control"), where + "/regions/control"),
                parse_model(region.at("treatment"), where + "/regions/treatment"), eta,
                censoring));
        }
    } else {
        schema_fail(where, "unknown endpoint kind '" + kind + "'");
    }
    return specs;
}

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw schema_error("config: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Convert the byte offset into a line anchor.
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw schema_error("config " + path + ":" + std::to_string(line) + ": " +
                           std::string(e.what()));
    }
}

}  // namespace

std::vector<SubjectRecord> load_subjects_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw schema_error("subjects csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw schema_error("subjects csv: empty file '" + path + "'");
    std::vector<SubjectRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string t, e, g;
        if (!std::getline(ss, t, ',') || !std::getline(ss, e, ',') || !std::getline(ss, g, ','))
            throw schema_error("subjects csv " + path + ":" + std::to_string(lineno) +
                               ": expected time,event,group");
        try {
            out.push_back({std::stod(t), std::stoi(e) != 0, std::stoi(g)});
        } catch (const std::exception&) {
            throw schema_error("subjects csv " + path + ":" + std::to_string(lineno) +
                               ": unparseable row");
        }
    }
    return out;
}

LoadedConfig load_config(const std::string& path) {
    const json j = parse_file(path);
    if (!j.is_object()) throw schema_error("config: top level must be an object");
    LoadedConfig cfg;
    cfg.schema_version = j.contains("schema_version") ? j.at("schema_version").get<int>() : 1;
    if (cfg.schema_version != kSchemaVersion)
        throw schema_error("config: unsupported schema_version " +
                           std::to_string(cfg.schema_version));
    if (j.contains("units") && j.at("units").contains("time"))
        cfg.time_unit = j.at("units").at("time").get<std::string>();

    if (j.contains("design")) {
        const auto& d = j.at("design");
        DesignConfig dc;
        dc.alpha = number_or(d, "alpha", 0.025);
        dc.beta = require_number(d, "beta", "design");
        dc.pi = number_or(d, "pi", 0.5);
        dc.ell = number_or(d, "ell", 1.0);
        dc.margin = number_or(d, "margin", 0.0);
        dc.assurance = number_or(d, "assurance", 0.8);
        if (!d.contains("fractions")) schema_fail("design", "missing 'fractions'");
        for (const auto& f : d.at("fractions")) dc.fractions.push_back(f.get<double>());
        cfg.design = dc;
    }
    if (j.contains("effects")) {
        const auto& e = j.at("effects");
        RandomEffectsParams p;
        p.delta = require_number(e, "delta", "effects");
        if (e.contains("tau2"))
            p.tau2 = e.at("tau2").get<double>();
        else if (e.contains("tau"))
            p.tau2 = std::pow(e.at("tau").get<double>(), 2);
        else
            schema_fail("effects", "need 'tau2' or 'tau'");
        cfg.effects = p;
    }
    if (j.contains("regions")) {
        for (const auto& r : j.at("regions")) {
            RegionDesignInput input;
            input.region_id = r.contains("id") ? r.at("id").get<std::string>()
                                               : "region" + std::to_string(cfg.regions.size() + 1);
            input.omega = require_number(r, "omega", "regions");
            cfg.regions.push_back(input);
        }
    }
    if (j.contains("endpoint")) cfg.endpoint_specs = parse_endpoint(j.at("endpoint"), "endpoint");
    if (j.contains("n0")) cfg.n0_override = j.at("n0").get<long>();
    if (j.contains("profile")) {
        const auto& p = j.at("profile");
        ProfileRequest req;
        const long region = p.contains("region") ? p.at("region").get<long>() : 1;
        if (region < 1) schema_fail("profile", "'region' is 1-based");
        req.region = static_cast<std::size_t>(region - 1);
        if (!p.contains("grid")) schema_fail("profile", "missing 'grid'");
        for (const auto& g : p.at("grid")) req.grid.push_back(g.get<double>());
        cfg.profile = req;
    }
    if (j.contains("analysis")) {
        const auto& a = j.at("analysis");
        TrialAnalysisInput input;
        input.alpha = number_or(a, "alpha", 0.05);
        input.pi = number_or(a, "pi", 0.5);
        input.margin = number_or(a, "margin", 0.0);
        const std::string scale =
            a.contains("scale") ? a.at("scale").get<std::string>() : "identity";
        if (scale == "identity")
            input.scale = AnalysisScale::identity;
        else if (scale == "log_hr")
            input.scale = AnalysisScale::log_hr;
        else
            schema_fail("analysis/scale", "must be 'identity' or 'log_hr'");
        const double ell = number_or(a, "ell", 1.0);
        if (!a.contains("summaries")) schema_fail("analysis", "missing 'summaries'");
        for (const auto& s : a.at("summaries")) {
            RegionalSummary sum;
            sum.region_id = s.contains("region") ? s.at("region").get<std::string>()
                                                 : "region" + std::to_string(input.summaries.size() + 1);
            if (s.contains("subjects_csv")) {
                const auto subjects = load_subjects_csv(s.at("subjects_csv").get<std::string>());
                const std::string method =
                    s.contains("method") ? s.at("method").get<std::string>() : "cox";
                if (method == "cox") {
                    const auto [d_hat, sigma2] = cox_loghr(subjects);
                    sum.d_hat = d_hat;
                    sum.sigma2 = sigma2;
                } else if (method == "rmst") {
                    const double eta = require_number(s, "horizon", "analysis/summaries");
                    std::vector<SubjectRecord> arm0, arm1;
                    for (const auto& rec : subjects) (rec.group == 0 ? arm0 : arm1).push_back(rec);
                    if (arm0.empty() || arm1.empty())
                        schema_fail("analysis/summaries", "rmst needs both groups in the csv");
                    sum.d_hat = rmst_estimate(arm1, eta) - rmst_estimate(arm0, eta);
                    sum.sigma2 =
                        rmst_variance_estimate(arm0, eta) / static_cast<double>(arm0.size()) +
                        rmst_variance_estimate(arm1, eta) / static_cast<double>(arm1.size());
                } else {
                    schema_fail("analysis/summaries", "method must be 'cox' or 'rmst'");
                }
            } else if (s.contains("hr")) {
                sum.d_hat = -std::log(s.at("hr").get<double>());
                if (s.contains("events"))
                    sum.sigma2 = schoenfeld_sigma2(s.at("events").get<long>(), ell);
                else
                    sum.sigma2 = require_number(s, "variance", "analysis/summaries");
            } else {
                sum.d_hat = require_number(s, "estimate", "analysis/summaries");
                sum.sigma2 = require_number(s, "variance", "analysis/summaries");
            }
            input.summaries.push_back(std::move(sum));
        }
        cfg.analysis = input;
    }
    if (j.contains("simulation")) {
        const auto& s = j.at("simulation");
        cfg.has_simulation = true;
        cfg.training_n_per_group = static_cast<int>(number_or(s, "training_n_per_group", 1000));
        cfg.m_design = static_cast<int>(number_or(s, "m_design", 1000));
        cfg.m_verify = static_cast<int>(number_or(s, "m_verify", 1000));
        if (s.contains("master_seed")) cfg.master_seed = s.at("master_seed").get<std::uint64_t>();
        if (s.contains("round_hyperparams"))
            cfg.round_hyperparams = s.at("round_hyperparams").get<bool>();
        cfg.threads = static_cast<int>(number_or(s, "threads", 1));
    }
    return cfg;
}

std::vector<Diagnostic> validate_config(const std::string& path) {
    std::vector<Diagnostic> out;
    LoadedConfig cfg;
    try {
        cfg = load_config(path);
    } catch (const std::exception& e) {
        out.push_back({true, e.what()});
        return out;
    }
    if (cfg.design) {
        double sum = 0.0;
        for (double f : cfg.design->fractions) sum += f;
        if (std::abs(sum - 1.0) > 1e-9) {
            std::ostringstream os;
            os << "design/fractions sum to " << sum << " (must be 1)";
            out.push_back({true, os.str()});
        }
        try {
            cfg.design->validate();
        } catch (const std::exception& e) {
            out.push_back({true, e.what()});
        }
    }
    if (cfg.design && cfg.effects) {
        const int R = static_cast<int>(std::max(cfg.regions.size(), cfg.endpoint_specs.size()));
        if (R >= 2) {
            const auto rep = check_feasibility(*cfg.effects, *cfg.design, R);
            if (!rep.feasible) {
                std::ostringstream os;
                os << "infeasible: tau/(delta+M) = " << rep.ratio
                   << " must be below sqrt(R)/(z_{1-alpha}+z_{1-beta}) = " << rep.limit;
                out.push_back({true, os.str()});
            }
        }
    }
    if (!cfg.endpoint_specs.empty() && cfg.design) {
        if (cfg.endpoint_specs.size() != cfg.design->fractions.size())
            out.push_back({true, "endpoint regions and design fractions differ in length"});
        else {
            std::ostringstream os;
            os << "omega preview:";
            for (const auto& spec : cfg.endpoint_specs) {
                try {
                    os << " " << omega_for(spec, cfg.design->ell);
                } catch (const std::exception& e) {
                    out.push_back({true, e.what()});
                    break;
                }
            }
            out.push_back({false, os.str()});
        }
    }
    if (!cfg.regions.empty() && cfg.design &&
        cfg.regions.size() != cfg.design->fractions.size())
        out.push_back({true, "regions and design fractions differ in length"});
    if (out.empty() || std::none_of(out.begin(), out.end(), [](const auto& d) { return d.fatal; }))
        out.push_back({false, "ok"});
    return out;
}

}  // namespace mrct
