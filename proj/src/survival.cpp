#include "mrct/survival.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mrct {

namespace {

struct TimeGroup {
    double time;
    int deaths;    // events at this time
    int censored;  // censorings at this time
    int at_risk;   // subjects with observation time >= time
};

// Collapse to unique observation times, sorted ascending, with risk sets.
std::vector<TimeGroup> group_times(std::span<const SubjectRecord> data, bool flip_events) {
    std::vector<const SubjectRecord*> sorted;
    sorted.reserve(data.size());
    for (const auto& rec : data) {
        if (!(rec.time >= 0.0) || !std::isfinite(rec.time))
            throw domain_error("survival: observation times must be finite and >= 0");
        sorted.push_back(&rec);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const SubjectRecord* a, const SubjectRecord* b) { return a->time < b->time; });

    std::vector<TimeGroup> out;
    std::size_t i = 0;
    int at_risk = static_cast<int>(sorted.size());
    while (i < sorted.size()) {
        const double t = sorted[i]->time;
        TimeGroup g{t, 0, 0, at_risk};
        while (i < sorted.size() && sorted[i]->time == t) {
            const bool is_event = flip_events ? !sorted[i]->event : sorted[i]->event;
            (is_event ? g.deaths : g.censored)++;
            ++i;
        }
        at_risk -= g.deaths + g.censored;
        out.push_back(g);
    }
    return out;
}

}  // namespace

double StepFunction::operator()(double t) const {
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin()) return initial_value;
    return values[static_cast<std::size_t>(it - knots.begin()) - 1];
}

double StepFunction::left_value(double t) const {
    const auto it = std::lower_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin()) return initial_value;
    return values[static_cast<std::size_t>(it - knots.begin()) - 1];
}

double StepFunction::integrate(double upper) const {
    if (upper <= 0.0) return 0.0;
    double area = 0.0, prev = 0.0, value = initial_value;
    for (std::size_t i = 0; i < knots.size() && knots[i] < upper; ++i) {
        area += value * (knots[i] - prev);
        prev = knots[i];
        value = values[i];
    }
    area += value * (upper - prev);
    return area;
}

StepFunction kaplan_meier(std::span<const SubjectRecord> data, KMTarget target) {
    if (data.empty()) throw domain_error("kaplan_meier: empty data");
    const auto groups = group_times(data, target == KMTarget::censoring);
    StepFunction s;
    s.initial_value = 1.0;
    double surv = 1.0;
    for (const auto& g : groups) {
        if (g.deaths == 0) continue;
        surv *= 1.0 - static_cast<double>(g.deaths) / g.at_risk;
        s.knots.push_back(g.time);
        s.values.push_back(surv);
    }
    return s;
}

StepFunction nelson_aalen(std::span<const SubjectRecord> data) {
    if (data.empty()) throw domain_error("nelson_aalen: empty data");
    const auto groups = group_times(data, false);
    StepFunction s;
    s.initial_value = 0.0;
    double cum = 0.0;
    for (const auto& g : groups) {
        if (g.deaths == 0) continue;
        cum += static_cast<double>(g.deaths) / g.at_risk;
        s.knots.push_back(g.time);
        s.values.push_back(cum);
    }
    return s;
}

double rmst_estimate(std::span<const SubjectRecord> data, double eta) {
    if (data.empty()) throw domain_error("rmst_estimate: empty data");
    if (!(eta > 0.0)) throw domain_error("rmst_estimate: eta must be > 0");
    return kaplan_meier(data).integrate(eta);
}

double rmst_variance_estimate(std::span<const SubjectRecord> data, double eta) {
    if (data.empty()) throw domain_error("rmst_variance_estimate: empty data");
    if (!(eta > 0.0)) throw domain_error("rmst_variance_estimate: eta must be > 0");
    const auto s_hat = kaplan_meier(data, KMTarget::event);
    const auto g_hat = kaplan_meier(data, KMTarget::censoring);
    const auto groups = group_times(data, false);

    const double area_to_eta = s_hat.integrate(eta);
    double var = 0.0;
    for (const auto& g : groups) {
        if (g.deaths == 0 || g.time > eta) continue;
        const double tail = area_to_eta - s_hat.integrate(g.time);  // int_{t_i}^eta S
        const double s_at = s_hat(g.time);
        const double g_minus = g_hat.left_value(g.time);
        if (tail == 0.0) continue;  // no mass left before the horizon
        if (!(s_at > 0.0) || !(g_minus > 0.0))
            throw numerical_error(
                "rmst_variance_estimate: Kaplan-Meier tail reaches zero at a contributing "
                "event time t=" + std::to_string(g.time));
        const double d_lambda = static_cast<double>(g.deaths) / g.at_risk;
        var += tail * tail / (s_at * g_minus) * d_lambda;
    }
    return var;
}

std::pair<double, double> cox_loghr(std::span<const SubjectRecord> data) {
    int n1 = 0, events = 0, events1 = 0;
    for (const auto& rec : data) {
        if (rec.group == 1) ++n1;
        if (rec.event) {
            ++events;
            if (rec.group == 1) ++events1;
        }
    }
    const int n0 = static_cast<int>(data.size()) - n1;
    if (n0 == 0 || n1 == 0) throw domain_error("cox_loghr: both groups must be present");
    if (events == 0) throw domain_error("cox_loghr: no events");
    if (events1 == 0 || events1 == events)
        throw nonconvergence_error("cox_loghr: monotone partial likelihood, all events in one group");

    const auto groups = group_times(data, false);
    // Per unique time: events split by arm and the risk-set arm counts.
    struct EventRow {
        int d, d1, risk0, risk1;
    };
    std::vector<EventRow> rows;
    {
        std::vector<const SubjectRecord*> sorted;
        for (const auto& rec : data) sorted.push_back(&rec);
        std::sort(sorted.begin(), sorted.end(),
                  [](const SubjectRecord* a, const SubjectRecord* b) { return a->time < b->time; });
        std::size_t i = 0;
        int risk0 = n0, risk1 = n1;
        for (const auto& g : groups) {
            EventRow row{g.deaths, 0, risk0, risk1};
            while (i < sorted.size() && sorted[i]->time == g.time) {
                if (sorted[i]->event && sorted[i]->group == 1) ++row.d1;
                (sorted[i]->group == 1 ? risk1 : risk0)--;
                ++i;
            }
            if (row.d > 0) rows.push_back(row);
        }
    }

    // Breslow partial log-likelihood and derivatives; x is the arm indicator
    // so S1 = risk1 * e^beta and the per-event variance is p(1-p).
    auto loglik = [&](double beta, double* score, double* info) {
        const double eb = std::exp(beta);
        double ll = 0.0, sc = 0.0, in = 0.0;
        for (const auto& row : rows) {
            const double s0 = row.risk0 + row.risk1 * eb;
            const double p = row.risk1 * eb / s0;
            ll += beta * row.d1 - row.d * std::log(s0);
            sc += row.d1 - row.d * p;
            in += row.d * p * (1.0 - p);
        }
        if (score) *score = sc;
        if (info) *info = in;
        return ll;
    };

    double beta = 0.0;
    double ll = loglik(beta, nullptr, nullptr);
    for (int iter = 0; iter < 50; ++iter) {
        double score, info;
        loglik(beta, &score, &info);
        if (!(info > 0.0)) throw nonconvergence_error("cox_loghr: singular information");
        double step = score / info;
        if (std::abs(step) < 1e-12) break;
        double candidate = beta + step;
        double ll_new = loglik(candidate, nullptr, nullptr);
        int halvings = 0;
        while (ll_new < ll && halvings < 30) {  // halve until the likelihood increases
            step *= 0.5;
            candidate = beta + step;
            ll_new = loglik(candidate, nullptr, nullptr);
            ++halvings;
        }
        beta = candidate;
        ll = ll_new;
        if (std::abs(beta) > 15.0)
            throw nonconvergence_error("cox_loghr: estimate diverging, |beta| > 15");
        if (std::abs(step) < 1e-10) break;
    }
    double score, info;
    loglik(beta, &score, &info);
    if (std::abs(score) > 1e-5 * std::max(1.0, info))
        throw nonconvergence_error("cox_loghr: Newton iteration did not converge");
    return {-beta, 1.0 / info};
}

}  // namespace mrct
