#include "mrct/endpoints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace mrct {

// ---------------------------------------------------------------------------
// SurvivalModel
// ---------------------------------------------------------------------------

SurvivalModel SurvivalModel::exponential(double rate) {
    if (!(rate > 0.0)) throw domain_error("SurvivalModel: rate must be > 0");
    SurvivalModel m;
    m.kind = Kind::exponential;
    m.rate = rate;
    return m;
}

SurvivalModel SurvivalModel::piecewise(double early_rate, double late_rate, double change_point) {
    if (!(early_rate > 0.0 && late_rate > 0.0))
        throw domain_error("SurvivalModel: piecewise rates must be > 0");
    if (!(change_point > 0.0)) throw domain_error("SurvivalModel: change point must be > 0");
    SurvivalModel m;
    m.kind = Kind::piecewise_exponential;
    m.early_rate = early_rate;
    m.late_rate = late_rate;
    m.change_point = change_point;
    return m;
}

SurvivalModel SurvivalModel::weibull(double shape, double scale) {
    if (!(shape > 0.0 && scale > 0.0))
        throw domain_error("SurvivalModel: weibull shape/scale must be > 0");
    SurvivalModel m;
    m.kind = Kind::weibull;
    m.shape = shape;
    m.scale = scale;
    return m;
}

double SurvivalModel::survival(double t) const {
    if (t <= 0.0) return 1.0;
    switch (kind) {
        case Kind::exponential:
            return std::exp(-rate * t);
        case Kind::piecewise_exponential:
            return t <= change_point
                       ? std::exp(-early_rate * t)
                       : std::exp(-early_rate * change_point - late_rate * (t - change_point));
        case Kind::weibull:
            return std::exp(-std::pow(t / scale, shape));
    }
    return 0.0;
}

double SurvivalModel::hazard(double t) const {
    switch (kind) {
        case Kind::exponential:
            return rate;
        case Kind::piecewise_exponential:
            return t <= change_point ? early_rate : late_rate;
        case Kind::weibull:
            return (shape / scale) * std::pow(std::max(t, 1e-300) / scale, shape - 1.0);
    }
    return 0.0;
}

double SurvivalModel::cumulative_hazard(double t) const {
    if (t <= 0.0) return 0.0;
    switch (kind) {
        case Kind::exponential:
            return rate * t;
        case Kind::piecewise_exponential:
            return t <= change_point ? early_rate * t
                                     : early_rate * change_point + late_rate * (t - change_point);
        case Kind::weibull:
            return std::pow(t / scale, shape);
    }
    return 0.0;
}

double SurvivalModel::sample(double u) const {
    // T = Lambda^{-1}(E) with E = -log(1-u) standard exponential.
    const double e = -std::log1p(-u);
    switch (kind) {
        case Kind::exponential:
            return e / rate;
        case Kind::piecewise_exponential: {
            const double at_change = early_rate * change_point;
            return e <= at_change ? e / early_rate : change_point + (e - at_change) / late_rate;
        }
        case Kind::weibull:
            return scale * std::pow(e, 1.0 / shape);
    }
    return std::numeric_limits<double>::infinity();
}

std::string SurvivalModel::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::exponential:
            os << "exponential(rate=" << rate << ")";
            break;
        case Kind::piecewise_exponential:
            os << "piecewise(early=" << early_rate << ", late=" << late_rate
               << ", change=" << change_point << ")";
            break;
        case Kind::weibull:
            os << "weibull(shape=" << shape << ", scale=" << scale << ")";
            break;
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// CensoringModel
// ---------------------------------------------------------------------------

CensoringModel CensoringModel::none() { return {}; }

CensoringModel CensoringModel::administrative(double time_limit) {
    if (!(time_limit > 0.0)) throw domain_error("CensoringModel: time limit must be > 0");
    CensoringModel c;
    c.kind = Kind::administrative;
    c.time_limit = time_limit;
    return c;
}

CensoringModel CensoringModel::uniform(double lo, double hi) {
    if (!(hi > lo && lo >= 0.0)) throw domain_error("CensoringModel: need hi > lo >= 0");
    CensoringModel c;
    c.kind = Kind::uniform;
    c.lo = lo;
    c.hi = hi;
    return c;
}

double CensoringModel::survival(double t) const {
    switch (kind) {
        case Kind::none:
            return 1.0;
        case Kind::administrative:
            return t < time_limit ? 1.0 : 0.0;
        case Kind::uniform:
            if (t <= lo) return 1.0;
            if (t >= hi) return 0.0;
            return (hi - t) / (hi - lo);
    }
    return 1.0;
}

double CensoringModel::sample(double u) const {
    switch (kind) {
        case Kind::none:
            return std::numeric_limits<double>::infinity();
        case Kind::administrative:
            return time_limit;
        case Kind::uniform:
            return lo + u * (hi - lo);
    }
    return std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// EndpointSpec
// ---------------------------------------------------------------------------

EndpointSpec EndpointSpec::continuous(double mean_difference, double var0, double var1) {
    EndpointSpec s;
    s.kind = Kind::continuous;
    s.mean_difference = mean_difference;
    s.var0 = var0;
    s.var1 = var1;
    s.validate();
    return s;
}

EndpointSpec EndpointSpec::binary(double p0, double p1) {
    EndpointSpec s;
    s.kind = Kind::binary;
    s.p0 = p0;
    s.p1 = p1;
    s.validate();
    return s;
}

EndpointSpec EndpointSpec::survival_ph(double lambda0, double hazard_ratio, double follow_up) {
    EndpointSpec s;
    s.kind = Kind::survival_ph;
    s.lambda0 = lambda0;
    s.hazard_ratio = hazard_ratio;
    s.follow_up = follow_up;
    s.validate();
    return s;
}

EndpointSpec EndpointSpec::survival_rmst(SurvivalModel control, SurvivalModel treatment,
                                         double horizon, CensoringModel censoring) {
    EndpointSpec s;
    s.kind = Kind::survival_rmst;
    s.control_model = control;
    s.treatment_model = treatment;
    s.horizon = horizon;
    s.censoring = censoring;
    s.validate();
    return s;
}

void EndpointSpec::validate() const {
    switch (kind) {
        case Kind::continuous:
            if (!(var0 > 0.0 && var1 > 0.0))
                throw domain_error("EndpointSpec: continuous variances must be > 0");
            break;
        case Kind::binary:
            if (!(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0))
                throw domain_error("EndpointSpec: binary probabilities must be in (0,1)");
            break;
        case Kind::survival_ph:
            if (!(lambda0 > 0.0 && hazard_ratio > 0.0 && follow_up > 0.0))
                throw domain_error("EndpointSpec: survival_ph parameters must be > 0");
            break;
        case Kind::survival_rmst:
            if (!(horizon > 0.0)) throw domain_error("EndpointSpec: horizon must be > 0");
            break;
    }
}

double EndpointSpec::true_effect() const {
    switch (kind) {
        case Kind::continuous:
            return mean_difference;
        case Kind::binary:
            return p1 - p0;
        case Kind::survival_ph:
            return -std::log(hazard_ratio);
        case Kind::survival_rmst:
            return rmst(treatment_model, horizon) - rmst(control_model, horizon);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Omega_r derivations
// ---------------------------------------------------------------------------

double omega_continuous(double sigma2_0, double sigma2_1, double ell) {
    if (!(sigma2_0 > 0.0 && sigma2_1 > 0.0))
        throw domain_error("omega_continuous: variances must be > 0");
    if (!(ell > 0.0)) throw domain_error("omega_continuous: ell must be > 0");
    return sigma2_1 / ell + sigma2_0;
}

double omega_binary(double p0, double p1, double ell) {
    if (!(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0))
        throw domain_error("omega_binary: degenerate variance, probabilities must be in (0,1)");
    if (!(ell > 0.0)) throw domain_error("omega_binary: ell must be > 0");
    return p1 * (1.0 - p1) / ell + p0 * (1.0 - p0);
}

double event_probability(double rate, double L) {
    if (!(rate >= 0.0)) throw domain_error("event_probability: rate must be >= 0");
    if (!(L > 0.0)) throw domain_error("event_probability: L must be > 0");
    return -std::expm1(-rate * L);
}

double omega_survival_ph(double lambda0, double hr, double L, double ell) {
    if (!(lambda0 > 0.0 && hr > 0.0)) throw domain_error("omega_survival_ph: rates must be > 0");
    if (!(ell > 0.0)) throw domain_error("omega_survival_ph: ell must be > 0");
    const double p0 = event_probability(lambda0, L);
    const double p1 = event_probability(lambda0 * hr, L);
    return (ell + 1.0) * (ell + 1.0) / (ell * (p0 + ell * p1));
}

double omega_survival_rmst(double sigma2_0, double sigma2_1, double ell) {
    return omega_continuous(sigma2_0, sigma2_1, ell);
}

// ---------------------------------------------------------------------------
// RMST and the Pepe variance
// ---------------------------------------------------------------------------

double rmst(const SurvivalModel& model, double eta) {
    if (!(eta > 0.0)) throw domain_error("rmst: eta must be > 0");
    return rmst_tail(model, 0.0, eta);
}

double rmst_tail(const SurvivalModel& model, double t, double eta) {
    if (t >= eta) return 0.0;
    t = std::max(t, 0.0);
    switch (model.kind) {
        case SurvivalModel::Kind::exponential:
            return (std::exp(-model.rate * t) - std::exp(-model.rate * eta)) / model.rate;
        case SurvivalModel::Kind::piecewise_exponential: {
            const double lam = model.early_rate, gam = model.late_rate, psi = model.change_point;
            if (eta <= psi) return (std::exp(-lam * t) - std::exp(-lam * eta)) / lam;
            const double s_psi = std::exp(-lam * psi);
            if (t <= psi)
                return (std::exp(-lam * t) - s_psi) / lam +
                       s_psi * -std::expm1(-gam * (eta - psi)) / gam;
            return s_psi * (std::exp(-gam * (t - psi)) - std::exp(-gam * (eta - psi))) / gam;
        }
        case SurvivalModel::Kind::weibull:
            return integrate_adaptive([&](double u) { return model.survival(u); }, t, eta, 1e-10);
    }
    return 0.0;
}

namespace {

// Precomputed tail integral M(t) = int_t^eta S on a uniform grid with cubic
// Hermite evaluation (M' = -S exactly). Dense enough that the Pepe integrand's
// growth near eta is resolved; used only for models without a closed form.
class TailIntegralGrid {
public:
    TailIntegralGrid(const SurvivalModel& model, double eta, int cells = 4096)
        : model_(model), eta_(eta), n_(cells), h_(eta / cells) {
        m_.resize(static_cast<std::size_t>(n_) + 1);
        s_.resize(static_cast<std::size_t>(n_) + 1);
        m_[static_cast<std::size_t>(n_)] = 0.0;
        for (int i = 0; i <= n_; ++i) s_[static_cast<std::size_t>(i)] = model.survival(i * h_);
        for (int i = n_ - 1; i >= 0; --i) {
            const double a = i * h_, b = a + h_;
            const double piece =
                integrate_adaptive([&](double u) { return model_.survival(u); }, a, b, 1e-12, 24);
            m_[static_cast<std::size_t>(i)] = m_[static_cast<std::size_t>(i) + 1] + piece;
        }
    }

    double operator()(double t) const {
        if (t >= eta_) return 0.0;
        if (t <= 0.0) return m_[0];
        const int i = std::min(static_cast<int>(t / h_), n_ - 1);
        const auto iu = static_cast<std::size_t>(i);
        const double x = (t - i * h_) / h_;
        const double m0 = m_[iu], m1 = m_[iu + 1];
        const double d0 = -s_[iu] * h_, d1 = -s_[iu + 1] * h_;  // dM/dx on the cell
        const double x2 = x * x, x3 = x2 * x;
        return (2 * x3 - 3 * x2 + 1) * m0 + (x3 - 2 * x2 + x) * d0 +
               (-2 * x3 + 3 * x2) * m1 + (x3 - x2) * d1;
    }

private:
    const SurvivalModel& model_;
    double eta_;
    int n_;
    double h_;
    std::vector<double> m_, s_;
};

}  // namespace

double rmst_true_variance(const SurvivalModel& event_model, const CensoringModel& censor_model,
                          double eta) {
    if (!(eta > 0.0)) throw domain_error("rmst_true_variance: eta must be > 0");
    // G must stay positive on [0, eta).
    if (censor_model.kind == CensoringModel::Kind::uniform && censor_model.hi < eta)
        throw support_error("rmst_true_variance: censoring support ends before the horizon");
    if (censor_model.kind == CensoringModel::Kind::administrative &&
        censor_model.time_limit < eta)
        throw support_error("rmst_true_variance: censoring support ends before the horizon");

    const bool closed_tail = event_model.kind != SurvivalModel::Kind::weibull;
    std::optional<TailIntegralGrid> grid;
    if (!closed_tail) grid.emplace(event_model, eta);

    auto integrand = [&](double t) {
        const double m = closed_tail ? rmst_tail(event_model, t, eta) : (*grid)(t);
        const double s = event_model.survival(t);
        const double g = censor_model.survival(t);
        // m <= s * (eta - t); when both underflow there is no mass left
        if (!(m > 0.0) || !(s > 0.0)) return 0.0;
        return m * m / (s * g) * event_model.hazard(t);
    };

    // Split at the hazard jump; Weibull shape < 1 has an integrable hazard
    // singularity at zero handled by starting the panel slightly inside.
    std::vector<double> cuts{0.0, eta};
    if (event_model.kind == SurvivalModel::Kind::piecewise_exponential &&
        event_model.change_point < eta)
        cuts.insert(cuts.begin() + 1, event_model.change_point);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i], b = cuts[i + 1];
        if (a == 0.0 && event_model.kind == SurvivalModel::Kind::weibull &&
            event_model.shape < 1.0) {
            // int_0^eps ~ M(0)^2 * Lambda(eps); add analytically and integrate the rest.
            const double eps = 1e-8 * eta;
            total += integrand(eps) * event_model.survival(eps) /
                     event_model.hazard(eps) * event_model.cumulative_hazard(eps);
            a = eps;
        }
        total += integrate_adaptive(integrand, a, b, 1e-7, 48);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Calibration solvers for the verification stage
// ---------------------------------------------------------------------------

double calibrate_piecewise_late_rate(double lambda0, double gamma0, double lambda1, double psi,
                                     double eta, double target_d) {
    const SurvivalModel control = SurvivalModel::piecewise(lambda0, gamma0, psi);
    const double mu0 = rmst(control, eta);
    auto diff = [&](double gamma1) {
        return rmst(SurvivalModel::piecewise(lambda1, gamma1, psi), eta) - mu0 - target_d;
    };
    const double lo = 1e-8, hi = 10.0;
    const double f_lo = diff(lo), f_hi = diff(hi);  // RMST decreasing in gamma1
    if (f_lo < 0.0 || f_hi > 0.0) {
        std::ostringstream os;
        os << "calibrate_piecewise_late_rate: target " << target_d
           << " outside achievable range [" << (f_hi + target_d) << ", " << (f_lo + target_d)
           << "]";
        throw calibration_error(os.str());
    }
    return find_root(diff, lo, hi, 1e-10);
}

double calibrate_weibull_shape(double nu0, double theta0, double theta1, double eta,
                               double target_d) {
    const double mu0 = rmst(SurvivalModel::weibull(nu0, theta0), eta);
    auto diff = [&](double nu1) {
        return rmst(SurvivalModel::weibull(nu1, theta1), eta) - mu0 - target_d;
    };
    const double lo = 0.05, hi = 20.0;
    double f_lo = diff(lo), f_hi = diff(hi);
    if (f_lo * f_hi <= 0.0) return find_root(diff, lo, hi, 1e-10);
    // RMST need not be monotone in the shape across the whole bracket; scan
    // for a sign-consistent sub-bracket before giving up.
    const int grid = 32;
    double prev_x = lo, prev_f = f_lo;
    for (int i = 1; i <= grid; ++i) {
        const double x = lo * std::pow(hi / lo, static_cast<double>(i) / grid);
        const double fx = diff(x);
        if (prev_f * fx <= 0.0) return find_root(diff, prev_x, x, 1e-10);
        prev_x = x;
        prev_f = fx;
    }
    std::ostringstream os;
    os << "calibrate_weibull_shape: target " << target_d << " unattainable on shape bracket ["
       << lo << ", " << hi << "]";
    throw calibration_error(os.str());
}

std::pair<double, double> piecewise_calibration_range(double lambda0, double gamma0,
                                                      double lambda1, double psi, double eta) {
    const double mu0 = rmst(SurvivalModel::piecewise(lambda0, gamma0, psi), eta);
    const double lo = rmst(SurvivalModel::piecewise(lambda1, 10.0, psi), eta) - mu0;
    const double hi = rmst(SurvivalModel::piecewise(lambda1, 1e-8, psi), eta) - mu0;
    return {lo, hi};
}

std::pair<double, double> weibull_calibration_range(double nu0, double theta0, double theta1,
                                                    double eta) {
    const double mu0 = rmst(SurvivalModel::weibull(nu0, theta0), eta);
    // RMST is not necessarily monotone in the shape; take the extremes over a
    // coarse log-spaced scan of the bracket.
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i <= 32; ++i) {
        const double nu = 0.05 * std::pow(20.0 / 0.05, i / 32.0);
        const double d = rmst(SurvivalModel::weibull(nu, theta1), eta) - mu0;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return {lo, hi};
}

double omega_for(const EndpointSpec& spec, double ell) {
    spec.validate();
    switch (spec.kind) {
        case EndpointSpec::Kind::continuous:
            return omega_continuous(spec.var0, spec.var1, ell);
        case EndpointSpec::Kind::binary:
            return omega_binary(spec.p0, spec.p1, ell);
        case EndpointSpec::Kind::survival_ph:
            return omega_survival_ph(spec.lambda0, spec.hazard_ratio, spec.follow_up, ell);
        case EndpointSpec::Kind::survival_rmst: {
            const double s0 = rmst_true_variance(spec.control_model, spec.censoring, spec.horizon);
            const double s1 =
                rmst_true_variance(spec.treatment_model, spec.censoring, spec.horizon);
            return omega_survival_rmst(s0, s1, ell);
        }
    }
    throw domain_error("omega_for: unknown endpoint kind");
}

}  // namespace mrct
