#include <doctest.h>

#include <cmath>

#include "mrct/analysis.hpp"

using namespace mrct;

namespace {

TrialAnalysisInput leader_input() {
    TrialAnalysisInput in;
    in.margin = std::log(1.3);
    in.alpha = 0.05;
    in.pi = 0.5;
    in.scale = AnalysisScale::log_hr;
    const double hrs[] = {0.82, 1.01, 0.62, 0.83};
    const long events[] = {459, 428, 61, 354};
    const char* names[] = {"EU", "NA", "Asia", "ROW"};
    for (int r = 0; r < 4; ++r)
        in.summaries.push_back(
            {names[r], -std::log(hrs[r]), schoenfeld_sigma2(events[r], 1.0)});
    return in;
}

}  // namespace

TEST_CASE("schoenfeld_sigma2") {
    CHECK(schoenfeld_sigma2(459, 1.0) == doctest::Approx(0.0087).epsilon(0.003));
    CHECK(schoenfeld_sigma2(61, 1.0) == doctest::Approx(0.0656).epsilon(0.001));
    CHECK(schoenfeld_sigma2(4, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)schoenfeld_sigma2(0, 1.0), domain_error);
}

TEST_CASE("LEADER re-analysis") {
    const auto rep = analyze_trial(leader_input());

    CHECK(std::abs(rep.tau2_hat - 0.0077) < 0.0002);
    CHECK(std::abs(rep.pooled.d_tilde - 0.150) < 0.002);
    CHECK(std::abs(rep.pooled.variance - 0.0054) < 0.0002);

    CHECK(std::abs(rep.pooled_hr - 0.86) < 0.01);
    CHECK(std::abs(rep.pooled_hr_lo - 0.75) < 0.01);
    CHECK(std::abs(rep.pooled_hr_hi - 0.99) < 0.01);

    const double expected_hr[] = {0.84, 0.93, 0.83, 0.85};
    REQUIRE(rep.regions.size() == 4);
    for (int r = 0; r < 4; ++r) {
        CHECK(std::abs(rep.regions[r].hr - expected_hr[r]) < 0.01);
        CHECK(rep.regions[r].consistent_superiority);
        CHECK(rep.regions[r].consistent_ni);
    }
    // Table S6 EU interval
    CHECK(std::abs(rep.regions[0].hr_lo - 0.71) < 0.01);
    CHECK(std::abs(rep.regions[0].hr_hi - 1.00) < 0.01);

    CHECK(rep.significant_ni);
    CHECK(rep.significant_superiority);
    CHECK(rep.ni_test_statistic == doctest::Approx(5.62).epsilon(0.01));
}

TEST_CASE("identical summaries collapse to the pooled value") {
    TrialAnalysisInput in;
    in.summaries = {{"a", 0.4, 0.02}, {"b", 0.4, 0.05}, {"c", 0.4, 0.01}};
    const auto rep = analyze_trial(in);
    CHECK(rep.tau2_hat == 0.0);
    for (const auto& r : rep.regions) {
        CHECK(r.shrinkage.d_tilde_r == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(r.consistent_superiority);
    }
}

TEST_CASE("opposite effects of equal size meet the boundary") {
    TrialAnalysisInput in;
    in.summaries = {{"a", 0.5, 0.1}, {"b", -0.5, 0.1}};
    const auto rep = analyze_trial(in);
    CHECK(rep.pooled.d_tilde == doctest::Approx(0.0).epsilon(1e-12));
    // consistency reduces to sign(D_tilde_r) >= 0 at the boundary
    CHECK(rep.regions[0].consistent_superiority ==
          (rep.regions[0].shrinkage.d_tilde_r >= 0.0));
    CHECK(rep.regions[1].consistent_superiority ==
          (rep.regions[1].shrinkage.d_tilde_r >= 0.0));
}

TEST_CASE("identity-scale analysis of -log HR equals log_hr analysis of HR") {
    auto in = leader_input();
    auto in_identity = in;
    in_identity.scale = AnalysisScale::identity;
    const auto a = analyze_trial(in);
    const auto b = analyze_trial(in_identity);
    CHECK(a.tau2_hat == b.tau2_hat);
    CHECK(a.pooled.d_tilde == b.pooled.d_tilde);
    for (std::size_t r = 0; r < a.regions.size(); ++r) {
        CHECK(a.regions[r].shrinkage.d_tilde_r == b.regions[r].shrinkage.d_tilde_r);
        CHECK(std::abs(std::exp(-b.regions[r].ci_hi) - a.regions[r].hr_lo) < 1e-12);
    }
}

TEST_CASE("shrinkage intervals are never wider than naive ones") {
    const auto rep = analyze_trial(leader_input());
    for (const auto& r : rep.regions) {
        const double naive = r.sigma2 + rep.tau2_hat;  // var(D_hat_r) upper end
        CHECK(r.shrinkage.variance <= naive + 1e-12);
    }
}

TEST_CASE("consistency flags are invariant under positive rescaling") {
    TrialAnalysisInput in;
    in.summaries = {{"a", 0.3, 0.02}, {"b", 0.18, 0.04}, {"c", 0.05, 0.03}};
    const auto base = analyze_trial(in);
    const double c = 3.7;
    TrialAnalysisInput scaled = in;
    for (auto& s : scaled.summaries) {
        s.d_hat *= c;
        s.sigma2 *= c * c;
    }
    const auto rep = analyze_trial(scaled);
    for (std::size_t r = 0; r < rep.regions.size(); ++r)
        CHECK(rep.regions[r].consistent_superiority == base.regions[r].consistent_superiority);
}
