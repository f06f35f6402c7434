#include <doctest.h>

#include <cmath>
#include <vector>

#include "mrct/model.hpp"
#include "mrct/numerics.hpp"

using namespace mrct;

namespace {

// LEADER regional summaries: d_hat = -log HR, sigma2 = 4/events.
std::vector<RegionalSummary> leader() {
    return {{"EU", -std::log(0.82), 4.0 / 459},
            {"NA", -std::log(1.01), 4.0 / 428},
            {"Asia", -std::log(0.62), 4.0 / 61},
            {"ROW", -std::log(0.83), 4.0 / 354}};
}

}  // namespace

TEST_CASE("compute_weights") {
    auto [w, total] = compute_weights(0.0, std::vector<double>{1.0, 1.0});
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 1.0);
    CHECK(total == 2.0);

    // rounded Table S6 inputs
    std::vector<double> s2{0.0087, 0.0093, 0.0656, 0.0113};
    auto [w2, total2] = compute_weights(0.0077, s2);
    CHECK(total2 == doctest::Approx(186.1).epsilon(0.002));
    CHECK(1.0 / total2 == doctest::Approx(0.0054).epsilon(0.02));

    auto [w3, total3] = compute_weights(1.0, std::vector<double>{1.0, 3.0});
    CHECK(w3[0] == doctest::Approx(0.5));
    CHECK(w3[1] == doctest::Approx(0.25));
    CHECK(total3 == doctest::Approx(0.75));

    CHECK_THROWS_AS((void)compute_weights(0.0, std::vector<double>{}), domain_error);
    CHECK_THROWS_AS((void)compute_weights(0.0, std::vector<double>{0.0}), domain_error);
}

TEST_CASE("pooled_estimate") {
    // all regions identical -> pooled equals the common value
    std::vector<RegionalSummary> same{{"a", 0.7, 0.5}, {"b", 0.7, 2.0}, {"c", 0.7, 0.1}};
    CHECK(pooled_estimate(same, 0.3).d_tilde == doctest::Approx(0.7).epsilon(1e-12));

    std::vector<RegionalSummary> two{{"a", 0.0, 1.0}, {"b", 2.0, 1.0}};
    CHECK(pooled_estimate(two, 0.0).d_tilde == doctest::Approx(1.0).epsilon(1e-12));

    const auto pooled = pooled_estimate(leader(), 0.0077);
    CHECK(pooled.d_tilde == doctest::Approx(0.150).epsilon(0.014));
    CHECK(std::abs(pooled.d_tilde - 0.150) < 0.002);
    CHECK(pooled.variance == doctest::Approx(1.0 / pooled.total_weight));

    std::vector<RegionalSummary> one{{"a", 0.0, 1.0}};
    CHECK_THROWS_AS((void)pooled_estimate(one, 0.0), domain_error);
}

TEST_CASE("moment_tau2") {
    std::vector<RegionalSummary> same{{"a", 0.4, 1.0}, {"b", 0.4, 2.0}, {"c", 0.4, 0.5}};
    CHECK(moment_tau2(same) == 0.0);

    // hand arithmetic: Q = 2, denominator = 2 - 2/2 = 1, tau2 = (2-1)/1 = 1
    std::vector<RegionalSummary> hand{{"a", 0.0, 1.0}, {"b", 2.0, 1.0}};
    CHECK(moment_tau2(hand) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(moment_tau2(leader()) == doctest::Approx(0.0077).epsilon(0.03));
    CHECK(std::abs(moment_tau2(leader()) - 0.0077) < 0.0002);
}

TEST_CASE("naive_hyperparams") {
    auto p = naive_hyperparams(std::vector<double>{0.6, 0.4, 0.2});
    CHECK(p.delta == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(std::sqrt(p.tau2) == doctest::Approx(0.2).epsilon(1e-12));

    auto flat = naive_hyperparams(std::vector<double>{0.37, 0.37, 0.37, 0.37});
    CHECK(flat.delta == doctest::Approx(0.37));
    CHECK(flat.tau2 == doctest::Approx(0.0).epsilon(1e-15));

    auto quad = naive_hyperparams(std::vector<double>{0.8, 0.6, 0.4, 0.2});
    CHECK(quad.delta == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(quad.tau2 == doctest::Approx(0.0667).epsilon(2e-3));
    CHECK(std::abs(quad.tau2 - 0.0667) < 1e-4);

    CHECK_THROWS_AS((void)naive_hyperparams(std::vector<double>{1.0}), domain_error);
}

TEST_CASE("posterior_params") {
    RegionalSummary s{"r", 2.0, 1.0};
    auto [m0, v0] = posterior_params(s, {0.3, 0.0});
    CHECK(m0 == 0.3);
    CHECK(v0 == 0.0);

    auto [m1, v1] = posterior_params(s, {0.0, 1.0});
    CHECK(m1 == doctest::Approx(1.0));
    CHECK(v1 == doctest::Approx(0.5));

    RegionalSummary eu{"EU", 0.19845, 0.0087};
    auto [m2, v2] = posterior_params(eu, {0.14965, 0.0077});
    CHECK(m2 == doctest::Approx(0.1726).epsilon(5e-4));
    CHECK(v2 < std::min(0.0077, 0.0087));
}

TEST_CASE("shrinkage_estimate on LEADER Europe") {
    const auto summaries = leader();
    const double tau2 = moment_tau2(summaries);
    const auto pooled = pooled_estimate(summaries, tau2);
    const auto eu = shrinkage_estimate(summaries[0], tau2, pooled);

    CHECK(eu.d_tilde_r == doctest::Approx(0.173).epsilon(0.03));
    CHECK(std::abs(eu.d_tilde_r - 0.173) < 0.005);
    CHECK(std::exp(-eu.d_tilde_r) == doctest::Approx(0.84).epsilon(0.01));

    const double sd = std::sqrt(eu.variance);
    CHECK(sd == doctest::Approx(0.088).epsilon(0.02));
    const double z = std_normal_quantile(0.975);
    CHECK(std::exp(-(eu.d_tilde_r + z * sd)) == doctest::Approx(0.71).epsilon(0.015));
    CHECK(std::exp(-(eu.d_tilde_r - z * sd)) == doctest::Approx(1.00).epsilon(0.01));
}

TEST_CASE("shrinkage degenerates to pooled at tau2 = 0") {
    std::vector<RegionalSummary> s{{"a", 0.1, 0.5}, {"b", 0.9, 0.25}};
    const auto pooled = pooled_estimate(s, 0.0);
    const auto sh = shrinkage_estimate(s[0], 0.0, pooled);
    CHECK(sh.d_tilde_r == doctest::Approx(pooled.d_tilde).epsilon(1e-14));
    CHECK(sh.rho_inv == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sh.variance == doctest::Approx(pooled.variance).epsilon(1e-12));

    // mismatched tau2 is rejected
    CHECK_THROWS_AS((void)shrinkage_estimate(s[0], 0.1, pooled), domain_error);
}

TEST_CASE("rho_inverse") {
    CHECK(rho_inverse(std::vector<double>{0.0, 0.0, 0.0}, 0) == doctest::Approx(1.0));
    CHECK(rho_inverse(std::vector<double>{1.0, 1.0}, 0) == doctest::Approx(1.25));
    CHECK(rho_inverse(std::vector<double>{1.0, 1.0, 1.0}, 1) == doctest::Approx(1.5));
    CHECK_THROWS_AS((void)rho_inverse(std::vector<double>{1.0}, 3), domain_error);
}

TEST_CASE("the two total-weight expressions agree to 1e-10") {
    const double tau2 = 0.0431;
    std::vector<double> sigma2{0.31, 0.07, 1.9, 0.55};
    auto [w, total] = compute_weights(tau2, sigma2);
    std::vector<double> h;
    for (double s : sigma2) h.push_back(tau2 / s);
    CHECK(std::abs(total_weight_from_h(tau2, h) - total) < 1e-10);
}

TEST_CASE("wald test") {
    std::vector<RegionalSummary> s{{"a", 0.0, 1.0}, {"b", 0.0, 1.0}};
    auto pooled = pooled_estimate(s, 0.0);
    pooled = wald_test(pooled, 0.025);
    CHECK(pooled.test_statistic == doctest::Approx(0.0));
    CHECK_FALSE(pooled.significant);

    const auto lead = wald_test(pooled_estimate(leader(), moment_tau2(leader())), 0.025,
                                std::log(1.3));
    CHECK(lead.test_statistic == doctest::Approx(5.62).epsilon(0.01));
    CHECK(lead.significant);

    const auto sup = wald_test(pooled_estimate(leader(), moment_tau2(leader())), 0.025, 0.0);
    CHECK(sup.test_statistic == doctest::Approx(2.04).epsilon(0.01));
    CHECK(sup.significant);
}
