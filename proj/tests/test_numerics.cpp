#include <doctest.h>

#include <cmath>
#include <random>

#include "mrct/numerics.hpp"

using namespace mrct;

TEST_CASE("standard normal cdf reference values") {
    CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std_normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
    CHECK(std_normal_cdf(-1.281552) == doctest::Approx(0.10).epsilon(1e-5));
    // published table anchors
    CHECK(std_normal_cdf(1.0) == doctest::Approx(0.841344746068543).epsilon(1e-12));
    CHECK(std_normal_cdf(-2.0) == doctest::Approx(0.022750131948179).epsilon(1e-10));
}

TEST_CASE("cdf symmetry to 1e-12 on a grid") {
    for (double x = -8.0; x <= 8.0; x += 0.173) {
        CHECK(std::abs(std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))) < 1e-12);
    }
}

TEST_CASE("quantile reference values and domain") {
    CHECK(std_normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std_normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
    CHECK(std_normal_quantile(0.9) == doctest::Approx(1.281552).epsilon(1e-5));
    CHECK_THROWS_AS((void)std_normal_quantile(0.0), domain_error);
    CHECK_THROWS_AS((void)std_normal_quantile(1.0), domain_error);
    CHECK_THROWS_AS((void)std_normal_quantile(-0.1), domain_error);
}

TEST_CASE("quantile inverts cdf to 1e-8 on [-6,6]") {
    for (double x = -6.0; x <= 6.0; x += 0.0917) {
        CHECK(std::abs(std_normal_quantile(std_normal_cdf(x)) - x) < 1e-8);
    }
    for (double p = 1e-10; p < 1.0; p = p < 0.5 ? p * 3.7 : 1.0 - (1.0 - p) / 3.7) {
        CHECK(std::abs(std_normal_cdf(std_normal_quantile(p)) - p) < 1e-13);
    }
}

TEST_CASE("bisection oracle agrees with the quantile") {
    auto bisect = [](double p) {
        double lo = -10.0, hi = 10.0;
        for (int i = 0; i < 80; ++i) {
            const double mid = 0.5 * (lo + hi);
            (std_normal_cdf(mid) < p ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    for (double p : {0.01, 0.1, 0.25, 0.5, 0.8, 0.9, 0.975, 0.999}) {
        CHECK(std_normal_quantile(p) == doctest::Approx(bisect(p)).epsilon(1e-10));
    }
}

TEST_CASE("truncated normal expectation") {
    CHECK(truncated_normal_expectation([](double) { return 1.0; }, -1.2816) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(truncated_normal_expectation([](double) { return 0.5; }, 0.7) ==
          doctest::Approx(0.5).epsilon(1e-9));
    // E[Phi(Z)] = 1/2 over the whole line; lower = -12 is an effective -inf
    CHECK(truncated_normal_expectation([](double u) { return std_normal_cdf(u); }, -12.0) ==
          doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("truncated expectation settings invariants") {
    QuadratureSettings bad;
    bad.upper_truncation_sd = 4.0;
    CHECK_THROWS_AS(
        (void)truncated_normal_expectation([](double) { return 1.0; }, 0.0, bad), domain_error);
    bad = QuadratureSettings{};
    bad.abs_tolerance = 0.0;
    CHECK_THROWS_AS(
        (void)truncated_normal_expectation([](double) { return 1.0; }, 0.0, bad), domain_error);
}

TEST_CASE("monotone dominance of truncated expectation on Phi(a u + b) family") {
    // pointwise f <= g implies E[f] <= E[g]; Phi(a u + b) increases in b
    const double lower = -0.8416;
    double prev = 0.0;
    for (double b = -2.0; b <= 2.0; b += 0.25) {
        const double v = truncated_normal_expectation(
            [b](double u) { return std_normal_cdf(0.7 * u + b); }, lower);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("adaptive quadrature agrees with a dense Simpson oracle") {
    auto f = [](double u) { return std_normal_cdf(0.54 * (u + 2.8)) * std_normal_pdf(u); };
    const double a = -0.8416, b = 9.1584;
    const int n = 200000;
    const double h = (b - a) / n;
    double simpson = f(a) + f(b);
    for (int i = 1; i < n; ++i) simpson += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    simpson *= h / 3.0;
    CHECK(integrate_adaptive(f, a, b, 1e-12) == doctest::Approx(simpson).epsilon(1e-10));
}

TEST_CASE("quadrature handles endpoint derivative singularities") {
    // int_0^1 sqrt(t) dt = 2/3, unbounded derivative at 0
    CHECK(integrate_adaptive([](double t) { return std::sqrt(t); }, 0.0, 1.0, 1e-10) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    // an extreme-shape survival curve (cusp at zero); scipy oracle 30.208086
    CHECK(integrate_adaptive(
              [](double t) { return std::exp(-std::pow(t / 50.0, 0.05)); }, 0.0, 80.0, 1e-9) ==
          doctest::Approx(30.208086).epsilon(1e-6));
}

TEST_CASE("find_root examples") {
    CHECK(find_root([](double x) { return x - 3.0; }, 0.0, 10.0) ==
          doctest::Approx(3.0).epsilon(1e-8));
    CHECK(find_root([](double x) { return x * x - 2.0; }, 0.0, 2.0) ==
          doctest::Approx(1.414214).epsilon(1e-6));
    CHECK(find_root([](double x) { return std_normal_cdf(x) - 0.9; }, 0.0, 3.0) ==
          doctest::Approx(1.281552).epsilon(1e-6));
}

TEST_CASE("find_root error paths") {
    CHECK_THROWS_AS((void)find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0),
                    bracketing_error);
    CHECK_THROWS_AS((void)find_root([](double x) { return x; }, 0.0, 1.0, 0.0), domain_error);
}

TEST_CASE("find_root bracket containment on random polynomials") {
    std::mt19937_64 gen(12345);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    int tested = 0;
    while (tested < 200) {
        const double c3 = coef(gen), c2 = coef(gen), c1 = coef(gen), c0 = coef(gen);
        auto f = [&](double x) { return ((c3 * x + c2) * x + c1) * x + c0; };
        const double lo = -3.0, hi = 3.0;
        if (f(lo) * f(hi) > 0.0) continue;
        const double root = find_root(f, lo, hi, 1e-10);
        CHECK(root >= lo);
        CHECK(root <= hi);
        CHECK(std::abs(f(root)) < 1e-6 * (1.0 + std::abs(c3) + std::abs(c2) + std::abs(c1)));
        ++tested;
    }
}
