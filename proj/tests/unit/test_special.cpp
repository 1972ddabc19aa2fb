#include "poolcast/special.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace poolcast::special;

namespace {

// Relative error with an absolute floor for values near zero.
double rel_err(double got, double want) { return std::fabs(got - want) / std::max(1e-300, std::fabs(want)); }

}  // namespace

// Expected values below come from tests/oracles/oracles.py (mpmath, 40 digits).

TEST_CASE("normal cdf against high-precision values") {
    CHECK(rel_err(normal_cdf(-8.0), 6.2209605742717841e-16) < 1e-13);
    CHECK(normal_cdf(-3.0) == doctest::Approx(0.0013498980316300945).epsilon(1e-14));
    CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-15));
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(0.5) == doctest::Approx(0.6914624612740131).epsilon(1e-15));
    CHECK(normal_cdf(2.0) == doctest::Approx(0.97724986805182079).epsilon(1e-15));
    CHECK(normal_cdf(5.0) == doctest::Approx(0.99999971334842812).epsilon(1e-15));
    CHECK(rel_err(normal_sf(8.0), 6.2209605742717841e-16) < 1e-13);
}

TEST_CASE("normal quantile against high-precision values") {
    CHECK(normal_quantile(1e-10) == doctest::Approx(-6.3613409024040562).epsilon(1e-13));
    CHECK(normal_quantile(0.001) == doctest::Approx(-3.0902323061678135).epsilon(1e-14));
    CHECK(normal_quantile(0.025) == doctest::Approx(-1.9599639845400542).epsilon(1e-14));
    CHECK(normal_quantile(0.3) == doctest::Approx(-0.52440051270804078).epsilon(1e-14));
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(0.9) == doctest::Approx(1.2815515655446005).epsilon(1e-14));
    // 0.999999 is not exactly representable; the slope 1/phi amplifies the input rounding.
    CHECK(normal_quantile(0.999999) == doctest::Approx(4.7534243088228989).epsilon(1e-11));
    CHECK(normal_quantile(0.0) == -std::numeric_limits<double>::infinity());
    CHECK(normal_quantile(1.0) == std::numeric_limits<double>::infinity());
    CHECK(std::isnan(normal_quantile(1.5)));
}

TEST_CASE("normal functions agree with Boost on a dense grid") {
    const boost::math::normal_distribution<double> n01;
    for (double x = -37.0; x <= 8.0; x += 0.0137) {
        const double want = boost::math::cdf(n01, x);
        CHECK(std::fabs(normal_cdf(x) - want) <= 1e-15 + 1e-13 * want);
    }
    for (double p = 1e-6; p < 1.0; p += 0.000731) {
        CHECK(normal_quantile(p) == doctest::Approx(boost::math::quantile(n01, p)).epsilon(1e-12));
    }
}

TEST_CASE("digamma and trigamma") {
    CHECK(digamma(0.1) == doctest::Approx(-10.423754940411077).epsilon(1e-14));
    CHECK(trigamma(0.1) == doctest::Approx(101.43329915079276).epsilon(1e-14));
    CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-14));
    CHECK(trigamma(1.0) == doctest::Approx(1.6449340668482264).epsilon(1e-14));
    CHECK(digamma(1.5) == doctest::Approx(0.036489973978576521).epsilon(1e-12));
    CHECK(trigamma(1.5) == doctest::Approx(0.93480220054467931).epsilon(1e-14));
    CHECK(digamma(2.5) == doctest::Approx(0.70315664064524319).epsilon(1e-14));
    CHECK(trigamma(2.5) == doctest::Approx(0.49035775610023486).epsilon(1e-14));
    CHECK(digamma(10.0) == doctest::Approx(2.2517525890667211).epsilon(1e-14));
    CHECK(trigamma(10.0) == doctest::Approx(0.10516633568168575).epsilon(1e-14));
    CHECK(digamma(123.25) == doctest::Approx(4.8101525319648189).epsilon(1e-14));
    CHECK(trigamma(123.25) == doctest::Approx(0.008146594456080265).epsilon(1e-14));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double x = std::exp(-3.0 + 9.0 * u(rng));
        CHECK(std::fabs(digamma(x) - boost::math::digamma(x)) < 1e-12 * std::max(1.0, std::fabs(digamma(x))));
        CHECK(std::fabs(trigamma(x) - boost::math::trigamma(x)) < 1e-12 * std::max(1.0, trigamma(x)));
    }
}

TEST_CASE("regularized incomplete beta") {
    CHECK(incomplete_beta(0.3, 2.0, 3.0) == doctest::Approx(0.3483).epsilon(1e-13));
    CHECK(incomplete_beta(0.5, 0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(incomplete_beta(0.9, 1.5, 2.5) == doctest::Approx(0.99379260427955193).epsilon(1e-13));
    CHECK(rel_err(incomplete_beta(0.01, 3.0, 0.7), 5.3671118066383145e-7) < 1e-12);
    CHECK(incomplete_beta(0.75, 10.0, 12.0) == doctest::Approx(0.99831292089947965).epsilon(1e-13));
    CHECK(incomplete_beta(0.0, 2.0, 3.0) == 0.0);
    CHECK(incomplete_beta(1.0, 2.0, 3.0) == 1.0);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = std::exp(-2.0 + 5.0 * u(rng));
        const double b = std::exp(-2.0 + 5.0 * u(rng));
        const double x = u(rng);
        CHECK(std::fabs(incomplete_beta(x, a, b) - boost::math::ibeta(a, b, x)) < 1e-12);
        const double p = u(rng);
        // Compared in x: near 0 and 1 the residual in p is limited by the spacing of doubles.
        const double q = incomplete_beta_inverse(p, a, b);
        const double want = boost::math::ibeta_inv(a, b, p);
        CHECK(std::fabs(q - want) <= 1e-10 * std::min(want, 1.0 - want) + 1e-15);
    }
}

TEST_CASE("beta density and log beta") {
    CHECK(beta_pdf(0.5, 2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(beta_pdf(0.3, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(log_beta(2.0, 3.0) == doctest::Approx(std::log(1.0 / 12.0)).epsilon(1e-14));
}

TEST_CASE("beta log moments") {
    SUBCASE("uniform law") {
        const auto m = beta_log_moments(1.0, 1.0);
        CHECK(m.mean_log == doctest::Approx(-1.0).epsilon(1e-14));
        CHECK(m.var_log == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(m.mean_log1m == doctest::Approx(-1.0).epsilon(1e-14));
    }
    SUBCASE("quadrature values at (1.5, 2.5)") {
        const auto m = beta_log_moments(1.5, 2.5);
        CHECK(std::fabs(m.mean_log - -1.219627694453224) < 1e-10);
        CHECK(std::fabs(m.mean_log1m - -0.55296102778655729) < 1e-10);
        CHECK(std::fabs(m.var_log - 0.65097924480756398) < 1e-10);
        CHECK(std::fabs(m.cov_log_log1m - -0.28382295573711533) < 1e-10);
        CHECK(m.cov_log_log1m == doctest::Approx(-trigamma(4.0)).epsilon(1e-14));
    }
}
