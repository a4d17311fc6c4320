#include <cmath>
#include <vector>

#include "doctest.h"
#include "ipgobs/errors.hpp"
#include "ipgobs/rate_fit.hpp"
#include "ipgobs/rng.hpp"

using namespace ipgobs;

TEST_CASE("exact geometric sequence") {
    const std::vector<double> e{1.0, 0.5, 0.25, 0.125};
    const auto fit = fit_linear_rate(e);
    CHECK(fit.mu_hat == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(fit.used == 4);
}

TEST_CASE("constant errors have rate one") {
    const std::vector<double> e{1.0, 1.0, 1.0};
    const auto fit = fit_linear_rate(e);
    CHECK(fit.mu_hat == doctest::Approx(1.0));
    CHECK(fit.r_squared == 1.0);
}

TEST_CASE("noisy decay matches an independent regression") {
    const std::vector<double> e{1.0, 0.4, 0.14, 0.06};
    const auto fit = fit_linear_rate(e);
    CHECK(std::abs(fit.mu_hat - 2.583139261973672) <= 1e-12);
    CHECK(std::abs(fit.r_squared - 0.9984840717893945) <= 1e-12);
    CHECK(fit.mu_hat == doctest::Approx(2.56).epsilon(0.1 / 2.56));
}

TEST_CASE("entries at or below the floor are skipped but keep their index") {
    // 1, 0.5, <floor>, 0.125: the remaining points still lie on one line in k.
    const std::vector<double> e{1.0, 0.5, 0.0, 0.125, 1e-14};
    const auto fit = fit_linear_rate(e);
    CHECK(fit.used == 3);
    CHECK(fit.mu_hat == doctest::Approx(2.0));
}

TEST_CASE("rate fit errors") {
    CHECK_THROWS_AS(fit_linear_rate(std::vector<double>{1.0, 0.5}), InsufficientDataError);
    CHECK_THROWS_AS(fit_linear_rate(std::vector<double>{1.0, 1e-13, 1e-14, 0.0}), InsufficientDataError);
    CHECK_THROWS_AS(fit_linear_rate(std::vector<double>{1.0, -0.5, 0.25}), PreconditionError);
    CHECK_THROWS_AS(fit_linear_rate(std::vector<double>{1.0, NAN, 0.25}), PreconditionError);
}

TEST_CASE("random geometric sequences are recovered") {
    PortableRng rng(99);
    for (int t = 0; t < 100; ++t) {
        const double mu = rng.uniform(1.01, 20.0);
        const double e0 = rng.uniform(1e-3, 1e3);
        std::vector<double> e;
        for (int k = 0; k < 8; ++k) e.push_back(e0 * std::pow(mu, -k));
        const auto fit = fit_linear_rate(e);
        CHECK(fit.mu_hat == doctest::Approx(mu).epsilon(1e-10));
        CHECK(fit.r_squared >= 1.0 - 1e-10);
    }
}
