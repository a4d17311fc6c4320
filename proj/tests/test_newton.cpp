#include "doctest.h"
#include "ipgobs/builtin_systems.hpp"
#include "ipgobs/errors.hpp"
#include "ipgobs/ipg.hpp"
#include "ipgobs/newton.hpp"
#include "test_support.hpp"

using namespace ipgobs;
using ipgobs::testing::scalar;
using ipgobs::testing::vec;

TEST_CASE("Newton step on a linear map is exact") {
    const auto sys = testing::scalar_system(0.5, [](double x) { return x; }, [](double) { return 1.0; });
    const ObservabilityWindow window(sys, 1);
    CHECK(newton_inner_step(scalar(2.0), scalar(1.0), window)(0) == doctest::Approx(1.0));
    CHECK(newton_inner_step(scalar(1.0), scalar(1.0), window)(0) == 1.0);
}

TEST_CASE("Newton iteration for the square root of 1") {
    const auto sys = testing::scalar_system(1.0, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
    const ObservabilityWindow window(sys, 1);
    const Vector w1 = newton_inner_step(scalar(2.0), scalar(1.0), window);
    CHECK(w1(0) == doctest::Approx(1.25).epsilon(1e-15));
    const Vector w2 = newton_inner_step(w1, scalar(1.0), window);
    CHECK(w2(0) == doctest::Approx(1.025).epsilon(1e-15));
    const Vector damped = newton_inner_step(scalar(2.0), scalar(1.0), window, 0.5);
    CHECK(damped(0) == doctest::Approx(1.625));
}

TEST_CASE("singular Jacobian is refused") {
    const auto sys =
        testing::scalar_system(1.0, [](double x) { return x * x * x; }, [](double x) { return 3.0 * x * x; });
    const ObservabilityWindow window(sys, 1);
    CHECK_THROWS_AS(newton_inner_step(scalar(0.0), scalar(1.0), window), SingularJacobianError);

    const auto truth = simulate(sys, scalar(0.0), {}, 5);
    NewtonConfig c;
    c.w_init = scalar(0.0);
    const auto run = run_newton_observer(sys, 1, truth.outputs, {}, c, &truth);
    CHECK(run.status == RunStatus::singular_jacobian);
    CHECK(run.failed_k == 0);
}

TEST_CASE("Newton observer on linear and nonlinear systems") {
    const auto lin = builtin_system("planar_linear");
    const auto truth = simulate(lin, vec({1.0, -1.0}), {}, 10);
    NewtonConfig c;
    c.w_init = truth.states[0] + vec({0.3, -0.2});
    auto run = run_newton_observer(lin, 2, truth.outputs, {}, c, &truth);
    REQUIRE(run.completed());
    for (double e : run.trace.estimate_errors()) CHECK(e <= 1e-14);

    c.w_init = truth.states[0];
    run = run_newton_observer(lin, 2, truth.outputs, {}, c, &truth);
    for (double e : run.trace.estimate_errors()) CHECK(e == doctest::Approx(0.0));

    const auto mild = builtin_system("planar_mild_nonlinear");
    const auto truth2 = simulate(mild, vec({0.8, -0.5}), {}, 10);
    c.d = 3;
    c.w_init = truth2.states[0] + vec({0.1, 0.1});
    const auto newton = run_newton_observer(mild, 2, truth2.outputs, {}, c, &truth2);

    IpgConfig ic;
    ic.d = 1;
    ic.alpha = ConstantAlpha{0.1};
    ic.w_init = c.w_init;
    ic.K_init = 0.75 * Matrix::Identity(2, 2);
    const auto ipg = run_ipg_observer(mild, 2, truth2.outputs, {}, ic, &truth2);
    REQUIRE(newton.completed());
    REQUIRE(ipg.completed());
    const auto en = newton.trace.estimate_errors();
    const auto ei = ipg.trace.estimate_errors();
    for (std::size_t j = 0; j < 3; ++j) CHECK(en[j] < ei[j]);
}

TEST_CASE("Newton config validation") {
    const auto lin = builtin_system("planar_linear");
    const auto truth = simulate(lin, vec({1.0, -1.0}), {}, 3);
    NewtonConfig c;
    c.w_init = vec({0.0, 0.0});
    c.d = 0;
    CHECK_THROWS_AS(run_newton_observer(lin, 2, truth.outputs, {}, c), ConfigError);
    c.d = 1;
    c.damping = 0.0;
    CHECK_THROWS_AS(run_newton_observer(lin, 2, truth.outputs, {}, c), ConfigError);
}
