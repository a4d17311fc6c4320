#include <cmath>

#include "doctest.h"
#include "ipgobs/builtin_systems.hpp"
#include "ipgobs/errors.hpp"
#include "ipgobs/ipg.hpp"
#include "ipgobs/linalg.hpp"
#include "ipgobs/newton.hpp"
#include "ipgobs/rng.hpp"
#include "test_support.hpp"

using namespace ipgobs;
using ipgobs::testing::scalar;
using ipgobs::testing::vec;

namespace {

IpgState scalar_state(double w, double K) {
    IpgState s;
    s.w = scalar(w);
    s.K = Matrix::Constant(1, 1, K);
    return s;
}

IpgConfig planar_config(int d, double alpha, double K_scale, const Vector& w0) {
    IpgConfig c;
    c.d = d;
    c.alpha = ConstantAlpha{alpha};
    c.w_init = w0;
    c.K_init = K_scale * Matrix::Identity(2, 2);
    return c;
}

}  // namespace

TEST_CASE("inner step on the identity map") {
    const Matrix one = Matrix::Identity(1, 1);
    // K = 0 leaves w unchanged because the w update uses the pre-update K.
    auto next = ipg_inner_step(scalar_state(2.0, 0.0), scalar(1.0), scalar(2.0), one, 0.5, 1.0, 0.0);
    CHECK(next.K(0, 0) == doctest::Approx(0.5));
    CHECK(next.w(0) == doctest::Approx(2.0));
    CHECK(next.i == 1);

    next = ipg_inner_step(scalar_state(2.0, 1.0), scalar(1.0), scalar(2.0), one, 0.5, 1.0, 0.0);
    CHECK(next.K(0, 0) == doctest::Approx(1.0));
    CHECK(next.w(0) == doctest::Approx(1.0));
}

TEST_CASE("preconditioner recursion approaches the inverse geometrically") {
    const Matrix two = Matrix::Constant(1, 1, 2.0);
    IpgState s = scalar_state(0.0, 0.0);
    for (int i = 0; i < 3; ++i) s = ipg_inner_step(s, scalar(0.0), scalar(0.0), two, 0.25, 1.0, 0.0);
    CHECK(s.K(0, 0) == doctest::Approx(0.4375).epsilon(1e-15));

    // Every step halves the distance to 1/2.
    double gap = 0.5 - s.K(0, 0);
    for (int i = 0; i < 20; ++i) {
        s = ipg_inner_step(s, scalar(0.0), scalar(0.0), two, 0.25, 1.0, 0.0);
        const double next_gap = 0.5 - s.K(0, 0);
        CHECK(next_gap == doctest::Approx(0.5 * gap).epsilon(1e-12));
        gap = next_gap;
    }
}

TEST_CASE("beta shifts the preconditioner fixed point") {
    const Matrix h = Matrix::Constant(1, 1, -1.0);
    IpgState s = scalar_state(0.0, 0.0);
    for (int i = 0; i < 200; ++i) s = ipg_inner_step(s, scalar(0.0), scalar(0.0), h, 0.5, 1.0, 1.5);
    CHECK(s.K(0, 0) == doctest::Approx(1.0 / (-1.0 + 1.5)));
}

TEST_CASE("inner step checks dimensions and divergence") {
    const Matrix one = Matrix::Identity(1, 1);
    CHECK_THROWS_AS(ipg_inner_step(scalar_state(1.0, 1.0), vec({1.0, 2.0}), scalar(1.0), one, 0.5, 1.0, 0.0),
                    DimensionError);
    IpgState s = scalar_state(1.0, 1e13);
    s.k = 4;
    s.i = 2;
    try {
        ipg_inner_step(s, scalar(0.0), scalar(1.0), one, 0.5, 1.0, 0.0);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.k() == 4);
        CHECK(e.i() == 2);
    }
    const IpgState nan_state = scalar_state(std::nan(""), 1.0);
    CHECK_THROWS_AS(ipg_inner_step(nan_state, scalar(0.0), scalar(1.0), one, 0.5, 1.0, 0.0), DivergenceError);
}

TEST_CASE("step-size policies") {
    const StepSizeSchedule constant = ConstantAlpha{0.3};
    for (int i : {0, 1, 7, 100}) CHECK(constant(i) == 0.3);

    const StepSizeSchedule custom = CustomAlpha{{0.1, 0.2, 0.3}};
    CHECK(custom(0) == 0.1);
    CHECK(custom(2) == 0.3);
    CHECK(custom(9) == 0.3);

    const StepSizeSchedule capped = TheoremSchedule{2.0, 0.1, 0.5, 1.5, 0.4, 1e3};
    CHECK(capped(0) == doctest::Approx(0.495));

    const StepSizeSchedule theorem = TheoremSchedule{1.0, 1.0, 0.5, 1.5, 0.4, 10.0};
    CHECK(step_size(0, theorem) == doctest::Approx(0.198).epsilon(1e-14));

    const StepSizeSchedule small_d2 = TheoremSchedule{2.0, 1.0, 0.5, 1.5, 0.4, 0.1};
    CHECK(small_d2(0) == doctest::Approx(0.0495).epsilon(1e-14));
    CHECK(small_d2(1) == doctest::Approx(0.04242857142857143).epsilon(1e-14));

    CHECK_THROWS_AS(StepSizeSchedule(ConstantAlpha{0.0}), ConfigError);
    CHECK_THROWS_AS(StepSizeSchedule(CustomAlpha{{}}), ConfigError);
    CHECK_THROWS_AS(StepSizeSchedule(TheoremSchedule{1.0, 1.0, 1.2, 1.5, 0.1, 1.0}), ConfigError);
    CHECK_THROWS_AS(StepSizeSchedule(TheoremSchedule{1.0, 1.0, 0.5, 2.5, 0.1, 1.0}), ConfigError);
    CHECK_THROWS_AS(StepSizeSchedule(TheoremSchedule{1.0, 1.0, 0.5, 1.5, 0.6, 1.0}), ConfigError);
    CHECK_THROWS_AS(constant(-1), PreconditionError);
}

TEST_CASE("advance_window applies F and keeps K") {
    const auto planar = builtin_system("planar_linear");
    IpgState s;
    s.w = vec({2.0, 1.0});
    s.K = Matrix::Identity(2, 2);
    s.k = 3;
    s.i = 5;
    const IpgState next = advance_window(s, planar, Vector(0));
    CHECK(next.w(0) == doctest::Approx(1.0));
    CHECK(next.w(1) == doctest::Approx(1.8));
    CHECK(next.K == s.K);
    CHECK(next.k == 4);
    CHECK(next.i == 0);

    const auto half = builtin_system("scalar_linear");
    s.w = scalar(4.0);
    s.K = Matrix::Constant(1, 1, 0.9);
    const IpgState h = advance_window(s, half, Vector(0));
    CHECK(h.w(0) == doctest::Approx(2.0));
    CHECK(h.K(0, 0) == doctest::Approx(0.9));
}

TEST_CASE("run layout: first estimate at k = N - 1, d inner rows plus one summary row") {
    const auto sys = builtin_system("planar_mild_nonlinear");
    const auto truth = simulate(sys, vec({0.8, -0.5}), {}, 9);
    const auto run =
        run_ipg_observer(sys, 2, truth.outputs, {}, planar_config(3, 0.5, 0.5, truth.states[0] + vec({0.1, 0.1})), &truth);
    REQUIRE(run.completed());
    REQUIRE(run.estimates.size() == 9);
    CHECK(run.estimates.front().k == 1);
    CHECK(run.estimates.back().k == 9);
    REQUIRE(run.trace.rows.size() == 9 * 4);
    CHECK(run.trace.rows[0].i == 0);
    CHECK(run.trace.rows[3].i == kSummaryRow);
    CHECK(run.trace.rows[0].err_w.has_value());
    CHECK_FALSE(run.trace.rows[0].err_xhat.has_value());
    CHECK(run.trace.rows[3].err_xhat.has_value());
    CHECK(run.trace.instants().size() == 9);
    CHECK(run.trace.estimate_errors().size() == 9);
}

TEST_CASE("errors decay on the linear planar example") {
    const auto sys = builtin_system("planar_linear");
    const auto truth = simulate(sys, vec({1.0, -1.0}), {}, 29);
    const auto run =
        run_ipg_observer(sys, 2, truth.outputs, {}, planar_config(10, 0.5, 0.5, truth.states[0] + vec({0.1, 0.1})), &truth);
    REQUIRE(run.completed());
    const auto errors = run.trace.estimate_errors();
    for (std::size_t j = 0; j + 1 < errors.size(); ++j) {
        if (errors[j] < 1e-13) break;
        CHECK(errors[j + 1] < errors[j]);
    }
    CHECK(errors.back() < 1e-12);
}

TEST_CASE("runs without truth leave truth columns empty") {
    const auto sys = builtin_system("planar_linear");
    const auto truth = simulate(sys, vec({1.0, -1.0}), {}, 5);
    const auto run = run_ipg_observer(sys, 2, truth.outputs, {}, planar_config(2, 0.5, 1.0, vec({0.0, 0.0})));
    REQUIRE(run.completed());
    for (const auto& row : run.trace.rows) {
        CHECK_FALSE(row.err_w.has_value());
        CHECK_FALSE(row.err_xhat.has_value());
        CHECK_FALSE(row.err_K.has_value());
        CHECK(row.precond_residual.has_value());
    }
    CHECK(run.trace.estimate_errors().empty());
}

TEST_CASE("configuration errors") {
    const auto sys = builtin_system("planar_linear");
    const auto truth = simulate(sys, vec({1.0, -1.0}), {}, 5);
    auto good = planar_config(1, 0.5, 1.0, vec({0.0, 0.0}));
    CHECK_THROWS_AS(run_ipg_observer(sys, 2, std::span(truth.outputs).first(1), {}, good), ConfigError);
    CHECK_THROWS_AS(run_ipg_observer(sys, 1, truth.outputs, {}, good), ConfigError);

    auto bad = good;
    bad.d = 0;
    CHECK_THROWS_AS(run_ipg_observer(sys, 2, truth.outputs, {}, bad), ConfigError);
    bad = good;
    bad.beta = -1.0;
    CHECK_THROWS_AS(run_ipg_observer(sys, 2, truth.outputs, {}, bad), ConfigError);
    bad = good;
    bad.w_init = vec({0.0});
    CHECK_THROWS_AS(run_ipg_observer(sys, 2, truth.outputs, {}, bad), ConfigError);
    bad = good;
    bad.K_init = Matrix::Identity(3, 3);
    CHECK_THROWS_AS(run_ipg_observer(sys, 2, truth.outputs, {}, bad), ConfigError);

    std::vector<Vector> wrong_p(truth.outputs.size(), vec({1.0, 2.0}));
    CHECK_THROWS_AS(run_ipg_observer(sys, 2, wrong_p, {}, good), DimensionError);
}

TEST_CASE("divergence stops the run and keeps the partial trace") {
    // Negative Jacobian with beta = 0: K grows without bound.
    const auto sys = testing::scalar_system(0.5, [](double x) { return -x; }, [](double) { return -1.0; });
    const auto truth = simulate(sys, scalar(1.0), {}, 200);
    IpgConfig c;
    c.d = 5;
    c.alpha = ConstantAlpha{0.5};
    c.w_init = scalar(1.5);
    c.K_init = Matrix::Constant(1, 1, 1.0);
    const auto run = run_ipg_observer(sys, 1, truth.outputs, {}, c, &truth);
    CHECK(run.status == RunStatus::diverged);
    REQUIRE(run.failed_k.has_value());
    REQUIRE(run.failed_i.has_value());
    CHECK_FALSE(run.trace.rows.empty());
    CHECK(run.trace.rows.back().k == *run.failed_k);
}

TEST_CASE("fixed point is preserved from exact initialization") {
    const auto sys = builtin_system("scalar_linear");
    const auto truth = simulate(sys, scalar(3.0), {}, 30);
    IpgConfig c;
    c.d = 20;
    c.alpha = ConstantAlpha{0.5};
    c.w_init = truth.states[0];
    c.K_init = Matrix::Identity(1, 1);
    const auto run = run_ipg_observer(sys, 1, truth.outputs, {}, c, &truth);
    REQUIRE(run.completed());
    for (double e : run.trace.estimate_errors()) CHECK(e <= 1e-15);
}

TEST_CASE("exact inverse preconditioner gives the Newton step") {
    PortableRng rng(5);
    for (const char* id : {"planar_mild_nonlinear", "cubic_output", "indefinite_jacobian"}) {
        CAPTURE(id);
        const auto sys = builtin_system(id);
        const ObservabilityWindow window(sys, natural_window(sys));
        for (int s = 0; s < 10; ++s) {
            Vector w(sys.n()), target(sys.n());
            for (int j = 0; j < sys.n(); ++j) {
                w(j) = rng.uniform(-0.5, 0.5);
                target(j) = rng.uniform(-0.5, 0.5);
            }
            const Vector Y = window.evaluate(target);
            IpgState state;
            state.w = w;
            state.K = *linalg::checked_inverse(window.jacobian(w));
            const Vector ipg = ipg_inner_step(state, Y, window, 0.3, 1.0, 0.0).w;
            const Vector newton = newton_inner_step(w, Y, window);
            CHECK((ipg - newton).norm() <= 1e-10);
        }
    }
}

TEST_CASE("identical inputs give identical traces") {
    const auto sys = builtin_system("planar_mild_nonlinear");
    const auto truth = simulate(sys, vec({0.8, -0.5}), {}, 20);
    const auto c = planar_config(2, 0.3, 0.75, truth.states[0] + vec({0.1, 0.1}));
    const auto a = run_ipg_observer(sys, 2, truth.outputs, {}, c, &truth);
    const auto b = run_ipg_observer(sys, 2, truth.outputs, {}, c, &truth);
    REQUIRE(a.trace.rows.size() == b.trace.rows.size());
    for (std::size_t r = 0; r < a.trace.rows.size(); ++r) {
        CHECK(a.trace.rows[r].err_w == b.trace.rows[r].err_w);
        CHECK(a.trace.rows[r].err_K == b.trace.rows[r].err_K);
    }
}
