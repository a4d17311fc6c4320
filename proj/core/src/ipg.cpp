#include "ipgobs/ipg.hpp"

#include <algorithm>
#include <cmath>

#include "ipgobs/errors.hpp"
#include "ipgobs/linalg.hpp"
#include "observer_loop.hpp"

namespace ipgobs {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate_policy(const ConstantAlpha& c) {
    if (!(c.value > 0.0) || !std::isfinite(c.value)) throw ConfigError("constant step size must be positive and finite");
}

void validate_policy(const TheoremSchedule& t) {
    if (!(t.Lambda > 0.0)) throw ConfigError("theorem schedule: Lambda must be > 0");
    if (!(t.l > 0.0)) throw ConfigError("theorem schedule: l must be > 0");
    if (!(t.rho > 0.0 && t.rho < 1.0)) throw ConfigError("theorem schedule: need 0 < rho < 1");
    if (!(t.mu > 1.0)) throw ConfigError("theorem schedule: need mu > 1");
    if (!(t.mu * t.rho < 1.0)) throw ConfigError("theorem schedule: need mu * rho < 1");
    if (!(t.varrho > 0.0 && t.varrho < 1.0 - t.rho)) throw ConfigError("theorem schedule: need 0 < varrho < 1 - rho");
    if (!(t.D2 > 0.0)) throw ConfigError("theorem schedule: D2 must be > 0");
}

void validate_policy(const CustomAlpha& c) {
    if (c.values.empty()) throw ConfigError("custom step-size list is empty");
    for (double a : c.values) {
        if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("custom step sizes must be positive and finite");
    }
}

double theorem_step(const TheoremSchedule& t, int i) {
    const double mr = t.mu * t.rho;
    const double second = std::min(t.varrho, t.D2) * std::pow(t.mu, i) * (1.0 - mr) /
                          (2.0 * t.l * (1.0 - std::pow(mr, i + 1)));
    return kStepSafetyFactor * std::min(1.0 / t.Lambda, second);
}

}  // namespace

StepSizeSchedule::StepSizeSchedule(AlphaPolicy policy) : policy_(std::move(policy)) {
    std::visit([](const auto& p) { validate_policy(p); }, policy_);
}

double StepSizeSchedule::operator()(int i) const {
    if (i < 0) throw PreconditionError("step size index must be non-negative");
    return std::visit(overloaded{
                          [](const ConstantAlpha& c) { return c.value; },
                          [i](const TheoremSchedule& t) { return theorem_step(t, i); },
                          [i](const CustomAlpha& c) {
                              return c.values[std::min<std::size_t>(static_cast<std::size_t>(i), c.values.size() - 1)];
                          },
                      },
                      policy_);
}

double step_size(int i, const StepSizeSchedule& schedule) { return schedule(i); }

void IpgConfig::validate(int n) const {
    if (d < 1) throw ConfigError("IPG: d must be >= 1");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("IPG: beta must be >= 0");
    if (!(delta_step > 0.0) || !std::isfinite(delta_step)) throw ConfigError("IPG: delta_step must be > 0");
    if (w_init.size() != n) throw ConfigError("IPG: w_init must have length n");
    if (K_init.rows() != n || K_init.cols() != n) throw ConfigError("IPG: K_init must be n x n");
    if (!w_init.allFinite() || !K_init.allFinite()) throw ConfigError("IPG: initial values must be finite");
}

IpgState ipg_inner_step(const IpgState& state, const Vector& Y, const Vector& H_w, const Matrix& H_x, double alpha,
                        double delta_step, double beta) {
    const auto n = state.w.size();
    if (state.K.rows() != n || state.K.cols() != n) throw DimensionError("ipg_inner_step: K must be n x n");
    if (Y.size() != n || H_w.size() != n) throw DimensionError("ipg_inner_step: need N*p = n stacked measurements");
    if (H_x.rows() != n || H_x.cols() != n) throw DimensionError("ipg_inner_step: H_x must be n x n");

    const Matrix I = Matrix::Identity(n, n);
    IpgState next = state;
    next.K = state.K - alpha * ((H_x + beta * I) * state.K - I);
    next.w = state.w - delta_step * (state.K * (H_w - Y));
    next.i = state.i + 1;
    next.x_hat.reset();

    if (!next.K.allFinite() || !next.w.allFinite()) {
        throw DivergenceError(state.k, state.i, "non-finite iterate");
    }
    if (next.w.norm() > kDivergenceBound) {
        throw DivergenceError(state.k, state.i, "||w|| exceeded divergence bound");
    }
    return next;
}

IpgState ipg_inner_step(const IpgState& state, const Vector& Y, const ObservabilityWindow& window, double alpha,
                        double delta_step, double beta) {
    if (state.w.size() != window.n()) throw DimensionError("ipg_inner_step: w has wrong length");
    const Vector H_w = window.evaluate(state.w);
    const Matrix H_x = window.jacobian(state.w);
    if (!H_w.allFinite() || !H_x.allFinite()) throw DivergenceError(state.k, state.i, "non-finite H(w) or H_x(w)");
    return ipg_inner_step(state, Y, H_w, H_x, alpha, delta_step, beta);
}

Vector propagate_estimate(const Vector& w_d, const ObservabilityWindow& window) { return window.propagate(w_d); }

IpgState advance_window(const IpgState& state, const SystemModel& system, const Vector& next_input) {
    IpgState next;
    next.w = system.step(state.w, next_input);
    next.K = state.K;
    next.k = state.k + 1;
    next.i = 0;
    return next;
}

ObserverRun run_ipg_observer(const SystemModel& system, int window_n, std::span<const Vector> measurements,
                             std::span<const Vector> inputs, const IpgConfig& config, const Trajectory* truth) {
    config.validate(system.n());
    const auto n = system.n();
    const Matrix I = Matrix::Identity(n, n);

    IpgState state;
    state.K = config.K_init;

    auto inner = [&](const detail::WindowFrame& frame, Vector w, std::vector<TraceRow>& rows) {
        state.w = std::move(w);
        state.k = frame.k;
        state.i = 0;
        for (int i = 0; i < config.d; ++i) {
            const double alpha = config.alpha(i);
            const Vector H_w = frame.window.evaluate(state.w);
            const Matrix H_x = frame.window.jacobian(state.w);
            if (!H_w.allFinite() || !H_x.allFinite()) throw DivergenceError(frame.k, i, "non-finite H(w) or H_x(w)");

            TraceRow row;
            row.k = frame.k;
            row.i = i;
            row.alpha = alpha;
            row.precond_residual = linalg::spectral_norm(H_x * state.K - I);
            if (frame.x_start) row.err_w = (state.w - *frame.x_start).norm();
            if (frame.true_jacobian_inverse) row.err_K = linalg::spectral_norm(state.K - *frame.true_jacobian_inverse);
            row.jacobian = H_x;
            rows.push_back(std::move(row));

            state = ipg_inner_step(state, frame.Y, H_w, H_x, alpha, config.delta_step, config.beta);
        }
        return state.w;
    };

    auto summarize = [&](const detail::WindowFrame& frame, const Vector& w, TraceRow& row) {
        const Matrix H_x = frame.window.jacobian(w);
        if (H_x.allFinite()) row.precond_residual = linalg::spectral_norm(H_x * state.K - I);
        if (frame.true_jacobian_inverse) row.err_K = linalg::spectral_norm(state.K - *frame.true_jacobian_inverse);
    };

    auto advance = [&](const Vector& w, const Vector& u) {
        state.w = w;
        state = advance_window(state, system, u);
        return state.w;
    };

    ObserverRun run = detail::run_windowed(system, window_n, measurements, inputs, truth, config.w_init, inner,
                                           summarize, advance);
    run.trace.beta = config.beta;
    return run;
}

}  // namespace ipgobs
