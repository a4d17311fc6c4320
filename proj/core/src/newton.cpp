#include "ipgobs/newton.hpp"

#include <cmath>
#include <limits>

#include "ipgobs/errors.hpp"
#include "ipgobs/ipg.hpp"
#include "ipgobs/linalg.hpp"
#include "observer_loop.hpp"

namespace ipgobs {

void NewtonConfig::validate(int n) const {
    if (d < 1) throw ConfigError("Newton: d must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("Newton: damping must lie in (0, 1]");
    if (w_init.size() != n || !w_init.allFinite()) throw ConfigError("Newton: w_init must be a finite n-vector");
}

Vector newton_inner_step(const Vector& w, const Vector& Y, const ObservabilityWindow& window, double damping) {
    if (w.size() != window.n() || Y.size() != window.stacked_dim()) {
        throw DimensionError("newton_inner_step: dimension mismatch");
    }
    const Matrix H_x = window.jacobian(w);
    const double cond = H_x.allFinite() ? linalg::condition_number(H_x) : std::numeric_limits<double>::infinity();
    if (!std::isfinite(cond) || cond > kMaxJacobianCondition) {
        throw SingularJacobianError(w, cond, "singular or ill-conditioned observability Jacobian (cond = " +
                                                 std::to_string(cond) + ")");
    }
    const Vector residual = window.evaluate(w) - Y;
    return w - damping * H_x.partialPivLu().solve(residual);
}

ObserverRun run_newton_observer(const SystemModel& system, int window_n, std::span<const Vector> measurements,
                                std::span<const Vector> inputs, const NewtonConfig& config, const Trajectory* truth) {
    config.validate(system.n());

    auto inner = [&](const detail::WindowFrame& frame, Vector w, std::vector<TraceRow>& rows) {
        for (int i = 0; i < config.d; ++i) {
            TraceRow row;
            row.k = frame.k;
            row.i = i;
            if (frame.x_start) row.err_w = (w - *frame.x_start).norm();
            rows.push_back(std::move(row));

            w = newton_inner_step(w, frame.Y, frame.window, config.damping);
            if (!w.allFinite()) throw DivergenceError(frame.k, i, "non-finite iterate");
            if (w.norm() > kDivergenceBound) throw DivergenceError(frame.k, i, "||w|| exceeded divergence bound");
        }
        return w;
    };
    auto summarize = [](const detail::WindowFrame&, const Vector&, TraceRow&) {};
    auto advance = [&](const Vector& w, const Vector& u) { return system.step(w, u); };

    return detail::run_windowed(system, window_n, measurements, inputs, truth, config.w_init, inner, summarize,
                                advance);
}

}  // namespace ipgobs
