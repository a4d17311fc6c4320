#pragma once

// Sliding-window skeleton shared by the IPG and Newton observers.

#include <span>
#include <string>
#include <vector>

#include "ipgobs/errors.hpp"
#include "ipgobs/linalg.hpp"
#include "ipgobs/system_model.hpp"
#include "ipgobs/trace.hpp"

namespace ipgobs::detail {

struct WindowFrame {
    int k;
    const ObservabilityWindow& window;
    const Vector& Y;
    const Vector* x_start = nullptr;    // truth x_{k-N+1}, target of w
    const Vector* x_current = nullptr;  // truth x_k, target of x_hat
    const Matrix* true_jacobian_inverse = nullptr;  // H_x(x_{k-N+1})^{-1}
};

inline void validate_run_inputs(const SystemModel& system, int window_n, std::span<const Vector> measurements,
                                std::span<const Vector> inputs, const Trajectory* truth) {
    if (window_n < 1) throw ConfigError("window length N must be >= 1");
    if (static_cast<int>(measurements.size()) < window_n) {
        throw ConfigError("need at least N = " + std::to_string(window_n) + " measurements, got " +
                          std::to_string(measurements.size()));
    }
    for (const auto& y : measurements) {
        if (y.size() != system.p()) throw DimensionError("measurement length does not match output dimension p");
    }
    const std::size_t needed_inputs = measurements.size() - 1;
    if (!system.autonomous() && inputs.size() < needed_inputs) {
        throw ConfigError("need " + std::to_string(needed_inputs) + " inputs for " +
                          std::to_string(measurements.size()) + " measurements, got " + std::to_string(inputs.size()));
    }
    if (truth != nullptr && truth->states.size() < measurements.size()) {
        throw ConfigError("truth trajectory shorter than measurement sequence");
    }
}

inline Vector input_at(const SystemModel& system, std::span<const Vector> inputs, int j) {
    if (system.autonomous() && inputs.empty()) return Vector(0);
    return inputs[j];
}

/**
 * Runs `inner(frame, w, rows) -> w` at every instant k >= N-1, appends the
 * summary row (completed by `summarize(frame, w, row)`), and advances with
 * `advance(w, u_{k-N+1})`. Divergence and singular-Jacobian errors stop the
 * run and are reported in the returned status with the partial trace.
 */
template <class Inner, class Summarize, class Advance>
ObserverRun run_windowed(const SystemModel& system, int window_n, std::span<const Vector> measurements,
                         std::span<const Vector> inputs, const Trajectory* truth, Vector w, Inner&& inner,
                         Summarize&& summarize, Advance&& advance) {
    validate_run_inputs(system, window_n, measurements, inputs, truth);
    if (w.size() != system.n()) throw DimensionError("initial estimate has wrong length");

    ObserverRun run;
    run.trace.window_n = window_n;
    const int total = static_cast<int>(measurements.size());

    for (int k = window_n - 1; k < total; ++k) {
        const int start = k - window_n + 1;
        std::vector<Vector> window_inputs;
        if (!system.autonomous()) window_inputs.assign(inputs.begin() + start, inputs.begin() + k);
        const ObservabilityWindow window(system, window_n, std::move(window_inputs));
        const Vector Y = stack_measurements(measurements.subspan(start, window_n));

        std::optional<Matrix> true_inverse;
        if (truth != nullptr) true_inverse = linalg::checked_inverse(window.jacobian(truth->states[start]));
        const WindowFrame frame{k, window, Y, truth ? &truth->states[start] : nullptr,
                                truth ? &truth->states[k] : nullptr, true_inverse ? &*true_inverse : nullptr};

        try {
            w = inner(frame, std::move(w), run.trace.rows);
        } catch (const DivergenceError& e) {
            run.status = RunStatus::diverged;
            run.message = e.what();
            run.failed_k = e.k();
            run.failed_i = e.i();
            return run;
        } catch (const SingularJacobianError& e) {
            run.status = RunStatus::singular_jacobian;
            run.message = e.what();
            run.failed_k = k;
            return run;
        } catch (const NumericalError& e) {
            // Non-finite model evaluations inside finite differencing.
            run.status = RunStatus::diverged;
            run.message = e.what();
            run.failed_k = k;
            return run;
        }

        Vector x_hat = window.propagate(w);
        if (!x_hat.allFinite()) {
            run.status = RunStatus::diverged;
            run.message = "non-finite propagated estimate at k=" + std::to_string(k);
            run.failed_k = k;
            return run;
        }

        TraceRow summary;
        summary.k = k;
        summary.i = kSummaryRow;
        if (frame.x_start) summary.err_w = (w - *frame.x_start).norm();
        if (frame.x_current) summary.err_xhat = (x_hat - *frame.x_current).norm();
        summarize(frame, w, summary);
        run.trace.rows.push_back(std::move(summary));
        run.estimates.push_back({k, std::move(x_hat)});

        if (k + 1 < total) w = advance(w, input_at(system, inputs, start));
    }
    return run;
}

}  // namespace ipgobs::detail
