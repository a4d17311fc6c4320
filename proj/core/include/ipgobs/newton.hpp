#pragma once

#include <span>

#include "ipgobs/system_model.hpp"
#include "ipgobs/trace.hpp"

namespace ipgobs {

struct NewtonConfig {
    int d = 1;
    Vector w_init;
    double damping = 1.0;

    void validate(int n) const;
};

/// Condition-number threshold above which the Newton solve is refused.
inline constexpr double kMaxJacobianCondition = 1e12;

/**
 * w' = w - damping * H_x(w)^{-1} (H(w) - Y), solved by LU factorization.
 * Throws SingularJacobianError when cond_2(H_x(w)) > kMaxJacobianCondition.
 */
Vector newton_inner_step(const Vector& w, const Vector& Y, const ObservabilityWindow& window, double damping = 1.0);

/// Same windowing, propagation and advance as run_ipg_observer, with Newton inner steps.
ObserverRun run_newton_observer(const SystemModel& system, int window_n, std::span<const Vector> measurements,
                                std::span<const Vector> inputs, const NewtonConfig& config,
                                const Trajectory* truth = nullptr);

}  // namespace ipgobs
