#pragma once

#include <concepts>
#include <span>
#include <variant>
#include <vector>

#include "ipgobs/system_model.hpp"
#include "ipgobs/trace.hpp"
#include "ipgobs/types.hpp"

namespace ipgobs {

/// Same step size at every inner iteration.
struct ConstantAlpha {
    double value;
};

/**
 * Step size from the linear-rate theorem:
 *
 *   alpha_i = 0.99 * min{ 1/Lambda, min{varrho, D2} mu^i (1 - mu rho) / (2 l (1 - (mu rho)^{i+1})) }
 *
 * rho and mu are inputs: they are normally measured in a first pass and fed
 * back here for a second one.
 */
struct TheoremSchedule {
    double Lambda;
    double l;
    double rho;
    double mu;
    double varrho;
    double D2;
};

/// Explicit per-iteration list; indices past the end reuse the last value.
struct CustomAlpha {
    std::vector<double> values;
};

using AlphaPolicy = std::variant<ConstantAlpha, TheoremSchedule, CustomAlpha>;

/// Multiplier realizing the strict inequalities of the step-size bound.
inline constexpr double kStepSafetyFactor = 0.99;

/// Validated step-size policy. Parameter errors surface at construction.
class StepSizeSchedule {
   public:
    StepSizeSchedule(AlphaPolicy policy);  // NOLINT(google-explicit-constructor)

    template <class Policy>
        requires std::constructible_from<AlphaPolicy, Policy>
    StepSizeSchedule(Policy policy)  // NOLINT(google-explicit-constructor)
        : StepSizeSchedule(AlphaPolicy(std::move(policy))) {}

    double operator()(int i) const;
    const AlphaPolicy& policy() const { return policy_; }

   private:
    AlphaPolicy policy_;
};

double step_size(int i, const StepSizeSchedule& schedule);

struct IpgConfig {
    int d = 1;
    StepSizeSchedule alpha = ConstantAlpha{0.5};
    double delta_step = 1.0;
    double beta = 0.0;
    Vector w_init;
    Matrix K_init;

    /// Throws ConfigError on d < 1, beta < 0, non-finite or mis-sized initial values.
    void validate(int n) const;
};

struct IpgState {
    Vector w;
    Matrix K;
    int k = 0;
    int i = 0;
    std::optional<Vector> x_hat;
};

/// Bound on ||w|| past which an iterate is treated as divergent.
inline constexpr double kDivergenceBound = 1e12;

/**
 * One coupled IPG iteration, both updates taken from the pre-update (K, w):
 *
 *   K' = K - alpha ((H_x(w) + beta I) K - I)
 *   w' = w - delta K (H(w) - Y)
 *
 * Throws DivergenceError (located at state.k, state.i) on non-finite results
 * or ||w'|| > kDivergenceBound.
 */
IpgState ipg_inner_step(const IpgState& state, const Vector& Y, const ObservabilityWindow& window, double alpha,
                        double delta_step, double beta);

/// Same update with H(w) and H_x(w) already evaluated.
IpgState ipg_inner_step(const IpgState& state, const Vector& Y, const Vector& H_w, const Matrix& H_x, double alpha,
                        double delta_step, double beta);

/// x_hat = F^{u_{k-1}} o ... o F^{u_{k-N+1}}(w_d).
Vector propagate_estimate(const Vector& w_d, const ObservabilityWindow& window);

/// Next-instant initialization: w <- F(w, u), K unchanged, k + 1, i = 0.
IpgState advance_window(const IpgState& state, const SystemModel& system, const Vector& next_input);

/**
 * Runs the observer over a measurement sequence.
 *
 * Indexing is 0-based: measurements[j] is y_j. The first estimate is produced at
 * instant k = N-1 (the first instant with N measurements available); instant k
 * uses y_{k-N+1..k}, inputs u_{k-N+1..k-1}, and its w estimates x_{k-N+1}.
 * `inputs` may be empty for autonomous systems. When `truth` is given, the
 * truth columns of the trace are populated.
 */
ObserverRun run_ipg_observer(const SystemModel& system, int window_n, std::span<const Vector> measurements,
                             std::span<const Vector> inputs, const IpgConfig& config,
                             const Trajectory* truth = nullptr);

}  // namespace ipgobs
