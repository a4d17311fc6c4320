#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ipgobs/types.hpp"

namespace ipgobs {

using DynamicsFn = std::function<Vector(const Vector& x, const Vector& u)>;
using OutputFn = std::function<Vector(const Vector& x)>;
using DynamicsJacobianFn = std::function<Matrix(const Vector& x, const Vector& u)>;
using OutputJacobianFn = std::function<Matrix(const Vector& x)>;
using VectorFn = std::function<Vector(const Vector& x)>;

/**
 * Discrete-time system x_{k+1} = F(x_k, u_k), y_k = h(x_k).
 *
 * Immutable after construction. An autonomous system has m = 0 and is driven
 * with zero-length input vectors. Analytic Jacobians are optional; when one is
 * missing, the corresponding accessor falls back to central differences.
 */
class SystemModel {
   public:
    SystemModel(std::string name, int n, int m, int p, DynamicsFn dynamics, OutputFn output,
                DynamicsJacobianFn dynamics_jacobian = {}, OutputJacobianFn output_jacobian = {});

    const std::string& name() const { return name_; }
    int n() const { return n_; }
    int m() const { return m_; }
    int p() const { return p_; }
    bool autonomous() const { return m_ == 0; }

    bool has_dynamics_jacobian() const { return static_cast<bool>(dynamics_jacobian_); }
    bool has_output_jacobian() const { return static_cast<bool>(output_jacobian_); }

    /// F(x, u) with dimension checks on arguments and result.
    Vector step(const Vector& x, const Vector& u) const;
    /// F(x) for an autonomous system.
    Vector step(const Vector& x) const;
    /// h(x) with dimension checks.
    Vector measure(const Vector& x) const;

    /// dF/dx, analytic when supplied, central difference otherwise.
    Matrix dynamics_jacobian(const Vector& x, const Vector& u) const;
    /// dh/dx, analytic when supplied, central difference otherwise.
    Matrix output_jacobian(const Vector& x) const;

    /// Zero-length input for autonomous systems; throws otherwise.
    Vector no_input() const;

   private:
    void check_state(const Vector& x, const char* where) const;
    void check_input(const Vector& u, const char* where) const;

    std::string name_;
    int n_;
    int m_;
    int p_;
    DynamicsFn dynamics_;
    OutputFn output_;
    DynamicsJacobianFn dynamics_jacobian_;
    OutputJacobianFn output_jacobian_;
};

/// Step used by the finite-difference fallback: 1e-5 * (1 + ||x||_inf).
double default_fd_step(const Vector& x);

/// Central-difference Jacobian; column j is (f(x + h e_j) - f(x - h e_j)) / (2h).
Matrix fd_jacobian(const VectorFn& f, const Vector& x, double h);

struct Trajectory {
    std::vector<Vector> states;
    std::vector<Vector> inputs;
    std::vector<Vector> outputs;

    std::size_t size() const { return states.size(); }
};

/// Simulates `steps` transitions from x0. `inputs` may be empty for autonomous systems.
Trajectory simulate(const SystemModel& system, const Vector& x0, std::span<const Vector> inputs,
                    int steps);

/// Stacks measurements oldest-first into one vector.
Vector stack_measurements(std::span<const Vector> outputs);

enum class JacobianSource { chain_rule, finite_difference };

/**
 * Observability map over a window of N measurements:
 *
 *   H(x) = [ h(x); h(F^{u_0}(x)); ...; h(F^{u_{N-2}} o ... o F^{u_0}(x)) ]
 *
 * `inputs` holds the N-1 inputs oldest-first (empty for autonomous systems).
 * Only square maps (n = N p) are accepted.
 *
 * The window keeps a non-owning reference to `system`; the system must outlive it.
 */
class ObservabilityWindow {
   public:
    ObservabilityWindow(const SystemModel& system, int window_n, std::vector<Vector> inputs = {});

    const SystemModel& system() const { return *system_; }
    int window_n() const { return window_n_; }
    int n() const { return system_->n(); }
    int stacked_dim() const { return window_n_ * system_->p(); }
    const std::vector<Vector>& inputs() const { return inputs_; }
    JacobianSource jacobian_source() const;

    Vector evaluate(const Vector& x) const;
    Matrix jacobian(const Vector& x) const;
    /// Forward propagation through all N-1 inputs (identity for N = 1).
    Vector propagate(const Vector& x) const;

   private:
    const SystemModel* system_;
    int window_n_;
    std::vector<Vector> inputs_;
};

}  // namespace ipgobs
