#include "ipgobs/system_model.hpp"

#include <cmath>
#include <sstream>

#include "ipgobs/errors.hpp"

namespace ipgobs {

namespace {

std::string dims_message(const char* where, const char* what, Eigen::Index got, int want) {
    std::ostringstream os;
    os << where << ": " << what << " has length " << got << ", expected " << want;
    return os.str();
}

}  // namespace

SystemModel::SystemModel(std::string name, int n, int m, int p, DynamicsFn dynamics, OutputFn output,
                         DynamicsJacobianFn dynamics_jacobian, OutputJacobianFn output_jacobian)
    : name_(std::move(name)),
      n_(n),
      m_(m),
      p_(p),
      dynamics_(std::move(dynamics)),
      output_(std::move(output)),
      dynamics_jacobian_(std::move(dynamics_jacobian)),
      output_jacobian_(std::move(output_jacobian)) {
    if (n_ <= 0 || p_ <= 0 || m_ < 0) {
        throw DimensionError("SystemModel '" + name_ + "': need n > 0, p > 0, m >= 0");
    }
    if (!dynamics_ || !output_) {
        throw ConfigError("SystemModel '" + name_ + "': dynamics and output functions are required");
    }
}

void SystemModel::check_state(const Vector& x, const char* where) const {
    if (x.size() != n_) throw DimensionError(dims_message(where, "state", x.size(), n_));
}

void SystemModel::check_input(const Vector& u, const char* where) const {
    if (u.size() != m_) throw DimensionError(dims_message(where, "input", u.size(), m_));
}

Vector SystemModel::step(const Vector& x, const Vector& u) const {
    check_state(x, "SystemModel::step");
    check_input(u, "SystemModel::step");
    Vector next = dynamics_(x, u);
    if (next.size() != n_) throw DimensionError(dims_message("dynamics", "result", next.size(), n_));
    return next;
}

Vector SystemModel::step(const Vector& x) const { return step(x, no_input()); }

Vector SystemModel::measure(const Vector& x) const {
    check_state(x, "SystemModel::measure");
    Vector y = output_(x);
    if (y.size() != p_) throw DimensionError(dims_message("output", "result", y.size(), p_));
    return y;
}

Matrix SystemModel::dynamics_jacobian(const Vector& x, const Vector& u) const {
    check_state(x, "SystemModel::dynamics_jacobian");
    check_input(u, "SystemModel::dynamics_jacobian");
    if (dynamics_jacobian_) {
        Matrix J = dynamics_jacobian_(x, u);
        if (J.rows() != n_ || J.cols() != n_) {
            throw DimensionError("dynamics_jacobian of '" + name_ + "' must be n x n");
        }
        return J;
    }
    return fd_jacobian([&](const Vector& z) { return step(z, u); }, x, default_fd_step(x));
}

Matrix SystemModel::output_jacobian(const Vector& x) const {
    check_state(x, "SystemModel::output_jacobian");
    if (output_jacobian_) {
        Matrix J = output_jacobian_(x);
        if (J.rows() != p_ || J.cols() != n_) {
            throw DimensionError("output_jacobian of '" + name_ + "' must be p x n");
        }
        return J;
    }
    return fd_jacobian([&](const Vector& z) { return measure(z); }, x, default_fd_step(x));
}

Vector SystemModel::no_input() const {
    if (m_ != 0) throw DimensionError("system '" + name_ + "' requires inputs of length " + std::to_string(m_));
    return Vector(0);
}

double default_fd_step(const Vector& x) {
    const double scale = x.size() > 0 ? x.cwiseAbs().maxCoeff() : 0.0;
    return 1e-5 * (1.0 + scale);
}

Matrix fd_jacobian(const VectorFn& f, const Vector& x, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw PreconditionError("fd_jacobian: step must be positive and finite");
    Matrix J;
    Vector xp = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        xp(j) = x(j) + h;
        const Vector fp = f(xp);
        xp(j) = x(j) - h;
        const Vector fm = f(xp);
        xp(j) = x(j);
        if (!fp.allFinite() || !fm.allFinite()) {
            throw NumericalError("fd_jacobian: non-finite function value along coordinate " + std::to_string(j));
        }
        if (j == 0) J.resize(fp.size(), x.size());
        J.col(j) = (fp - fm) / (2.0 * h);
    }
    return J;
}

Trajectory simulate(const SystemModel& system, const Vector& x0, std::span<const Vector> inputs, int steps) {
    if (steps < 0) throw PreconditionError("simulate: steps must be non-negative");
    if (x0.size() != system.n()) throw DimensionError(dims_message("simulate", "x0", x0.size(), system.n()));
    const bool use_zero_inputs = system.autonomous() && inputs.empty();
    if (!use_zero_inputs && static_cast<int>(inputs.size()) < steps) {
        throw DimensionError("simulate: " + std::to_string(inputs.size()) + " inputs supplied for " +
                             std::to_string(steps) + " steps");
    }

    Trajectory traj;
    traj.states.reserve(steps + 1);
    traj.outputs.reserve(steps + 1);
    traj.inputs.reserve(steps);
    traj.states.push_back(x0);
    traj.outputs.push_back(system.measure(x0));
    for (int k = 0; k < steps; ++k) {
        Vector u = use_zero_inputs ? system.no_input() : inputs[k];
        traj.states.push_back(system.step(traj.states.back(), u));
        traj.outputs.push_back(system.measure(traj.states.back()));
        traj.inputs.push_back(std::move(u));
    }
    return traj;
}

Vector stack_measurements(std::span<const Vector> outputs) {
    Eigen::Index total = 0;
    for (const auto& y : outputs) total += y.size();
    Vector stacked(total);
    Eigen::Index offset = 0;
    for (const auto& y : outputs) {
        stacked.segment(offset, y.size()) = y;
        offset += y.size();
    }
    return stacked;
}

ObservabilityWindow::ObservabilityWindow(const SystemModel& system, int window_n, std::vector<Vector> inputs)
    : system_(&system), window_n_(window_n), inputs_(std::move(inputs)) {
    if (window_n_ < 1) throw ConfigError("observability window length must be >= 1");
    if (system.n() != window_n_ * system.p()) {
        throw ConfigError("unsupported: non-square observability map (n = " + std::to_string(system.n()) +
                          ", N*p = " + std::to_string(window_n_ * system.p()) + ")");
    }
    if (inputs_.empty() && system.autonomous()) {
        inputs_.assign(window_n_ - 1, Vector(0));
    }
    if (static_cast<int>(inputs_.size()) != window_n_ - 1) {
        throw DimensionError("observability window needs N-1 = " + std::to_string(window_n_ - 1) + " inputs, got " +
                             std::to_string(inputs_.size()));
    }
    for (const auto& u : inputs_) {
        if (u.size() != system.m()) throw DimensionError(dims_message("ObservabilityWindow", "input", u.size(), system.m()));
    }
}

JacobianSource ObservabilityWindow::jacobian_source() const {
    const bool need_dynamics = window_n_ > 1;
    if (system_->has_output_jacobian() && (!need_dynamics || system_->has_dynamics_jacobian())) {
        return JacobianSource::chain_rule;
    }
    return JacobianSource::finite_difference;
}

Vector ObservabilityWindow::evaluate(const Vector& x) const {
    const int p = system_->p();
    Vector stacked(stacked_dim());
    Vector xj = x;
    stacked.segment(0, p) = system_->measure(xj);
    for (int j = 1; j < window_n_; ++j) {
        xj = system_->step(xj, inputs_[j - 1]);
        stacked.segment(j * p, p) = system_->measure(xj);
    }
    return stacked;
}

Matrix ObservabilityWindow::jacobian(const Vector& x) const {
    if (jacobian_source() == JacobianSource::finite_difference) {
        return fd_jacobian([this](const Vector& z) { return evaluate(z); }, x, default_fd_step(x));
    }
    const int p = system_->p();
    Matrix J(stacked_dim(), n());
    Matrix sensitivity = Matrix::Identity(n(), n());  // d x_j / d x
    Vector xj = x;
    J.block(0, 0, p, n()) = system_->output_jacobian(xj);
    for (int j = 1; j < window_n_; ++j) {
        sensitivity = system_->dynamics_jacobian(xj, inputs_[j - 1]) * sensitivity;
        xj = system_->step(xj, inputs_[j - 1]);
        J.block(j * p, 0, p, n()) = system_->output_jacobian(xj) * sensitivity;
    }
    return J;
}

Vector ObservabilityWindow::propagate(const Vector& x) const {
    if (x.size() != n()) throw DimensionError(dims_message("propagate", "state", x.size(), n()));
    Vector xj = x;
    for (const auto& u : inputs_) xj = system_->step(xj, u);
    return xj;
}

}  // namespace ipgobs
