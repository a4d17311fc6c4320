#include "ipgobs/builtin_systems.hpp"

#include <cmath>
#include <set>

#include "ipgobs/errors.hpp"

namespace ipgobs {

namespace {

const std::vector<std::string>& ids() {
    static const std::vector<std::string> v{"scalar_linear", "planar_linear", "planar_mild_nonlinear", "cubic_output",
                                            "indefinite_jacobian"};
    return v;
}

SystemParams with_defaults(std::string_view id, const SystemParams& given, const SystemParams& defaults) {
    SystemParams out = defaults;
    for (const auto& [key, value] : given) {
        if (!defaults.contains(key)) {
            std::string valid;
            for (const auto& [k, v] : defaults) valid += (valid.empty() ? "" : ", ") + k;
            throw ConfigError("system '" + std::string(id) + "' has no parameter '" + key + "' (valid: " + valid + ")");
        }
        if (!std::isfinite(value)) throw ConfigError("system parameter '" + key + "' must be finite");
        out[key] = value;
    }
    return out;
}

Vector vec1(double a) { return Vector::Constant(1, a); }
Matrix mat1(double a) { return Matrix::Constant(1, 1, a); }

SystemModel planar(std::string name, double a, double eps) {
    auto F = [a, eps](const Vector& x, const Vector&) {
        Vector out(2);
        out << x(1), a * x(0) + eps * std::sin(x(0));
        return out;
    };
    auto h = [](const Vector& x) { return vec1(x(0)); };
    auto dF = [a, eps](const Vector& x, const Vector&) {
        Matrix J(2, 2);
        J << 0.0, 1.0, a + eps * std::cos(x(0)), 0.0;
        return J;
    };
    auto dh = [](const Vector&) {
        Matrix J(1, 2);
        J << 1.0, 0.0;
        return J;
    };
    return SystemModel(std::move(name), 2, 0, 1, F, h, dF, dh);
}

}  // namespace

std::vector<std::string> builtin_system_ids() { return ids(); }

bool builtin_satisfies_positive_eigenvalues(std::string_view id) { return id != "indefinite_jacobian"; }

SystemModel builtin_system(std::string_view id, const SystemParams& params) {
    if (id == "scalar_linear") {
        const double a = with_defaults(id, params, {{"a", 0.5}}).at("a");
        return SystemModel(
            "scalar_linear", 1, 0, 1, [a](const Vector& x, const Vector&) { return Vector(a * x); },
            [](const Vector& x) { return Vector(x); }, [a](const Vector&, const Vector&) { return mat1(a); },
            [](const Vector&) { return mat1(1.0); });
    }
    if (id == "planar_linear") {
        const double a = with_defaults(id, params, {{"a", 0.9}}).at("a");
        return planar("planar_linear", a, 0.0);
    }
    if (id == "planar_mild_nonlinear") {
        const auto p = with_defaults(id, params, {{"a", 0.9}, {"eps", 0.05}});
        return planar("planar_mild_nonlinear", p.at("a"), p.at("eps"));
    }
    if (id == "cubic_output") {
        const auto p = with_defaults(id, params, {{"a", 0.8}, {"c", 1.0}});
        const double a = p.at("a");
        const double c = p.at("c");
        return SystemModel(
            "cubic_output", 1, 0, 1, [a](const Vector& x, const Vector&) { return Vector(a * x); },
            [c](const Vector& x) { return vec1(x(0) + c * x(0) * x(0) * x(0)); },
            [a](const Vector&, const Vector&) { return mat1(a); },
            [c](const Vector& x) { return mat1(1.0 + 3.0 * c * x(0) * x(0)); });
    }
    if (id == "indefinite_jacobian") {
        const auto p = with_defaults(id, params, {{"a1", 0.05}, {"a2", 0.9}, {"c", 0.1}});
        const double a1 = p.at("a1");
        const double a2 = p.at("a2");
        const double c = p.at("c");
        auto F = [a1, a2](const Vector& x, const Vector&) {
            Vector out(2);
            out << a1 * x(0), a2 * x(1);
            return out;
        };
        // Gradient of phi(x) = -x1^2/2 + x2^2/2 + c x1 x2^2, so H_x is symmetric.
        auto h = [c](const Vector& x) {
            Vector out(2);
            out << -x(0) + c * x(1) * x(1), x(1) + 2.0 * c * x(0) * x(1);
            return out;
        };
        auto dF = [a1, a2](const Vector&, const Vector&) {
            Matrix J = Matrix::Zero(2, 2);
            J(0, 0) = a1;
            J(1, 1) = a2;
            return J;
        };
        auto dh = [c](const Vector& x) {
            Matrix J(2, 2);
            J << -1.0, 2.0 * c * x(1), 2.0 * c * x(1), 1.0 + 2.0 * c * x(0);
            return J;
        };
        return SystemModel("indefinite_jacobian", 2, 0, 2, F, h, dF, dh);
    }

    std::string valid;
    for (const auto& s : ids()) valid += (valid.empty() ? "" : ", ") + s;
    throw ConfigError("unknown system '" + std::string(id) + "' (valid: " + valid + ")");
}

int natural_window(const SystemModel& system) {
    if (system.n() % system.p() != 0) {
        throw ConfigError("unsupported: non-square observability map (p does not divide n)");
    }
    return system.n() / system.p();
}

}  // namespace ipgobs
