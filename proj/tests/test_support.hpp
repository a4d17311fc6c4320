#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "ipgobs/system_model.hpp"

namespace ipgobs::testing {

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index j = 0;
    for (double x : v) out(j++) = x;
    return out;
}

inline Vector scalar(double x) { return vec({x}); }

// Scalar autonomous system F(x) = a x with a user-supplied output map.
template <class H, class Hx>
SystemModel scalar_system(double a, H h, Hx hx, bool analytic = true) {
    auto F = [a](const Vector& x, const Vector&) { return Vector(a * x); };
    auto Fx = [a](const Vector&, const Vector&) { return Matrix::Constant(1, 1, a); };
    auto out = [h](const Vector& x) { return scalar(h(x(0))); };
    auto out_jac = [hx](const Vector& x) { return Matrix::Constant(1, 1, hx(x(0))); };
    if (!analytic) return SystemModel("scalar_custom", 1, 0, 1, F, out);
    return SystemModel("scalar_custom", 1, 0, 1, F, out, Fx, out_jac);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace ipgobs::testing
