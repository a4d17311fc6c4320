#include "ipgobs/linalg.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace ipgobs::linalg {

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

double condition_number(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& s = svd.singularValues();
    const double smallest = s(s.size() - 1);
    if (smallest == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smallest;
}

EigenSummary eigen_summary(const Matrix& a) {
    Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
    const auto& ev = solver.eigenvalues();
    EigenSummary out{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), false};
    for (Eigen::Index j = 0; j < ev.size(); ++j) {
        const double re = ev(j).real();
        out.max_real = std::max(out.max_real, re);
        out.min_real = std::min(out.min_real, re);
        if (std::abs(ev(j).imag()) > 1e-12 * (1.0 + std::abs(re))) out.has_complex = true;
    }
    return out;
}

std::optional<Matrix> checked_inverse(const Matrix& a, double max_condition) {
    if (a.rows() != a.cols()) return std::nullopt;
    const double cond = condition_number(a);
    if (!std::isfinite(cond) || cond > max_condition) return std::nullopt;
    return Matrix(a.partialPivLu().inverse());
}

double contraction_factor(const Matrix& jacobian, double alpha, double beta) {
    const auto n = jacobian.rows();
    Matrix m = Matrix::Identity(n, n) - alpha * (jacobian + beta * Matrix::Identity(n, n));
    return spectral_norm(m);
}

}  // namespace ipgobs::linalg
