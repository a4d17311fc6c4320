#pragma once

#include <optional>

#include "ipgobs/types.hpp"

namespace ipgobs::linalg {

/// Operator 2-norm (largest singular value).
double spectral_norm(const Matrix& a);

/// 2-norm condition number from the SVD; +inf for singular matrices.
double condition_number(const Matrix& a);

struct EigenSummary {
    double max_real;
    double min_real;
    bool has_complex;  // any eigenvalue with |imag| > 1e-12 * (1 + |real|)
};

/// Eigenvalues of a general (non-symmetric) square matrix, summarized by real parts.
EigenSummary eigen_summary(const Matrix& a);

/// Inverse when the 2-norm condition number is at most `max_condition`, nullopt otherwise.
std::optional<Matrix> checked_inverse(const Matrix& a, double max_condition = 1e12);

/// ||I - alpha (H + beta I)||_2: contraction factor of the preconditioner recursion.
double contraction_factor(const Matrix& jacobian, double alpha, double beta = 0.0);

}  // namespace ipgobs::linalg
