#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ipgobs/system_model.hpp"

namespace ipgobs {

using SystemParams = std::map<std::string, double>;

/**
 * Benchmark systems. All are autonomous and carry analytic Jacobians.
 *
 *   scalar_linear          F = a x, h = x                                  (a = 0.5)
 *   planar_linear          F = (x2, a x1), h = x1                          (a = 0.9)
 *   planar_mild_nonlinear  F = (x2, a x1 + eps sin x1), h = x1             (a = 0.9, eps = 0.05)
 *   cubic_output           F = a x, h = x + c x^3                          (a = 0.8, c = 1)
 *   indefinite_jacobian    F = (a1 x1, a2 x2),
 *                          h = (-x1 + c x2^2, x2 + 2 c x1 x2)              (a1 = 0.05, a2 = 0.9, c = 0.1)
 *
 * The first four have H_x with positive eigenvalues on bounded regions around
 * the origin. indefinite_jacobian has a symmetric H_x with one eigenvalue near
 * -1; its first coordinate is strongly contracted by F.
 *
 * Unknown ids or parameter names throw ConfigError.
 */
SystemModel builtin_system(std::string_view id, const SystemParams& params = {});

std::vector<std::string> builtin_system_ids();

/// Whether the built-in is constructed so that H_x has positive eigenvalues.
bool builtin_satisfies_positive_eigenvalues(std::string_view id);

/// N = n / p; throws ConfigError when p does not divide n.
int natural_window(const SystemModel& system);

}  // namespace ipgobs
