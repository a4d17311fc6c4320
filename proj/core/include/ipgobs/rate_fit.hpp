#pragma once

#include <span>

namespace ipgobs {

inline constexpr double kRateFitFloor = 1e-12;

struct RateFit {
    double mu_hat = 1.0;     // exp(-slope) of log(error) against k
    double r_squared = 1.0;  // 1 when the log-errors are constant
    int used = 0;            // entries above the floor
};

/**
 * Least-squares fit of log(errors[k]) = b + s k over entries above `floor`
 * (k is the original index), mu_hat = exp(-s).
 *
 * Throws PreconditionError on negative or non-finite entries and
 * InsufficientDataError when fewer than 3 entries are above the floor.
 */
RateFit fit_linear_rate(std::span<const double> errors, double floor = kRateFitFloor);

}  // namespace ipgobs
