#include "ipgobs/rate_fit.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ipgobs/errors.hpp"

namespace ipgobs {

RateFit fit_linear_rate(std::span<const double> errors, double floor) {
    std::vector<double> ks;
    std::vector<double> logs;
    for (std::size_t k = 0; k < errors.size(); ++k) {
        const double e = errors[k];
        if (!std::isfinite(e) || e < 0.0) {
            throw PreconditionError("fit_linear_rate: entry " + std::to_string(k) + " is negative or non-finite");
        }
        if (e > floor) {
            ks.push_back(static_cast<double>(k));
            logs.push_back(std::log(e));
        }
    }
    if (ks.size() < 3) {
        throw InsufficientDataError("fit_linear_rate: " + std::to_string(ks.size()) +
                                    " entries above the floor, need at least 3");
    }

    const double count = static_cast<double>(ks.size());
    double mean_k = 0.0;
    double mean_y = 0.0;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        mean_k += ks[j];
        mean_y += logs[j];
    }
    mean_k /= count;
    mean_y /= count;

    double skk = 0.0;
    double sky = 0.0;
    double syy = 0.0;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        const double dk = ks[j] - mean_k;
        const double dy = logs[j] - mean_y;
        skk += dk * dk;
        sky += dk * dy;
        syy += dy * dy;
    }
    const double slope = sky / skk;

    RateFit fit;
    fit.mu_hat = std::exp(-slope);
    fit.r_squared = syy > 0.0 ? (sky * sky) / (skk * syy) : 1.0;
    fit.used = static_cast<int>(ks.size());
    return fit;
}

}  // namespace ipgobs
