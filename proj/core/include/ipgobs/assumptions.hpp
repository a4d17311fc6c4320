#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ipgobs/ipg.hpp"
#include "ipgobs/system_model.hpp"
#include "ipgobs/trace.hpp"

namespace ipgobs {

/// Axis-aligned box with a sampling budget.
struct Region {
    Vector lower;
    Vector upper;
    int samples = 200;
    std::uint64_t seed = 0;

    void validate(int n) const;
};

struct RegionSamples {
    std::vector<Vector> points;  // random draws first, then grid points
    std::size_t random_count = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // all random pairs + grid nearest neighbours
};

/**
 * Deterministic sample set for `region`. The random draws for budget s are a
 * prefix of those for any larger budget, and the grid does not depend on the
 * budget, so estimates over a larger budget are maxima over a superset.
 */
RegionSamples sample_region(const Region& region);

/**
 * Sampled estimates of the Lipschitz and eigenvalue constants over a region.
 * L, l, gamma, L2 and eta are lower bounds of the true suprema.
 */
struct ConstantsReport {
    double L = 0.0;           // Lipschitz constant of F
    double l = 0.0;           // Lipschitz constant of H
    double gamma = 0.0;       // Lipschitz constant of H_x
    double Lambda = 0.0;      // max real part of eig(H_x)
    double lambda_min = 0.0;  // min real part of eig(H_x)
    double eta = 0.0;         // max ||H_x(F(x))^{-1}||
    double L2 = 0.0;          // Lipschitz constant of H_x^{-1}
    std::vector<double> C_seq;
    std::string method = "sampled lower bounds";

    std::size_t points_evaluated = 0;
    std::size_t pairs_evaluated = 0;
    std::size_t singular_samples = 0;
    bool inverse_constants_reliable = true;  // false when any sample had a singular H_x
    bool observability_rank_ok = true;       // invertible, well-conditioned H_x at every sample
    bool complex_eigenvalues = false;        // positivity was judged on real parts only
    bool eigenvalues_positive = true;        // lambda_min > 0 over the region
    std::optional<double> beta_required;     // max(0, -lambda_min) + margin when lambda_min <= 0
};

inline constexpr double kDefaultBetaMargin = 0.1;

/**
 * Estimates the constants for `window` over `region`. F is taken with the
 * window's first input (zero input when the window carries none). When
 * `reference` is given, C_seq[k] = ||x_k - x_{k+1}|| along it.
 */
ConstantsReport estimate_constants(const ObservabilityWindow& window, const Region& region,
                                   const Trajectory* reference = nullptr, double beta_margin = kDefaultBetaMargin);

struct RhoMeasurement {
    double rho_N = 0.0;  // sup over the first instant
    double rho = 0.0;    // sup over all instants
    bool contraction_holds = false;
    std::size_t samples = 0;
};

/// rho_N and rho from the Jacobians and step sizes recorded in an IPG trace.
RhoMeasurement measure_rho(const RunTrace& trace);

/// A priori rho: max over region samples and the given step sizes of ||I - alpha (H_x + beta I)||.
double prior_rho(const ObservabilityWindow& window, const Region& region, std::span<const double> alphas,
                 double beta = 0.0);

enum class Verdict { pass, fail, failed_precondition, unauditable };

const char* to_string(Verdict v);

struct ConditionEntry {
    std::string id;
    std::string inequality;
    double lhs = 0.0;
    double rhs = 0.0;
    Verdict verdict = Verdict::unauditable;
    std::string note;
};

/// Inputs to the theorem audit beyond the sampled constants.
struct TheoremInputs {
    int d = 1;
    int window_n = 1;
    std::vector<double> alphas;          // alpha^(0..d-1)
    std::optional<double> K0_error;      // ||K_N^(0) - H_x(x_1)^{-1}||; absent without truth
    double rho = 0.0;
    double rho_N = 0.0;
    double delta = 0.0;                  // ||w_N^(0) - x_1||
    std::optional<double> delta_bar;     // ||w_N^(d) - x_1||; absent before a run
    double mu = 1.0;
    double varrho = 0.0;
    double D2 = 0.0;
};

struct ConditionReport {
    std::vector<ConditionEntry> preconditions;
    std::vector<ConditionEntry> conditions;  // (i) .. (v) in order

    double delta = 0.0;
    std::optional<double> delta_bar;
    double rho = 0.0;
    double rho_N = 0.0;
    double mu = 1.0;
    double mu_upper = 0.0;  // 1/rho
    double varrho = 0.0;
    double D2 = 0.0;
    double D2_upper = 0.0;  // eta gamma (1 - L delta_bar/delta) / (2 l)
    double D1_bound = 0.0;  // (eta gamma / 2) varrho
    double d_min = 1.0;
    int d_required = 1;

    const ConditionEntry& condition(const std::string& id) const;
    bool all_pass() const;
};

/// Evaluates the theorem's sufficient conditions (i)-(v) verbatim. Never throws on violated preconditions.
ConditionReport check_theorem_conditions(const ConstantsReport& constants, const TheoremInputs& inputs);

/// Convenience overload drawing d and the step sizes from an IPG configuration.
ConditionReport check_theorem_conditions(const ConstantsReport& constants, const IpgConfig& config, int window_n,
                                         TheoremInputs inputs);

/// ||K0 - H_x(x1)^{-1}||, or nullopt when H_x(x1) is singular.
std::optional<double> initial_preconditioner_error(const ObservabilityWindow& window, const Vector& x1,
                                                   const Matrix& K0);

}  // namespace ipgobs
