#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ipgobs/assumptions.hpp"
#include "ipgobs/builtin_systems.hpp"
#include "ipgobs/ipg.hpp"
#include "ipgobs/newton.hpp"
#include "ipgobs/rate_fit.hpp"

namespace ipgobs {

enum class ObserverKind { ipg, ipg_beta, newton };

enum class AlphaPolicyKind {
    constant,         // alpha = value
    lambda_fraction,  // alpha = value / (Lambda + beta), Lambda from the constants report
    theorem,          // TheoremSchedule with Lambda + beta and l from the constants report
    custom,           // explicit list
};

struct AlphaSpec {
    AlphaPolicyKind policy = AlphaPolicyKind::constant;
    double value = 0.5;
    std::vector<double> values;
    std::optional<double> rho;
    std::optional<double> mu;
    std::optional<double> varrho;
    std::optional<double> D2;
};

enum class KInitKind { scaled_identity, matrix, inverse_jacobian };

struct KInitSpec {
    KInitKind kind = KInitKind::scaled_identity;
    double scale = 1.0;
    Matrix matrix;
};

/// Absolute initial estimate when `value` is set, otherwise truth_x0 + offset.
struct WInitSpec {
    std::optional<Vector> value;
    Vector offset;
};

struct ObserverSpec {
    ObserverKind kind = ObserverKind::ipg;
    int d = 1;
    AlphaSpec alpha;
    double delta_step = 1.0;
    std::optional<double> beta;  // ipg_beta default: beta_required from the constants report
    WInitSpec w_init;
    KInitSpec K_init;
    double damping = 1.0;  // newton only
};

/// Theorem-audit parameters; unset values are derived from the run.
struct AuditSpec {
    std::optional<double> mu;
    std::optional<double> varrho;
    std::optional<double> D2;
    std::optional<double> delta_bar;  // audit verb only: second pass of the two-pass workflow
    double beta_margin = kDefaultBetaMargin;
};

struct ExperimentConfig {
    std::string system_id;
    SystemParams system_params;
    std::optional<int> window_n;
    Region region;
    int horizon = 0;
    Vector truth_x0;
    ObserverSpec observer;
    AuditSpec audit;
    std::string outputs;
    std::vector<std::string> formats{"csv", "json"};
    std::uint64_t seed = 0;

    bool wants(std::string_view format) const;
};

/**
 * Parses a JSON experiment document. Every object is closed: unknown keys are
 * ConfigErrors. A top-level "sweep" object is accepted and ignored here.
 */
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct SweepPoint {
    std::string label;  // e.g. "observer.d=2,observer.alpha.value=0.1"
    ExperimentConfig config;
};

/**
 * Cartesian product over the "sweep" object, which maps JSON pointers
 * (e.g. "/observer/d") to arrays of values. Without a sweep object the result
 * is the single base configuration.
 */
std::vector<SweepPoint> expand_sweep(std::string_view json_text);

/// Applies --seed: sets the top-level seed and the region seed.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

struct VerdictEntry {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ExperimentResult {
    std::string system_id;
    ObserverKind kind = ObserverKind::ipg;
    int window_n = 1;
    Trajectory truth;
    ObserverRun run;
    ConstantsReport constants;
    double beta = 0.0;
    std::vector<double> alphas;  // alpha^(0..d-1) as used
    double delta = 0.0;
    std::optional<RhoMeasurement> rho;
    std::optional<ConditionReport> conditions;
    std::optional<RateFit> fit;
    std::string fit_note;
    std::vector<VerdictEntry> verdicts;

    bool all_pass() const;
    std::optional<double> fitted_mu() const;
};

/// Truth trajectory of horizon instants (horizon - 1 transitions).
Trajectory simulate_truth(const ExperimentConfig& config);

/**
 * Simulates truth, runs the selected observer, estimates constants, audits the
 * theorem conditions, fits the rate and computes verdicts. Artifacts are
 * written to config.outputs when it is non-empty, including after divergence.
 */
ExperimentResult run_experiment(const ExperimentConfig& config);

struct AuditResult {
    ConstantsReport constants;
    ConditionReport conditions;
    double rho_prior = 0.0;
    double beta = 0.0;
};

/// Constants and a priori condition report without running the observer.
AuditResult audit_experiment(const ExperimentConfig& config);

/// Writes trace.csv / result.json per config.formats into `dir`.
void write_result_artifacts(const ExperimentResult& result, const ExperimentConfig& config,
                            const std::filesystem::path& dir);

struct ReportSummary {
    std::string json;
    std::size_t runs = 0;
    std::size_t passing = 0;
};

/// Aggregates every result.json below `dir` (sorted by path).
ReportSummary aggregate_results(const std::filesystem::path& dir);

const char* to_string(ObserverKind kind);

}  // namespace ipgobs
