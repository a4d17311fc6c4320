#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ipgobs/types.hpp"

namespace ipgobs {

/// Row index used for the per-instant summary row in a RunTrace.
inline constexpr int kSummaryRow = -1;

/**
 * One trace row. Inner rows (i >= 0) describe the iterate *entering* inner
 * iteration i together with the step size used there; the summary row
 * (i = kSummaryRow) describes the final iterate of the instant.
 *
 * Truth-dependent columns are empty when the run had no ground truth.
 */
struct TraceRow {
    int k = 0;
    int i = 0;
    std::optional<double> alpha;
    std::optional<double> err_w;
    std::optional<double> err_xhat;
    std::optional<double> precond_residual;
    std::optional<double> err_K;
    /// H_x(w^(i)) for inner rows of preconditioned runs; empty otherwise.
    Matrix jacobian;
};

struct RunTrace {
    int window_n = 1;
    double beta = 0.0;
    std::vector<TraceRow> rows;

    bool empty() const { return rows.empty(); }
    /// Sampling instants present, in order.
    std::vector<int> instants() const;
    /// Summary row per instant, in order.
    std::vector<const TraceRow*> summaries() const;
    /// err_xhat from the summary rows; instants without truth are skipped.
    std::vector<double> estimate_errors() const;
};

struct Estimate {
    int k;
    Vector x_hat;
};

enum class RunStatus { completed, diverged, singular_jacobian };

const char* to_string(RunStatus status);

/// Result of an observer run. A run that stops early keeps its partial trace.
struct ObserverRun {
    std::vector<Estimate> estimates;
    RunTrace trace;
    RunStatus status = RunStatus::completed;
    std::string message;
    std::optional<int> failed_k;
    std::optional<int> failed_i;

    bool completed() const { return status == RunStatus::completed; }
};

}  // namespace ipgobs
