#include "ipgobs/trace.hpp"

namespace ipgobs {

std::vector<int> RunTrace::instants() const {
    std::vector<int> out;
    for (const auto& row : rows) {
        if (out.empty() || out.back() != row.k) out.push_back(row.k);
    }
    return out;
}

std::vector<const TraceRow*> RunTrace::summaries() const {
    std::vector<const TraceRow*> out;
    for (const auto& row : rows) {
        if (row.i == kSummaryRow) out.push_back(&row);
    }
    return out;
}

std::vector<double> RunTrace::estimate_errors() const {
    std::vector<double> out;
    for (const auto* row : summaries()) {
        if (row->err_xhat) out.push_back(*row->err_xhat);
    }
    return out;
}

const char* to_string(RunStatus status) {
    switch (status) {
        case RunStatus::completed:
            return "completed";
        case RunStatus::diverged:
            return "diverged";
        case RunStatus::singular_jacobian:
            return "singular_jacobian";
    }
    return "unknown";
}

}  // namespace ipgobs
