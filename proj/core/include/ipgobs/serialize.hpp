#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ipgobs/assumptions.hpp"
#include "ipgobs/system_model.hpp"
#include "ipgobs/trace.hpp"

namespace ipgobs {

/// CSV header of a serialized RunTrace.
inline constexpr std::string_view kTraceCsvHeader = "k,i,alpha,err_w,err_xhat,precond_residual,err_K";

/// Shortest round-trip decimal form; empty for NaN.
std::string format_double(double value);

/// One row per trace row, summary rows with i = -1, empty fields for missing values.
std::string trace_to_csv(const RunTrace& trace);

std::string trajectory_to_csv(const Trajectory& trajectory);
std::string trajectory_to_json(const Trajectory& trajectory);

std::string constants_to_json(const ConstantsReport& report);
std::string conditions_to_json(const ConditionReport& report);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ipgobs
