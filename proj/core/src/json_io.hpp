#pragma once

// nlohmann/json builders shared by serialize.cpp and experiment.cpp.

#include <optional>

#include "ipgobs/assumptions.hpp"
#include "ipgobs/system_model.hpp"
#include "json.hpp"

namespace ipgobs::detail {

using ordered_json = nlohmann::ordered_json;

/// Finite doubles as numbers, NaN/Inf as null.
ordered_json number(double v);
ordered_json number(const std::optional<double>& v);
ordered_json vector_json(const Vector& v);
ordered_json matrix_json(const Matrix& m);

ordered_json constants_json(const ConstantsReport& report);
ordered_json conditions_json(const ConditionReport& report);
ordered_json rho_json(const RhoMeasurement& rho);

}  // namespace ipgobs::detail
