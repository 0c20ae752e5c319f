#pragma once

#include <string>

#include <json.hpp>

#include "delaylyap/system.hpp"

namespace delaylyap {

// ============================================================================
// JSON system schema:
//   { "n": 2,
//     "terms": [ { "delay": 0.0, "A": [[...],[...]] }, ... ],
//     "W": [[...],[...]] }            // optional, defaults to identity
// Matrices are arrays of rows.
// ============================================================================

/// Parse and normalize a system description. Throws IO on schema violations.
[[nodiscard]] TimeDelaySystem system_from_json(const nlohmann::json& j);

/// Read a system from a JSON file. Throws IO on unreadable files.
[[nodiscard]] TimeDelaySystem load_system(const std::string& path);

/// Serialize back to the schema above (rows of numbers, delays in order).
[[nodiscard]] nlohmann::json system_to_json(const TimeDelaySystem& sys);

/// Matrix <-> array-of-rows helpers shared by the CLI report writers.
[[nodiscard]] nlohmann::json matrix_to_json(const Matrix& m);
[[nodiscard]] Matrix matrix_from_json(const nlohmann::json& j);

} // namespace delaylyap
