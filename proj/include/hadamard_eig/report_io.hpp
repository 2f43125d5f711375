#pragma once

#include "hadamard_eig/hadamard.hpp"
#include "hadamard_eig/oracle.hpp"
#include "hadamard_eig/rearrange.hpp"

#include <json.hpp>

#include <string>

namespace hadamard_eig {

/// {"t", "eigenvalues", "clusters":[{"k","m","lambda","nu","subclusters":[{"l","r",
/// "lambda_prime","sigma"}]}], "tolerances"}. Subcluster r is exclusive.
nlohmann::json report_to_json(const SensitivityReport& report);

/// {"events":[{"node","t","k","n","p"}], "interval_perms":[[...]]}; t taken from `ts`.
nlohmann::json plan_to_json(const RearrangementPlan& plan, const std::vector<double>& ts);

/// Dense row-major arrays for the six coefficient matrices plus seed, plan and interval.
nlohmann::json pencil_to_json(const PencilFamily& pencil);
/// Throws ValidationError on malformed input or a pencil that fails validate_pencil.
PencilFamily pencil_from_json(const nlohmann::json& j);

/// Writes `text` to `path` via a temporary sibling file and rename.
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace hadamard_eig
