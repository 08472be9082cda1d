#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "markup/control.hpp"
#include "markup/estimation.hpp"
#include "markup/types.hpp"
#include "markup/validation.hpp"

namespace markup::io {

using json = nlohmann::json;

// JSON field names follow the domain types exactly (lower_snake_case).
json to_json(const ModelParams& p);
json to_json(const JumpSpec& j);
json to_json(const SimConfig& cfg);
json to_json(const LambdaSpec& lam);
json to_json(const validation::CheckResult& r);
json to_json(const estimation::EstimateReport& report);
json to_json(const control::CalibrationResult& r);

ModelParams model_params_from_json(const json& doc);
JumpSpec jump_spec_from_json(const json& doc);
SimConfig sim_config_from_json(const json& doc);
LambdaSpec lambda_spec_from_json(const json& doc);
control::CalibrationResult calibration_from_json(const json& doc);

// One simulation config document: {"model": ..., "jumps": ..., "sim": ...,
// optional "policy": {"type": "zero"|"constant", "value": v}}.
struct SimDocument {
    ModelParams model;
    JumpSpec jumps;
    SimConfig sim;
    double constant_policy = 0.0;
};
SimDocument sim_document_from_json(const json& doc);
json to_json(const SimDocument& doc);

json load_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& doc);

// Shortest round-trip decimal text for a double (used by every CSV writer so
// outputs are byte-stable).
std::string format_double(double value);

}  // namespace markup::io
