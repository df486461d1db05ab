#pragma once

// nlohmann/json conversions shared by the file formats. Not installed.

#include <json.hpp>

#include "saptune/objective.hpp"
#include "saptune/paramspace.hpp"

namespace saptune::detail {

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const Configuration& c);
Configuration configuration_from_json(const nlohmann::json& j);

ordered_json to_json(const TuningSpace& s);
TuningSpace tuning_space_from_json(const nlohmann::json& j);

ordered_json to_json(const ConstantParams& c);
ConstantParams constants_from_json(const nlohmann::json& j);

ordered_json to_json(const TuningDescription& d);
TuningDescription tuning_description_from_json(const nlohmann::json& j);

ordered_json to_json(const TaskDescriptor& t);
TaskDescriptor task_from_json(const nlohmann::json& j);

ordered_json to_json(const EvaluationRecord& r);
EvaluationRecord record_from_json(const nlohmann::json& j);

}  // namespace saptune::detail
