#include "json_codec.hpp"

#include <cmath>
#include <limits>

namespace saptune::detail {
namespace {

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

template <typename T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : it->template get<T>();
}

}  // namespace

ordered_json to_json(const Configuration& c) {
  ordered_json j;
  j["sap_algorithm"] = std::string(to_string(c.sap_algorithm));
  j["sketching_operator"] = std::string(to_string(c.sketching_operator));
  j["sampling_factor"] = c.sampling_factor;
  j["vec_nnz"] = c.vec_nnz;
  j["safety_factor"] = c.safety_factor;
  return j;
}

Configuration configuration_from_json(const nlohmann::json& j) {
  Configuration c;
  if (j.is_array()) {
    // Compact list form: [algorithm, operator, sampling_factor, vec_nnz, safety_factor].
    if (j.size() != 5) throw std::invalid_argument("configuration list must have 5 entries");
    c.sap_algorithm = parse_sap_algorithm(j[0].get<std::string>());
    c.sketching_operator = parse_sketch_kind(j[1].get<std::string>());
    c.sampling_factor = j[2].get<double>();
    c.vec_nnz = j[3].get<int>();
    c.safety_factor = j[4].get<int>();
    return c;
  }
  c.sap_algorithm = parse_sap_algorithm(j.at("sap_algorithm").get<std::string>());
  c.sketching_operator = parse_sketch_kind(j.at("sketching_operator").get<std::string>());
  c.sampling_factor = j.at("sampling_factor").get<double>();
  c.vec_nnz = j.at("vec_nnz").get<int>();
  c.safety_factor = j.at("safety_factor").get<int>();
  return c;
}

ordered_json to_json(const TuningSpace& s) {
  ordered_json j;
  auto algs = ordered_json::array();
  for (auto a : s.sap_algorithms) algs.push_back(std::string(to_string(a)));
  auto ops = ordered_json::array();
  for (auto o : s.sketching_operators) ops.push_back(std::string(to_string(o)));
  j["sap_algorithm"] = algs;
  j["sketching_operator"] = ops;
  j["sampling_factor"] = {s.sampling_factor_min, s.sampling_factor_max};
  j["vec_nnz"] = {s.vec_nnz_min, s.vec_nnz_max};
  j["safety_factor"] = {s.safety_factor_min, s.safety_factor_max};
  return j;
}

TuningSpace tuning_space_from_json(const nlohmann::json& j) {
  TuningSpace s;
  if (j.contains("sap_algorithm")) {
    s.sap_algorithms.clear();
    for (const auto& a : j["sap_algorithm"]) s.sap_algorithms.push_back(parse_sap_algorithm(a.get<std::string>()));
  }
  if (j.contains("sketching_operator")) {
    s.sketching_operators.clear();
    for (const auto& o : j["sketching_operator"]) s.sketching_operators.push_back(parse_sketch_kind(o.get<std::string>()));
  }
  auto bounds = [&](const char* key, auto& lo, auto& hi) {
    if (!j.contains(key)) return;
    const auto& b = j[key];
    if (!b.is_array() || b.size() != 2) throw std::invalid_argument(std::string(key) + " bounds must be [min, max]");
    b[0].get_to(lo);
    b[1].get_to(hi);
  };
  bounds("sampling_factor", s.sampling_factor_min, s.sampling_factor_max);
  bounds("vec_nnz", s.vec_nnz_min, s.vec_nnz_max);
  bounds("safety_factor", s.safety_factor_min, s.safety_factor_max);
  s.validate();
  return s;
}

ordered_json to_json(const ConstantParams& c) {
  ordered_json j;
  j["num_pilots"] = c.num_pilots;
  j["num_repeats"] = c.num_repeats;
  const auto& r = c.ref_config;
  j["ref_config"] = {std::string(to_string(r.sap_algorithm)), std::string(to_string(r.sketching_operator)),
                     r.sampling_factor, r.vec_nnz, r.safety_factor};
  j["penalty_factor"] = c.penalty_factor;
  j["allowance_factor"] = c.allowance_factor;
  return j;
}

ConstantParams constants_from_json(const nlohmann::json& j) {
  ConstantParams c;
  c.num_pilots = value_or(j, "num_pilots", c.num_pilots);
  c.num_repeats = value_or(j, "num_repeats", c.num_repeats);
  if (j.contains("ref_config")) c.ref_config = configuration_from_json(j["ref_config"]);
  c.penalty_factor = value_or(j, "penalty_factor", c.penalty_factor);
  c.allowance_factor = value_or(j, "allowance_factor", c.allowance_factor);
  c.validate();
  return c;
}

ordered_json to_json(const TuningDescription& d) {
  ordered_json j;
  j["space"] = to_json(d.space);
  j["constants"] = to_json(d.constants);
  return j;
}

TuningDescription tuning_description_from_json(const nlohmann::json& j) {
  TuningDescription d;
  if (j.contains("space")) d.space = tuning_space_from_json(j["space"]);
  if (j.contains("constants")) d.constants = constants_from_json(j["constants"]);
  return d;
}

ordered_json to_json(const TaskDescriptor& t) {
  ordered_json j;
  j["label"] = t.label;
  j["m"] = t.m;
  j["n"] = t.n;
  j["seed"] = t.seed;
  return j;
}

TaskDescriptor task_from_json(const nlohmann::json& j) {
  TaskDescriptor t;
  t.label = j.at("label").get<std::string>();
  t.m = j.at("m").get<std::size_t>();
  t.n = j.at("n").get<std::size_t>();
  t.seed = value_or<std::uint64_t>(j, "seed", 0);
  return t;
}

ordered_json to_json(const EvaluationRecord& r) {
  ordered_json j;
  j["iteration"] = r.iteration;
  j["role"] = r.role;
  j["task"] = to_json(r.task);
  j["config"] = to_json(r.config);
  j["seeds"] = r.seeds;
  auto wc = ordered_json::array();
  for (double v : r.wall_clocks) wc.push_back(number_or_null(v));
  auto ar = ordered_json::array();
  for (double v : r.arfes) ar.push_back(number_or_null(v));
  j["wall_clocks"] = wc;
  j["arfes"] = ar;
  j["mean_wall_clock"] = number_or_null(r.mean_wall_clock);
  j["mean_arfe"] = number_or_null(r.mean_arfe);
  j["failed"] = r.failed;
  j["objective_value"] = number_or_null(r.objective_value);
  j["timestamp_ms"] = r.timestamp_ms;
  j["error"] = r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr);
  return j;
}

EvaluationRecord record_from_json(const nlohmann::json& j) {
  EvaluationRecord r;
  r.iteration = value_or<std::size_t>(j, "iteration", 0);
  r.role = value_or<std::string>(j, "role", "");
  r.task = task_from_json(j.at("task"));
  r.config = configuration_from_json(j.at("config"));
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  for (const auto& v : j.at("wall_clocks")) r.wall_clocks.push_back(number_from(v));
  for (const auto& v : j.at("arfes")) r.arfes.push_back(number_from(v));
  r.mean_wall_clock = number_from(j.at("mean_wall_clock"));
  r.mean_arfe = number_from(j.at("mean_arfe"));
  r.failed = j.at("failed").get<bool>();
  r.objective_value = number_from(j.at("objective_value"));
  r.timestamp_ms = value_or<std::int64_t>(j, "timestamp_ms", 0);
  if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
  return r;
}

}  // namespace saptune::detail
