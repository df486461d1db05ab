#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "saptune/objective.hpp"

namespace saptune {

/// Append-only log of evaluation records, one JSON object per line with a
/// fixed field order:
///   iteration, role, task{label,m,n,seed}, config{sap_algorithm,
///   sketching_operator, sampling_factor, vec_nnz, safety_factor}, seeds,
///   wall_clocks, arfes, mean_wall_clock, mean_arfe, failed, objective_value,
///   timestamp_ms, error
/// Non-finite numbers are written as null. Appends take an advisory lock.
class HistoryStore {
 public:
  explicit HistoryStore(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  void append(const EvaluationRecord& record) const;
  std::vector<EvaluationRecord> load() const;

  static std::vector<EvaluationRecord> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
};

std::string serialize_record(const EvaluationRecord& record);
EvaluationRecord parse_record(const std::string& line);

/// Key identifying a (task, configuration) pair, used to resume sweeps.
std::string record_key(const TaskDescriptor& task, const Configuration& config);

}  // namespace saptune
