#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <vector>

#include "saptune/objective.hpp"
#include "saptune/paramspace.hpp"
#include "saptune/surrogate.hpp"

namespace saptune {

struct TunerOptions {
  EvaluationOptions evaluation;
  GpFitOptions gp;  // the seed is replaced per iteration
  AcquisitionOptions acquisition;
  /// Called after every evaluation, e.g. to append to a history store.
  std::function<void(const EvaluationRecord&)> on_record;
};

struct TuningResult {
  EvaluationRecord best;
  std::vector<EvaluationRecord> history;
  double arfe_ref = 0.0;
};

/// Mutable state of one tuning session.
struct TunerState {
  TuningSpace space;
  ConstantParams constants;
  double arfe_ref = 0.0;
  std::vector<EvaluationRecord> history;
  std::size_t budget = 0;
  std::uint64_t seed = 0;

  std::size_t remaining() const { return budget > history.size() ? budget - history.size() : 0; }
  bool evaluated(const Configuration& config) const;
};

/// Minimal objective value among records that did not fail, or among all records
/// if every one failed. Ties go to the earliest record. Throws on empty input.
const EvaluationRecord& best_record(const std::vector<EvaluationRecord>& records);

/// GP over encoded configurations and log objective values. Records outside
/// the space are ignored.
GpModel fit_history(const TuningSpace& space, const std::vector<EvaluationRecord>& records,
                    const GpFitOptions& options = {});

/// EI maximizer over the encoded space; excluded configurations are skipped
/// when possible. A NaN incumbent uses the best training output.
Configuration acquire(const GpModel& model, const TuningSpace& space, Rng& rng,
                      const std::vector<Configuration>& exclude = {},
                      double incumbent = std::numeric_limits<double>::quiet_NaN(),
                      const AcquisitionOptions& options = {});

/// Reference, num_pilots LHS pilots, then GP-guided search until budget records exist.
TuningResult tune(LsProblem& problem, const TuningSpace& space, const ConstantParams& constants, std::size_t budget,
                  std::uint64_t seed, const TunerOptions& options = {});

/// Reference followed by budget - 1 LHS configurations.
TuningResult random_search(LsProblem& problem, const TuningSpace& space, const ConstantParams& constants,
                           std::size_t budget, std::uint64_t seed, const TunerOptions& options = {});

/// Columns: iteration, sap_algorithm, sketching_operator, sampling_factor,
/// vec_nnz, safety_factor, objective, arfe, failed, cumulative_seconds.
void write_session_csv(const std::filesystem::path& path, const std::vector<EvaluationRecord>& records);

/// Total solver seconds spent by a record across its repeats.
double evaluation_seconds(const EvaluationRecord& record);

}  // namespace saptune
