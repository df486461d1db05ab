#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "saptune/history.hpp"
#include "saptune/objective.hpp"

namespace saptune {

struct GridSpec {
  std::vector<SapAlgorithm> sap_algorithms{kAllSapAlgorithms.begin(), kAllSapAlgorithms.end()};
  std::vector<SketchKind> sketching_operators{kAllSketchKinds.begin(), kAllSketchKinds.end()};
  std::vector<double> sampling_factors{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> vec_nnz{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<int> safety_factors{0, 2, 4};

  /// The published sweep: 3420 configurations.
  static GridSpec full() { return {}; }
  /// Coarser vec_nnz levels {1, 2, 5, 10, 30, 100}: 1080 configurations.
  static GridSpec reduced();

  std::size_t size() const;
  /// Enumeration order: algorithm, sketch, sampling factor, vec_nnz, safety factor.
  std::vector<Configuration> configurations() const;
};

/// Best-safety summary of one (cell, sampling_factor, vec_nnz) point.
struct LandscapePoint {
  std::size_t cell = 0;
  double sampling_factor = 0.0;
  int vec_nnz = 0;
  int safety_factor = 0;
  double objective = 0.0;
  double arfe = 0.0;
  bool failed = false;
};

struct GridOptions {
  EvaluationOptions evaluation;
  /// Records from an earlier partial sweep; matching cells are not re-run.
  std::vector<EvaluationRecord> existing;
  std::function<void(const EvaluationRecord&)> on_record;
  std::function<void(const std::string&)> warn;
  /// Entries of A above which a cost warning is emitted.
  std::size_t warn_entries = 1'000'000;
};

struct GridResult {
  EvaluationRecord reference;
  double arfe_ref = 0.0;
  std::vector<EvaluationRecord> records;  // one per configuration, spec order
  EvaluationRecord best;
  std::vector<LandscapePoint> landscape;
  std::size_t evaluated = 0;  // evaluations performed by this call
};

/// Sweeps every configuration of spec. A reference record found in
/// options.existing for the same task supplies ARFE_ref; otherwise the
/// reference is run first and reported through on_record.
GridResult run_grid(LsProblem& problem, const GridSpec& spec, const ConstantParams& constants, std::uint64_t seed,
                    const GridOptions& options = {});

std::vector<LandscapePoint> landscape(const std::vector<EvaluationRecord>& records);

/// Columns: cell_id, sampling_factor, vec_nnz, objective, arfe, failed.
void write_landscape_csv(const std::filesystem::path& path, const std::vector<LandscapePoint>& points);

}  // namespace saptune
