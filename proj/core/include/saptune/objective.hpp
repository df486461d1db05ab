#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "saptune/paramspace.hpp"
#include "saptune/problems.hpp"
#include "saptune/sap.hpp"

namespace saptune {

/// Which clock feeds the objective. OperationCount converts the solver's
/// modelled flop count to seconds at a fixed nominal rate, which makes whole
/// tuning sessions replayable bit-for-bit.
enum class TimingSource { WallClock, OperationCount };

std::string_view to_string(TimingSource t);
TimingSource parse_timing_source(std::string_view text);

struct EvaluationRecord {
  std::size_t iteration = 0;  // 1-based position in its session
  std::string role;           // reference, pilot, search, source-best, bandit, grid, random
  TaskDescriptor task;
  Configuration config;
  std::vector<std::uint64_t> seeds;
  std::vector<double> wall_clocks;  // per repeat
  std::vector<double> arfes;        // per repeat, NaN for a failed solve
  double mean_wall_clock = 0.0;
  double mean_arfe = 0.0;
  bool failed = false;
  double objective_value = 0.0;
  std::int64_t timestamp_ms = 0;
  std::optional<std::string> error;

  bool operator==(const EvaluationRecord&) const;
};

struct ReferenceResult {
  double arfe_ref = 0.0;
  double wall_clock_ref = 0.0;
  EvaluationRecord record;
};

/// The reference configuration could not produce a usable ARFE.
class ReferenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ||Ax - Ax_*|| / ||Ax - b||. Throws DegenerateResidualError when the
/// denominator vanishes.
double compute_arfe(const DenseMatrix& A, const Vector& b, const Vector& x, const Vector& x_star);

/// As above using the cached direct solution; throws std::logic_error if
/// problem.x_star is empty.
double compute_arfe(const Vector& x, const LsProblem& problem);

using SolveFunction = std::function<SolveReport(const LsProblem&, const Configuration&, std::uint64_t)>;

struct EvaluationOptions {
  TimingSource timing = TimingSource::WallClock;
  double modeled_flop_rate = 1e9;  // flop/s for TimingSource::OperationCount
  std::size_t max_iterations = 0;
  /// Replaces solve_sap, e.g. to inject synthetic reports.
  SolveFunction solver;
  /// Called once per repeat with the finished report (ARFE filled in).
  std::function<void(const Configuration&, std::size_t, const SolveReport&)> on_solve;
};

/// Runs the configuration num_repeats times with seeds seed_base, seed_base+1, ...
/// and applies the allowance/penalty rule. Solver failures are encoded in the record.
EvaluationRecord evaluate(LsProblem& problem, const Configuration& config, const ConstantParams& constants,
                          double arfe_ref, std::uint64_t seed_base, const EvaluationOptions& options = {});

/// Evaluates ref_config to obtain ARFE_ref. Throws ReferenceFailure on a hard
/// failure, DegenerateResidualError when the problem is consistent.
ReferenceResult run_reference(LsProblem& problem, const ConstantParams& constants, std::uint64_t seed_base,
                              const EvaluationOptions& options = {});

}  // namespace saptune
