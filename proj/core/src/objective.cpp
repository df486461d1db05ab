#include "saptune/objective.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace saptune {

std::string_view to_string(TimingSource t) { return t == TimingSource::WallClock ? "wall" : "operations"; }

TimingSource parse_timing_source(std::string_view text) {
  if (text == "wall") return TimingSource::WallClock;
  if (text == "operations") return TimingSource::OperationCount;
  throw std::invalid_argument("unknown timing source '" + std::string(text) + "' (expected wall or operations)");
}

namespace {

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same_doubles(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_double(a[i], b[i])) return false;
  }
  return true;
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

bool EvaluationRecord::operator==(const EvaluationRecord& o) const {
  return iteration == o.iteration && role == o.role && task.same_task(o.task) && config == o.config &&
         seeds == o.seeds && same_doubles(wall_clocks, o.wall_clocks) && same_doubles(arfes, o.arfes) &&
         same_double(mean_wall_clock, o.mean_wall_clock) && same_double(mean_arfe, o.mean_arfe) &&
         failed == o.failed && same_double(objective_value, o.objective_value) && timestamp_ms == o.timestamp_ms &&
         error == o.error;
}

double compute_arfe(const DenseMatrix& A, const Vector& b, const Vector& x, const Vector& x_star) {
  const Vector Ax = A * x;
  const double denom = (Ax - b).norm();
  if (!(denom > 0.0)) throw DegenerateResidualError("ARFE undefined: ||Ax - b|| = 0");
  return (Ax - A * x_star).norm() / denom;
}

double compute_arfe(const Vector& x, const LsProblem& problem) {
  if (!problem.x_star) throw std::logic_error("compute_arfe: direct solution not cached on the problem");
  return compute_arfe(problem.A, problem.b, x, *problem.x_star);
}

EvaluationRecord evaluate(LsProblem& problem, const Configuration& config, const ConstantParams& constants,
                          double arfe_ref, std::uint64_t seed_base, const EvaluationOptions& options) {
  constants.validate();
  direct_solve(problem);

  EvaluationRecord rec;
  rec.task = describe(problem);
  rec.config = config;
  rec.timestamp_ms = now_ms();
  bool hard_failure = false;
  for (int rep = 0; rep < constants.num_repeats; ++rep) {
    const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(rep);
    rec.seeds.push_back(seed);
    SolveReport report;
    if (options.solver) {
      report = options.solver(problem, config, seed);
    } else {
      SapOptions sap;
      sap.max_iterations = options.max_iterations;
      report = solve_sap(problem, config, seed, sap);
    }
    const double seconds = options.timing == TimingSource::WallClock
                               ? report.wall_clock_seconds
                               : report.modeled_flops / options.modeled_flop_rate;
    rec.wall_clocks.push_back(seconds);
    if (report.failed()) {
      hard_failure = true;
      if (!rec.error) rec.error = report.error.value_or("solver failed");
      rec.arfes.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      try {
        report.arfe = compute_arfe(report.x, problem);
      } catch (const DegenerateResidualError& e) {
        hard_failure = true;
        if (!rec.error) rec.error = e.what();
        report.arfe = std::numeric_limits<double>::quiet_NaN();
      }
      rec.arfes.push_back(report.arfe);
    }
    if (options.on_solve) options.on_solve(config, static_cast<std::size_t>(rep), report);
  }

  rec.mean_wall_clock =
      std::accumulate(rec.wall_clocks.begin(), rec.wall_clocks.end(), 0.0) / static_cast<double>(rec.wall_clocks.size());
  double arfe_sum = 0.0;
  std::size_t arfe_count = 0;
  for (double a : rec.arfes) {
    if (std::isfinite(a)) {
      arfe_sum += a;
      ++arfe_count;
    }
  }
  rec.mean_arfe = arfe_count > 0 ? arfe_sum / static_cast<double>(arfe_count) : std::numeric_limits<double>::quiet_NaN();
  rec.failed = hard_failure || !(rec.mean_arfe <= constants.allowance_factor * arfe_ref);
  rec.objective_value = rec.failed ? constants.penalty_factor * rec.mean_wall_clock : rec.mean_wall_clock;
  return rec;
}

ReferenceResult run_reference(LsProblem& problem, const ConstantParams& constants, std::uint64_t seed_base,
                              const EvaluationOptions& options) {
  // A consistent system makes ARFE undefined; surface that before running anything.
  const Vector& x_star = direct_solve(problem);
  const double residual = (problem.A * x_star - problem.b).norm();
  const double scale = problem.A.norm() * x_star.norm() + problem.b.norm();
  if (!(residual > 64.0 * std::numeric_limits<double>::epsilon() * scale)) {
    throw DegenerateResidualError("reference run: problem is consistent, ARFE denominator vanishes");
  }
  EvaluationRecord rec = evaluate(problem, constants.ref_config, constants,
                                  std::numeric_limits<double>::infinity(), seed_base, options);
  if (rec.error || !std::isfinite(rec.mean_arfe)) {
    throw ReferenceFailure("reference configuration " + to_string(constants.ref_config) +
                           " failed: " + rec.error.value_or("non-finite ARFE"));
  }
  rec.role = "reference";
  ReferenceResult out;
  out.arfe_ref = std::max(rec.mean_arfe, std::numeric_limits<double>::epsilon());
  out.wall_clock_ref = rec.mean_wall_clock;
  out.record = std::move(rec);
  return out;
}

}  // namespace saptune
