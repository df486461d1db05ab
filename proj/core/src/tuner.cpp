#include "saptune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <stdexcept>

namespace saptune {

bool TunerState::evaluated(const Configuration& config) const {
  return std::any_of(history.begin(), history.end(), [&](const EvaluationRecord& r) { return r.config == config; });
}

const EvaluationRecord& best_record(const std::vector<EvaluationRecord>& records) {
  if (records.empty()) throw std::invalid_argument("best_record: no records");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i];
    const auto& b = records[best];
    if (a.failed != b.failed ? !a.failed : a.objective_value < b.objective_value) best = i;
  }
  return records[best];
}

double evaluation_seconds(const EvaluationRecord& record) {
  return std::accumulate(record.wall_clocks.begin(), record.wall_clocks.end(), 0.0);
}

GpModel fit_history(const TuningSpace& space, const std::vector<EvaluationRecord>& records,
                    const GpFitOptions& options) {
  std::vector<const EvaluationRecord*> usable;
  for (const auto& r : records) {
    if (space.contains(r.config) && r.objective_value > 0.0 && std::isfinite(r.objective_value)) usable.push_back(&r);
  }
  if (usable.empty()) throw std::invalid_argument("fit_history: no usable records");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(usable.size()), static_cast<Eigen::Index>(TuningSpace::kDimensions));
  Vector y(X.rows());
  for (std::size_t i = 0; i < usable.size(); ++i) {
    const UnitPoint u = encode(space, usable[i]->config);
    for (std::size_t d = 0; d < u.size(); ++d) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = u[d];
    y(static_cast<Eigen::Index>(i)) = std::log(usable[i]->objective_value);
  }
  return gp_fit(X, y, options);
}

Configuration acquire(const GpModel& model, const TuningSpace& space, Rng& rng,
                      const std::vector<Configuration>& exclude, double incumbent,
                      const AcquisitionOptions& options) {
  if (model.dim() != TuningSpace::kDimensions) throw std::invalid_argument("acquire: model dimension mismatch");
  if (std::isnan(incumbent)) {
    incumbent = model.predict_mean(model.inputs()).minCoeff();
  }
  auto to_unit = [](std::span<const double> p) {
    UnitPoint u{};
    std::copy(p.begin(), p.end(), u.begin());
    return u;
  };
  const SnapFunction snap_fn = [&](std::span<const double> p) {
    const UnitPoint u = snap(space, to_unit(p));
    return std::vector<double>(u.begin(), u.end());
  };
  const ExcludeFunction excluded = [&](std::span<const double> p) {
    const Configuration c = decode(space, to_unit(p));
    return std::find(exclude.begin(), exclude.end(), c) != exclude.end();
  };
  const PredictFunction predict = [&](std::span<const double> p) { return model.predict(p); };
  const AcquisitionResult result = maximize_expected_improvement(predict, snap_fn, TuningSpace::kDimensions,
                                                                 incumbent, rng, excluded, options);
  return decode(space, to_unit(result.point));
}

namespace {

struct Session {
  LsProblem& problem;
  TunerState state;
  const TunerOptions& options;

  void record(EvaluationRecord rec, std::string role) {
    rec.iteration = state.history.size() + 1;
    rec.role = std::move(role);
    if (options.on_record) options.on_record(rec);
    state.history.push_back(std::move(rec));
  }

  void reference() {
    ReferenceResult ref =
        run_reference(problem, state.constants, derive_seed(state.seed, Stream::Evaluation, 1), options.evaluation);
    state.arfe_ref = ref.arfe_ref;
    record(std::move(ref.record), "reference");
  }

  void evaluate_config(const Configuration& config, std::string role) {
    const std::uint64_t seed_base = derive_seed(state.seed, Stream::Evaluation, state.history.size() + 1);
    record(evaluate(problem, config, state.constants, state.arfe_ref, seed_base, options.evaluation), std::move(role));
  }

  TuningResult finish() {
    return TuningResult{best_record(state.history), std::move(state.history), state.arfe_ref};
  }
};

void check_common(const TuningSpace& space, const ConstantParams& constants, std::size_t budget) {
  space.validate();
  constants.validate();
  if (budget < 1) throw std::invalid_argument("budget must be at least 1");
}

}  // namespace

TuningResult tune(LsProblem& problem, const TuningSpace& space, const ConstantParams& constants, std::size_t budget,
                  std::uint64_t seed, const TunerOptions& options) {
  check_common(space, constants, budget);
  const auto pilots = static_cast<std::size_t>(constants.num_pilots);
  if (budget < pilots + 1) throw std::invalid_argument("tune: budget must be at least num_pilots + 1");

  Session s{problem, TunerState{space, constants, 0.0, {}, budget, seed}, options};
  s.reference();
  if (pilots > 0) {
    for (const auto& config : lhs_sample(space, pilots, seed)) s.evaluate_config(config, "pilot");
  }
  while (s.state.remaining() > 0) {
    const std::size_t iteration = s.state.history.size() + 1;
    GpFitOptions gp = options.gp;
    gp.seed = derive_seed(seed, Stream::Hyperparameters, iteration);
    const GpModel model = fit_history(space, s.state.history, gp);
    std::vector<Configuration> seen;
    for (const auto& r : s.state.history) seen.push_back(r.config);
    Rng rng = make_rng(seed, Stream::Acquisition, iteration);
    const Configuration next = acquire(model, space, rng, seen, std::nan(""), options.acquisition);
    s.evaluate_config(next, "search");
  }
  return s.finish();
}

TuningResult random_search(LsProblem& problem, const TuningSpace& space, const ConstantParams& constants,
                           std::size_t budget, std::uint64_t seed, const TunerOptions& options) {
  check_common(space, constants, budget);
  Session s{problem, TunerState{space, constants, 0.0, {}, budget, seed}, options};
  s.reference();
  if (budget > 1) {
    for (const auto& config : lhs_sample(space, budget - 1, seed)) s.evaluate_config(config, "random");
  }
  return s.finish();
}

void write_session_csv(const std::filesystem::path& path, const std::vector<EvaluationRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,sap_algorithm,sketching_operator,sampling_factor,vec_nnz,safety_factor,objective,arfe,failed,"
         "cumulative_seconds\n";
  out << std::setprecision(10);
  double cumulative = 0.0;
  for (const auto& r : records) {
    cumulative += evaluation_seconds(r);
    out << r.iteration << ',' << to_string(r.config.sap_algorithm) << ',' << to_string(r.config.sketching_operator)
        << ',' << r.config.sampling_factor << ',' << r.config.vec_nnz << ',' << r.config.safety_factor << ','
        << r.objective_value << ',' << r.mean_arfe << ',' << (r.failed ? 1 : 0) << ',' << cumulative << '\n';
  }
}

}  // namespace saptune
