#include "saptune/tla.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace saptune {

double ucb_score(double reward, std::size_t pulls, std::size_t t, double c) {
  if (pulls == 0) return std::numeric_limits<double>::infinity();
  const double logt = std::log(static_cast<double>(std::max<std::size_t>(t, 1)));
  return reward + c * std::sqrt(logt / static_cast<double>(pulls));
}

std::size_t ucb_select(const std::vector<CategoryCell>& cells, std::size_t t, double c) {
  std::optional<std::size_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].allowed) continue;
    if (cells[i].pulls == 0) return i;
    const double score = ucb_score(cells[i].reward.value_or(0.0), cells[i].pulls, t, c);
    if (!best || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (!best) throw std::invalid_argument("ucb_select: no allowed cell");
  return *best;
}

std::array<std::optional<double>, kNumCells> cell_rewards(const std::vector<const EvaluationRecord*>& records) {
  // Task means so that tasks of different cost are comparable.
  std::vector<std::pair<const TaskDescriptor*, std::pair<double, std::size_t>>> task_sums;
  auto task_slot = [&](const TaskDescriptor& task) -> std::pair<double, std::size_t>& {
    for (auto& [t, acc] : task_sums) {
      if (t->same_task(task)) return acc;
    }
    task_sums.push_back({&task, {0.0, 0}});
    return task_sums.back().second;
  };
  for (const EvaluationRecord* r : records) {
    auto& acc = task_slot(r->task);
    acc.first += std::log(r->objective_value);
    acc.second += 1;
  }

  std::array<double, kNumCells> sum{};
  std::array<std::size_t, kNumCells> count{};
  for (const EvaluationRecord* r : records) {
    const auto& acc = task_slot(r->task);
    const double centred = std::log(r->objective_value) - acc.first / static_cast<double>(acc.second);
    const std::size_t cell = cell_index(r->config);
    sum[cell] += centred;
    count[cell] += 1;
  }

  std::array<std::optional<double>, kNumCells> raw{};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < kNumCells; ++c) {
    if (count[c] == 0) continue;
    raw[c] = -sum[c] / static_cast<double>(count[c]);
    lo = std::min(lo, *raw[c]);
    hi = std::max(hi, *raw[c]);
  }
  for (auto& r : raw) {
    if (r) *r = hi > lo ? (*r - lo) / (hi - lo) : 0.5;
  }
  return raw;
}

const EvaluationRecord& source_best(const std::vector<EvaluationRecord>& source) {
  if (source.empty()) throw std::invalid_argument("source history is empty");
  std::size_t best = 0;
  for (std::size_t i = 1; i < source.size(); ++i) {
    const auto& a = source[i];
    const auto& b = source[best];
    if (a.failed != b.failed ? !a.failed
                             : a.objective_value < b.objective_value ||
                                   (a.objective_value == b.objective_value && a.timestamp_ms < b.timestamp_ms)) {
      best = i;
    }
  }
  return source[best];
}

namespace {

constexpr std::size_t kOrdinalOffset = 2;
constexpr std::size_t kOrdinalDims = TuningSpace::kDimensions - kOrdinalOffset;

UnitPoint cell_point(const TuningSpace& space, std::size_t cell, std::span<const double> ordinal) {
  const auto [alg, sketch] = cell_from_index(cell);
  Configuration probe;
  probe.sap_algorithm = alg;
  probe.sketching_operator = sketch;
  probe.sampling_factor = space.sampling_factor_min;
  probe.vec_nnz = space.vec_nnz_min;
  probe.safety_factor = space.safety_factor_min;
  UnitPoint u = encode(space, probe);
  for (std::size_t d = 0; d < kOrdinalDims; ++d) u[kOrdinalOffset + d] = std::clamp(ordinal[d], 0.0, 1.0);
  return u;
}

std::vector<double> ordinal_part(const UnitPoint& u) {
  return {u.begin() + kOrdinalOffset, u.end()};
}

}  // namespace

TuningResult tla_tune(LsProblem& target, const std::vector<EvaluationRecord>& source, const TuningSpace& space,
                      const ConstantParams& constants, std::size_t budget, std::uint64_t seed,
                      const TlaOptions& options) {
  space.validate();
  constants.validate();
  if (source.empty()) throw std::invalid_argument("tla: source history is empty");
  if (budget < 2) throw std::invalid_argument("tla: budget must be at least 2");

  const TunerOptions& topt = options.tuner;
  TunerState state{space, constants, 0.0, {}, budget, seed};
  auto push = [&](EvaluationRecord rec, const char* role) {
    rec.iteration = state.history.size() + 1;
    rec.role = role;
    if (topt.on_record) topt.on_record(rec);
    state.history.push_back(std::move(rec));
  };
  auto seed_for_next = [&] { return derive_seed(seed, Stream::Evaluation, state.history.size() + 1); };

  ReferenceResult ref = run_reference(target, constants, seed_for_next(), topt.evaluation);
  state.arfe_ref = ref.arfe_ref;
  push(std::move(ref.record), "reference");

  const Configuration warm = source_best(source).config;
  push(evaluate(target, warm, constants, state.arfe_ref, seed_for_next(), topt.evaluation), "source-best");

  // Source tasks in order of first appearance; the target is appended last.
  std::vector<TaskDescriptor> source_tasks;
  for (const auto& r : source) {
    if (std::none_of(source_tasks.begin(), source_tasks.end(), [&](const auto& t) { return t.same_task(r.task); })) {
      source_tasks.push_back(r.task);
    }
  }

  std::vector<CategoryCell> cells(kNumCells);
  for (std::size_t c = 0; c < kNumCells; ++c) {
    const auto [alg, sketch] = cell_from_index(c);
    cells[c].index = c;
    cells[c].allowed =
        std::find(space.sap_algorithms.begin(), space.sap_algorithms.end(), alg) != space.sap_algorithms.end() &&
        std::find(space.sketching_operators.begin(), space.sketching_operators.end(), sketch) !=
            space.sketching_operators.end();
  }

  while (state.remaining() > 0) {
    const std::size_t iteration = state.history.size() + 1;
    std::vector<const EvaluationRecord*> all;
    for (const auto& r : source) all.push_back(&r);
    for (const auto& r : state.history) all.push_back(&r);
    const auto rewards = cell_rewards(all);
    for (std::size_t c = 0; c < kNumCells; ++c) {
      cells[c].reward = rewards[c];
      cells[c].pulls = 0;
    }
    // N_t counts samples in the cell, source and target alike.
    for (const EvaluationRecord* r : all) cells[cell_index(r->config)].pulls += 1;
    const std::size_t cell = ucb_select(cells, all.size(), options.exploration);

    auto in_cell = [&](const EvaluationRecord& r) {
      return cell_index(r.config) == cell && space.contains(r.config) && r.objective_value > 0.0 &&
             std::isfinite(r.objective_value);
    };
    auto gather = [&](auto&& records, auto&& belongs) {
      std::vector<std::pair<std::vector<double>, double>> rows;
      for (const auto& r : records) {
        if (belongs(r) && in_cell(r)) rows.push_back({ordinal_part(encode(space, r.config)), std::log(r.objective_value)});
      }
      LcmTaskData data;
      data.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kOrdinalDims));
      data.y.resize(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t d = 0; d < kOrdinalDims; ++d) {
          data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i].first[d];
        }
        data.y(static_cast<Eigen::Index>(i)) = rows[i].second;
      }
      return data;
    };

    std::vector<LcmTaskData> tasks;
    for (const auto& task : source_tasks) {
      LcmTaskData d = gather(source, [&](const EvaluationRecord& r) { return r.task.same_task(task); });
      if (d.X.rows() > 0) tasks.push_back(std::move(d));
    }
    tasks.push_back(gather(state.history, [](const EvaluationRecord&) { return true; }));
    const std::size_t target_task = tasks.size() - 1;
    const bool any_data = std::any_of(tasks.begin(), tasks.end(), [](const auto& d) { return d.X.rows() > 0; });

    Rng rng = make_rng(seed, Stream::Acquisition, iteration);
    std::vector<double> ordinal;
    if (!any_data) {
      ordinal = latin_hypercube(1, kOrdinalDims, rng).front();
    } else {
      GpFitOptions gp = topt.gp;
      gp.seed = derive_seed(seed, Stream::Hyperparameters, iteration);
      const LcmModel model = lcm_fit(tasks, gp);
      const double incumbent =
          tasks[target_task].y.size() > 0 ? tasks[target_task].y.minCoeff() : std::numeric_limits<double>::quiet_NaN();
      const PredictFunction predict = [&](std::span<const double> p) { return model.predict(target_task, p); };
      const SnapFunction snap_fn = [&](std::span<const double> p) {
        return ordinal_part(snap(space, cell_point(space, cell, p)));
      };
      const ExcludeFunction excluded = [&](std::span<const double> p) {
        return state.evaluated(decode(space, cell_point(space, cell, p)));
      };
      ordinal = maximize_expected_improvement(predict, snap_fn, kOrdinalDims, incumbent, rng, excluded,
                                              topt.acquisition)
                    .point;
    }
    const Configuration next = decode(space, cell_point(space, cell, ordinal));
    push(evaluate(target, next, constants, state.arfe_ref, seed_for_next(), topt.evaluation), "bandit");
  }
  return TuningResult{best_record(state.history), std::move(state.history), state.arfe_ref};
}

}  // namespace saptune
