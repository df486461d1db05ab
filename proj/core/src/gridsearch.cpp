#include "saptune/gridsearch.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "saptune/tuner.hpp"

namespace saptune {

GridSpec GridSpec::reduced() {
  GridSpec spec;
  spec.vec_nnz = {1, 2, 5, 10, 30, 100};
  return spec;
}

std::size_t GridSpec::size() const {
  return sap_algorithms.size() * sketching_operators.size() * sampling_factors.size() * vec_nnz.size() *
         safety_factors.size();
}

std::vector<Configuration> GridSpec::configurations() const {
  std::vector<Configuration> out;
  out.reserve(size());
  for (SapAlgorithm alg : sap_algorithms) {
    for (SketchKind sketch : sketching_operators) {
      for (double sf : sampling_factors) {
        for (int nnz : vec_nnz) {
          for (int safety : safety_factors) out.push_back({alg, sketch, sf, nnz, safety});
        }
      }
    }
  }
  return out;
}

GridResult run_grid(LsProblem& problem, const GridSpec& spec, const ConstantParams& constants, std::uint64_t seed,
                    const GridOptions& options) {
  constants.validate();
  const std::vector<Configuration> configs = spec.configurations();
  if (configs.empty()) throw std::invalid_argument("run_grid: empty grid");
  const TaskDescriptor task = describe(problem);
  const auto entries = static_cast<std::size_t>(problem.A.rows()) * static_cast<std::size_t>(problem.A.cols());
  if (entries > options.warn_entries) {
    const std::string msg = "grid sweep over a " + std::to_string(problem.A.rows()) + "x" +
                            std::to_string(problem.A.cols()) + " matrix with " + std::to_string(configs.size()) +
                            " configurations may take a long time";
    if (options.warn) options.warn(msg);
  }

  GridResult result;
  std::unordered_map<std::string, const EvaluationRecord*> done;
  for (const auto& r : options.existing) {
    if (!r.task.same_task(task)) continue;
    if (r.role == "reference") {
      result.reference = r;
      result.arfe_ref = std::max(r.mean_arfe, std::numeric_limits<double>::epsilon());
    } else {
      done[record_key(task, r.config)] = &r;
    }
  }
  if (result.reference.role.empty()) {
    ReferenceResult ref = run_reference(problem, constants, derive_seed(seed, Stream::Evaluation, 0), options.evaluation);
    result.arfe_ref = ref.arfe_ref;
    result.reference = std::move(ref.record);
    result.reference.iteration = 0;
    result.reference.role = "reference";
    if (options.on_record) options.on_record(result.reference);
  }

  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto it = done.find(record_key(task, configs[i]));
    if (it != done.end()) {
      result.records.push_back(*it->second);
      continue;
    }
    EvaluationRecord rec =
        evaluate(problem, configs[i], constants, result.arfe_ref, derive_seed(seed, Stream::Evaluation, i + 1),
                 options.evaluation);
    rec.iteration = i + 1;
    rec.role = "grid";
    if (options.on_record) options.on_record(rec);
    result.records.push_back(std::move(rec));
    ++result.evaluated;
  }
  result.best = best_record(result.records);
  result.landscape = landscape(result.records);
  return result;
}

std::vector<LandscapePoint> landscape(const std::vector<EvaluationRecord>& records) {
  std::map<std::tuple<std::size_t, double, int>, LandscapePoint> points;
  for (const auto& r : records) {
    const auto key = std::make_tuple(cell_index(r.config), r.config.sampling_factor, r.config.vec_nnz);
    auto it = points.find(key);
    if (it == points.end() ||
        (r.failed != it->second.failed ? !r.failed : r.objective_value < it->second.objective)) {
      points[key] = LandscapePoint{std::get<0>(key), r.config.sampling_factor, r.config.vec_nnz,
                                   r.config.safety_factor, r.objective_value, r.mean_arfe, r.failed};
    }
  }
  std::vector<LandscapePoint> out;
  out.reserve(points.size());
  for (auto& [key, p] : points) out.push_back(p);
  return out;
}

void write_landscape_csv(const std::filesystem::path& path, const std::vector<LandscapePoint>& points) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "cell_id,sampling_factor,vec_nnz,objective,arfe,failed\n" << std::setprecision(10);
  for (const auto& p : points) {
    out << cell_name(p.cell) << ',' << p.sampling_factor << ',' << p.vec_nnz << ',' << p.objective << ',' << p.arfe
        << ',' << (p.failed ? 1 : 0) << '\n';
  }
}

}  // namespace saptune
