#include "saptune/session.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "json_codec.hpp"
#include "saptune/gridsearch.hpp"
#include "saptune/history.hpp"
#include "saptune/sobol.hpp"
#include "saptune/tla.hpp"
#include "saptune/tuner.hpp"

namespace saptune {

namespace {

using detail::ordered_json;
using nlohmann::json;

constexpr std::array<std::pair<Mode, std::string_view>, 7> kModeNames{{
    {Mode::Generate, "generate"},
    {Mode::Solve, "solve"},
    {Mode::Tune, "tune"},
    {Mode::Tla, "tla"},
    {Mode::Grid, "grid"},
    {Mode::Random, "random"},
    {Mode::Sensitivity, "sensitivity"},
}};

ordered_json record_summary(const EvaluationRecord& r) {
  ordered_json j;
  j["iteration"] = r.iteration;
  j["role"] = r.role;
  j["config"] = detail::to_json(r.config);
  j["objective"] = r.objective_value;
  j["arfe"] = std::isfinite(r.mean_arfe) ? ordered_json(r.mean_arfe) : ordered_json(nullptr);
  j["failed"] = r.failed;
  return j;
}

double total_seconds(const std::vector<EvaluationRecord>& records) {
  double s = 0.0;
  for (const auto& r : records) s += evaluation_seconds(r);
  return s;
}

void write_summary(const std::filesystem::path& dir, const ordered_json& summary) {
  std::ofstream out(dir / "summary.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
  out << summary.dump(2) << '\n';
}

ordered_json base_summary(const SessionConfig& config, const LsProblem& problem) {
  ordered_json j;
  j["mode"] = std::string(to_string(config.mode));
  j["seed"] = config.seed;
  j["task"] = detail::to_json(describe(problem));
  j["timing"] = std::string(to_string(config.timing));
  return j;
}

void add_session_stats(ordered_json& j, const std::vector<EvaluationRecord>& history, double arfe_ref) {
  j["evaluations"] = history.size();
  j["failed_evaluations"] = std::count_if(history.begin(), history.end(), [](const auto& r) { return r.failed; });
  j["arfe_ref"] = arfe_ref;
  j["cumulative_seconds"] = total_seconds(history);
  j["best"] = record_summary(best_record(history));
}

/// Fresh history file for a session; the grid reuses an existing one.
HistoryStore open_history(const std::filesystem::path& dir, bool keep) {
  const auto path = dir / "history.jsonl";
  if (!keep && std::filesystem::exists(path)) std::filesystem::remove(path);
  return HistoryStore(path);
}

EvaluationOptions evaluation_options(const SessionConfig& config) {
  EvaluationOptions opts;
  opts.timing = config.timing;
  return opts;
}

std::vector<EvaluationRecord> load_sources(const SessionConfig& config) {
  std::vector<EvaluationRecord> out;
  for (const auto& path : config.sources) {
    if (!std::filesystem::exists(path)) throw UserError("source history not found: " + path.string());
    auto records = HistoryStore::read(path);
    out.insert(out.end(), records.begin(), records.end());
  }
  if (out.empty()) throw UserError("source histories contain no records");
  return out;
}

void cmd_generate(const SessionConfig& config, LsProblem& problem, std::ostream& log) {
  const auto path = config.out_dir / "problem.bin";
  save_problem(problem, path);
  ordered_json j = base_summary(config, problem);
  const MatrixDiagnostics d = diagnostics(problem.A);
  j["coherence"] = d.coherence_mu;
  j["coherence_normalized"] = d.coherence_normalized;
  j["condition_number"] = d.condition_number;
  j["problem_file"] = path.string();
  write_summary(config.out_dir, j);
  log << "wrote " << path.string() << '\n';
}

void cmd_solve(const SessionConfig& config, LsProblem& problem, std::ostream& log) {
  direct_solve(problem);
  const SolveReport report = solve_sap(problem, config.solve_config, derive_seed(config.seed, Stream::Evaluation, 1));
  ordered_json j = base_summary(config, problem);
  j["config"] = detail::to_json(config.solve_config);
  j["termination"] = std::string(to_string(report.termination));
  j["iterations"] = report.iterations;
  j["wall_clock_seconds"] = report.wall_clock_seconds;
  j["modeled_flops"] = report.modeled_flops;
  if (!report.failed()) {
    const double arfe = compute_arfe(report.x, problem);
    j["arfe"] = arfe;
    std::ofstream out(config.out_dir / "solution.txt");
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < report.x.size(); ++i) out << report.x(i) << '\n';
  }
  if (report.error) j["error"] = *report.error;
  write_summary(config.out_dir, j);
  log << "solve " << to_string(config.solve_config) << ": " << to_string(report.termination) << " after "
      << report.iterations << " iterations\n";
  if (report.failed()) throw std::runtime_error("solve failed: " + report.error.value_or("singular preconditioner"));
}

void finish_tuning(const SessionConfig& config, const LsProblem& problem, const TuningResult& result,
                   std::ostream& log, ordered_json j = {}) {
  write_session_csv(config.out_dir / "session.csv", result.history);
  ordered_json summary = base_summary(config, problem);
  summary["budget"] = config.budget;
  add_session_stats(summary, result.history, result.arfe_ref);
  for (auto& [key, value] : j.items()) summary[key] = value;
  write_summary(config.out_dir, summary);
  log << "best " << to_string(result.best.config) << " objective " << result.best.objective_value << " after "
      << result.history.size() << " evaluations\n";
}

TunerOptions tuner_options(const SessionConfig& config, const HistoryStore& store, std::ostream& log) {
  TunerOptions opts;
  opts.evaluation = evaluation_options(config);
  opts.on_record = [&store, &log](const EvaluationRecord& r) {
    store.append(r);
    log << std::setw(4) << r.iteration << ' ' << std::left << std::setw(12) << r.role << std::right << ' '
        << to_string(r.config) << " -> " << r.objective_value << (r.failed ? " (failed)" : "") << '\n';
  };
  return opts;
}

void cmd_tune(const SessionConfig& config, LsProblem& problem, std::ostream& log) {
  const HistoryStore store = open_history(config.out_dir, false);
  const TunerOptions opts = tuner_options(config, store, log);
  const TuningResult result = config.mode == Mode::Tune
                                  ? tune(problem, config.space, config.constants, config.budget, config.seed, opts)
                                  : random_search(problem, config.space, config.constants, config.budget, config.seed, opts);
  finish_tuning(config, problem, result, log);
}

void cmd_tla(const SessionConfig& config, LsProblem& problem, std::ostream& log) {
  const std::vector<EvaluationRecord> source = load_sources(config);
  const HistoryStore store = open_history(config.out_dir, false);
  TlaOptions opts;
  opts.tuner = tuner_options(config, store, log);
  opts.exploration = config.exploration;
  const TuningResult result =
      tla_tune(problem, source, config.space, config.constants, config.budget, config.seed, opts);
  ordered_json extra;
  extra["source_records"] = source.size();
  ordered_json paths = ordered_json::array();
  for (const auto& p : config.sources) paths.push_back(p.string());
  extra["sources"] = paths;
  finish_tuning(config, problem, result, log, extra);
}

void cmd_grid(const SessionConfig& config, LsProblem& problem, std::ostream& log) {
  const HistoryStore store = open_history(config.out_dir, true);
  GridOptions opts;
  opts.evaluation = evaluation_options(config);
  opts.existing = store.load();
  opts.on_record = [&](const EvaluationRecord& r) { store.append(r); };
  opts.warn = [&](const std::string& msg) { log << "warning: " << msg << '\n'; };
  const GridSpec spec = config.grid == "reduced" ? GridSpec::reduced() : GridSpec::full();
  const GridResult result = run_grid(problem, spec, config.constants, config.seed, opts);
  write_landscape_csv(config.out_dir / "landscape.csv", result.landscape);
  ordered_json j = base_summary(config, problem);
  j["grid"] = config.grid;
  j["cells"] = spec.size();
  j["evaluated_now"] = result.evaluated;
  add_session_stats(j, result.records, result.arfe_ref);
  j["reference"] = record_summary(result.reference);
  write_summary(config.out_dir, j);
  log << "grid best " << to_string(result.best.config) << " objective " << result.best.objective_value << " ("
      << result.evaluated << " new evaluations)\n";
}

void cmd_sensitivity(const SessionConfig& config, LsProblem& problem, std::ostream& log) {
  std::vector<EvaluationRecord> records;
  ordered_json j = base_summary(config, problem);
  if (!config.sources.empty()) {
    records = load_sources(config);
  } else {
    const HistoryStore store = open_history(config.out_dir, false);
    const TunerOptions opts = tuner_options(config, store, log);
    records = random_search(problem, config.space, config.constants, config.budget, config.seed, opts).history;
    write_session_csv(config.out_dir / "session.csv", records);
  }
  if (records.size() < kMinSensitivityRecords) {
    throw UserError("sensitivity analysis needs at least " + std::to_string(kMinSensitivityRecords) + " records");
  }
  const SensitivityReport report = analyze_tuning(config.space, records, config.base_n, config.seed);
  write_sensitivity_csv(config.out_dir / "sensitivity.csv", report);
  j["records"] = records.size();
  j["base_n"] = report.base_n;
  j["samples"] = report.samples;
  j["degenerate_variance"] = report.degenerate_variance;
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < report.parameters.size(); ++i) {
    ordered_json row;
    row["parameter"] = report.parameters[i];
    row["S1"] = report.S1[i];
    row["S1_conf"] = report.S1_conf[i];
    row["ST"] = report.ST[i];
    row["ST_conf"] = report.ST_conf[i];
    rows.push_back(row);
    log << std::left << std::setw(20) << report.parameters[i] << std::right << " S1 " << std::setw(8)
        << report.S1[i] << " ST " << std::setw(8) << report.ST[i] << '\n';
  }
  j["indices"] = rows;
  write_summary(config.out_dir, j);
}

}  // namespace

std::string_view to_string(Mode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

Mode parse_mode(std::string_view text) {
  for (const auto& [m, name] : kModeNames) {
    if (name == text) return m;
  }
  throw UserError("unknown mode '" + std::string(text) + "'");
}

void SessionConfig::validate() const {
  try {
    space.validate();
    constants.validate();
  } catch (const std::invalid_argument& e) {
    throw UserError(e.what());
  }
  if (!task.file && task.m < task.n) throw UserError("task needs m >= n");
  if (!task.file && task.n == 0) throw UserError("task needs n >= 1");
  switch (mode) {
    case Mode::Tune:
      if (budget < static_cast<std::size_t>(constants.num_pilots) + 1) {
        throw UserError("tune needs budget >= num_pilots + 1");
      }
      break;
    case Mode::Tla:
      if (sources.empty()) throw UserError("tla needs at least one --source history");
      if (budget < 2) throw UserError("tla needs budget >= 2");
      break;
    case Mode::Random:
      if (budget < 1) throw UserError("random needs budget >= 1");
      break;
    case Mode::Grid:
      if (grid != "full" && grid != "reduced") throw UserError("grid must be 'full' or 'reduced'");
      break;
    case Mode::Sensitivity:
      if (sources.empty() && budget < kMinSensitivityRecords) {
        throw UserError("sensitivity needs budget >= " + std::to_string(kMinSensitivityRecords));
      }
      if ((base_n & (base_n - 1)) != 0 || base_n == 0) throw UserError("base_n must be a power of two");
      break;
    case Mode::Solve:
    case Mode::Generate:
      break;
  }
}

void apply_config_file(SessionConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw UserError("config file " + path.string() + ": " + e.what());
  }
  try {
    if (j.contains("mode")) config.mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("task")) {
      const auto& t = j["task"];
      if (t.contains("kind")) config.task.kind = parse_problem_kind(t["kind"].get<std::string>());
      if (t.contains("m")) config.task.m = t["m"].get<std::size_t>();
      if (t.contains("n")) config.task.n = t["n"].get<std::size_t>();
      if (t.contains("seed")) config.task.seed = t["seed"].get<std::uint64_t>();
      if (t.contains("file")) config.task.file = t["file"].get<std::string>();
    }
    if (j.contains("space")) config.space = detail::tuning_space_from_json(j["space"]);
    if (j.contains("constants")) config.constants = detail::constants_from_json(j["constants"]);
    if (j.contains("budget")) config.budget = j["budget"].get<std::size_t>();
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) config.out_dir = j["out"].get<std::string>();
    if (j.contains("sources")) {
      config.sources.clear();
      for (const auto& s : j["sources"]) config.sources.emplace_back(s.get<std::string>());
    }
    if (j.contains("timing")) config.timing = parse_timing_source(j["timing"].get<std::string>());
    if (j.contains("config")) config.solve_config = detail::configuration_from_json(j["config"]);
    if (j.contains("grid")) config.grid = j["grid"].get<std::string>();
    if (j.contains("base_n")) config.base_n = j["base_n"].get<std::size_t>();
    if (j.contains("exploration")) config.exploration = j["exploration"].get<double>();
  } catch (const UserError&) {
    throw;
  } catch (const std::exception& e) {
    throw UserError("config file " + path.string() + ": " + e.what());
  }
}

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("SAPTUNE_OUT"); env != nullptr && *env != '\0') return env;
  return "saptune-out";
}

LsProblem load_task(const SessionConfig& config) {
  if (config.task.file) {
    if (!std::filesystem::exists(*config.task.file)) throw UserError("problem file not found: " + config.task.file->string());
    return load_problem(*config.task.file);
  }
  return generate_problem(config.task.kind, config.task.m, config.task.n, config.task.seed.value_or(config.seed));
}

void run_session(const SessionConfig& config, std::ostream& log) {
  config.validate();
  SessionConfig resolved = config;
  if (resolved.out_dir.empty()) resolved.out_dir = default_output_root() / std::string(to_string(config.mode));
  std::filesystem::create_directories(resolved.out_dir);

  LsProblem problem = load_task(resolved);
  log << to_string(resolved.mode) << ": " << problem.label << ' ' << problem.rows() << 'x' << problem.cols()
      << ", output in " << resolved.out_dir.string() << '\n';
  switch (resolved.mode) {
    case Mode::Generate:
      cmd_generate(resolved, problem, log);
      break;
    case Mode::Solve:
      cmd_solve(resolved, problem, log);
      break;
    case Mode::Tune:
    case Mode::Random:
      cmd_tune(resolved, problem, log);
      break;
    case Mode::Tla:
      cmd_tla(resolved, problem, log);
      break;
    case Mode::Grid:
      cmd_grid(resolved, problem, log);
      break;
    case Mode::Sensitivity:
      cmd_sensitivity(resolved, problem, log);
      break;
  }
}

int run_session_guarded(const SessionConfig& config, std::ostream& log, std::ostream& err) {
  try {
    run_session(config, log);
    return kExitOk;
  } catch (const UserError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kExitRuntimeFailure;
  }
}

}  // namespace saptune
