// saptune: command-line front end for generating problems, solving, tuning,
// transfer tuning, grid sweeps and sensitivity analysis.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "saptune/session.hpp"

namespace {

struct Flags {
  std::optional<std::string> mode;
  std::optional<std::string> config;
  std::optional<std::size_t> m;
  std::optional<std::size_t> n;
  std::optional<std::string> kind;
  std::optional<std::size_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> task_seed;
  std::optional<std::string> problem;
  std::vector<std::string> sources;
  std::optional<std::string> out;
  std::optional<std::string> timing;
  std::optional<std::string> grid;
  std::optional<std::size_t> base_n;
  std::optional<std::string> sap_algorithm;
  std::optional<std::string> sketch;
  std::optional<double> sampling_factor;
  std::optional<int> vec_nnz;
  std::optional<int> safety_factor;
};

saptune::SessionConfig resolve(const Flags& f) {
  saptune::SessionConfig config;
  if (f.config) saptune::apply_config_file(config, *f.config);
  if (f.mode) config.mode = saptune::parse_mode(*f.mode);
  if (f.m) config.task.m = *f.m;
  if (f.n) config.task.n = *f.n;
  if (f.kind) config.task.kind = saptune::parse_problem_kind(*f.kind);
  if (f.task_seed) config.task.seed = *f.task_seed;
  if (f.problem) config.task.file = *f.problem;
  if (f.budget) config.budget = *f.budget;
  if (f.seed) config.seed = *f.seed;
  if (!f.sources.empty()) config.sources.assign(f.sources.begin(), f.sources.end());
  if (f.out) config.out_dir = *f.out;
  if (f.timing) config.timing = saptune::parse_timing_source(*f.timing);
  if (f.grid) config.grid = *f.grid;
  if (f.base_n) config.base_n = *f.base_n;
  if (f.sap_algorithm) config.solve_config.sap_algorithm = saptune::parse_sap_algorithm(*f.sap_algorithm);
  if (f.sketch) config.solve_config.sketching_operator = saptune::parse_sketch_kind(*f.sketch);
  if (f.sampling_factor) config.solve_config.sampling_factor = *f.sampling_factor;
  if (f.vec_nnz) config.solve_config.vec_nnz = *f.vec_nnz;
  if (f.safety_factor) config.solve_config.safety_factor = *f.safety_factor;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketch-and-precondition least-squares autotuner"};
  Flags f;
  app.add_option("--mode", f.mode, "generate | solve | tune | tla | grid | random | sensitivity")
      ->check(CLI::IsMember({"generate", "solve", "tune", "tla", "grid", "random", "sensitivity"}));
  app.add_option("--config", f.config, "JSON session config; flags take precedence")->check(CLI::ExistingFile);
  app.add_option("--m", f.m, "rows of the generated problem");
  app.add_option("--n", f.n, "columns of the generated problem");
  app.add_option("--kind", f.kind, "generator: GA, T5, T3, T1");
  app.add_option("--budget", f.budget, "evaluations including the reference");
  app.add_option("--seed", f.seed, "session seed");
  app.add_option("--task-seed", f.task_seed, "generator seed (defaults to --seed)");
  app.add_option("--problem", f.problem, "binary problem file instead of the generator");
  app.add_option("--source", f.sources, "source history files for tla or sensitivity");
  app.add_option("--out", f.out, "output directory (default $SAPTUNE_OUT/<mode>)");
  app.add_option("--timing", f.timing, "wall | operations")->check(CLI::IsMember({"wall", "operations"}));
  app.add_option("--grid", f.grid, "full | reduced")->check(CLI::IsMember({"full", "reduced"}));
  app.add_option("--base-n", f.base_n, "Saltelli base sample count");
  app.add_option("--sap-algorithm", f.sap_algorithm, "solve mode: QR-LSQR, SVD-LSQR, SVD-PGD");
  app.add_option("--sketch", f.sketch, "solve mode: SJLT, LessUniform");
  app.add_option("--sampling-factor", f.sampling_factor, "solve mode");
  app.add_option("--vec-nnz", f.vec_nnz, "solve mode");
  app.add_option("--safety-factor", f.safety_factor, "solve mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? saptune::kExitOk : saptune::kExitUserError;
  }

  saptune::SessionConfig config;
  try {
    config = resolve(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return saptune::kExitUserError;
  }
  return saptune::run_session_guarded(config, std::cout, std::cerr);
}
