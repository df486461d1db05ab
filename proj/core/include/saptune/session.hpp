#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "saptune/objective.hpp"
#include "saptune/paramspace.hpp"
#include "saptune/problems.hpp"

namespace saptune {

enum class Mode { Generate, Solve, Tune, Tla, Grid, Random, Sensitivity };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// Invalid input: bad configuration, missing files. Maps to exit status 1.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitRuntimeFailure = 2;

struct TaskSpec {
  ProblemKind kind = ProblemKind::GA;
  std::size_t m = 10000;
  std::size_t n = 200;
  std::optional<std::uint64_t> seed;          // defaults to the session seed
  std::optional<std::filesystem::path> file;  // binary problem instead of the generator
};

struct SessionConfig {
  Mode mode = Mode::Tune;
  TaskSpec task;
  TuningSpace space;
  ConstantParams constants;
  std::size_t budget = 50;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> sources;
  TimingSource timing = TimingSource::WallClock;
  Configuration solve_config = ConstantParams{}.ref_config;
  std::string grid = "full";  // full | reduced
  std::size_t base_n = 512;
  double exploration = 4.0;

  /// Throws UserError when a mode-specific field is missing or invalid.
  void validate() const;
};

/// Applies the keys present in a JSON config file on top of config.
void apply_config_file(SessionConfig& config, const std::filesystem::path& path);

/// Output root used when no directory is given: $SAPTUNE_OUT or "saptune-out".
std::filesystem::path default_output_root();

/// Builds or loads the task problem.
LsProblem load_task(const SessionConfig& config);

/// Runs one command and writes its artifacts plus summary.json into
/// config.out_dir. Progress goes to log. Throws UserError or runtime errors.
void run_session(const SessionConfig& config, std::ostream& log);

/// run_session with exceptions mapped to exit codes and reported on err.
int run_session_guarded(const SessionConfig& config, std::ostream& log, std::ostream& err);

}  // namespace saptune
