#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "saptune/problems.hpp"
#include "saptune/rng.hpp"
#include "saptune/sketch.hpp"

namespace saptune {

/// Preconditioner / iterative-solver pairing. QR with PGD is not offered.
enum class SapAlgorithm { QR_LSQR, SVD_LSQR, SVD_PGD };

std::string_view to_string(SapAlgorithm alg);
SapAlgorithm parse_sap_algorithm(std::string_view text);

inline constexpr std::array<SapAlgorithm, 3> kAllSapAlgorithms = {SapAlgorithm::QR_LSQR, SapAlgorithm::SVD_LSQR,
                                                                 SapAlgorithm::SVD_PGD};
inline constexpr std::array<SketchKind, 2> kAllSketchKinds = {SketchKind::SJLT, SketchKind::LessUniform};

/// One point of the five-parameter tuning space.
struct Configuration {
  SapAlgorithm sap_algorithm = SapAlgorithm::QR_LSQR;
  SketchKind sketching_operator = SketchKind::SJLT;
  double sampling_factor = 5.0;
  int vec_nnz = 50;
  int safety_factor = 0;

  bool operator==(const Configuration&) const = default;

  /// Solver tolerance rho = 10^-(6 + safety_factor).
  double tolerance() const;
};

std::string to_string(const Configuration& config);

/// The six (algorithm, sketch) categories in fixed order: algorithm-major.
inline constexpr std::size_t kNumCells = 6;
std::size_t cell_index(SapAlgorithm alg, SketchKind sketch);
std::size_t cell_index(const Configuration& config);
std::pair<SapAlgorithm, SketchKind> cell_from_index(std::size_t index);
std::string cell_name(std::size_t index);

struct TuningSpace {
  std::vector<SapAlgorithm> sap_algorithms{kAllSapAlgorithms.begin(), kAllSapAlgorithms.end()};
  std::vector<SketchKind> sketching_operators{kAllSketchKinds.begin(), kAllSketchKinds.end()};
  double sampling_factor_min = 1.0;
  double sampling_factor_max = 10.0;
  int vec_nnz_min = 1;
  int vec_nnz_max = 100;
  int safety_factor_min = 0;
  int safety_factor_max = 4;

  static constexpr std::size_t kDimensions = 5;

  /// Throws std::invalid_argument on empty option lists or inverted bounds.
  void validate() const;
  bool contains(const Configuration& config) const;
};

/// Encoded configuration, ordered (sap_algorithm, sketching_operator,
/// sampling_factor, vec_nnz, safety_factor).
using UnitPoint = std::array<double, TuningSpace::kDimensions>;

struct TaskDescriptor {
  std::size_t m = 0;
  std::size_t n = 0;
  std::string label = "custom";
  std::uint64_t seed = 0;
  std::optional<MatrixDiagnostics> diagnostics;

  /// Tasks compare by shape, generator and seed; diagnostics are informational.
  bool same_task(const TaskDescriptor& other) const {
    return m == other.m && n == other.n && label == other.label && seed == other.seed;
  }
};

TaskDescriptor describe(const LsProblem& problem);

/// Constants of a tuning session; defaults are the published experiment values.
struct ConstantParams {
  int num_pilots = 10;
  int num_repeats = 5;
  Configuration ref_config{SapAlgorithm::QR_LSQR, SketchKind::SJLT, 5.0, 50, 0};
  double penalty_factor = 2.0;
  double allowance_factor = 10.0;

  void validate() const;
};

/// Throws std::invalid_argument if config lies outside the space.
UnitPoint encode(const TuningSpace& space, const Configuration& config);

/// Nearest valid configuration; coordinates are clamped into [0, 1] first.
Configuration decode(const TuningSpace& space, const UnitPoint& u);

/// Snaps u onto the encoded image of the space (decode then encode).
UnitPoint snap(const TuningSpace& space, const UnitPoint& u);

/// Latin hypercube design in [0,1]^dim. For count <= kLhsmduMaxCount the
/// points are chosen by multi-dimensional uniform elimination before
/// stratification; larger designs use plain random LHS.
std::vector<std::vector<double>> latin_hypercube(std::size_t count, std::size_t dim, Rng& rng);
inline constexpr std::size_t kLhsmduMaxCount = 200;

std::vector<Configuration> lhs_sample(const TuningSpace& space, std::size_t count, std::uint64_t seed);

/// Tuning description file: the search space plus session constants.
struct TuningDescription {
  TuningSpace space;
  ConstantParams constants;
};

TuningDescription load_tuning_description(const std::filesystem::path& path);
void save_tuning_description(const TuningDescription& description, const std::filesystem::path& path);

}  // namespace saptune
