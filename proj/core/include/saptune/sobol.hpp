#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "saptune/common.hpp"
#include "saptune/objective.hpp"
#include "saptune/paramspace.hpp"

namespace saptune {

/// Largest dimension supported by the built-in direction numbers.
inline constexpr std::size_t kMaxSobolDimension = 21;

/// First count points of the Sobol sequence in [0,1)^dim (rows). A seed
/// applies a random digital shift, which keeps the net structure.
Eigen::MatrixXd sobol_sequence(std::size_t count, std::size_t dim, std::optional<std::uint64_t> shift_seed = {});

struct SaltelliDesign {
  std::size_t dim = 0;
  std::size_t base_n = 0;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::vector<Eigen::MatrixXd> AB;  // A with column i taken from B
  std::vector<Eigen::MatrixXd> BA;  // B with column i taken from A

  /// All base_n * (2 dim + 2) points: A, B, AB_1.., BA_1.. stacked.
  Eigen::MatrixXd stacked() const;
  std::size_t size() const { return base_n * (2 * dim + 2); }
};

/// base_n must be a power of two and 2*dim <= kMaxSobolDimension.
SaltelliDesign saltelli_sample(std::size_t dim, std::size_t base_n, std::uint64_t seed);

struct SensitivityReport {
  std::vector<std::string> parameters;
  std::vector<double> S1;
  std::vector<double> S1_conf;
  std::vector<double> ST;
  std::vector<double> ST_conf;
  std::size_t base_n = 0;
  std::size_t samples = 0;
  bool degenerate_variance = false;
};

/// Batch function: rows of the argument are points, returns one value per row.
using BatchFunction = std::function<Vector(const Eigen::MatrixXd&)>;

/// First-order (Saltelli, with f(B) centred) and total-effect (Jansen) indices with bootstrap
/// half-widths (1.96 standard deviations over resamples of the base rows).
SensitivityReport sobol_indices(const BatchFunction& f, std::size_t dim, std::size_t base_n, std::uint64_t seed,
                                std::size_t resamples = 50);

/// Same estimators on precomputed outputs of a design.
SensitivityReport sobol_from_outputs(const SaltelliDesign& design, const Vector& outputs, std::uint64_t seed,
                                     std::size_t resamples = 50);

inline constexpr std::size_t kMinSensitivityRecords = 20;

/// Fits a GP to the records and analyses its posterior mean (log objective)
/// over snapped configurations. Throws std::invalid_argument with fewer than
/// kMinSensitivityRecords usable records.
SensitivityReport analyze_tuning(const TuningSpace& space, const std::vector<EvaluationRecord>& records,
                                 std::size_t base_n = 512, std::uint64_t seed = 0);

/// Columns: parameter, S1, S1_conf, ST, ST_conf.
void write_sensitivity_csv(const std::filesystem::path& path, const SensitivityReport& report);

}  // namespace saptune
