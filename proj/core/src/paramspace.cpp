#include "saptune/paramspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json_codec.hpp"

namespace saptune {

std::string_view to_string(SapAlgorithm alg) {
  switch (alg) {
    case SapAlgorithm::QR_LSQR: return "QR-LSQR";
    case SapAlgorithm::SVD_LSQR: return "SVD-LSQR";
    case SapAlgorithm::SVD_PGD: return "SVD-PGD";
  }
  return "?";
}

SapAlgorithm parse_sap_algorithm(std::string_view text) {
  if (text == "QR-LSQR") return SapAlgorithm::QR_LSQR;
  if (text == "SVD-LSQR") return SapAlgorithm::SVD_LSQR;
  if (text == "SVD-PGD") return SapAlgorithm::SVD_PGD;
  if (text == "QR-PGD") throw std::invalid_argument("QR-PGD is not a supported SAP algorithm");
  throw std::invalid_argument("unknown SAP algorithm '" + std::string(text) +
                              "' (expected QR-LSQR, SVD-LSQR or SVD-PGD)");
}

double Configuration::tolerance() const { return std::pow(10.0, -(6.0 + safety_factor)); }

std::string to_string(const Configuration& c) {
  std::ostringstream out;
  out << '[' << to_string(c.sap_algorithm) << ", " << to_string(c.sketching_operator) << ", "
      << c.sampling_factor << ", " << c.vec_nnz << ", " << c.safety_factor << ']';
  return out.str();
}

std::size_t cell_index(SapAlgorithm alg, SketchKind sketch) {
  return static_cast<std::size_t>(alg) * 2 + static_cast<std::size_t>(sketch);
}

std::size_t cell_index(const Configuration& config) {
  return cell_index(config.sap_algorithm, config.sketching_operator);
}

std::pair<SapAlgorithm, SketchKind> cell_from_index(std::size_t index) {
  if (index >= kNumCells) throw std::out_of_range("cell index out of range");
  return {static_cast<SapAlgorithm>(index / 2), static_cast<SketchKind>(index % 2)};
}

std::string cell_name(std::size_t index) {
  const auto [alg, sketch] = cell_from_index(index);
  return std::string(to_string(alg)) + "/" + std::string(to_string(sketch));
}

void TuningSpace::validate() const {
  if (sap_algorithms.empty()) throw std::invalid_argument("tuning space: sap_algorithm has no options");
  if (sketching_operators.empty()) throw std::invalid_argument("tuning space: sketching_operator has no options");
  if (!(sampling_factor_min >= 1.0) || !(sampling_factor_max >= sampling_factor_min)) {
    throw std::invalid_argument("tuning space: sampling_factor bounds must satisfy 1 <= min <= max");
  }
  if (vec_nnz_min < 1 || vec_nnz_max < vec_nnz_min) {
    throw std::invalid_argument("tuning space: vec_nnz bounds must satisfy 1 <= min <= max");
  }
  if (safety_factor_min < 0 || safety_factor_max < safety_factor_min) {
    throw std::invalid_argument("tuning space: safety_factor bounds must satisfy 0 <= min <= max");
  }
}

bool TuningSpace::contains(const Configuration& c) const {
  return std::find(sap_algorithms.begin(), sap_algorithms.end(), c.sap_algorithm) != sap_algorithms.end() &&
         std::find(sketching_operators.begin(), sketching_operators.end(), c.sketching_operator) !=
             sketching_operators.end() &&
         c.sampling_factor >= sampling_factor_min && c.sampling_factor <= sampling_factor_max &&
         c.vec_nnz >= vec_nnz_min && c.vec_nnz <= vec_nnz_max && c.safety_factor >= safety_factor_min &&
         c.safety_factor <= safety_factor_max;
}

TaskDescriptor describe(const LsProblem& problem) {
  TaskDescriptor task;
  task.m = problem.rows();
  task.n = problem.cols();
  task.label = problem.label;
  task.seed = problem.seed;
  return task;
}

void ConstantParams::validate() const {
  if (num_pilots < 1) throw std::invalid_argument("num_pilots must be >= 1");
  if (num_repeats < 1) throw std::invalid_argument("num_repeats must be >= 1");
  if (!(penalty_factor >= 1.0)) throw std::invalid_argument("penalty_factor must be >= 1");
  if (!(allowance_factor >= 1.0)) throw std::invalid_argument("allowance_factor must be >= 1");
}

namespace {

// Integers and categoricals occupy equal-width cells; a level maps to its cell centre.
double cell_centre(std::size_t level, std::size_t levels) {
  return (static_cast<double>(level) + 0.5) / static_cast<double>(levels);
}

std::size_t cell_of(double u, std::size_t levels) {
  const double scaled = std::clamp(u, 0.0, 1.0) * static_cast<double>(levels);
  return std::min(static_cast<std::size_t>(scaled), levels - 1);
}

template <typename T>
std::size_t position_of(const std::vector<T>& options, T value) {
  const auto it = std::find(options.begin(), options.end(), value);
  if (it == options.end()) throw std::invalid_argument("configuration uses an option outside the tuning space");
  return static_cast<std::size_t>(it - options.begin());
}

}  // namespace

UnitPoint encode(const TuningSpace& space, const Configuration& c) {
  if (!space.contains(c)) throw std::invalid_argument("configuration " + to_string(c) + " is outside the tuning space");
  UnitPoint u{};
  u[0] = cell_centre(position_of(space.sap_algorithms, c.sap_algorithm), space.sap_algorithms.size());
  u[1] = cell_centre(position_of(space.sketching_operators, c.sketching_operator), space.sketching_operators.size());
  const double span = space.sampling_factor_max - space.sampling_factor_min;
  u[2] = span > 0.0 ? (c.sampling_factor - space.sampling_factor_min) / span : 0.5;
  u[3] = cell_centre(static_cast<std::size_t>(c.vec_nnz - space.vec_nnz_min),
                     static_cast<std::size_t>(space.vec_nnz_max - space.vec_nnz_min + 1));
  u[4] = cell_centre(static_cast<std::size_t>(c.safety_factor - space.safety_factor_min),
                     static_cast<std::size_t>(space.safety_factor_max - space.safety_factor_min + 1));
  return u;
}

Configuration decode(const TuningSpace& space, const UnitPoint& u) {
  Configuration c;
  c.sap_algorithm = space.sap_algorithms[cell_of(u[0], space.sap_algorithms.size())];
  c.sketching_operator = space.sketching_operators[cell_of(u[1], space.sketching_operators.size())];
  const double span = space.sampling_factor_max - space.sampling_factor_min;
  c.sampling_factor = std::clamp(space.sampling_factor_min + std::clamp(u[2], 0.0, 1.0) * span,
                                 space.sampling_factor_min, space.sampling_factor_max);
  c.vec_nnz = space.vec_nnz_min +
              static_cast<int>(cell_of(u[3], static_cast<std::size_t>(space.vec_nnz_max - space.vec_nnz_min + 1)));
  c.safety_factor =
      space.safety_factor_min +
      static_cast<int>(cell_of(u[4], static_cast<std::size_t>(space.safety_factor_max - space.safety_factor_min + 1)));
  return c;
}

UnitPoint snap(const TuningSpace& space, const UnitPoint& u) { return encode(space, decode(space, u)); }

namespace {

std::vector<std::vector<double>> stratify(const std::vector<std::vector<double>>& pts, std::size_t dim, Rng& rng) {
  const std::size_t count = pts.size();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> design(count, std::vector<double>(dim));
  std::vector<std::size_t> order(count);
  for (std::size_t j = 0; j < dim; ++j) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pts[a][j] < pts[b][j]; });
    for (std::size_t rank = 0; rank < count; ++rank) {
      design[order[rank]][j] = (static_cast<double>(rank) + unif(rng)) / static_cast<double>(count);
    }
  }
  return design;
}

}  // namespace

std::vector<std::vector<double>> latin_hypercube(std::size_t count, std::size_t dim, Rng& rng) {
  if (count == 0) return {};
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (count > kLhsmduMaxCount || count < 3) {
    std::vector<std::vector<double>> pts(count, std::vector<double>(dim));
    for (auto& p : pts) {
      for (auto& x : p) x = unif(rng);
    }
    return stratify(pts, dim, rng);
  }

  // Multi-dimensional uniform: oversample, then repeatedly drop the point whose
  // mean distance to its two nearest neighbours is smallest.
  constexpr std::size_t kOversample = 5;
  const std::size_t total = kOversample * count;
  std::vector<std::vector<double>> pts(total, std::vector<double>(dim));
  for (auto& p : pts) {
    for (auto& x : p) x = unif(rng);
  }
  Eigen::MatrixXd dist(total, total);
  for (std::size_t a = 0; a < total; ++a) {
    dist(a, a) = std::numeric_limits<double>::infinity();
    for (std::size_t b = a + 1; b < total; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim; ++j) s += (pts[a][j] - pts[b][j]) * (pts[a][j] - pts[b][j]);
      dist(a, b) = dist(b, a) = std::sqrt(s);
    }
  }
  std::vector<char> alive(total, 1);
  for (std::size_t remaining = total; remaining > count; --remaining) {
    std::size_t victim = total;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < total; ++a) {
      if (!alive[a]) continue;
      double d1 = std::numeric_limits<double>::infinity();
      double d2 = d1;
      for (std::size_t b = 0; b < total; ++b) {
        if (!alive[b] || b == a) continue;
        const double d = dist(a, b);
        if (d < d1) {
          d2 = d1;
          d1 = d;
        } else if (d < d2) {
          d2 = d;
        }
      }
      const double score = 0.5 * (d1 + d2);
      if (score < worst) {
        worst = score;
        victim = a;
      }
    }
    alive[victim] = 0;
  }
  std::vector<std::vector<double>> kept;
  kept.reserve(count);
  for (std::size_t a = 0; a < total; ++a) {
    if (alive[a]) kept.push_back(pts[a]);
  }
  return stratify(kept, dim, rng);
}

std::vector<Configuration> lhs_sample(const TuningSpace& space, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("lhs_sample: count must be >= 1");
  space.validate();
  Rng rng = make_rng(seed, Stream::Design);
  const auto design = latin_hypercube(count, TuningSpace::kDimensions, rng);
  std::vector<Configuration> out;
  out.reserve(count);
  for (const auto& row : design) {
    UnitPoint u{};
    std::copy(row.begin(), row.end(), u.begin());
    out.push_back(decode(space, u));
  }
  return out;
}

TuningDescription load_tuning_description(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto doc = nlohmann::json::parse(in, nullptr, true, true);
  return detail::tuning_description_from_json(doc);
}

void save_tuning_description(const TuningDescription& description, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << detail::to_json(description).dump(2) << '\n';
}

}  // namespace saptune
