#include "saptune/sobol.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "saptune/rng.hpp"
#include "saptune/tuner.hpp"

namespace saptune {

namespace {

constexpr int kBits = 32;

struct DirectionEntry {
  unsigned degree;
  unsigned coefficients;
  std::array<unsigned, 7> m;
};

// Joe and Kuo direction numbers for dimensions 2..21.
constexpr std::array<DirectionEntry, kMaxSobolDimension - 1> kDirections{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
}};

std::array<std::uint32_t, kBits> direction_vector(std::size_t dimension) {
  std::array<std::uint32_t, kBits> v{};
  if (dimension == 0) {
    for (int i = 0; i < kBits; ++i) v[static_cast<std::size_t>(i)] = 1u << (kBits - 1 - i);
    return v;
  }
  const DirectionEntry& e = kDirections[dimension - 1];
  const unsigned s = e.degree;
  for (unsigned i = 0; i < s; ++i) v[i] = e.m[i] << (kBits - 1 - i);
  for (unsigned i = s; i < static_cast<unsigned>(kBits); ++i) {
    std::uint32_t value = v[i - s] ^ (v[i - s] >> s);
    for (unsigned k = 1; k < s; ++k) {
      if ((e.coefficients >> (s - 1 - k)) & 1u) value ^= v[i - k];
    }
    v[i] = value;
  }
  return v;
}

bool power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

struct Indices {
  std::vector<double> S1;
  std::vector<double> ST;
};

Indices estimate(const Vector& fA, const Vector& fB, const std::vector<Vector>& fAB, const std::vector<Eigen::Index>& rows,
                 bool& degenerate) {
  const auto n = static_cast<double>(rows.size());
  double mean = 0.0;
  for (Eigen::Index r : rows) mean += fA(r) + fB(r);
  mean /= 2.0 * n;
  double var = 0.0;
  for (Eigen::Index r : rows) var += (fA(r) - mean) * (fA(r) - mean) + (fB(r) - mean) * (fB(r) - mean);
  var /= 2.0 * n - 1.0;

  Indices out;
  const double scale = std::max({std::abs(mean), fA.cwiseAbs().maxCoeff(), 1e-300});
  degenerate = !(var > 1e-24 * scale * scale);
  for (const Vector& fi : fAB) {
    if (degenerate) {
      out.S1.push_back(0.0);
      out.ST.push_back(0.0);
      continue;
    }
    double first = 0.0;
    double total = 0.0;
    for (Eigen::Index r : rows) {
      first += (fB(r) - mean) * (fi(r) - fA(r));
      total += (fA(r) - fi(r)) * (fA(r) - fi(r));
    }
    out.S1.push_back(first / n / var);
    out.ST.push_back(0.5 * total / n / var);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd sobol_sequence(std::size_t count, std::size_t dim, std::optional<std::uint64_t> shift_seed) {
  if (dim == 0 || dim > kMaxSobolDimension) throw std::invalid_argument("sobol_sequence: unsupported dimension");
  if (count > (std::size_t{1} << 31)) throw std::invalid_argument("sobol_sequence: too many points");
  std::vector<std::array<std::uint32_t, kBits>> v;
  std::vector<std::uint32_t> state(dim, 0);
  for (std::size_t d = 0; d < dim; ++d) v.push_back(direction_vector(d));
  if (shift_seed) {
    Rng rng(*shift_seed);
    for (auto& s : state) s = static_cast<std::uint32_t>(rng() >> 32);
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  constexpr double kScale = 1.0 / 4294967296.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0) {
      const int c = std::countr_one(static_cast<std::uint32_t>(i - 1));
      for (std::size_t d = 0; d < dim; ++d) state[d] ^= v[d][static_cast<std::size_t>(c)];
    }
    for (std::size_t d = 0; d < dim; ++d) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = static_cast<double>(state[d]) * kScale;
    }
  }
  return out;
}

Eigen::MatrixXd SaltelliDesign::stacked() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dim));
  const auto n = static_cast<Eigen::Index>(base_n);
  Eigen::Index block = 0;
  out.middleRows(n * block++, n) = A;
  out.middleRows(n * block++, n) = B;
  for (const auto& m : AB) out.middleRows(n * block++, n) = m;
  for (const auto& m : BA) out.middleRows(n * block++, n) = m;
  return out;
}

SaltelliDesign saltelli_sample(std::size_t dim, std::size_t base_n, std::uint64_t seed) {
  if (!power_of_two(base_n)) throw std::invalid_argument("saltelli_sample: base_n must be a power of two");
  if (dim == 0 || 2 * dim > kMaxSobolDimension) throw std::invalid_argument("saltelli_sample: unsupported dimension");
  const Eigen::MatrixXd base = sobol_sequence(base_n, 2 * dim, derive_seed(seed, Stream::Design, 1));
  SaltelliDesign d;
  d.dim = dim;
  d.base_n = base_n;
  const auto D = static_cast<Eigen::Index>(dim);
  d.A = base.leftCols(D);
  d.B = base.rightCols(D);
  for (Eigen::Index i = 0; i < D; ++i) {
    Eigen::MatrixXd ab = d.A;
    ab.col(i) = d.B.col(i);
    d.AB.push_back(std::move(ab));
    Eigen::MatrixXd ba = d.B;
    ba.col(i) = d.A.col(i);
    d.BA.push_back(std::move(ba));
  }
  return d;
}

SensitivityReport sobol_from_outputs(const SaltelliDesign& design, const Vector& outputs, std::uint64_t seed,
                                     std::size_t resamples) {
  if (static_cast<std::size_t>(outputs.size()) != design.size()) {
    throw std::invalid_argument("sobol: output count does not match the design");
  }
  const auto n = static_cast<Eigen::Index>(design.base_n);
  const Vector fA = outputs.segment(0, n);
  const Vector fB = outputs.segment(n, n);
  std::vector<Vector> fAB;
  for (std::size_t i = 0; i < design.dim; ++i) fAB.push_back(outputs.segment(n * (2 + static_cast<Eigen::Index>(i)), n));

  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) rows[static_cast<std::size_t>(r)] = r;

  SensitivityReport report;
  report.base_n = design.base_n;
  report.samples = design.size();
  for (std::size_t i = 0; i < design.dim; ++i) report.parameters.push_back("x" + std::to_string(i + 1));
  bool degenerate = false;
  const Indices full = estimate(fA, fB, fAB, rows, degenerate);
  report.S1 = full.S1;
  report.ST = full.ST;
  report.degenerate_variance = degenerate;
  report.S1_conf.assign(design.dim, 0.0);
  report.ST_conf.assign(design.dim, 0.0);
  if (degenerate || resamples < 2) return report;

  Rng rng = make_rng(seed, Stream::Bootstrap);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<std::vector<double>> s1(design.dim);
  std::vector<std::vector<double>> st(design.dim);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& r : rows) r = pick(rng);
    bool flag = false;
    const Indices est = estimate(fA, fB, fAB, rows, flag);
    if (flag) continue;
    for (std::size_t i = 0; i < design.dim; ++i) {
      s1[i].push_back(est.S1[i]);
      st[i].push_back(est.ST[i]);
    }
  }
  auto half_width = [](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return 1.96 * std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  for (std::size_t i = 0; i < design.dim; ++i) {
    report.S1_conf[i] = half_width(s1[i]);
    report.ST_conf[i] = half_width(st[i]);
  }
  return report;
}

SensitivityReport sobol_indices(const BatchFunction& f, std::size_t dim, std::size_t base_n, std::uint64_t seed,
                                std::size_t resamples) {
  const SaltelliDesign design = saltelli_sample(dim, base_n, seed);
  const Vector outputs = f(design.stacked());
  if (static_cast<std::size_t>(outputs.size()) != design.size() || !outputs.allFinite()) {
    throw std::invalid_argument("sobol: function returned an invalid output vector");
  }
  return sobol_from_outputs(design, outputs, seed, resamples);
}

SensitivityReport analyze_tuning(const TuningSpace& space, const std::vector<EvaluationRecord>& records,
                                 std::size_t base_n, std::uint64_t seed) {
  std::size_t usable = 0;
  for (const auto& r : records) usable += space.contains(r.config) && r.objective_value > 0.0 ? 1 : 0;
  if (usable < kMinSensitivityRecords) {
    throw std::invalid_argument("analyze_tuning: need at least " + std::to_string(kMinSensitivityRecords) +
                                " records, have " + std::to_string(usable));
  }
  GpFitOptions gp;
  gp.seed = derive_seed(seed, Stream::Hyperparameters);
  const GpModel model = fit_history(space, records, gp);
  const BatchFunction f = [&](const Eigen::MatrixXd& X) {
    Eigen::MatrixXd snapped(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      UnitPoint u{};
      for (std::size_t d = 0; d < u.size(); ++d) u[d] = X(i, static_cast<Eigen::Index>(d));
      u = snap(space, u);
      for (std::size_t d = 0; d < u.size(); ++d) snapped(i, static_cast<Eigen::Index>(d)) = u[d];
    }
    return model.predict_mean(snapped);
  };
  SensitivityReport report = sobol_indices(f, TuningSpace::kDimensions, base_n, seed);
  report.parameters = {"sap_algorithm", "sketching_operator", "sampling_factor", "vec_nnz", "safety_factor"};
  return report;
}

void write_sensitivity_csv(const std::filesystem::path& path, const SensitivityReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "parameter,S1,S1_conf,ST,ST_conf\n" << std::setprecision(6);
  for (std::size_t i = 0; i < report.parameters.size(); ++i) {
    out << report.parameters[i] << ',' << report.S1[i] << ',' << report.S1_conf[i] << ',' << report.ST[i] << ','
        << report.ST_conf[i] << '\n';
  }
}

}  // namespace saptune
