#include "saptune/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "saptune/rng.hpp"

namespace saptune {

std::string_view to_string(SketchKind kind) {
  return kind == SketchKind::SJLT ? "SJLT" : "LessUniform";
}

SketchKind parse_sketch_kind(std::string_view text) {
  if (text == "SJLT") return SketchKind::SJLT;
  if (text == "LessUniform") return SketchKind::LessUniform;
  throw std::invalid_argument("unknown sketching operator '" + std::string(text) +
                              "' (expected SJLT or LessUniform)");
}

SketchOperator::SketchOperator(SketchKind kind, std::size_t d, std::size_t m, std::size_t k,
                               std::uint64_t seed, std::vector<std::uint32_t> indices,
                               std::vector<double> values)
    : kind_(kind), d_(d), m_(m), k_(k), seed_(seed), indices_(std::move(indices)), values_(std::move(values)) {
  if (indices_.size() != values_.size() || indices_.size() != groups() * k_) {
    throw std::invalid_argument("SketchOperator: inconsistent compressed storage");
  }
}

DenseMatrix SketchOperator::to_dense() const {
  DenseMatrix S = DenseMatrix::Zero(static_cast<Eigen::Index>(d_), static_cast<Eigen::Index>(m_));
  for (std::size_t g = 0; g < groups(); ++g) {
    const auto idx = group_indices(g);
    const auto val = group_values(g);
    for (std::size_t e = 0; e < k_; ++e) {
      if (kind_ == SketchKind::SJLT) {
        S(idx[e], static_cast<Eigen::Index>(g)) = val[e];
      } else {
        S(static_cast<Eigen::Index>(g), idx[e]) = val[e];
      }
    }
  }
  return S;
}

SketchOperator sample_operator(SketchKind kind, std::size_t d, std::size_t m, std::size_t k, std::uint64_t seed) {
  if (d == 0 || m == 0 || k == 0) throw std::invalid_argument("sample_operator: d, m and k must be positive");
  const bool sjlt = kind == SketchKind::SJLT;
  const std::size_t range = sjlt ? d : m;    // indices are drawn from this set
  const std::size_t groups = sjlt ? m : d;   // one draw per column / row
  const std::size_t kk = std::min(k, range);
  const double magnitude = sjlt ? 1.0 / std::sqrt(static_cast<double>(kk))
                                : std::sqrt(static_cast<double>(m) / (static_cast<double>(kk) * d));

  Rng rng = make_rng(seed, Stream::Sketch);
  std::vector<std::uint32_t> perm(range);
  std::iota(perm.begin(), perm.end(), 0u);
  std::vector<std::size_t> swaps(kk);

  std::vector<std::uint32_t> indices(groups * kk);
  std::vector<double> values(groups * kk);
  for (std::size_t g = 0; g < groups; ++g) {
    // Partial Fisher-Yates; the swaps are undone afterwards so perm stays the identity.
    for (std::size_t e = 0; e < kk; ++e) {
      std::uniform_int_distribution<std::size_t> pick(e, range - 1);
      const std::size_t r = pick(rng);
      swaps[e] = r;
      std::swap(perm[e], perm[r]);
    }
    std::uint32_t* out = indices.data() + g * kk;
    std::copy(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(kk), out);
    for (std::size_t e = kk; e-- > 0;) std::swap(perm[e], perm[swaps[e]]);
    std::sort(out, out + kk);
    for (std::size_t e = 0; e < kk; ++e) {
      values[g * kk + e] = (rng() & 1u) ? magnitude : -magnitude;
    }
  }
  return SketchOperator(kind, d, m, kk, seed, std::move(indices), std::move(values));
}

DenseMatrix apply(const SketchOperator& S, const DenseMatrix& A) {
  if (static_cast<std::size_t>(A.rows()) != S.cols()) {
    throw std::invalid_argument("apply: sketch has " + std::to_string(S.cols()) + " columns but matrix has " +
                                std::to_string(A.rows()) + " rows");
  }
  DenseMatrix out = DenseMatrix::Zero(static_cast<Eigen::Index>(S.rows()), A.cols());
  if (S.kind() == SketchKind::SJLT) {
    // Scatter row j of A into the k output rows hit by column j of S.
    for (std::size_t j = 0; j < S.groups(); ++j) {
      const auto idx = S.group_indices(j);
      const auto val = S.group_values(j);
      const auto src = A.row(static_cast<Eigen::Index>(j));
      for (std::size_t e = 0; e < idx.size(); ++e) out.row(idx[e]) += val[e] * src;
    }
  } else {
    for (std::size_t r = 0; r < S.groups(); ++r) {
      const auto idx = S.group_indices(r);
      const auto val = S.group_values(r);
      auto dst = out.row(static_cast<Eigen::Index>(r));
      for (std::size_t e = 0; e < idx.size(); ++e) dst += val[e] * A.row(idx[e]);
    }
  }
  return out;
}

Vector apply_vector(const SketchOperator& S, const Vector& v) {
  if (static_cast<std::size_t>(v.size()) != S.cols()) {
    throw std::invalid_argument("apply_vector: length mismatch");
  }
  Vector out = Vector::Zero(static_cast<Eigen::Index>(S.rows()));
  for (std::size_t g = 0; g < S.groups(); ++g) {
    const auto idx = S.group_indices(g);
    const auto val = S.group_values(g);
    if (S.kind() == SketchKind::SJLT) {
      const double x = v(static_cast<Eigen::Index>(g));
      for (std::size_t e = 0; e < idx.size(); ++e) out(idx[e]) += val[e] * x;
    } else {
      double acc = 0.0;
      for (std::size_t e = 0; e < idx.size(); ++e) acc += val[e] * v(idx[e]);
      out(static_cast<Eigen::Index>(g)) = acc;
    }
  }
  return out;
}

}  // namespace saptune
