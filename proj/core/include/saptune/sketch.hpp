#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "saptune/common.hpp"

namespace saptune {

/// SJLT: k nonzeros of +-1/sqrt(k) per column.
/// LessUniform: k nonzeros of +-sqrt(m/(k d)) per row.
enum class SketchKind { SJLT, LessUniform };

std::string_view to_string(SketchKind kind);
SketchKind parse_sketch_kind(std::string_view text);

/// A sampled d x m sparse sketching operator. SJLT is stored column-compressed
/// and LessUniform row-compressed; each group holds exactly k entries with
/// strictly increasing indices.
class SketchOperator {
 public:
  SketchOperator(SketchKind kind, std::size_t d, std::size_t m, std::size_t k, std::uint64_t seed,
                 std::vector<std::uint32_t> indices, std::vector<double> values);

  SketchKind kind() const { return kind_; }
  std::size_t rows() const { return d_; }
  std::size_t cols() const { return m_; }
  /// Nonzeros per column (SJLT) or per row (LessUniform), after clamping.
  std::size_t nnz_per_group() const { return k_; }
  std::size_t nnz() const { return values_.size(); }
  std::uint64_t seed() const { return seed_; }

  /// Number of compressed groups: m columns for SJLT, d rows for LessUniform.
  std::size_t groups() const { return kind_ == SketchKind::SJLT ? m_ : d_; }
  std::span<const std::uint32_t> group_indices(std::size_t g) const {
    return {indices_.data() + g * k_, k_};
  }
  std::span<const double> group_values(std::size_t g) const { return {values_.data() + g * k_, k_}; }

  DenseMatrix to_dense() const;

 private:
  SketchKind kind_;
  std::size_t d_;
  std::size_t m_;
  std::size_t k_;
  std::uint64_t seed_;
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

/// Samples an operator; k is clamped to d (SJLT) or m (LessUniform).
/// Throws std::invalid_argument on nonpositive d, m or k.
SketchOperator sample_operator(SketchKind kind, std::size_t d, std::size_t m, std::size_t k, std::uint64_t seed);

/// S * A for row-major A with S.cols() rows.
DenseMatrix apply(const SketchOperator& S, const DenseMatrix& A);

/// S * v.
Vector apply_vector(const SketchOperator& S, const Vector& v);

}  // namespace saptune
