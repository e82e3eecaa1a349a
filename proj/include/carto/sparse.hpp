#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace carto {

/// Binary sparse matrix in compressed-row form. Column indices within a row
/// are sorted and unique.
struct CsrPattern {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col;

  std::size_t nnz() const noexcept { return col.size(); }
  std::size_t row_degree(std::size_t r) const noexcept {
    return row_ptr[r + 1] - row_ptr[r];
  }
  std::span<const std::uint32_t> row(std::size_t r) const noexcept {
    return {col.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }

  /// Builds from (row, col) pairs; duplicates are removed.
  static CsrPattern from_pairs(
      std::size_t n_rows, std::size_t n_cols,
      std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs);

  CsrPattern transposed() const;
  std::vector<std::size_t> column_degrees() const;
};

}  // namespace carto
