#include "carto/sparse.hpp"

#include <algorithm>

namespace carto {

CsrPattern CsrPattern::from_pairs(
    std::size_t n_rows, std::size_t n_cols,
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  CsrPattern m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.row_ptr.assign(n_rows + 1, 0);
  m.col.reserve(pairs.size());
  for (const auto& [r, c] : pairs) {
    ++m.row_ptr[r + 1];
    m.col.push_back(c);
  }
  for (std::size_t r = 0; r < n_rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CsrPattern CsrPattern::transposed() const {
  CsrPattern t;
  t.n_rows = n_cols;
  t.n_cols = n_rows;
  t.row_ptr.assign(n_cols + 1, 0);
  for (auto c : col) ++t.row_ptr[c + 1];
  for (std::size_t c = 0; c < n_cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];
  t.col.resize(col.size());
  std::vector<std::size_t> fill(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // Rows are visited in order, so each transposed row comes out sorted.
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (auto c : row(r)) t.col[fill[c]++] = static_cast<std::uint32_t>(r);
  }
  return t;
}

std::vector<std::size_t> CsrPattern::column_degrees() const {
  std::vector<std::size_t> deg(n_cols, 0);
  for (auto c : col) ++deg[c];
  return deg;
}

}  // namespace carto
