#ifndef HYPOLAB_FRAME_HPP
#define HYPOLAB_FRAME_HPP

// Bracket-generated frame: the generators X_1..X_k followed by greedily
// selected higher brackets Y_1..Y_{d-k}, each Y_j tagged with the
// multi-index of the bracket that produced it.  The frame is declared
// orthonormal, which fixes the inner product used everywhere downstream;
// the basis change and its inverse are computed exactly.

#include <stdexcept>
#include <vector>

#include "hypolab/algebra.hpp"

namespace hypolab {

struct Frame {
  int dim = 0;
  int num_generators = 0;
  bool complete = false;              // true iff the brackets span the algebra
  bool identity = false;              // true iff the frame is the standard basis
  std::vector<MultiIndex> y_alpha;    // producing multi-index per Y_j (1-based entries)
  std::vector<RatVec> columns_exact;  // frame vectors in structure-basis coordinates
  std::vector<RatVec> basis_inv_exact;  // rows of the exact inverse (square frames)
  Mat basis;                          // column j = j-th frame vector
  Mat basis_inv;                      // exact inverse, converted to double
  int depth = 0;                      // deepest bracket level used

  // Coordinates of an algebra vector in the frame.
  Vec to_frame(const Vec& v) const { return basis_inv * v; }
  Vec from_frame(const Vec& c) const { return basis * c; }
};

inline Frame build_frame(const LieAlgebraSpec& spec) {
  const HoermanderLevels lv = hoermander_levels(spec);
  const int d = spec.dim;
  const int k = spec.num_generators();

  Frame fr;
  fr.dim = d;
  fr.num_generators = k;
  fr.complete = lv.generating;

  RatRowReducer reducer;
  std::vector<RatVec> cols;
  for (int i = 0; i < k; ++i) {
    RatVec e = rat_basis_vector(d, spec.generators[i]);
    if (!reducer.insert(e))
      throw std::invalid_argument("frame: generators are linearly dependent");
    cols.push_back(std::move(e));
  }
  // Greedy scan over bracket levels (depth >= 2) in stored order.
  for (std::size_t r = 1; r < lv.levels.size(); ++r) {
    for (const auto& entry : lv.levels[r]) {
      if (reducer.insert(entry.vec)) {
        cols.push_back(entry.vec);
        fr.y_alpha.push_back(entry.alpha);
        fr.depth = static_cast<int>(r) + 1;
      }
    }
  }
  if (fr.complete && static_cast<int>(cols.size()) != d)
    throw std::logic_error("frame: generating levels did not yield a full basis");

  const int m = static_cast<int>(cols.size());
  fr.columns_exact = cols;
  fr.basis = Mat::Zero(d, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < d; ++i) fr.basis(i, j) = to_double(cols[j][i]);

  if (m == d) {
    // Exact Gauss-Jordan inverse over the rationals.
    std::vector<RatVec> aug(d, RatVec(2 * d, Rat(0)));
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) aug[i][j] = cols[j][i];
      aug[i][d + i] = Rat(1);
    }
    for (int c = 0; c < d; ++c) {
      int piv = -1;
      for (int r = c; r < d; ++r)
        if (aug[r][c] != 0) { piv = r; break; }
      if (piv < 0) throw std::logic_error("frame: singular basis matrix");
      std::swap(aug[c], aug[piv]);
      const Rat p = aug[c][c];
      for (int j = 0; j < 2 * d; ++j) aug[c][j] /= p;
      for (int r = 0; r < d; ++r) {
        if (r == c || aug[r][c] == 0) continue;
        const Rat f = aug[r][c];
        for (int j = 0; j < 2 * d; ++j) aug[r][j] -= f * aug[c][j];
      }
    }
    fr.basis_inv = Mat(d, d);
    fr.basis_inv_exact.assign(d, RatVec(d, Rat(0)));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        fr.basis_inv_exact[i][j] = aug[i][d + j];
        fr.basis_inv(i, j) = to_double(aug[i][d + j]);
      }
    fr.identity = fr.basis.isIdentity(0.0);
  }
  return fr;
}

}  // namespace hypolab

#endif  // HYPOLAB_FRAME_HPP
