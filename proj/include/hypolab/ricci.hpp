#ifndef HYPOLAB_RICCI_HPP
#define HYPOLAB_RICCI_HPP

// Ricci curvature of the left-invariant metric on a nilpotent group that
// declares the generator basis orthonormal (elliptic case: the generators
// span the algebra).  For unimodular nilpotent groups the Ricci tensor in
// an orthonormal basis {e_i} is
//   Ric(u,v) = -1/2 Σ_i <[u,e_i],[v,e_i]> + 1/4 Σ_{i,j} <[e_i,e_j],u><[e_i,e_j],v>.

#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hypolab/algebra.hpp"

namespace hypolab {

// Structure constants re-expressed in the generator basis, which must be a
// basis of the whole algebra.  Exact rational arithmetic throughout.
inline std::vector<std::vector<RatVec>> generator_structure_constants(const LieAlgebraSpec& spec) {
  const int d = spec.dim;
  const int k = spec.num_generators();
  if (k != d) throw std::invalid_argument("ricci: generators do not span the algebra");

  // Columns of the basis-change matrix.
  std::vector<RatVec> cols;
  cols.reserve(d);
  for (int gi : spec.generators) cols.push_back(rat_basis_vector(d, gi));

  // Exact inverse via Gauss-Jordan.
  std::vector<RatVec> aug(d, RatVec(2 * d, Rat(0)));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) aug[i][j] = cols[j][i];
    aug[i][d + i] = Rat(1);
  }
  for (int c = 0; c < d; ++c) {
    int piv = -1;
    for (int r = c; r < d; ++r)
      if (aug[r][c] != 0) { piv = r; break; }
    if (piv < 0) throw std::invalid_argument("ricci: generators do not span the algebra");
    std::swap(aug[c], aug[piv]);
    const Rat p = aug[c][c];
    for (int j = 0; j < 2 * d; ++j) aug[c][j] /= p;
    for (int r = 0; r < d; ++r) {
      if (r == c || aug[r][c] == 0) continue;
      const Rat f = aug[r][c];
      for (int j = 0; j < 2 * d; ++j) aug[r][j] -= f * aug[c][j];
    }
  }

  auto inv_apply = [&](const RatVec& v) {
    RatVec out(d, Rat(0));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out[i] += aug[i][d + j] * v[j];
    return out;
  };

  std::vector<std::vector<RatVec>> c(d, std::vector<RatVec>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) c[i][j] = inv_apply(spec.bracket(cols[i], cols[j]));
  return c;
}

inline Mat ricci_matrix(const LieAlgebraSpec& spec) {
  const int d = spec.dim;
  const auto c = generator_structure_constants(spec);

  Mat ric = Mat::Zero(d, d);
  for (int u = 0; u < d; ++u) {
    for (int v = 0; v < d; ++v) {
      double a = 0.0;  // Σ_i <[e_u,e_i],[e_v,e_i]>
      for (int i = 0; i < d; ++i)
        for (int l = 0; l < d; ++l) a += to_double(c[u][i][l]) * to_double(c[v][i][l]);
      double b = 0.0;  // Σ_{i,j} <[e_i,e_j],e_u><[e_i,e_j],e_v>  (ordered pairs)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b += to_double(c[i][j][u]) * to_double(c[i][j][v]);
      ric(u, v) = -0.5 * a + 0.25 * b;
    }
  }
  return ric;
}

inline double ricci_lower_bound(const LieAlgebraSpec& spec) {
  const Mat ric = ricci_matrix(spec);
  Eigen::SelfAdjointEigenSolver<Mat> es(ric);
  return es.eigenvalues().minCoeff();
}

}  // namespace hypolab

#endif  // HYPOLAB_RICCI_HPP
