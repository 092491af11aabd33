#ifndef HYPOLAB_MALLIAVIN_HPP
#define HYPOLAB_MALLIAVIN_HPP

// Per-path Malliavin objects on the discretized Wiener space: covariance
// matrix (frame coordinates, left-Riemann sum, exact Ad), lifted vector
// fields, finite-difference Malliavin gradients, Skorokhod divergence by
// Gaussian integration by parts, and the adjoint operator X* built from
// them.  All time integrals use the left-Riemann sum on the common grid so
// the lifted-field pairing identity holds to round-off.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "hypolab/path.hpp"

namespace hypolab {

struct CovarianceMatrix {
  Mat sigma_bar;      // d×d, frame coordinates
  double det = 0.0;
  double min_eig = 0.0;
  double cond = std::numeric_limits<double>::infinity();
  int t_index = 0;
  bool singular = true;

  Mat inverse() const {
    if (singular) {
      std::ostringstream os;
      os << "covariance: singular matrix (min eigenvalue " << min_eig
         << "); refusing to regularize";
      throw std::runtime_error(os.str());
    }
    return sigma_bar.llt().solve(Mat::Identity(sigma_bar.rows(), sigma_bar.cols()));
  }
};

// Reusable buffers for the per-step adjoint matrices in hot loops.
struct LiftedScratch {
  AdScratch ad_ws;
  Mat ad;        // structure-basis Ad
  Mat ad_frame;  // frame-coordinate Ad
  Mat prod;
  Mat sigma;
  Vec rhs, u, tmp;
};

namespace detail {

// Frame-coordinate Ad of exp(w) written into ws.ad_frame.
inline void adjoint_frame_to(const Group& g, const Vec& w, LiftedScratch& ws) {
  const Frame& fr = g.frame();
  if (fr.identity) {
    Ad_of_exp_to(g.spec(), w, ws.ad_ws, ws.ad_frame);
    return;
  }
  Ad_of_exp_to(g.spec(), w, ws.ad_ws, ws.ad);
  ws.prod.noalias() = ws.ad * fr.basis;
  ws.ad_frame.noalias() = fr.basis_inv * ws.prod;
}

// σ̄_t in frame coordinates accumulated into ws.sigma (d×d).
inline void covariance_to(const DiscretePath& path, int t_index, LiftedScratch& ws) {
  const Group& g = path.group();
  const int d = g.dim();
  const int k = g.num_generators();
  ws.sigma.resize(d, d);
  ws.sigma.setZero();
  for (int s = 0; s < t_index; ++s) {
    adjoint_frame_to(g, path.coords(s), ws);
    ws.sigma.noalias() += ws.ad_frame.leftCols(k) * ws.ad_frame.leftCols(k).transpose();
  }
  ws.sigma *= path.dt();
}

}  // namespace detail

inline CovarianceMatrix covariance(const DiscretePath& path, int t_index) {
  const Group& g = path.group();
  if (!g.frame().complete)
    throw std::invalid_argument("covariance: frame does not span the algebra (no Hörmander basis)");
  if (t_index < 0 || t_index > path.n())
    throw std::invalid_argument("covariance: t_index out of range");

  LiftedScratch ws;
  detail::covariance_to(path, t_index, ws);

  CovarianceMatrix cov;
  cov.sigma_bar = ws.sigma;
  cov.t_index = t_index;
  Eigen::SelfAdjointEigenSolver<Mat> es(cov.sigma_bar);
  const Vec ev = es.eigenvalues();
  cov.min_eig = ev.minCoeff();
  cov.det = ev.prod();
  cov.singular = !(cov.min_eig > 0.0) || !std::isfinite(cov.det);
  cov.cond = cov.singular ? std::numeric_limits<double>::infinity()
                          : ev.maxCoeff() / cov.min_eig;
  return cov;
}

// ḣ_{i,s} = 1_{s < t_index} <Ad_{ξ_s}^† σ̄_t^{-1} Ad_{ξ_t} X, X_i> written
// into hdot (k×n).  X is given in structure-basis coordinates.
inline void lifted_field_into(const DiscretePath& path, const Vec& X, int t_index, Mat& hdot,
                              LiftedScratch& ws) {
  const Group& g = path.group();
  const Frame& fr = g.frame();
  if (!fr.complete)
    throw std::invalid_argument("lifted_field: frame does not span the algebra");
  const int d = g.dim();
  const int k = g.num_generators();
  const int n = path.n();

  detail::covariance_to(path, t_index, ws);
  Eigen::LLT<Mat> llt(ws.sigma);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Mat> es(ws.sigma);
    std::ostringstream os;
    os << "lifted_field: singular covariance (min eigenvalue " << es.eigenvalues().minCoeff()
       << ")";
    throw std::runtime_error(os.str());
  }

  detail::adjoint_frame_to(g, path.coords(t_index), ws);
  ws.tmp.resize(d);
  ws.tmp.noalias() = fr.basis_inv * X;
  ws.rhs.resize(d);
  ws.rhs.noalias() = ws.ad_frame * ws.tmp;
  ws.u = llt.solve(ws.rhs);

  hdot.resize(k, n);
  hdot.setZero();
  for (int s = 0; s < t_index; ++s) {
    detail::adjoint_frame_to(g, path.coords(s), ws);
    ws.tmp.noalias() = ws.ad_frame.transpose() * ws.u;
    hdot.col(s) = ws.tmp.head(k);
  }
}

inline CameronMartinVector lifted_field(const DiscretePath& path, const Vec& X, int t_index) {
  CameronMartinVector h;
  h.dt = path.dt();
  LiftedScratch ws;
  lifted_field_into(path, X, t_index, h.hdot, ws);
  return h;
}

// D F by per-increment central finite differences: component (i,s) of the
// ḣ-representation is ∂F/∂Δb_{i,s}, so (DF, h)_H = ∂_h F for every grid h.
inline CameronMartinVector malliavin_gradient_fd(const PathFunctional& F,
                                                 const DiscretePath& path) {
  const int k = path.group().num_generators();
  const int n = path.n();
  const double eps = 1e-5 * std::sqrt(path.dt());
  CameronMartinVector v;
  v.dt = path.dt();
  v.hdot.resize(k, n);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < k; ++i) {
      const double fp = F(path.bumped(i, s, eps));
      const double fm = F(path.bumped(i, s, -eps));
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("malliavin_gradient_fd: non-finite functional value");
      v.hdot(i, s) = (fp - fm) / (2.0 * eps);
    }
  }
  return v;
}

using CmField = std::function<CameronMartinVector(const DiscretePath&)>;

// Skorokhod divergence by Gaussian integration by parts:
//   δ(u) = Σ_{i,s} u̇_{i,s} Δb_{i,s} − Σ_{i,s} (∂u̇_{i,s}/∂Δb_{i,s})·dt,
// the diagonal partials by central finite differences.
inline double divergence(const CmField& u, const DiscretePath& path) {
  const int k = path.group().num_generators();
  const int n = path.n();
  const double dt = path.dt();
  const double eps = 1e-5 * std::sqrt(dt);

  const CameronMartinVector base = u(path);
  if (base.hdot.rows() != k || base.hdot.cols() != n)
    throw std::invalid_argument("divergence: field shape mismatch");

  double wiener = 0.0;
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < k; ++i) wiener += base.hdot(i, s) * path.increments()(i, s);

  double trace = 0.0;
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < k; ++i) {
      const double up = u(path.bumped(i, s, eps)).hdot(i, s);
      const double um = u(path.bumped(i, s, -eps)).hdot(i, s);
      if (!std::isfinite(up) || !std::isfinite(um))
        throw std::runtime_error("divergence: non-finite field value");
      trace += (up - um) / (2.0 * eps);
    }
  }
  return wiener - trace * dt;
}

// Workspace for the fused δ(𝐗) fast path: caches the base path's frame-Ad
// matrices and unscaled covariance prefix sums so each perturbation sweep
// re-computes only its suffix.  Produces the same value as divergence() on
// the lifted-field closure (same finite differences, same summation order).
struct LiftedDivergenceWorkspace {
  LiftedScratch lifted;
  std::vector<Mat> ad_base;   // frame Ads of the base path, 0..t_index
  std::vector<Mat> prefix;    // prefix[u] = Σ_{v<u} A_k A_k^T (unscaled by dt)
  Mat sigma_bump;
  Vec xf, rhs, u, tmp;
  std::optional<DiscretePath> bump;
};

inline double divergence_lifted(const DiscretePath& path, const Vec& X, int t_index,
                                LiftedDivergenceWorkspace& ws) {
  const Group& g = path.group();
  const Frame& fr = g.frame();
  if (!fr.complete)
    throw std::invalid_argument("divergence_lifted: frame does not span the algebra");
  const int d = g.dim();
  const int k = g.num_generators();
  const double dt = path.dt();
  const double eps = 1e-5 * std::sqrt(dt);

  // Base-path caches.
  ws.ad_base.resize(t_index + 1);
  ws.prefix.resize(t_index + 1);
  if (ws.prefix[0].rows() != d) ws.prefix[0] = Mat::Zero(d, d);
  ws.prefix[0].setZero();
  for (int s = 0; s < t_index; ++s) {
    detail::adjoint_frame_to(g, path.coords(s), ws.lifted);
    ws.ad_base[s] = ws.lifted.ad_frame;
    ws.prefix[s + 1] = ws.prefix[s];
    ws.prefix[s + 1].noalias() +=
        ws.ad_base[s].leftCols(k) * ws.ad_base[s].leftCols(k).transpose();
  }
  detail::adjoint_frame_to(g, path.coords(t_index), ws.lifted);
  ws.ad_base[t_index] = ws.lifted.ad_frame;

  ws.xf.resize(d);
  ws.xf.noalias() = fr.basis_inv * X;
  ws.sigma_bump = ws.prefix[t_index] * dt;
  Eigen::LLT<Mat> llt(ws.sigma_bump);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("divergence_lifted: singular covariance");
  ws.rhs.resize(d);
  ws.rhs.noalias() = ws.ad_base[t_index] * ws.xf;
  ws.u = llt.solve(ws.rhs);

  // Wiener-integral term Σ ḣ_{i,s} Δb_{i,s} of the base field.
  double wiener = 0.0;
  ws.tmp.resize(d);
  for (int s = 0; s < t_index; ++s) {
    ws.tmp.noalias() = ws.ad_base[s].transpose() * ws.u;
    for (int i = 0; i < k; ++i) wiener += ws.tmp[i] * path.increments()(i, s);
  }

  // Diagonal partials ∂ḣ_{i,s}/∂Δb_{i,s}: the bump at step s leaves ξ_u for
  // u ≤ s (hence the prefix sums and the pairing Ad at s) unchanged.
  if (!ws.bump)
    ws.bump.emplace(path);
  double trace = 0.0;
  for (int s = 0; s < t_index; ++s) {
    for (int i = 0; i < k; ++i) {
      double val[2];
      for (int sgn = 0; sgn < 2; ++sgn) {
        ws.bump->copy_state_from(path);
        ws.bump->bump_in_place(i, s, sgn == 0 ? eps : -eps);
        ws.sigma_bump = ws.prefix[s + 1];
        for (int u2 = s + 1; u2 < t_index; ++u2) {
          detail::adjoint_frame_to(g, ws.bump->coords(u2), ws.lifted);
          ws.sigma_bump.noalias() +=
              ws.lifted.ad_frame.leftCols(k) * ws.lifted.ad_frame.leftCols(k).transpose();
        }
        ws.sigma_bump *= dt;
        Eigen::LLT<Mat> llt2(ws.sigma_bump);
        if (llt2.info() != Eigen::Success)
          throw std::runtime_error("divergence_lifted: singular covariance under perturbation");
        detail::adjoint_frame_to(g, ws.bump->coords(t_index), ws.lifted);
        ws.rhs.noalias() = ws.lifted.ad_frame * ws.xf;
        ws.u = llt2.solve(ws.rhs);
        ws.tmp.noalias() = ws.ad_base[s].transpose() * ws.u;
        val[sgn] = ws.tmp[i];
      }
      trace += (val[0] - val[1]) / (2.0 * eps);
    }
  }
  return wiener - trace * dt;
}

// ∂_h* G = −∂_h G + (Σ_{i,s} ḣ_{i,s} Δb_{i,s})·G.
inline double dh_adjoint(const CameronMartinVector& h, const PathFunctional& G,
                         const DiscretePath& path) {
  const double dG = directional_derivative_fd(G, path, h);
  double wiener = 0.0;
  for (int s = 0; s < path.n(); ++s)
    for (int i = 0; i < path.group().num_generators(); ++i)
      wiener += h.hdot(i, s) * path.increments()(i, s);
  return -dG + wiener * G(path);
}

// X*G = G·δ(𝐗) − (D_fd G, 𝐗)_H with 𝐗 = lifted_field(X).
inline double adjoint_apply(const Vec& X, const PathFunctional& G, const DiscretePath& path,
                            int t_index) {
  const CmField field = [&X, t_index](const DiscretePath& p) {
    return lifted_field(p, X, t_index);
  };
  const double div = divergence(field, path);
  const CameronMartinVector xs = lifted_field(path, X, t_index);
  const CameronMartinVector dg = malliavin_gradient_fd(G, path);
  return G(path) * div - dg.inner(xs);
}

// Nested adjoints are capped: depth 1 by default, depth 2 allowed on grids
// with n ≤ 32 (cost grows as (kn)^{depth+1}).
inline int adjoint_depth_cap(int n) { return n <= 32 ? 2 : 1; }

inline void check_adjoint_depth(int depth, int n) {
  if (depth > adjoint_depth_cap(n)) {
    std::ostringstream os;
    os << "adjoint_apply: iteration depth " << depth << " exceeds cap " << adjoint_depth_cap(n)
       << " at n = " << n;
    throw std::invalid_argument(os.str());
  }
}

struct DetMomentEstimate {
  double q = 0.0;
  double value = 0.0;
  double half_width = 0.0;
};

struct DetMomentsReport {
  std::vector<DetMomentEstimate> moments;
  double min_det = std::numeric_limits<double>::infinity();
  double underflow_fraction = 0.0;  // paths with Δ_t below float underflow
  bool all_positive = true;
};

// Empirical E[Δ_t^{-q}] with normal CIs, plus positivity diagnostics.
inline DetMomentsReport det_inverse_moments(const Group& group, double t, int n, int N,
                                            const std::vector<double>& q_list,
                                            std::uint64_t seed) {
  if (!group.frame().complete)
    throw std::invalid_argument("det_inverse_moments: spec is not Hörmander-generating");
  DetMomentsReport rep;
  std::vector<double> sum(q_list.size(), 0.0), sumsq(q_list.size(), 0.0);
  int underflow = 0;
  LiftedScratch ws;
  for (int j = 0; j < N; ++j) {
    const DiscretePath path = DiscretePath::sample(group, t, n, seed, j);
    detail::covariance_to(path, n, ws);
    const double det = ws.sigma.determinant();
    rep.min_det = std::min(rep.min_det, det);
    if (!(det > 0.0)) rep.all_positive = false;
    if (det < std::numeric_limits<double>::min()) ++underflow;
    for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
      const double v = std::pow(det, -q_list[qi]);
      sum[qi] += v;
      sumsq[qi] += v * v;
    }
  }
  rep.underflow_fraction = static_cast<double>(underflow) / N;
  for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
    DetMomentEstimate e;
    e.q = q_list[qi];
    e.value = sum[qi] / N;
    const double var = std::max(0.0, sumsq[qi] / N - e.value * e.value);
    e.half_width = 1.96 * std::sqrt(var / N);
    rep.moments.push_back(e);
  }
  return rep;
}

}  // namespace hypolab

#endif  // HYPOLAB_MALLIAVIN_HPP
