#ifndef HYPOLAB_PATH_HPP
#define HYPOLAB_PATH_HPP

// Discretized Wiener paths rolled onto the group: exponential-Euler scheme
// ξ_{s+1} = ξ_s · exp(Σ_i Δb_{i,s} X_i), with counter-based increments so a
// path is a pure function of (seed, stream).  Cameron-Martin directions,
// directional derivatives, and the per-path adjoint trajectory live here.

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "hypolab/group.hpp"
#include "hypolab/rng.hpp"

namespace hypolab {

struct CameronMartinVector {
  Mat hdot;   // k×n samples of the derivative, piecewise constant on the grid
  double dt = 0.0;

  double inner(const CameronMartinVector& other) const {
    if (hdot.rows() != other.hdot.rows() || hdot.cols() != other.hdot.cols())
      throw std::invalid_argument("cameron-martin inner product: shape mismatch");
    return hdot.cwiseProduct(other.hdot).sum() * dt;
  }
  double norm_sq() const { return hdot.squaredNorm() * dt; }
  double norm() const { return std::sqrt(norm_sq()); }
};

class DiscretePath {
 public:
  static DiscretePath sample(const Group& group, double t, int n, std::uint64_t seed,
                             std::uint64_t stream) {
    if (n < 1) throw std::invalid_argument("sample_path: need n >= 1");
    if (!(t > 0.0)) throw std::invalid_argument("sample_path: need t > 0");
    DiscretePath p(group, t, n, seed, stream);
    const int k = group.num_generators();
    const double sqrt_dt = std::sqrt(p.dt_);
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < k; ++i)
        p.incr_(i, s) = sqrt_dt * normal_draw(seed, stream, static_cast<std::uint32_t>(s),
                                              static_cast<std::uint32_t>(i));
    p.roll_from(0);
    return p;
  }

  // Roll externally supplied increments (e.g. the same noise in another group).
  static DiscretePath from_increments(const Group& group, const Mat& increments, double t,
                                      std::uint64_t seed = 0, std::uint64_t stream = 0) {
    const int n = static_cast<int>(increments.cols());
    if (n < 1) throw std::invalid_argument("from_increments: need n >= 1");
    if (increments.rows() != group.num_generators())
      throw std::invalid_argument("from_increments: increment rows must equal generator count");
    DiscretePath p(group, t, n, seed, stream);
    p.incr_ = increments;
    p.roll_from(0);
    return p;
  }

  const Group& group() const { return *group_; }
  int n() const { return n_; }
  double t() const { return t_; }
  double dt() const { return dt_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  const Mat& increments() const { return incr_; }
  const Mat& trajectory() const { return traj_; }

  Vec coords(int s) const { return traj_.col(s); }
  Vec endpoint() const { return traj_.col(n_); }

  // Copy with one increment bumped; only the suffix is re-rolled.
  DiscretePath bumped(int i, int s, double delta) const {
    DiscretePath p = *this;
    p.incr_(i, s) += delta;
    p.roll_from(s);
    return p;
  }

  // In-place bump for perturbation sweeps over a reused buffer path.
  void bump_in_place(int i, int s, double delta) {
    incr_(i, s) += delta;
    roll_from(s);
  }

  // Restore increments/trajectory from another path (same group and grid);
  // reuses this path's storage.
  void copy_state_from(const DiscretePath& other) {
    incr_ = other.incr_;
    traj_ = other.traj_;
    seed_ = other.seed_;
    stream_ = other.stream_;
  }

  // Copy shifted by ε·h (adds ε·ḣ_{i,s}·dt to every increment).
  DiscretePath perturbed(const CameronMartinVector& h, double eps) const {
    if (h.hdot.rows() != incr_.rows() || h.hdot.cols() != incr_.cols())
      throw std::invalid_argument("perturb: cameron-martin shape mismatch");
    DiscretePath p = *this;
    p.incr_ += (eps * dt_) * h.hdot;
    p.roll_from(0);
    return p;
  }

  void roll_from(int s0) {
    const int d = group_->dim();
    const int k = group_->num_generators();
    if (s0 == 0) traj_.col(0).setZero();
    // Thread-local buffers: rolling is the innermost loop of every
    // finite-difference sweep and must not allocate.
    thread_local Vec v, cur, next;
    thread_local BchTable::Scratch ws;
    if (v.size() != d) {
      v = Vec::Zero(d);
      cur = Vec::Zero(d);
      next = Vec::Zero(d);
      ws.val.clear();
    }
    const auto& spec = group_->spec();
    const auto& table = group_->bch_table();
    for (int s = s0; s < n_; ++s) {
      v.setZero();
      for (int i = 0; i < k; ++i) v[spec.generators[i]] = incr_(i, s);
      cur = traj_.col(s);
      table.eval_to(spec, cur, v, ws, next);
      traj_.col(s + 1) = next;
    }
  }

 private:
  DiscretePath(const Group& group, double t, int n, std::uint64_t seed, std::uint64_t stream)
      : group_(&group),
        t_(t),
        dt_(t / n),
        n_(n),
        seed_(seed),
        stream_(stream),
        incr_(Mat::Zero(group.num_generators(), n)),
        traj_(Mat::Zero(group.dim(), n + 1)) {}

  const Group* group_;
  double t_, dt_;
  int n_;
  std::uint64_t seed_, stream_;
  Mat incr_;
  Mat traj_;
};

using PathFunctional = std::function<double(const DiscretePath&)>;

inline std::vector<Mat> ad_trajectory(const DiscretePath& path) {
  std::vector<Mat> out;
  out.reserve(path.n() + 1);
  for (int s = 0; s <= path.n(); ++s) out.push_back(path.group().adjoint(path.coords(s)));
  return out;
}

// Central finite difference of F along h.
inline double directional_derivative_fd(const PathFunctional& F, const DiscretePath& path,
                                        const CameronMartinVector& h) {
  const double eps = 1e-5 * (1.0 + h.norm());
  const double fp = F(path.perturbed(h, eps));
  const double fm = F(path.perturbed(h, -eps));
  if (!std::isfinite(fp) || !std::isfinite(fm))
    throw std::runtime_error("directional_derivative_fd: non-finite functional value");
  return (fp - fm) / (2.0 * eps);
}

// CSV dump: one row per step with the step increments and the coordinates
// reached after the step.
inline void dump_path_csv(std::ostream& os, const DiscretePath& path) {
  const int k = path.group().num_generators();
  const int d = path.group().dim();
  os << "stream,s";
  for (int i = 1; i <= k; ++i) os << ",db_" << i;
  for (int j = 1; j <= d; ++j) os << ",xi_" << j;
  os << "\n";
  for (int s = 0; s < path.n(); ++s) {
    os << path.stream() << "," << s;
    for (int i = 0; i < k; ++i) os << "," << path.increments()(i, s);
    for (int j = 0; j < d; ++j) os << "," << path.trajectory()(j, s + 1);
    os << "\n";
  }
}

}  // namespace hypolab

#endif  // HYPOLAB_PATH_HPP
