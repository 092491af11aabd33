#ifndef HYPOLAB_GROUP_HPP
#define HYPOLAB_GROUP_HPP

// Simply connected nilpotent group in exponential coordinates of the first
// kind.  A Group bundles a validated algebra spec with its nilpotency step,
// the BCH table truncated at that step, and the bracket-generated frame.
// Multiplication is exact modulo floating point because the BCH series
// terminates at the step.

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypolab/algebra.hpp"
#include "hypolab/bch.hpp"
#include "hypolab/frame.hpp"
#include "hypolab/testfunction.hpp"

namespace hypolab {

class Group;

struct GroupPoint {
  const Group* group = nullptr;
  Vec coords;
};

class Group {
 public:
  static Group make(LieAlgebraSpec spec) {
    const ValidationReport report = validate(spec);
    if (!report.ok) {
      std::ostringstream os;
      os << "algebra spec failed validation:";
      for (const auto& f : report.failures) os << "\n  - " << f;
      throw std::invalid_argument(os.str());
    }
    return Group(std::move(spec));
  }

  const LieAlgebraSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int num_generators() const { return spec_.num_generators(); }
  int step() const { return step_; }
  const Frame& frame() const { return frame_; }
  const BchTable& bch_table() const { return *table_; }

  // Basis vector of the i-th generator (0-based), in structure coordinates.
  Vec generator(int i) const {
    Vec v = Vec::Zero(spec_.dim);
    v[spec_.generators.at(i)] = 1.0;
    return v;
  }

  Vec bch(const Vec& x, const Vec& y) const { return table_->eval(spec_, x, y); }
  RatVec bch_exact(const RatVec& x, const RatVec& y) const {
    return table_->eval_exact(spec_, x, y);
  }

  GroupPoint point(Vec w) const {
    if (w.size() != spec_.dim) throw std::invalid_argument("group point: wrong dimension");
    return GroupPoint{this, std::move(w)};
  }
  GroupPoint identity() const { return GroupPoint{this, Vec::Zero(spec_.dim)}; }

  GroupPoint multiply(const GroupPoint& a, const GroupPoint& b) const {
    require_same(a);
    require_same(b);
    return GroupPoint{this, bch(a.coords, b.coords)};
  }
  GroupPoint inverse(const GroupPoint& a) const {
    require_same(a);
    return GroupPoint{this, Vec(-a.coords)};
  }

  // Adjoint action of exp(w), in structure-basis coordinates.
  Mat adjoint(const Vec& w) const { return Ad_of_exp(spec_, w); }

  // Adjoint in frame coordinates (frame declared orthonormal).
  Mat adjoint_frame(const Vec& w) const {
    if (!frame_.complete) throw std::invalid_argument("adjoint_frame: frame does not span the algebra");
    return frame_.basis_inv * Ad_of_exp(spec_, w) * frame_.basis;
  }

  // Differentials of left/right translation in exponential coordinates:
  //   d/dε bch(w, εX)|_0 = M_L(w)·X,   d/dε bch(εX, w)|_0 = M_R(w)·X.
  // Each is computed two independent ways — termwise differentiation of the
  // BCH table in its linear slot, and the finite Bernoulli series in ad_w —
  // and a disagreement beyond 1e-10 is reported as an internal error since
  // it can only come from an inconsistent table.
  Mat translation_jacobian_left(const Vec& w) const {
    const Mat series = hypolab::translation_jacobian_left(spec_, w, step_);
    check_routes(series, table_derivative(w, /*left=*/true), "left");
    return series;
  }
  Mat translation_jacobian_right(const Vec& w) const {
    const Mat series = hypolab::translation_jacobian_right(spec_, w, step_);
    check_routes(series, table_derivative(w, /*left=*/false), "right");
    return series;
  }

  // Fast single-route variants for inner Monte Carlo loops; the dual-route
  // consistency is enforced by translation_jacobian_* and the test suite.
  Mat jacobian_left_fast(const Vec& w) const {
    return hypolab::translation_jacobian_left(spec_, w, step_);
  }
  Mat jacobian_right_fast(const Vec& w) const {
    return hypolab::translation_jacobian_right(spec_, w, step_);
  }

  // Derivative of f along the left-invariant field generated by X, at exp(w):
  //   (X~ f)(w) = <∇f(w), M_L(w)·X>.
  double left_deriv(const TestFunction& f, const Vec& w, const Vec& X) const {
    return f.gradient(w).dot(jacobian_left_fast(w) * X);
  }
  // Right-invariant counterpart: (X^ f)(w) = <∇f(w), M_R(w)·X>.
  double right_deriv(const TestFunction& f, const Vec& w, const Vec& X) const {
    return f.gradient(w).dot(jacobian_right_fast(w) * X);
  }

  // Horizontal gradient (X~_1 f, ..., X~_k f) at exp(w).
  Vec full_gradient(const TestFunction& f, const Vec& w) const {
    const int k = num_generators();
    const Mat ml = jacobian_left_fast(w);
    const Vec g = f.gradient(w);
    Vec out(k);
    for (int i = 0; i < k; ++i) out[i] = g.dot(ml.col(spec_.generators[i]));
    return out;
  }

  // Central finite-difference fallback for the horizontal gradient.
  Vec full_gradient_fd(const TestFunction& f, const Vec& w, double eps = 1e-5) const {
    const int k = num_generators();
    Vec out(k);
    for (int i = 0; i < k; ++i) {
      Vec x = generator(i);
      out[i] = (f(bch(w, Vec(eps * x))) - f(bch(w, Vec(-eps * x)))) / (2.0 * eps);
    }
    return out;
  }

  GroupPoint dilate_point(const GroupPoint& a, double r) const {
    require_same(a);
    return GroupPoint{this, Vec(dilation_matrix(spec_, r) * a.coords)};
  }

 private:
  explicit Group(LieAlgebraSpec spec)
      : spec_(std::move(spec)),
        step_(nilpotency_step(spec_)),
        table_(&BchTable::get(step_)),
        frame_(build_frame(spec_)) {
    // Number of 'a'/'b' leaves per table tree, for the linear-slot derivative.
    const auto& hb = table_->basis();
    const int n = static_cast<int>(hb.dim());
    a_leaves_.resize(n);
    b_leaves_.resize(n);
    for (int u = 0; u < n; ++u) {
      const auto& t = hb.tree(u);
      if (t.letter >= 0) {
        a_leaves_[u] = (t.letter == 0) ? 1 : 0;
        b_leaves_[u] = (t.letter == 1) ? 1 : 0;
      } else {
        a_leaves_[u] = a_leaves_[t.left] + a_leaves_[t.right];
        b_leaves_[u] = b_leaves_[t.left] + b_leaves_[t.right];
      }
    }
  }

  void require_same(const GroupPoint& p) const {
    if (p.group != this) throw std::invalid_argument("group point belongs to a different group");
  }

  // d/dε bch(w, εe_j)|_0 columnwise via the table: only trees with exactly
  // one 'b' leaf survive (resp. one 'a' leaf for the right jacobian).
  Mat table_derivative(const Vec& w, bool left) const {
    const int d = spec_.dim;
    Mat out = Mat::Zero(d, d);
    const auto& hb = table_->basis();
    const int n = static_cast<int>(hb.dim());
    std::vector<Vec> val(n);
    for (int j = 0; j < d; ++j) {
      Vec ej = Vec::Zero(d);
      ej[j] = 1.0;
      const Vec& xa = left ? w : ej;
      const Vec& xb = left ? ej : w;
      Vec col = Vec::Zero(d);
      for (int u = 0; u < n; ++u) {
        const auto& t = hb.tree(u);
        if (t.letter >= 0)
          val[u] = (t.letter == 0) ? xa : xb;
        else
          val[u] = spec_.bracket(val[t.left], val[t.right]);
      }
      for (const auto& term : table_->terms()) {
        const int want = left ? b_leaves_[term.tree] : a_leaves_[term.tree];
        if (want == 1) col += term.cd * val[term.tree];
      }
      out.col(j) = col;
    }
    return out;
  }

  void check_routes(const Mat& series, const Mat& table, const char* side) const {
    const double err = (series - table).cwiseAbs().maxCoeff();
    if (!(err <= 1e-10)) {
      std::ostringstream os;
      os << "translation jacobian (" << side << "): analytic-series and table-derivative "
         << "routes disagree by " << err << "; BCH table is inconsistent";
      throw std::logic_error(os.str());
    }
  }

  LieAlgebraSpec spec_;
  int step_;
  const BchTable* table_;
  Frame frame_;
  std::vector<int> a_leaves_, b_leaves_;
};

}  // namespace hypolab

#endif  // HYPOLAB_GROUP_HPP
