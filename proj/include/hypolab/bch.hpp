#ifndef HYPOLAB_BCH_HPP
#define HYPOLAB_BCH_HPP

// Baker–Campbell–Hausdorff machinery: exact Hall-basis coefficient tables
// (generated once per truncation depth from the free associative algebra and
// memoized), bch evaluation in any nilpotent spec, and the Bernoulli-series
// translation Jacobians M_L, M_R of the exponential chart.

#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypolab/hall.hpp"

namespace hypolab {

namespace detail {

// Truncated free associative series over two letters 'a' and 'b' with exact
// coefficients; words are strings over {'a','b'} of length <= cap.
using AssocSeries = std::map<std::string, Rat>;

inline AssocSeries assoc_mul(const AssocSeries& x, const AssocSeries& y, size_t cap) {
  AssocSeries out;
  for (const auto& [wx, cx] : x)
    for (const auto& [wy, cy] : y) {
      if (wx.size() + wy.size() > cap) continue;
      const Rat c = cx * cy;
      if (c == 0) continue;
      out[wx + wy] += c;
    }
  return out;
}

inline void assoc_axpy(AssocSeries& acc, const AssocSeries& x, const Rat& c) {
  for (const auto& [w, v] : x) {
    acc[w] += c * v;
  }
}

inline AssocSeries assoc_exp(const AssocSeries& x, size_t cap) {
  AssocSeries out{{"", Rat(1)}};
  AssocSeries pow{{"", Rat(1)}};
  Rat fact(1);
  for (size_t j = 1; j <= cap; ++j) {
    pow = assoc_mul(pow, x, cap);
    fact *= static_cast<int>(j);
    assoc_axpy(out, pow, Rat(1) / fact);
  }
  return out;
}

inline AssocSeries assoc_log1p(const AssocSeries& u, size_t cap) {
  AssocSeries out;
  AssocSeries pow{{"", Rat(1)}};
  for (size_t j = 1; j <= cap; ++j) {
    pow = assoc_mul(pow, u, cap);
    const Rat sign = (j % 2 == 1) ? Rat(1) : Rat(-1);
    assoc_axpy(out, pow, sign / static_cast<int>(j));
  }
  return out;
}

// Expands a Hall tree into its signed associative words.
inline AssocSeries expand_tree(const HallBasis& hb, int idx) {
  const auto& t = hb.tree(idx);
  if (t.letter >= 0) return {{std::string(1, t.letter == 0 ? 'a' : 'b'), Rat(1)}};
  const AssocSeries l = expand_tree(hb, t.left);
  const AssocSeries r = expand_tree(hb, t.right);
  AssocSeries out = assoc_mul(l, r, 64);
  AssocSeries rl = assoc_mul(r, l, 64);
  for (const auto& [w, c] : rl) out[w] -= c;
  return out;
}

}  // namespace detail

// Hall-coefficient table of log(exp(a)exp(b)) truncated at weight m.
class BchTable {
 public:
  struct Term {
    int tree;
    Rat c;
    double cd;
  };

  static const BchTable& get(int m) {
    static std::mutex mu;
    static std::map<int, BchTable> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(m);
    if (it == cache.end()) it = cache.emplace(m, BchTable(m)).first;
    return it->second;
  }

  const HallBasis& basis() const { return hb_; }
  const std::vector<Term>& terms() const { return terms_; }
  int depth() const { return m_; }

  // Reusable buffers for allocation-free evaluation in tight loops.
  struct Scratch {
    std::vector<Vec> val;
  };

  // z = bch(x, y) written into out; no allocations once scratch is warm.
  void eval_to(const LieAlgebraSpec& spec, const Vec& x, const Vec& y, Scratch& ws,
               Vec& out) const {
    auto& val = ws.val;
    if (static_cast<int>(val.size()) != hb_.dim() || val.empty() ||
        val.front().size() != spec.dim) {
      val.assign(hb_.dim(), Vec());
      for (auto& v : val) v = Vec::Zero(spec.dim);
    }
    for (int i = 0; i < hb_.dim(); ++i) {
      const auto& t = hb_.tree(i);
      if (t.letter >= 0)
        val[i] = (t.letter == 0) ? x : y;
      else
        spec.bracket_to(val[t.left], val[t.right], val[i]);
    }
    out.setZero();
    for (const auto& term : terms_) out += term.cd * val[term.tree];
  }

  // z = bch(x, y) evaluated in a concrete nilpotent algebra (floating point).
  Vec eval(const LieAlgebraSpec& spec, const Vec& x, const Vec& y) const {
    std::vector<Vec> val(hb_.dim());
    Vec out = Vec::Zero(spec.dim);
    for (int i = 0; i < hb_.dim(); ++i) {
      const auto& t = hb_.tree(i);
      if (t.letter >= 0)
        val[i] = (t.letter == 0) ? x : y;
      else
        val[i] = spec.bracket(val[t.left], val[t.right]);
    }
    for (const auto& term : terms_) out += term.cd * val[term.tree];
    return out;
  }

  RatVec eval_exact(const LieAlgebraSpec& spec, const RatVec& x, const RatVec& y) const {
    std::vector<RatVec> val(hb_.dim());
    RatVec out(spec.dim, Rat(0));
    for (int i = 0; i < hb_.dim(); ++i) {
      const auto& t = hb_.tree(i);
      if (t.letter >= 0)
        val[i] = (t.letter == 0) ? x : y;
      else
        val[i] = spec.bracket(val[t.left], val[t.right]);
    }
    for (const auto& term : terms_)
      for (int l = 0; l < spec.dim; ++l) out[l] += term.c * val[term.tree][l];
    return out;
  }

 private:
  explicit BchTable(int m) : m_(m), hb_(2, m) {
    using namespace detail;
    const size_t cap = static_cast<size_t>(m);
    const AssocSeries ea = assoc_exp({{"a", Rat(1)}}, cap);
    const AssocSeries eb = assoc_exp({{"b", Rat(1)}}, cap);
    AssocSeries prod = assoc_mul(ea, eb, cap);
    prod[""] -= 1;
    const AssocSeries z = assoc_log1p(prod, cap);

    // Solve z_n = sum_T x_T expand(T) degree by degree (exact elimination).
    for (int n = 1; n <= m; ++n) {
      std::vector<int> tree_ids;
      for (int i = 0; i < hb_.dim(); ++i)
        if (hb_.weight(i) == n) tree_ids.push_back(i);
      std::vector<std::string> words;
      std::map<std::string, int> word_pos;
      std::vector<detail::AssocSeries> expansions;
      for (int id : tree_ids) {
        expansions.push_back(expand_tree(hb_, id));
        for (const auto& [w, c] : expansions.back())
          if (c != 0 && !word_pos.count(w)) {
            word_pos[w] = static_cast<int>(words.size());
            words.push_back(w);
          }
      }
      for (const auto& [w, c] : z)
        if (static_cast<int>(w.size()) == n && c != 0 && !word_pos.count(w)) {
          word_pos[w] = static_cast<int>(words.size());
          words.push_back(w);
        }
      const int rows = static_cast<int>(words.size());
      const int cols = static_cast<int>(tree_ids.size());
      std::vector<RatVec> M(rows, RatVec(cols + 1, Rat(0)));
      for (int cidx = 0; cidx < cols; ++cidx)
        for (const auto& [w, c] : expansions[cidx])
          if (c != 0) M[word_pos.at(w)][cidx] = c;
      for (const auto& [w, c] : z)
        if (static_cast<int>(w.size()) == n && c != 0) M[word_pos.at(w)][cols] = c;

      // Gaussian elimination with exact pivots.
      std::vector<int> pivot_row(cols, -1);
      int row = 0;
      for (int col = 0; col < cols && row < rows; ++col) {
        int pr = -1;
        for (int r = row; r < rows; ++r)
          if (M[r][col] != 0) {
            pr = r;
            break;
          }
        if (pr < 0) continue;
        std::swap(M[row], M[pr]);
        const Rat inv = Rat(1) / M[row][col];
        for (int l = col; l <= cols; ++l) M[row][l] *= inv;
        for (int r = 0; r < rows; ++r) {
          if (r == row || M[r][col] == 0) continue;
          const Rat f = M[r][col];
          for (int l = col; l <= cols; ++l) M[r][l] -= f * M[row][l];
        }
        pivot_row[col] = row++;
      }
      for (int r = row; r < rows; ++r)
        if (M[r][cols] != 0)
          throw std::logic_error("bch table: inconsistent system at degree " + std::to_string(n));
      for (int cidx = 0; cidx < cols; ++cidx) {
        if (pivot_row[cidx] < 0)
          throw std::logic_error("bch table: underdetermined Hall column at degree " +
                                 std::to_string(n));
        const Rat c = M[pivot_row[cidx]][cols];
        if (c != 0) terms_.push_back({tree_ids[cidx], c, to_double(c)});
      }
    }
  }

  int m_;
  HallBasis hb_;
  std::vector<Term> terms_;
};

// Left-translation Jacobian of the exponential chart:
//   M_L(w)·X = d/ds bch(w, sX)|_0 = (sum_j B+_j / j! ad_w^j) X,
// with the second-kind Bernoulli coefficients B+_j/j! listed below; M_R uses
// M_R(w) = M_L(-w). Truncation at ad_w^{m-1} is exact for step-m specs.
inline Mat translation_jacobian_left(const LieAlgebraSpec& spec, const Vec& w, int step) {
  static const double kCoeff[] = {1.0,         0.5, 1.0 / 12.0, 0.0,
                                  -1.0 / 720.0, 0.0, 1.0 / 30240.0};
  if (step > 7) throw std::invalid_argument("translation jacobian series table capped at step 7");
  const Mat adw = spec.ad(w);
  Mat power = Mat::Identity(spec.dim, spec.dim);
  Mat sum = power;  // j = 0 term
  for (int j = 1; j <= step - 1; ++j) {
    power = adw * power;
    if (kCoeff[j] != 0.0) sum += kCoeff[j] * power;
  }
  return sum;
}

inline Mat translation_jacobian_right(const LieAlgebraSpec& spec, const Vec& w, int step) {
  return translation_jacobian_left(spec, -w, step);
}

}  // namespace hypolab

#endif  // HYPOLAB_BCH_HPP
