#ifndef HYPOLAB_HALL_HPP
#define HYPOLAB_HALL_HPP

// Classical Hall bases of free nilpotent Lie algebras: tree enumeration,
// bracket rewriting onto the basis, the induced structure constants, and the
// canonical lift homomorphism onto arbitrary nilpotent targets.

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hypolab/algebra.hpp"

namespace hypolab {

// Sparse exact vector over Hall-basis indices.
using SparseRat = std::vector<std::pair<int, Rat>>;

inline void sparse_add(SparseRat& acc, int idx, const Rat& c) {
  for (auto& [i, v] : acc)
    if (i == idx) {
      v += c;
      return;
    }
  acc.emplace_back(idx, c);
}

class HallBasis {
 public:
  struct Tree {
    int left = -1;   // -1 for letters
    int right = -1;
    int letter = -1;  // 0-based letter for weight-1 trees
    int weight = 1;
  };

  // Classical Hall set on k letters truncated at bracket weight m, ordered by
  // weight first and lexicographically on (left, right) subtree indices
  // within a weight. A pair [u, v] is a basis tree iff u < v and v is either
  // a letter or v = [v1, v2] with v1 <= u.
  HallBasis(int k, int m) : k_(k), m_(m) {
    if (k < 2) throw std::invalid_argument("free nilpotent algebra needs at least 2 generators");
    if (m < 1 || m > 6)
      throw std::invalid_argument("free nilpotent step must lie in [1, 6] (series table cap)");
    for (int a = 0; a < k; ++a) {
      Tree t;
      t.letter = a;
      trees_.push_back(t);
    }
    for (int n = 2; n <= m; ++n) {
      const int count = static_cast<int>(trees_.size());
      for (int u = 0; u < count; ++u) {
        for (int v = u + 1; v < count; ++v) {
          if (trees_[u].weight + trees_[v].weight != n) continue;
          if (!is_hall_pair(u, v)) continue;
          Tree t;
          t.left = u;
          t.right = v;
          t.weight = n;
          pair_index_[{u, v}] = static_cast<int>(trees_.size());
          trees_.push_back(t);
        }
      }
    }
  }

  int k() const { return k_; }
  int m() const { return m_; }
  int dim() const { return static_cast<int>(trees_.size()); }
  const Tree& tree(int i) const { return trees_[i]; }
  const std::vector<Tree>& trees() const { return trees_; }

  int weight(int i) const { return trees_[i].weight; }

  std::vector<int> dims_per_weight() const {
    std::vector<int> d(m_, 0);
    for (const auto& t : trees_) ++d[t.weight - 1];
    return d;
  }

  // Rewrites the bracket [H_u, H_v] of two basis trees as an exact linear
  // combination of basis trees (empty when the weight exceeds the cap).
  const SparseRat& product(int u, int v) const {
    static const SparseRat kEmpty;
    if (u == v) return kEmpty;
    const auto key = std::make_pair(u, v);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    SparseRat result = compute_product(u, v);
    return memo_.emplace(key, std::move(result)).first->second;
  }

  // Bracket of two sparse combinations.
  SparseRat bracket(const SparseRat& a, const SparseRat& b) const {
    SparseRat out;
    for (const auto& [i, ci] : a)
      for (const auto& [j, cj] : b) {
        const Rat w = ci * cj;
        if (w == 0) continue;
        for (const auto& [l, cl] : product(i, j)) sparse_add(out, l, w * cl);
      }
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const auto& e) { return e.second == 0; }),
              out.end());
    return out;
  }

  std::string tree_string(int i) const {
    const Tree& t = trees_[i];
    if (t.letter >= 0) return std::to_string(t.letter + 1);
    return "[" + tree_string(t.left) + "," + tree_string(t.right) + "]";
  }

 private:
  bool is_hall_pair(int u, int v) const {
    if (u >= v) return false;
    const Tree& tv = trees_[v];
    if (tv.letter >= 0) return true;
    return tv.left <= u;
  }

  SparseRat compute_product(int u, int v) const {
    if (u > v) {
      SparseRat r = product(v, u);
      for (auto& [i, c] : r) c = -c;
      return r;
    }
    const int n = trees_[u].weight + trees_[v].weight;
    if (n > m_) return {};
    if (is_hall_pair(u, v)) {
      const auto it = pair_index_.find({u, v});
      if (it == pair_index_.end())
        throw std::logic_error("hall basis: registered pair missing from index");
      return {{it->second, Rat(1)}};
    }
    // v = [v1, v2] with u < v1: Jacobi rewrite
    // [u, [v1, v2]] = [[u, v1], v2] + [v1, [u, v2]].
    const Tree& tv = trees_[v];
    SparseRat out;
    for (const auto& [w, cw] : product(u, tv.left))
      for (const auto& [l, cl] : product(w, tv.right)) sparse_add(out, l, cw * cl);
    for (const auto& [w, cw] : product(u, tv.right))
      for (const auto& [l, cl] : product(tv.left, w)) sparse_add(out, l, cw * cl);
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const auto& e) { return e.second == 0; }),
              out.end());
    return out;
  }

  int k_, m_;
  std::vector<Tree> trees_;
  std::map<std::pair<int, int>, int> pair_index_;
  mutable std::map<std::pair<int, int>, SparseRat> memo_;
};

// Free step-m nilpotent Lie algebra on k generators in its Hall basis, with
// the natural grading by bracket weight.
inline LieAlgebraSpec free_nilpotent(int k, int m, const HallBasis** basis_out = nullptr) {
  static std::map<std::pair<int, int>, HallBasis> cache;
  auto it = cache.find({k, m});
  if (it == cache.end()) it = cache.emplace(std::make_pair(k, m), HallBasis(k, m)).first;
  const HallBasis& hb = it->second;
  if (basis_out) *basis_out = &hb;

  LieAlgebraSpec s;
  s.dim = hb.dim();
  if (s.dim > kMaxDim)
    throw std::invalid_argument("free_nilpotent(" + std::to_string(k) + "," + std::to_string(m) +
                                ") exceeds the dimension cap of 64");
  for (int i = 0; i < k; ++i) s.generators.push_back(i);
  std::vector<int> grading(s.dim);
  for (int i = 0; i < s.dim; ++i) grading[i] = hb.weight(i);
  s.grading = std::move(grading);
  for (int u = 0; u < s.dim; ++u)
    for (int v = u + 1; v < s.dim; ++v) {
      const SparseRat& p = hb.product(u, v);
      if (p.empty()) continue;
      std::vector<std::pair<int, Rat>> terms(p.begin(), p.end());
      std::sort(terms.begin(), terms.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      s.brackets[{u, v}] = std::move(terms);
    }
  s.finalize();
  return s;
}

// The unique homomorphism L(k,m) -> target sending the i-th letter to the
// i-th generator of target: columns are the images of the Hall basis trees.
// The homomorphism property is verified exactly on all basis pairs and its
// failure (step/generator mismatch) is an error.
inline std::vector<RatVec> lift_homomorphism(const LieAlgebraSpec& free_spec,
                                             const HallBasis& hb,
                                             const LieAlgebraSpec& target) {
  if (hb.k() != target.num_generators())
    throw std::invalid_argument("lift_homomorphism: generator counts differ");
  if (free_spec.dim != hb.dim())
    throw std::invalid_argument("lift_homomorphism: free spec does not match Hall basis");

  std::vector<RatVec> img(hb.dim());
  for (int i = 0; i < hb.dim(); ++i) {
    const auto& t = hb.tree(i);
    if (t.letter >= 0)
      img[i] = rat_basis_vector(target.dim, target.generators[t.letter]);
    else
      img[i] = target.bracket(img[t.left], img[t.right]);
  }

  // Pi [H_u, H_v] must equal [Pi H_u, Pi H_v] exactly.
  for (int u = 0; u < hb.dim(); ++u)
    for (int v = u + 1; v < hb.dim(); ++v) {
      RatVec lhs(target.dim, Rat(0));
      for (const auto& [l, c] : hb.product(u, v))
        for (int q = 0; q < target.dim; ++q) lhs[q] += c * img[l][q];
      const RatVec rhs = target.bracket(img[u], img[v]);
      for (int q = 0; q < target.dim; ++q)
        if (lhs[q] != rhs[q])
          throw std::invalid_argument(
              "lift_homomorphism: homomorphism check failed on basis pair (" +
              std::to_string(u + 1) + "," + std::to_string(v + 1) +
              ") — target step or generators incompatible");
    }
  return img;
}

}  // namespace hypolab

#endif  // HYPOLAB_HALL_HPP
