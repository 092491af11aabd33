#ifndef HYPOLAB_MULTIINDEX_HPP
#define HYPOLAB_MULTIINDEX_HPP

// Expansion of iterated brackets into signed composition words of the
// generating fields: X_alpha = sum_beta eps_{beta,alpha} X^beta.

#include <stdexcept>
#include <utility>
#include <vector>

#include "hypolab/algebra.hpp"

namespace hypolab {

// A word (w_0, ..., w_r) of 1-based generator positions denotes the operator
// product X_{w_0} X_{w_1} ... X_{w_r} read left to right (X_{w_r} acts
// first); for r = 0 the word is the single field X_{w_0}.
struct SignedWord {
  MultiIndex word;
  int coeff;  // +1 or -1 per expansion branch (duplicates are kept unmerged)
};

// Recursively expands X_alpha = [X_{a_r}, [ ... [X_{a_1}, X_{a_0}] ... ]]
// into signed operator words via [A, B] = AB - BA:
//   alpha = (1)   -> [((1), +1)]
//   alpha = (1,2) -> [((2,1), +1), ((1,2), -1)]   i.e.  X_2 X_1 - X_1 X_2
inline std::vector<SignedWord> bracket_word_expansion(const MultiIndex& alpha) {
  if (alpha.empty()) throw std::invalid_argument("bracket_word_expansion: empty multi-index");
  std::vector<SignedWord> words{{MultiIndex{alpha[0]}, 1}};
  for (size_t level = 1; level < alpha.size(); ++level) {
    const int a = alpha[level];
    std::vector<SignedWord> next;
    next.reserve(2 * words.size());
    for (const auto& sw : words) {
      MultiIndex left{a};
      left.insert(left.end(), sw.word.begin(), sw.word.end());
      next.push_back({std::move(left), sw.coeff});
      MultiIndex right = sw.word;
      right.push_back(a);
      next.push_back({std::move(right), -sw.coeff});
    }
    words = std::move(next);
  }
  return words;
}

}  // namespace hypolab

#endif  // HYPOLAB_MULTIINDEX_HPP
