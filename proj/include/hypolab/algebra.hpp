#ifndef HYPOLAB_ALGEBRA_HPP
#define HYPOLAB_ALGEBRA_HPP

// Finite-dimensional Lie algebra descriptions with exact rational structure
// constants: validation (antisymmetry, Jacobi, grading, nilpotency), bracket
// arithmetic in exact and floating point form, lower central series,
// generator bracket levels with multi-index bookkeeping, adjoint matrices,
// graded dilations, direct sums, and the JSON wire format.

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hypolab/rational.hpp"

namespace hypolab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A multi-index (a_0, ..., a_r) of 1-based generator positions encodes the
// iterated bracket X_alpha = [X_{a_r}, [ ... [X_{a_1}, X_{a_0}] ... ]].
using MultiIndex = std::vector<int>;

constexpr int kMaxDim = 64;

struct LieAlgebraSpec {
  int dim = 0;
  // 0-based indices of the generator (horizontal) basis vectors.
  std::vector<int> generators;
  // Optional integer weights per basis vector (graded specs).
  std::optional<std::vector<int>> grading;
  // Exact structure constants, stored once per pair i < j:
  // [E_i, E_j] = sum_l coeff * E_l.
  std::map<std::pair<int, int>, std::vector<std::pair<int, Rat>>> brackets;

  // Floating-point mirror of `brackets`, flattened for hot loops.
  struct PairTerms {
    int i, j;
    std::vector<std::pair<int, double>> terms;
  };
  std::vector<PairTerms> pair_terms_d;

  int num_generators() const { return static_cast<int>(generators.size()); }

  // Builds the floating point mirror; must be called after any mutation of
  // `brackets` (the named constructors and the JSON loader do so).
  void finalize() {
    pair_terms_d.clear();
    pair_terms_d.reserve(brackets.size());
    for (const auto& [key, terms] : brackets) {
      PairTerms pt;
      pt.i = key.first;
      pt.j = key.second;
      for (const auto& [l, c] : terms) pt.terms.emplace_back(l, to_double(c));
      pair_terms_d.push_back(std::move(pt));
    }
  }

  // Exact bracket of two coordinate vectors.
  RatVec bracket(const RatVec& x, const RatVec& y) const {
    RatVec out(dim, Rat(0));
    for (const auto& [key, terms] : brackets) {
      const auto [i, j] = key;
      const Rat w = x[i] * y[j] - x[j] * y[i];
      if (w == 0) continue;
      for (const auto& [l, c] : terms) out[l] += w * c;
    }
    return out;
  }

  // Floating point bracket.
  Vec bracket(const Vec& x, const Vec& y) const {
    Vec out = Vec::Zero(dim);
    bracket_accumulate(x, y, out);
    return out;
  }

  // Allocation-free variant: out must be pre-sized to dim and is zeroed here.
  void bracket_to(const Vec& x, const Vec& y, Vec& out) const {
    out.setZero();
    bracket_accumulate(x, y, out);
  }

  void bracket_accumulate(const Vec& x, const Vec& y, Vec& out) const {
    for (const auto& pt : pair_terms_d) {
      const double w = x[pt.i] * y[pt.j] - x[pt.j] * y[pt.i];
      if (w == 0.0) continue;
      for (const auto& [l, c] : pt.terms) out[l] += w * c;
    }
  }

  // ad_x as a dim x dim matrix, columns ad_x(E_j) = [x, E_j].
  Mat ad(const Vec& x) const {
    Mat m = Mat::Zero(dim, dim);
    ad_to(x, m);
    return m;
  }

  // Allocation-free variant; m must already be dim x dim (it is zeroed here).
  void ad_to(const Vec& x, Mat& m) const {
    m.setZero();
    for (const auto& pt : pair_terms_d) {
      for (const auto& [l, c] : pt.terms) {
        m(l, pt.j) += x[pt.i] * c;  // [E_i, E_j] contribution to column j
        m(l, pt.i) -= x[pt.j] * c;  // [E_j, E_i] = -[E_i, E_j] to column i
      }
    }
  }

  std::vector<RatVec> ad_exact(const RatVec& x) const {
    std::vector<RatVec> cols(dim, RatVec(dim, Rat(0)));
    for (const auto& [key, terms] : brackets) {
      const auto [i, j] = key;
      for (const auto& [l, c] : terms) {
        cols[j][l] += x[i] * c;
        cols[i][l] -= x[j] * c;
      }
    }
    return cols;
  }
};

inline RatVec rat_basis_vector(int dim, int i) {
  RatVec v(dim, Rat(0));
  v[i] = 1;
  return v;
}

inline bool rat_vec_is_zero(const RatVec& v) {
  return std::all_of(v.begin(), v.end(), [](const Rat& r) { return r == 0; });
}

inline Vec rat_vec_to_double(const RatVec& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = to_double(v[i]);
  return out;
}

// Incremental exact row reduction; used for rank decisions where floating
// point pivoting would be untrustworthy.
class RatRowReducer {
 public:
  // Reduces v against the rows held so far; if a nonzero remainder is left it
  // is normalized, stored, and true is returned.
  bool insert(RatVec v) {
    reduce(v);
    int pivot = leading(v);
    if (pivot < 0) return false;
    const Rat lead = v[pivot];
    for (auto& c : v) c /= lead;
    rows_.push_back(std::move(v));
    pivots_.push_back(pivot);
    return true;
  }

  bool contains(RatVec v) const {
    reduce(v);
    return leading(v) < 0;
  }

  int rank() const { return static_cast<int>(rows_.size()); }
  const std::vector<RatVec>& rows() const { return rows_; }

 private:
  static int leading(const RatVec& v) {
    for (size_t i = 0; i < v.size(); ++i)
      if (v[i] != 0) return static_cast<int>(i);
    return -1;
  }

  void reduce(RatVec& v) const {
    for (size_t r = 0; r < rows_.size(); ++r) {
      const Rat& c = v[pivots_[r]];
      if (c == 0) continue;
      const Rat f = c;  // rows are pivot-normalized
      for (size_t l = 0; l < v.size(); ++l) v[l] -= f * rows_[r][l];
    }
  }

  std::vector<RatVec> rows_;
  std::vector<int> pivots_;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> failures;

  void fail(std::string msg) {
    ok = false;
    failures.push_back(std::move(msg));
  }
};

// Lower central series step: smallest m with g^{m+1} = 0 (abelian -> 1).
// Throws if the series does not terminate within dim iterations (not
// nilpotent).
inline int nilpotency_step(const LieAlgebraSpec& spec) {
  std::vector<RatVec> layer;
  for (int i = 0; i < spec.dim; ++i) layer.push_back(rat_basis_vector(spec.dim, i));
  int step = 0;
  for (int iter = 1; iter <= spec.dim + 1; ++iter) {
    // next layer spans [g, layer]
    RatRowReducer red;
    std::vector<RatVec> next;
    for (int i = 0; i < spec.dim; ++i) {
      const RatVec ei = rat_basis_vector(spec.dim, i);
      for (const auto& v : layer) {
        RatVec w = spec.bracket(ei, v);
        if (!rat_vec_is_zero(w) && red.insert(w)) next.push_back(red.rows().back());
      }
    }
    if (next.empty()) {
      step = iter;
      break;
    }
    layer = std::move(next);
    if (iter == spec.dim + 1)
      throw std::invalid_argument("lower central series does not terminate: algebra is not nilpotent");
  }
  return step;
}

// Full validation: index hygiene, antisymmetry (structural by i<j storage,
// still checks for diagonal entries), exact Jacobi on all basis triples,
// grading consistency, nilpotency, generator sanity.
inline ValidationReport validate(const LieAlgebraSpec& spec) {
  ValidationReport rep;
  if (spec.dim <= 0) rep.fail("dim must be positive");
  if (spec.dim > kMaxDim) rep.fail("dim exceeds supported cap of 64");
  if (spec.generators.empty()) rep.fail("generator list is empty");
  std::vector<int> gens = spec.generators;
  std::sort(gens.begin(), gens.end());
  if (std::adjacent_find(gens.begin(), gens.end()) != gens.end())
    rep.fail("duplicate generator index");
  for (int g : spec.generators)
    if (g < 0 || g >= spec.dim) rep.fail("generator index out of range");
  for (const auto& [key, terms] : spec.brackets) {
    const auto [i, j] = key;
    if (i < 0 || j < 0 || i >= spec.dim || j >= spec.dim)
      rep.fail("bracket pair index out of range");
    if (i == j) rep.fail("bracket pair with i == j violates antisymmetry");
    if (i > j) rep.fail("bracket pair stored with i > j");
    for (const auto& [l, c] : terms) {
      if (l < 0 || l >= spec.dim) rep.fail("bracket target index out of range");
      (void)c;
    }
  }
  if (!rep.ok) return rep;

  // Jacobi: [E_a,[E_b,E_c]] + [E_b,[E_c,E_a]] + [E_c,[E_a,E_b]] = 0, exactly.
  for (int a = 0; a < spec.dim; ++a) {
    const RatVec ea = rat_basis_vector(spec.dim, a);
    for (int b = a + 1; b < spec.dim; ++b) {
      const RatVec eb = rat_basis_vector(spec.dim, b);
      for (int c = b + 1; c < spec.dim; ++c) {
        const RatVec ec = rat_basis_vector(spec.dim, c);
        RatVec s = spec.bracket(ea, spec.bracket(eb, ec));
        const RatVec t2 = spec.bracket(eb, spec.bracket(ec, ea));
        const RatVec t3 = spec.bracket(ec, spec.bracket(ea, eb));
        bool zero = true;
        for (int l = 0; l < spec.dim; ++l) {
          s[l] += t2[l] + t3[l];
          if (s[l] != 0) zero = false;
        }
        if (!zero)
          rep.fail("Jacobi identity fails on basis triple (" + std::to_string(a + 1) + "," +
                   std::to_string(b + 1) + "," + std::to_string(c + 1) + ")");
      }
    }
  }

  if (spec.grading) {
    const auto& w = *spec.grading;
    if (static_cast<int>(w.size()) != spec.dim) {
      rep.fail("grading length does not match dim");
    } else {
      for (const auto& [key, terms] : spec.brackets) {
        const auto [i, j] = key;
        for (const auto& [l, c] : terms) {
          if (c != 0 && w[l] != w[i] + w[j])
            rep.fail("grading inconsistent on bracket [" + std::to_string(i + 1) + "," +
                     std::to_string(j + 1) + "] -> " + std::to_string(l + 1));
        }
      }
      for (int g : spec.generators)
        if (w[g] != 1) rep.fail("generator with grading weight != 1");
    }
  }

  if (rep.ok) {
    try {
      nilpotency_step(spec);
    } catch (const std::exception& e) {
      rep.fail(e.what());
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Generator bracket levels (horizontal distribution and its derived flags).

struct LevelEntry {
  MultiIndex alpha;  // 1-based generator positions, innermost first
  RatVec vec;        // X_alpha in basis coordinates
};

struct HoermanderLevels {
  // levels[r] holds the nonzero iterated brackets of depth r (r = 0 are the
  // generators themselves), in scan order: new outer generator index slowest.
  std::vector<std::vector<LevelEntry>> levels;
  bool generating = false;
  int depth = -1;  // smallest r with full span, -1 if never reached
  int rank = 0;
};

inline HoermanderLevels hoermander_levels(const LieAlgebraSpec& spec) {
  HoermanderLevels out;
  const int k = spec.num_generators();
  RatRowReducer red;

  std::vector<LevelEntry> level;
  for (int i = 0; i < k; ++i) {
    LevelEntry e{{i + 1}, rat_basis_vector(spec.dim, spec.generators[i])};
    red.insert(e.vec);
    level.push_back(std::move(e));
  }
  out.levels.push_back(level);
  if (red.rank() == spec.dim) {
    out.generating = true;
    out.depth = 0;
  }

  for (int r = 1; r <= spec.dim; ++r) {
    std::vector<LevelEntry> next;
    const int prev_rank = red.rank();
    for (int i = 0; i < k; ++i) {
      const RatVec xi = rat_basis_vector(spec.dim, spec.generators[i]);
      for (const auto& v : out.levels.back()) {
        RatVec w = spec.bracket(xi, v.vec);
        if (rat_vec_is_zero(w)) continue;
        MultiIndex alpha = v.alpha;
        alpha.push_back(i + 1);
        red.insert(w);
        next.push_back(LevelEntry{std::move(alpha), std::move(w)});
      }
    }
    if (next.empty()) break;
    out.levels.push_back(std::move(next));
    if (red.rank() == spec.dim && out.depth < 0) {
      out.generating = true;
      out.depth = r;
    }
    if (red.rank() == prev_rank) break;  // span stabilized, permanently
  }
  out.rank = red.rank();
  return out;
}

// ---------------------------------------------------------------------------
// Adjoint of a group element given through its exponential coordinates:
// Ad_{exp(w)} = exp(ad_w), a finite sum for nilpotent algebras.

// Buffers for allocation-free Ad evaluation in tight loops.
struct AdScratch {
  Mat adw, term, prod;
  void ensure(int dim) {
    if (adw.rows() != dim) {
      adw.resize(dim, dim);
      term.resize(dim, dim);
      prod.resize(dim, dim);
    }
  }
};

// out = Ad_{exp(w)} = e^{ad_w}; finite series since ad_w is nilpotent.
inline void Ad_of_exp_to(const LieAlgebraSpec& spec, const Vec& w, AdScratch& ws, Mat& out) {
  ws.ensure(spec.dim);
  spec.ad_to(w, ws.adw);
  out.resize(spec.dim, spec.dim);
  out.setIdentity();
  ws.term.setIdentity();
  for (int j = 1; j <= spec.dim; ++j) {
    ws.prod.noalias() = ws.adw * ws.term;
    ws.term = ws.prod / static_cast<double>(j);
    if (ws.term.isZero(0.0)) break;
    out += ws.term;
  }
}

inline Mat Ad_of_exp(const LieAlgebraSpec& spec, const Vec& w) {
  AdScratch ws;
  Mat out;
  Ad_of_exp_to(spec, w, ws, out);
  return out;
}

inline std::vector<RatVec> Ad_of_exp_exact(const LieAlgebraSpec& spec, const RatVec& w) {
  // columns of exp(ad_w)
  std::vector<RatVec> cols(spec.dim);
  for (int j = 0; j < spec.dim; ++j) {
    RatVec term = rat_basis_vector(spec.dim, j);
    RatVec acc = term;
    Rat fact(1);
    for (int p = 1; p <= spec.dim; ++p) {
      term = spec.bracket(w, term);
      if (rat_vec_is_zero(term)) break;
      fact *= p;
      for (int l = 0; l < spec.dim; ++l) acc[l] += term[l] / fact;
    }
    cols[j] = std::move(acc);
  }
  return cols;
}

// ---------------------------------------------------------------------------
// Graded dilations: diag(r^{w_i}) in basis coordinates.

inline Mat dilation_matrix(const LieAlgebraSpec& spec, double r) {
  if (!spec.grading)
    throw std::invalid_argument("dilation requested on an ungraded algebra spec");
  Mat m = Mat::Zero(spec.dim, spec.dim);
  for (int i = 0; i < spec.dim; ++i) m(i, i) = std::pow(r, (*spec.grading)[i]);
  return m;
}

// ---------------------------------------------------------------------------
// Direct sum of two specs (block diagonal bracket). The generator list of the
// sum is the left factor's generators by default: the product groups used
// here model a horizontal distribution living in the first factor.

inline LieAlgebraSpec direct_sum(const LieAlgebraSpec& a, const LieAlgebraSpec& b,
                                 bool keep_right_generators = false) {
  LieAlgebraSpec s;
  s.dim = a.dim + b.dim;
  s.generators = a.generators;
  if (keep_right_generators)
    for (int g : b.generators) s.generators.push_back(a.dim + g);
  if (a.grading && b.grading) {
    std::vector<int> w = *a.grading;
    w.insert(w.end(), b.grading->begin(), b.grading->end());
    s.grading = std::move(w);
  }
  s.brackets = a.brackets;
  for (const auto& [key, terms] : b.brackets) {
    auto shifted = terms;
    for (auto& [l, c] : shifted) l += a.dim;
    s.brackets[{key.first + a.dim, key.second + a.dim}] = std::move(shifted);
  }
  s.finalize();
  return s;
}

// ---------------------------------------------------------------------------
// JSON wire format: 1-based indices, rationals as strings.
// {
//   "dim": 3,
//   "generators": [1, 2],
//   "grading": [1, 1, 2] | null,
//   "brackets": [ {"i": 1, "j": 2, "coeffs": {"3": "1"}} ]
// }

inline LieAlgebraSpec spec_from_json(const nlohmann::json& j) {
  LieAlgebraSpec s;
  s.dim = j.at("dim").get<int>();
  for (int g : j.at("generators").get<std::vector<int>>()) s.generators.push_back(g - 1);
  if (j.contains("grading") && !j.at("grading").is_null())
    s.grading = j.at("grading").get<std::vector<int>>();
  for (const auto& b : j.at("brackets")) {
    const int i = b.at("i").get<int>() - 1;
    const int jdx = b.at("j").get<int>() - 1;
    if (i >= jdx)
      throw std::invalid_argument("bracket entries must satisfy i < j in the wire format");
    std::vector<std::pair<int, Rat>> terms;
    for (const auto& [lstr, cval] : b.at("coeffs").items()) {
      const int l = std::stoi(lstr) - 1;
      const Rat c = cval.is_string() ? parse_rational(cval.get<std::string>())
                                     : Rat(cval.get<long long>());
      if (c != 0) terms.emplace_back(l, c);
    }
    std::sort(terms.begin(), terms.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    if (!terms.empty()) s.brackets[{i, jdx}] = std::move(terms);
  }
  s.finalize();
  return s;
}

inline nlohmann::ordered_json spec_to_json(const LieAlgebraSpec& s) {
  nlohmann::ordered_json j;
  j["dim"] = s.dim;
  std::vector<int> gens;
  for (int g : s.generators) gens.push_back(g + 1);
  j["generators"] = gens;
  if (s.grading)
    j["grading"] = *s.grading;
  else
    j["grading"] = nullptr;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& [key, terms] : s.brackets) {
    nlohmann::ordered_json e;
    e["i"] = key.first + 1;
    e["j"] = key.second + 1;
    nlohmann::ordered_json coeffs;
    for (const auto& [l, c] : terms) coeffs[std::to_string(l + 1)] = rational_to_string(c);
    e["coeffs"] = coeffs;
    arr.push_back(e);
  }
  j["brackets"] = arr;
  return j;
}

}  // namespace hypolab

#endif  // HYPOLAB_ALGEBRA_HPP
