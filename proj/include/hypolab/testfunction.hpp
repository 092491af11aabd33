#ifndef HYPOLAB_TESTFUNCTION_HPP
#define HYPOLAB_TESTFUNCTION_HPP

// Polynomial-times-Gaussian-envelope test functions with exact coordinate
// partials, anisotropic envelope rates (closed under dilations), JSON
// serialization, and an optional linear pre-composition used to pull
// functions back along group homomorphisms.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "hypolab/algebra.hpp"

namespace hypolab {

struct Monomial {
  std::vector<int> exps;
  double coef = 0.0;
};

class TestFunction {
 public:
  TestFunction() = default;
  TestFunction(int dim, std::vector<Monomial> monomials, std::vector<double> rates)
      : dim_(dim), monomials_(std::move(monomials)), rates_(std::move(rates)) {
    if (static_cast<int>(rates_.size()) != dim_)
      throw std::invalid_argument("test function: envelope rate count must equal dim");
    for (const auto& m : monomials_)
      if (static_cast<int>(m.exps.size()) != dim_)
        throw std::invalid_argument("test function: monomial exponent length must equal dim");
    for (double r : rates_)
      if (r < 0.0) throw std::invalid_argument("test function: negative envelope rate");
  }

  int dim() const { return dim_; }
  const std::vector<Monomial>& monomials() const { return monomials_; }
  const std::vector<double>& rates() const { return rates_; }

  // Input dimension (of group coordinates), accounting for pre-composition.
  int input_dim() const { return pre_ ? static_cast<int>(pre_->cols()) : dim_; }

  bool bounded() const {
    for (const auto& m : monomials_) {
      int deg = 0;
      for (int e : m.exps) deg += e;
      if (deg == 0) continue;
      for (int j = 0; j < dim_; ++j)
        if (m.exps[j] > 0 && rates_[j] == 0.0) return false;
    }
    return true;
  }

  double operator()(const Vec& w) const {
    if (pre_) return eval_base(*pre_ * w);
    return eval_base(w);
  }

  // Gradient with respect to the group coordinates.
  Vec gradient(const Vec& w) const {
    if (pre_) {
      const Vec u = *pre_ * w;
      return pre_->transpose() * grad_base(u);
    }
    return grad_base(w);
  }

  // f∘φ where φ is a linear coordinate map (applied innermost).
  TestFunction precomposed(const Mat& map) const {
    TestFunction g = *this;
    if (static_cast<int>(map.rows()) != input_dim())
      throw std::invalid_argument("test function: pre-composition shape mismatch");
    g.pre_ = pre_ ? Mat(*pre_ * map) : map;
    return g;
  }

  // f∘φ_r for the graded dilation of the spec; stays in the family exactly
  // (monomial coefficients and envelope rates rescale) when no
  // pre-composition is attached, and folds into the linear map otherwise.
  TestFunction dilated(const LieAlgebraSpec& spec, double r) const {
    if (pre_) return precomposed(dilation_matrix(spec, r));
    if (!spec.grading) throw std::invalid_argument("dilate_function: spec has no grading");
    if (static_cast<int>(spec.grading->size()) != dim_)
      throw std::invalid_argument("dilate_function: spec/function dimension mismatch");
    TestFunction g = *this;
    for (auto& m : g.monomials_) {
      int w = 0;
      for (int j = 0; j < dim_; ++j) w += m.exps[j] * (*spec.grading)[j];
      m.coef *= std::pow(r, w);
    }
    for (int j = 0; j < dim_; ++j) g.rates_[j] *= std::pow(r, 2 * (*spec.grading)[j]);
    return g;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& m : monomials_) {
      nlohmann::ordered_json e;
      e["exps"] = m.exps;
      e["coef"] = m.coef;
      arr.push_back(e);
    }
    j["monomials"] = arr;
    j["envelope_rates"] = rates_;
    if (pre_) {
      auto rows = nlohmann::ordered_json::array();
      for (int r = 0; r < pre_->rows(); ++r) {
        std::vector<double> row(pre_->cols());
        for (int c = 0; c < pre_->cols(); ++c) row[c] = (*pre_)(r, c);
        rows.push_back(row);
      }
      j["precompose"] = rows;
    }
    return j;
  }

  static TestFunction from_json(const nlohmann::json& j) {
    std::vector<Monomial> ms;
    for (const auto& e : j.at("monomials")) {
      Monomial m;
      m.exps = e.at("exps").get<std::vector<int>>();
      m.coef = e.at("coef").get<double>();
      ms.push_back(std::move(m));
    }
    std::vector<double> rates = j.at("envelope_rates").get<std::vector<double>>();
    const int dim = static_cast<int>(rates.size());
    TestFunction f(dim, std::move(ms), std::move(rates));
    if (j.contains("precompose")) {
      const auto& rows = j.at("precompose");
      const int nr = static_cast<int>(rows.size());
      const int nc = nr > 0 ? static_cast<int>(rows[0].size()) : 0;
      Mat map(nr, nc);
      for (int r = 0; r < nr; ++r)
        for (int c = 0; c < nc; ++c) map(r, c) = rows[r][c].get<double>();
      // precompose() expects the base input dimension on the left.
      if (nr != dim) throw std::invalid_argument("test function: precompose row count mismatch");
      f.pre_ = map;
    }
    return f;
  }

 private:
  double eval_base(const Vec& u) const {
    double poly = 0.0;
    for (const auto& m : monomials_) {
      double term = m.coef;
      for (int j = 0; j < dim_; ++j)
        for (int e = 0; e < m.exps[j]; ++e) term *= u[j];
      poly += term;
    }
    return poly * envelope(u);
  }

  Vec grad_base(const Vec& u) const {
    Vec dpoly = Vec::Zero(dim_);
    double poly = 0.0;
    for (const auto& m : monomials_) {
      double term = m.coef;
      for (int j = 0; j < dim_; ++j)
        for (int e = 0; e < m.exps[j]; ++e) term *= u[j];
      poly += term;
      for (int j = 0; j < dim_; ++j) {
        if (m.exps[j] == 0) continue;
        double part = m.coef * m.exps[j];
        for (int l = 0; l < dim_; ++l) {
          const int e = (l == j) ? m.exps[l] - 1 : m.exps[l];
          for (int q = 0; q < e; ++q) part *= u[l];
        }
        dpoly[j] += part;
      }
    }
    const double env = envelope(u);
    Vec g(dim_);
    for (int j = 0; j < dim_; ++j) g[j] = (dpoly[j] - 2.0 * rates_[j] * u[j] * poly) * env;
    return g;
  }

  double envelope(const Vec& u) const {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) s += rates_[j] * u[j] * u[j];
    return std::exp(-s);
  }

  int dim_ = 0;
  std::vector<Monomial> monomials_;
  std::vector<double> rates_;
  std::optional<Mat> pre_;
};

}  // namespace hypolab

#endif  // HYPOLAB_TESTFUNCTION_HPP
