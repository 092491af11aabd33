#ifndef HYPOLAB_RATIONAL_HPP
#define HYPOLAB_RATIONAL_HPP

// Exact rational scalars used for structure constants and symbolic-layer
// computations (series coefficients, rank decisions, identity checks).

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypolab {

using Rat = boost::multiprecision::cpp_rational;
using RatVec = std::vector<Rat>;

// Parses "p", "-p", "p/q" (optionally signed) into an exact rational.
inline Rat parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) {
      return Rat(boost::multiprecision::cpp_int(s));
    }
    boost::multiprecision::cpp_int num(s.substr(0, slash));
    boost::multiprecision::cpp_int den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rat(num, den);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed rational literal: '" + s + "'");
  }
}

inline std::string rational_to_string(const Rat& r) {
  const auto num = boost::multiprecision::numerator(r);
  const auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline double to_double(const Rat& r) { return static_cast<double>(r); }

}  // namespace hypolab

#endif  // HYPOLAB_RATIONAL_HPP
