#ifndef HYPOLAB_REGISTRY_HPP
#define HYPOLAB_REGISTRY_HPP

// Named algebra specs: "heisenberg3", "abelian:<d>", "free:<k>:<m>", the
// direct product "A*B" (left factor's generators kept when the right factor
// is a plain abelian tail via the alias "heisenberg3xabelian:1"), or a path
// to a JSON spec file.

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hypolab/algebra.hpp"
#include "hypolab/hall.hpp"

namespace hypolab {

inline LieAlgebraSpec heisenberg3_spec() {
  LieAlgebraSpec spec;
  spec.dim = 3;
  spec.generators = {0, 1};
  spec.grading = std::vector<int>{1, 1, 2};
  spec.brackets[{0, 1}] = {{2, Rat(1)}};
  spec.finalize();
  return spec;
}

inline LieAlgebraSpec abelian_spec(int d) {
  if (d < 1) throw std::invalid_argument("abelian spec: need dimension >= 1");
  LieAlgebraSpec spec;
  spec.dim = d;
  spec.generators.resize(d);
  for (int i = 0; i < d; ++i) spec.generators[i] = i;
  spec.grading = std::vector<int>(d, 1);
  spec.finalize();
  return spec;
}

inline LieAlgebraSpec make_named_spec(const std::string& name) {
  if (name == "heisenberg3") return heisenberg3_spec();
  if (name == "heisenberg3xabelian:1")
    return direct_sum(heisenberg3_spec(), abelian_spec(1), /*keep_right_generators=*/false);

  if (name.rfind("abelian:", 0) == 0) return abelian_spec(std::stoi(name.substr(8)));

  if (name.rfind("free:", 0) == 0) {
    const auto rest = name.substr(5);
    const auto sep = rest.find(':');
    if (sep == std::string::npos)
      throw std::invalid_argument("spec name: expected free:<k>:<m>, got '" + name + "'");
    const int k = std::stoi(rest.substr(0, sep));
    const int m = std::stoi(rest.substr(sep + 1));
    return free_nilpotent(k, m);
  }

  const auto star = name.find('*');
  if (star != std::string::npos)
    return direct_sum(make_named_spec(name.substr(0, star)),
                      make_named_spec(name.substr(star + 1)),
                      /*keep_right_generators=*/true);

  if (name.find('/') != std::string::npos ||
      (name.size() > 5 && name.substr(name.size() - 5) == ".json")) {
    std::ifstream in(name);
    if (!in) throw std::invalid_argument("spec file not found: " + name);
    nlohmann::json j;
    in >> j;
    return spec_from_json(j);
  }

  throw std::invalid_argument("unknown spec name: '" + name + "'");
}

}  // namespace hypolab

#endif  // HYPOLAB_REGISTRY_HPP
