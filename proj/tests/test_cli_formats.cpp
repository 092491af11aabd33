#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypolab/hypolab.hpp"

using namespace hypolab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string tmp_prefix(const std::string& tag) {
  return (fs::temp_directory_path() / ("hypolab_test_" + tag)).string();
}

}  // namespace

TEST_CASE("config json schema") {
  SECTION("unknown top-level keys are rejected") {
    nlohmann::json j = {{"group", "heisenberg3"}, {"experimnt", "kp"}};
    try {
      ExperimentConfig::from_json(j);
      FAIL("expected a schema violation");
    } catch (const std::invalid_argument& err) {
      CHECK(std::string(err.what()).find("unknown key 'experimnt'") != std::string::npos);
    }
  }
  SECTION("unknown family keys are rejected") {
    nlohmann::json j = {{"family", {{"degre", 3}}}};
    try {
      ExperimentConfig::from_json(j);
      FAIL("expected a schema violation");
    } catch (const std::invalid_argument& err) {
      CHECK(std::string(err.what()).find("unknown key 'family.degre'") != std::string::npos);
    }
  }
  SECTION("violations are itemized") {
    ExperimentConfig cfg;
    cfg.experiment = "kp";
    cfg.p = 1.0;
    cfg.n = 0;
    cfg.t_grid = {1.0, -2.0};
    try {
      cfg.validate();
      FAIL("expected validation to throw");
    } catch (const std::invalid_argument& err) {
      const std::string msg = err.what();
      CHECK(msg.find("config schema violations:") == 0);
      CHECK(msg.find("p: must be > 1 for kp/cp") != std::string::npos);
      CHECK(msg.find("n: must be >= 1") != std::string::npos);
      CHECK(msg.find("t_grid: entries must be positive") != std::string::npos);
    }
  }
  SECTION("round trip preserves every field") {
    ExperimentConfig cfg;
    cfg.group = "free:2:3";
    cfg.experiment = "kp";
    cfg.t_grid = {0.5, 2.0};
    cfg.p = 2.5;
    cfg.n = 32;
    cfg.N = 12345;
    cfg.seed = 99;
    cfg.family.degree = 4;
    cfg.family.rate_max = 0.7;
    cfg.output = "somewhere/out";
    cfg.restarts = 3;
    cfg.bootstrap = 55;
    cfg.allow_deep = true;
    cfg.function = TestFunction(5, {{{1, 0, 0, 0, 0}, 1.0}}, {0.1, 0.1, 0.1, 0.1, 0.1});
    const ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK(back.group == cfg.group);
    CHECK(back.t_grid == cfg.t_grid);
    CHECK(back.bootstrap == 55);
    REQUIRE(back.function.has_value());
  }
}

TEST_CASE("report serialization") {
  ExperimentConfig cfg;
  cfg.experiment = "kp";
  cfg.group = "abelian:2";
  cfg.p = 2.0;
  ExperimentReport rep;
  rep.config = cfg;
  rep.add(1.0, "kp", 1.0 / 3.0, 0.001);
  rep.add(2.0, "kp", 3.141592653589793, 0.002);
  rep.diagnostics["note"] = "x";
  rep.wall_seconds = 1.25;

  SECTION("csv header and value round trip") {
    const std::string csv = rep.csv();
    CHECK(csv.rfind("experiment,group,t,p,quantity,value,ci_half,n,N,seed\n", 0) == 0);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);  // header
    std::getline(is, line);
    // Column 6 is the value; %.17g must reparse to the identical double.
    std::stringstream fields(line);
    std::string tok;
    for (int c = 0; c < 6; ++c) std::getline(fields, tok, ',');
    CHECK(std::strtod(tok.c_str(), nullptr) == 1.0 / 3.0);
  }
  SECTION("json round trip is byte identical") {
    const std::string once = rep.to_json().dump(2);
    const ExperimentReport back = ExperimentReport::from_json(rep.to_json());
    CHECK(back.to_json().dump(2) == once);
  }
  SECTION("emit writes the requested format") {
    ExperimentReport out = rep;
    out.config.output = tmp_prefix("emit");
    emit(out, "csv");
    emit(out, "json");
    CHECK(slurp(out.config.output + ".csv") == out.csv());
    const std::string jtext = slurp(out.config.output + ".json");
    CHECK(nlohmann::json::parse(jtext) == out.to_json());
    CHECK_THROWS_AS(emit(out, "yaml"), std::invalid_argument);
    fs::remove(out.config.output + ".csv");
    fs::remove(out.config.output + ".json");
  }
}

TEST_CASE("experiment driver") {
  SECTION("algebra-check is deterministic and clean") {
    ExperimentConfig cfg;
    cfg.experiment = "algebra-check";
    cfg.group = "heisenberg3";
    cfg.N = 10;
    cfg.n = 8;
    const ExperimentReport a = run_experiment(cfg);
    const ExperimentReport b = run_experiment(cfg);
    CHECK(a.ok());
    CHECK(a.csv() == b.csv());
    bool saw_step = false;
    for (const auto& row : a.rows)
      if (row.quantity == "nilpotency_step") {
        saw_step = true;
        CHECK(row.value == 2.0);
      }
    CHECK(saw_step);
  }
  SECTION("simulate writes the trajectory dump") {
    ExperimentConfig cfg;
    cfg.experiment = "simulate";
    cfg.group = "heisenberg3";
    cfg.N = 50;
    cfg.n = 8;
    cfg.output = tmp_prefix("sim");
    const ExperimentReport rep = run_experiment(cfg);
    CHECK(rep.ok());
    CHECK(rep.rows.size() == 3);  // one endpoint mean per coordinate
    const std::string paths_file = cfg.output + "_paths.csv";
    CHECK(fs::exists(paths_file));
    fs::remove(paths_file);
  }
  SECTION("scaling at a binary-exact horizon couples bitwise") {
    ExperimentConfig cfg;
    cfg.experiment = "scaling";
    cfg.group = "heisenberg3";
    cfg.t_grid = {4.0};
    cfg.N = 400;
    cfg.n = 16;
    const ExperimentReport rep = run_experiment(cfg);
    CHECK(rep.ok());
    bool saw = false;
    for (const auto& row : rep.rows)
      if (row.quantity == "dilation_coupling_residual") {
        saw = true;
        CHECK(row.value == 0.0);
      }
    CHECK(saw);
  }
  SECTION("duality on a small budget passes its hard checks") {
    ExperimentConfig cfg;
    cfg.experiment = "duality";
    cfg.group = "heisenberg3";
    cfg.N = 200;
    cfg.n = 8;
    const ExperimentReport rep = run_experiment(cfg);
    CHECK(rep.ok());
    for (const auto& row : rep.rows)
      if (row.quantity == "collapse_residual") CHECK(row.value <= 1e-9);
  }
  SECTION("bad inputs surface as exceptions") {
    ExperimentConfig cfg;
    cfg.experiment = "frobnicate";
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
    cfg.experiment = "simulate";
    cfg.group = "no_such_group";
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  }
}

TEST_CASE("command line binary") {
  if (!fs::exists("./hypolab")) SKIP("hypolab binary not present in the working directory");
  const std::string prefix = tmp_prefix("cli");
  const std::string config_path = prefix + "_config.json";
  {
    ExperimentConfig cfg;
    cfg.experiment = "algebra-check";
    cfg.group = "heisenberg3";
    std::ofstream os(config_path);
    os << cfg.to_json().dump(2) << "\n";
  }
  const std::string cmd = "./hypolab algebra-check --config " + config_path + " --out " + prefix +
                          " --format json > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  CHECK(rc == 0);
  REQUIRE(fs::exists(prefix + ".json"));
  const ExperimentReport rep = ExperimentReport::from_json(
      nlohmann::json::parse(slurp(prefix + ".json")));
  CHECK(rep.ok());
  CHECK(rep.config.group == "heisenberg3");
  fs::remove(config_path);
  fs::remove(prefix + ".json");
}
