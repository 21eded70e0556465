#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "wml/config.hpp"
#include "wml/errors.hpp"
#include "wml/io.hpp"

using namespace wml;

TEST_CASE("config formats agree") {
  const auto j = ExperimentConfig::from_json(R"({"target": {"d": 5, "epsilon": [0.01, 0.02]},
                                                "evolution": {"grid": 1024, "perturbation": {"shape": "bump"}}})");
  const auto ini = ExperimentConfig::from_text(
      "[target]\nd = 5\nepsilon = 0.01, 0.02\n[evolution]\ngrid = 1024\n[evolution.perturbation]\nshape = bump\n", "ini");
  const auto info = ExperimentConfig::from_text(
      "target\n{\n  d 5\n  epsilon \"0.01,0.02\"\n}\nevolution\n{\n  grid 1024\n  perturbation\n  {\n    shape bump\n  }\n}\n",
      "info");
  CHECK(j.d == 5);
  CHECK(j.epsilon == std::vector<double>{0.01, 0.02});
  CHECK(j.evolution.grid == 1024);
  CHECK(j.hash() == ini.hash());
  CHECK(j.hash() == info.hash());
  CHECK(j.hash() != ExperimentConfig{}.hash());
  const auto scalar = ExperimentConfig::from_text("target\n{\n  basis 0.5\n}\n", "info");
  CHECK(scalar.hash() == ExperimentConfig{}.hash());
}

TEST_CASE("config round trip and validation") {
  ExperimentConfig c;
  c.d = 4;
  c.epsilon = {-0.02, 0.0};
  c.evolution.tau_max = 6.5;
  c.norms.s = 2.1;
  const auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 16);

  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"target": {"dimension": 3}})"), ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"colour": 1})"), ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"target": {"d": "three"}})"), ValidationError);
  ExperimentConfig bad;
  bad.d = 2;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = {};
  bad.epsilon.clear();
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_NOTHROW(ExperimentConfig{}.validate());
  const auto tol = nlohmann::json::parse(ExperimentConfig{}.tolerances_json());
  CHECK(tol.is_object());
  CHECK_FALSE(tol.empty());
}

TEST_CASE("profile json round trip") {
  const auto sol = solve_profile(WarpedTarget(3, 0.02));
  const RunStamp st{"abc", code_version(), "{}"};
  const auto text = profile_to_json(sol, st);
  const auto j = nlohmann::json::parse(text);
  CHECK(j.contains("stamp"));
  const auto back = profile_from_json(text);
  CHECK(back.b == sol.b);
  CHECK(back.c1 == sol.c1);
  for (double r : {0.0, 0.1, 0.5, 0.99, 1.0, 1.3, 7.0, 60.0}) {
    const auto a = sol.eval(r), b = back.eval(r);
    CHECK(a.f == b.f);
    CHECK(a.f1 == b.f1);
    CHECK(a.u == b.u);
  }
  CHECK_THROWS_AS(profile_from_json("{}"), ValidationError);
  CHECK_THROWS_AS(load_profile("/nonexistent/profile.json"), ValidationError);

  const auto col = newton_collocation(WarpedTarget(4, 0.01), [](double r) { return 2 * std::atan(r / std::sqrt(2.0)); });
  const auto cb = profile_from_json(profile_to_json(col, st));
  for (double r : {0.0, 0.4, 3.0, 40.0}) CHECK(cb.value(r) == col.value(r));
}

TEST_CASE("csv output is deterministic") {
  const auto sol = solve_profile(WarpedTarget(5, -0.01));
  std::ostringstream a, b;
  write_profile_csv(a, sol, {0.0, 0.5, 1.0, 2.0});
  write_profile_csv(b, solve_profile(WarpedTarget(5, -0.01)), {0.0, 0.5, 1.0, 2.0});
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("rho,f,fp,psi1\n", 0) == 0);
  CHECK(fmt_double(0.1) == "0.10000000000000001");
}
