#include <algorithm>
#include <string>

#include "doctest.h"
#include "porodec/config.hpp"

using namespace porodec;

TEST_CASE("presets load") {
  for (const auto& name : Config::preset_names()) {
    CAPTURE(name);
    CHECK_NOTHROW(Config::preset(name));
  }
  const auto names = Config::preset_names();
  for (const char* n : {"poro-5.1", "poro-5.1-desk", "network-5.2", "toy-5.3"}) {
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  }
  const Config c = Config::preset("poro-5.1");
  CHECK(c.kind() == "two-field");
  CHECK(c.number("params.lambda") == doctest::Approx(1.2e10));
  CHECK(c.number("time.tau") == doctest::Approx(1.0 / 16));
  CHECK(c.integer("mesh.n") == 16);
  CHECK(Config::preset("network-5.2").kind() == "network");
  CHECK(Config::preset("toy-5.3").kind() == "toy");
}

TEST_CASE("missing preset lists available names") {
  try {
    Config::preset("nope");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("poro-5.1") != std::string::npos);
    CHECK(msg.find("toy-5.3") != std::string::npos);
  }
}

TEST_CASE("parse and overrides") {
  Config c = Config::parse("[model]\nkind = toy # comment\n[toy]\nomega = 0.2\n[study]\ntaus = 1e-2, 1e-3\n");
  CHECK(c.kind() == "toy");
  CHECK(c.number("toy.omega") == doctest::Approx(0.2));
  CHECK(c.list("study.taus") == std::vector<double>{1e-2, 1e-3});
  c.apply_override("toy.omega=0.25");
  CHECK(c.number("toy.omega") == doctest::Approx(0.25));
  c.apply_override("time.tau = 1/64");
  CHECK(c.number("time.tau") == doctest::Approx(1.0 / 64));
  CHECK(c.number_or("time.T", 3.0) == 3.0);
  CHECK(c.integer_or("mesh.n", 7) == 7);
  c.erase("toy.omega");
  CHECK_FALSE(c.has("toy.omega"));
}

TEST_CASE("indexed keys") {
  CHECK(Config::known_key("params.kappa_over_nu3"));
  CHECK(Config::known_key("beta.b12"));
  CHECK(Config::known_key("loads.g2_time"));
  CHECK(Config::known_key("initial.p4"));
  CHECK_FALSE(Config::known_key("params.kappa"));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(Config::parse("[model]\nkindd = toy\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("kind = toy\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[model\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[model]\nkind toy\n"), ConfigError);
  Config c;
  CHECK_THROWS_AS(c.set("nope.key", "1"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("time.tau"), ConfigError);
  CHECK_THROWS_AS(c.get("time.tau"), ConfigError);
  c.set("toy.omega", "x + 1");
  CHECK_THROWS_AS(c.number("toy.omega"), ConfigError);
  CHECK_THROWS_AS(Config::load_file("/nonexistent/file.ini"), ConfigError);
}

TEST_CASE("round trip through text") {
  const Config a = Config::preset("network-5.2");
  const Config b = Config::parse(a.to_text());
  CHECK(a.entries() == b.entries());
}
