#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <variant>

#include "mstnhp/config.hpp"

using namespace mstnhp;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

}  // namespace

TEST_CASE("preset families load their parameter tables") {
  const auto cfg = parse("family = biv1\n");
  REQUIRE(cfg.family == ExperimentConfig::Family::Biv1);
  REQUIRE_FALSE(cfg.temporal_only);
  REQUIRE(cfg.K() == 2);
  REQUIRE(cfg.T == 100.0);
  const auto& p = std::get<SeparableKernelParams>(cfg.st_spec);
  REQUIRE(p.mu[0] == 0.1);
  REQUIRE(p.alpha[1] == 0.1);
  REQUIRE(p.beta[0] == 0.3);
  REQUIRE(p.sigma2[0] == 0.5);

  const auto c2 = parse("family = biv2\n");
  REQUIRE(std::get<SeparableKernelParams>(c2.st_spec).alpha[1] == -0.1);
  const auto c3 = parse("family = biv3\n");
  REQUIRE(std::get<SeparableKernelParams>(c3.st_spec).beta[0] == 0.1);

  const auto c4 = parse("family = biv4\n");
  REQUIRE(std::holds_alternative<Biv4Kernel>(c4.st_spec));
  REQUIRE(c4.K() == 2);
}

TEST_CASE("explicit separable family") {
  const auto cfg = parse(
      "family = separable\n"
      "K = 1\n"
      "mu = 0.2\n"
      "alpha = 0.0\n"
      "beta = 1.0\n"
      "sigma2 = 0.5\n"
      "T = 40\n");
  REQUIRE(cfg.K() == 1);
  REQUIRE(cfg.T == 40.0);
  const auto& p = std::get<SeparableKernelParams>(cfg.st_spec);
  REQUIRE(p.mu[0] == 0.2);
  REQUIRE(p.alpha[0] == 0.0);
}

TEST_CASE("explicit temporal family") {
  const auto cfg = parse(
      "family = temporal\n"
      "K = 2\n"
      "mu = 0.3 0.3\n"
      "beta = 1.3 0.4\n"
      "alpha = 0.15 0.02 0.01 0.15\n"
      "T = 50\n");
  REQUIRE(cfg.temporal_only);
  REQUIRE(cfg.K() == 2);
  REQUIRE(cfg.temporal_spec.alpha[2] == 0.01);
}

TEST_CASE("sigma2 override narrows preset spatial kernels") {
  const auto cfg = parse("family = biv1\nsigma2_override = 1e-4\n");
  const auto& p = std::get<SeparableKernelParams>(cfg.st_spec);
  for (double v : p.sigma2) REQUIRE(v == 1e-4);
  REQUIRE_THROWS_AS(parse("family = biv4\nsigma2_override = 1e-4\n"), ConfigError);
  REQUIRE_THROWS_AS(parse("family = biv1\nsigma2_override = -1\n"), ConfigError);
}

TEST_CASE("domains and comments") {
  const auto cfg = parse(
      "# experiment window\n"
      "family = biv1\n"
      "domain = rect -1 1 -1 1  # normalized coords\n"
      "T = 366\n");
  REQUIRE(cfg.domain.x0() == -1.0);
  REQUIRE(cfg.domain.y1() == 1.0);
  REQUIRE(cfg.T == 366.0);

  const auto poly = parse("family = biv1\ndomain = polygon 0 0 1 0 0 1\n");
  REQUIRE(poly.domain.kind() == SpatialDomain::Kind::Polygon);
  REQUIRE(poly.domain.contains({0.2, 0.2}));

  REQUIRE_THROWS_AS(parse("family = biv1\ndomain = circle 0 1\n"), ConfigError);
  REQUIRE_THROWS_AS(parse("family = biv1\ndomain = rect 0 1\n"), ConfigError);
}

TEST_CASE("config errors") {
  REQUIRE_THROWS_AS(parse("T = 10\n"), ConfigError);                    // no family
  REQUIRE_THROWS_AS(parse("family = gauss\n"), ConfigError);            // unknown family
  REQUIRE_THROWS_AS(parse("family = separable\nK = 1\n"), ConfigError); // missing params
  REQUIRE_THROWS_AS(parse("family = temporal\nmu = 0.1\nalpha = 0\nbeta = 1\n"),
                    ConfigError);                                       // missing K
  REQUIRE_THROWS_AS(parse("family = biv1\nT = -5\n"), ConfigError);
  REQUIRE_THROWS_AS(
      parse("family = separable\nK = 1\nmu = 0.1\nalpha = 0\nbeta = -1\nsigma2 = 1\n"),
      ConfigError);  // validate() rejects nonpositive decay
}

TEST_CASE("config text is preserved and hashed stably") {
  const std::string text = "family = biv1\nT = 25\n";
  const auto cfg = parse(text);
  REQUIRE(cfg.text == text);
  REQUIRE(fnv1a_hash(cfg.text) == fnv1a_hash(text));
  REQUIRE(fnv1a_hash("a") != fnv1a_hash("b"));
  REQUIRE(fnv1a_hash("") == 0xCBF29CE484222325ULL);
}
