#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "spaceverse/config.hpp"

using namespace spaceverse;
using nlohmann::json;

TEST_CASE("an empty object resolves to the full default scenario") {
  const auto cfg = config_from_json(json::object());
  CHECK(cfg.satellites.size() == 10);
  CHECK(cfg.satellites[0].altitude_km == 570.0);
  CHECK(cfg.link.bandwidth_bps == doctest::Approx(110.67e6));
  CHECK(cfg.preprocess.alpha == 0.35);
  CHECK(cfg.preprocess.beta == 0.55);
  CHECK(cfg.confidence.thresholds == std::vector<double>{0.5, 0.4});
  CHECK(cfg.policy.kind == Policy::SpaceVerse);
  // Derived seeds are materialized.
  CHECK(cfg.encoder.seed != 0);
  CHECK(cfg.generator.seed != cfg.encoder.seed);
}

TEST_CASE("unknown fields are rejected with their paths") {
  json j;
  j["preprocess"]["alpa"] = 0.3;  // typo
  try {
    config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.messages.size() == 1);
    CHECK(e.messages[0].find("config.preprocess.alpa") != std::string::npos);
    CHECK(e.messages[0].find("unknown field") != std::string::npos);
  }
}

TEST_CASE("validation collects every error with a field path") {
  json j;
  j["preprocess"]["alpha"] = 0.9;
  j["preprocess"]["beta"] = 0.2;
  j["link"]["bandwidth_bps"] = -1.0;
  j["policy"]["name"] = "Nonsense";
  try {
    config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.messages.size() == 3);
    bool saw_alpha = false, saw_link = false, saw_policy = false;
    for (const auto& m : e.messages) {
      saw_alpha |= m.find("alpha must be strictly below beta") != std::string::npos;
      saw_link |= m.find("config.link.bandwidth_bps") != std::string::npos;
      saw_policy |= m.find("config.policy.name") != std::string::npos;
    }
    CHECK(saw_alpha);
    CHECK(saw_link);
    CHECK(saw_policy);
  }
}

TEST_CASE("thresholds accept the infinity strings") {
  json j;
  j["confidence"]["thresholds"] = {"-inf", "inf"};
  const auto cfg = config_from_json(j);
  CHECK(cfg.confidence.thresholds[0] == -std::numeric_limits<double>::infinity());
  CHECK(cfg.confidence.thresholds[1] == std::numeric_limits<double>::infinity());
}

TEST_CASE("per-stage threshold count is enforced") {
  json j;
  j["confidence"]["stages"] = 3;
  j["confidence"]["thresholds"] = {0.5, 0.4};
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
}

TEST_CASE("derived dimensions follow the encoder") {
  json j;
  j["encoder"]["embedding_dim"] = 32;
  j["encoder"]["token_embed_dim"] = 16;
  const auto cfg = config_from_json(j);
  CHECK(cfg.confidence.feature_dim == 32);
  CHECK(cfg.confidence.token_embed_dim == 16);
  CHECK(cfg.generator.region_height == cfg.preprocess.region_height);
}

TEST_CASE("the resolved echo round-trips to the identical configuration") {
  json j;
  j["seed"] = 7;
  j["samples"]["count"] = 123;
  j["confidence"]["thresholds"] = {0.6, "-inf"};
  const auto cfg = config_from_json(j);
  const auto echo = config_to_json(cfg);
  const auto cfg2 = config_from_json(json::parse(echo.dump()));
  CHECK(config_to_json(cfg2).dump(2) == echo.dump(2));
  CHECK(cfg2.generator.count == 123);
  CHECK(cfg2.confidence.thresholds[1] ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("missing config files name the path") {
  try {
    load_config("/no/such/config.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.messages[0].find("/no/such/config.json") != std::string::npos);
  }
}

TEST_CASE("malformed JSON is a config error") {
  const auto dir = std::filesystem::temp_directory_path() / "cfg_tests";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "broken.json").string();
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("oracle dominance is validated at load time") {
  json j;
  j["oracles"]["satellite"]["accuracy_midpoint"] = 0.99;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
}
