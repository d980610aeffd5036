#include <doctest.h>

#include "cvgae/config.hpp"
#include "helpers.hpp"

using namespace cvgae;
using nlohmann::json;

TEST_CASE("config overlay and round trip") {
  const TrainConfig cfg = config_from_json(json{{"alpha", 0.3}, {"M", 5}, {"scale", nullptr}, {"kl_weight", nullptr}});
  CHECK(cfg.alpha == 0.3);
  CHECK(cfg.M == 5);
  CHECK_FALSE(cfg.scale.has_value());
  CHECK_FALSE(cfg.kl_weight.has_value());
  CHECK(cfg.resolved_scale(10) == doctest::Approx(0.01));

  const TrainConfig back = config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  CHECK(TrainConfig{}.kl_weight == 1.0);
}

TEST_CASE("unknown keys are named") {
  try {
    config_from_json(json{{"alhpa", 0.2}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("alhpa") != std::string::npos);
  }
  CHECK_THROWS_AS(config_from_json(json{{"M", "ten"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);
}

TEST_CASE("validation names the offending key") {
  auto fails_on = [](json j, const std::string& key) {
    try {
      config_from_json(j).validate();
      return false;
    } catch (const ConfigError& e) {
      return std::string(e.what()).find(key) != std::string::npos;
    }
  };
  CHECK(fails_on({{"alpha", 0.0}}, "alpha"));
  CHECK(fails_on({{"M", 0}}, "M"));
  CHECK(fails_on({{"stop_fraction", 1.5}}, "stop_fraction"));
  CHECK(fails_on({{"stop_fraction", 0.0}}, "stop_fraction"));
  CHECK(fails_on({{"L", 0}}, "L"));
  CHECK(fails_on({{"kl_weight", -1.0}}, "kl_weight"));
  CHECK(fails_on({{"nmi_norm", "harmonic"}}, "nmi_norm"));
  CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("model hash covers pretraining keys only") {
  const TrainConfig base;
  TrainConfig other = base;
  other.alpha = 0.15;
  other.no_pc = true;
  CHECK(other.model_hash() == base.model_hash());
  other.d = 8;
  CHECK(other.model_hash() != base.model_hash());
  other = base;
  other.kl_weight.reset();
  CHECK(other.model_hash() != base.model_hash());
}

TEST_CASE("config files") {
  testutil::TempDir dir;
  testutil::write_file(dir / "c.json", R"({"T1": 7, "seed": 3})");
  const TrainConfig cfg = load_config((dir / "c.json").string());
  CHECK(cfg.T1 == 7);
  CHECK(cfg.seed == 3);
  testutil::write_file(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
  CHECK_THROWS_AS(load_config((dir / "none.json").string()), ConfigError);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
}
