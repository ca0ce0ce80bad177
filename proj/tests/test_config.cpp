#include <doctest.h>

#include <string>

#include "pfield/config.hpp"
#include "pfield/error.hpp"

using namespace pfield;

TEST_CASE("parse key=value text with comments") {
  const auto cfg = RunConfig::parse("# run\n dt = 0.5 \nK=7 # inline\n\nunits=pixels\n");
  cfg.validate();
  CHECK(cfg.real("dt") == 0.5);
  CHECK(cfg.count("K") == 7);
  CHECK(cfg.text("units") == "pixels");
  CHECK(cfg.count("obs_len") == 8);
  CHECK(cfg.real_list("horizons") == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("validation enumerates every problem") {
  auto cfg = RunConfig::parse("dt=fast\nbogus=1\nprotocol=kfold\nno equals sign\n");
  cfg.apply_override("also_bad=2");
  const std::vector<std::string> required{"data_dir"};
  try {
    cfg.validate(required);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const char* needle : {"dt='fast'", "unknown key 'bogus'", "unknown key 'also_bad'",
                               "protocol='kfold'", "line 4", "missing required key 'data_dir'"}) {
      CHECK_MESSAGE(msg.find(needle) != std::string::npos, needle);
    }
    CHECK(msg.find("6 problem") != std::string::npos);
  }
}

TEST_CASE("overrides replace file values") {
  auto cfg = RunConfig::parse("K=3\nseed=1\n");
  cfg.apply_override("K=20");
  cfg.validate();
  CHECK(cfg.count("K") == 20);
  CHECK(cfg.count("seed") == 1);
}

TEST_CASE("protocol config conversion") {
  auto cfg = RunConfig::parse(
      "data_dir=/tmp/x\nscenes=eth, hotel ,univ\nmodel=linear\nunits=pixels\nresolution=0.5\n"
      "trajectory_width=4\nsocial=off\nbundle=/tmp/b.pfeb\nhorizons=1.2,4.8\n");
  cfg.validate();
  const auto pc = cfg.protocol_config();
  CHECK(pc.model == Model::Linear);
  CHECK(pc.scenes == std::vector<std::string>{"eth", "hotel", "univ"});
  CHECK(pc.pixel_units);
  CHECK(pc.analytic.trajectory_width == 2.0);
  CHECK_FALSE(pc.analytic.social);
  REQUIRE(pc.bundle_path.has_value());
  CHECK(pc.bundle_path->string() == "/tmp/b.pfeb");
  CHECK(pc.horizons == std::vector<double>{1.2, 4.8});
  CHECK(pc.k == 20);

  auto split = RunConfig::parse("protocol=split\n");
  split.validate();
  CHECK_THROWS_AS((void)split.protocol_config(), ConfigError);
}

TEST_CASE("missing config file is a config error") {
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/run.cfg"), ConfigError);
  const RunConfig empty;
  CHECK_THROWS_AS((void)empty.text("input"), ConfigError);
}
