#include <doctest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "hypermorl/config.hpp"

using namespace hypermorl;

namespace {

const std::filesystem::path kRoot = HYPERMORL_SOURCE_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text, "test.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace_line(std::string text, const std::string& needle, const std::string& with) {
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  const auto end = text.find('\n', pos);
  return text.replace(pos, end - pos, with);
}

}  // namespace

TEST_CASE("shipped configs parse and validate") {
  for (const char* name : {"mo_lqr.yaml", "mo_pointnav2.yaml", "mo_pointnav3.yaml"}) {
    const RunConfig cfg = load_run_config(kRoot / "configs" / name);
    CHECK_NOTHROW(cfg.train_config().validate(cfg.environment.make()->spec()));
  }
  const RunConfig lqr = load_run_config(kRoot / "configs/mo_lqr.yaml");
  CHECK(lqr.environment.id == "mo-lqr");
  CHECK(lqr.training.alpha == 0.15);
  CHECK(lqr.training.num_preferences == 6);
  CHECK(lqr.training.d == 10);
  CHECK(lqr.evaluation.reference.size() == 2);
  CHECK(load_run_config(kRoot / "configs/mo_pointnav3.yaml").training.num_preferences == 15);
}

TEST_CASE("missing alpha names the key and its position") {
  const std::string text = replace_line(slurp(kRoot / "configs/mo_lqr.yaml"), "  alpha:", "");
  const std::string err = error_of(text);
  CHECK(err.find("training.alpha") != std::string::npos);
  CHECK(err.find("missing required key") != std::string::npos);
  CHECK(std::regex_search(err, std::regex("^test\\.yaml:[0-9]+:[0-9]+: ")));
}

TEST_CASE("unknown keys are rejected with their line") {
  const std::string base = slurp(kRoot / "configs/mo_lqr.yaml");
  const std::string text = replace_line(base, "  alpha:", "  alpha: 0.15\n  alhpa: 0.2");
  const std::string err = error_of(text);
  CHECK(err.find("training.alhpa") != std::string::npos);
  CHECK(err.find("unknown key") != std::string::npos);
  int line = 1;
  for (std::size_t i = 0; i < text.find("alhpa"); ++i) line += text[i] == '\n';
  CHECK(err.find("test.yaml:" + std::to_string(line) + ":") == 0);
}

TEST_CASE("type and range errors") {
  const std::string base = slurp(kRoot / "configs/mo_lqr.yaml");
  CHECK(error_of(replace_line(base, "  num_preferences:", "  num_preferences: 2.5"))
            .find("expected an integer") != std::string::npos);
  CHECK(error_of(replace_line(base, "  alpha:", "  alpha: fast")).find("training.alpha") !=
        std::string::npos);
  const std::string range = error_of(replace_line(base, "  alpha:", "  alpha: 1.5"));
  CHECK(range.find("training.alpha") != std::string::npos);
  CHECK(std::regex_search(range, std::regex("^test\\.yaml:[0-9]+:")));
  CHECK(error_of(replace_line(base, "schema_version:", "schema_version: 2"))
            .find("schema_version") != std::string::npos);
  CHECK(error_of(replace_line(base, "  id:", "  id: mo-hopper")).find("environment.id") !=
        std::string::npos);
  CHECK(error_of("training: [").find("test.yaml:") == 0);
  CHECK(error_of("").find("empty") != std::string::npos);
}

TEST_CASE("dump and parse round trip") {
  for (const char* name : {"mo_lqr.yaml", "mo_pointnav2.yaml", "mo_pointnav3.yaml"}) {
    const RunConfig cfg = load_run_config(kRoot / "configs" / name);
    const std::string dumped = dump_run_config(cfg);
    const RunConfig back = parse_run_config(dumped, "dump");
    CHECK(dump_run_config(back) == dumped);
    CHECK(back.training.lr == cfg.training.lr);
    CHECK(back.training.ppo.min_log_std == cfg.training.ppo.min_log_std);
    CHECK(back.evaluation.reference == cfg.evaluation.reference);
  }
  RunConfig odd = load_run_config(kRoot / "configs/mo_lqr.yaml");
  odd.training.lr = 0.1 + 0.2;
  odd.training.seed = 18446744073709551615ull;
  odd.training.critic_mode = CriticMode::kPerSlot;
  odd.training.ppo.reward_scale = {0.5, 3.0};
  const RunConfig back = parse_run_config(dump_run_config(odd));
  CHECK(back.training.lr == odd.training.lr);
  CHECK(back.training.seed == odd.training.seed);
  CHECK(back.training.critic_mode == CriticMode::kPerSlot);
  CHECK(back.training.ppo.reward_scale == odd.training.ppo.reward_scale);
  CHECK(back.environment.lqr.A == odd.environment.lqr.A);
}

TEST_CASE("oracle_front rejects unknown environments") {
  EnvironmentConfig env;
  env.id = "mo-hopper";
  CHECK_THROWS_AS(oracle_front(env, preference_grid(2, 3)), ConfigError);
}
