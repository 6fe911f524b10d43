#ifndef HYPERMORL_CONFIG_HPP_
#define HYPERMORL_CONFIG_HPP_

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypermorl/envs.hpp"
#include "hypermorl/trainer.hpp"

namespace hypermorl {

inline constexpr int kConfigSchemaVersion = 1;

// Invalid or incomplete run configuration. The message starts with
// "<source>:<line>:<column>: " when the offending node has a position.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnvironmentConfig {
  std::string id;  // "mo-lqr" | "mo-pointnav"
  LqrConfig lqr;
  PointNavConfig pointnav;

  int num_objectives() const;
  std::unique_ptr<Environment> make() const;
};

struct EvalConfig {
  int resolution = 20;
  int episodes = 1;
  int snapshot_count = 20;
  Vec reference;
};

struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  EnvironmentConfig environment;
  TrainConfig training;  // hypernet/policy sections land here too
  EvalConfig evaluation;

  // TrainConfig with the evaluation section folded in.
  TrainConfig train_config() const;
};

RunConfig parse_run_config(const std::string& text,
                           const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

// YAML text that parses back to an equal RunConfig (doubles at 17 digits).
std::string dump_run_config(const RunConfig& cfg);

// Oracle front for an environment section: Riccati for LQR, target
// grid for point navigation. Throws ConfigError for other ids.
OracleFront oracle_front(const EnvironmentConfig& env,
                         const std::vector<Preference>& grid);

}  // namespace hypermorl

#endif  // HYPERMORL_CONFIG_HPP_
