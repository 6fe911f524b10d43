#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "hypermorl/checkpoint.hpp"
#include "hypermorl/config.hpp"
#include "hypermorl/runner.hpp"

namespace fs = std::filesystem;
using namespace hypermorl;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool deterministic = false;
};

fs::path output_root() {
  const char* root = std::getenv("HYPERMORL_OUT_ROOT");
  return root && *root ? fs::path(root) : fs::path("runs");
}

fs::path default_out(const std::string& command, const Common& c, const RunConfig& cfg) {
  return output_root() / (command + "-" + fs::path(c.config).stem().string() + "-seed" +
                          std::to_string(cfg.training.seed));
}

RunConfig load_with_overrides(const Common& c) {
  RunConfig cfg = load_run_config(c.config);
  if (c.seed) cfg.training.seed = *c.seed;
  if (c.workers) cfg.training.workers = *c.workers;
  if (c.deterministic) cfg.training.workers = 1;
  try {
    cfg.train_config().validate(cfg.environment.make()->spec());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("override: ") + e.what());
  }
  return cfg;
}

std::vector<std::uint64_t> seed_list(const RunConfig& cfg, int count) {
  if (count < 1) throw ConfigError("--seeds: must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(cfg.training.seed + static_cast<std::uint64_t>(i));
  return seeds;
}

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
  cmd->add_option("--config", c.config, "Run config (YAML)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory (default: $HYPERMORL_OUT_ROOT or ./runs)");
  if (with_seed) cmd->add_option("--seed", c.seed, "Override training.seed");
  cmd->add_option("--workers", c.workers, "Worker threads");
  cmd->add_flag("--deterministic", c.deterministic, "Force a single worker");
}

int cmd_train(const Common& c) {
  const RunConfig cfg = load_with_overrides(c);
  const fs::path out = c.out.empty() ? default_out("train", c, cfg) : fs::path(c.out);
  const RunSummary s = run_training(cfg, out, &std::cout);
  std::cout << "final hv " << std::setprecision(10) << s.hv << " env_steps " << s.env_steps
            << " -> " << out.string() << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::string& checkpoint, std::optional<int> resolution,
             std::optional<int> episodes) {
  const RunConfig cfg = load_with_overrides(c);
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const int h = resolution.value_or(cfg.evaluation.resolution);
  const int e = episodes.value_or(cfg.evaluation.episodes);
  if (h < 1) throw ConfigError("--resolution: must be >= 1");
  if (e < 1) throw ConfigError("--episodes: must be >= 1");
  const fs::path out = c.out.empty() ? output_root() / ("eval-" + fs::path(checkpoint).stem().string())
                                     : fs::path(c.out);
  const EvalSummary s = run_eval(ckpt, cfg.environment, h, e, cfg.evaluation.reference, out);
  std::cout << "points " << s.front.entries.size() << " hv " << std::setprecision(10) << s.hv
            << " -> " << out.string() << '\n';
  return 0;
}

int cmd_sweep_d(const Common& c, const std::vector<int>& d_values, int seeds) {
  const RunConfig cfg = load_with_overrides(c);
  const fs::path out = c.out.empty() ? default_out("sweep-d", c, cfg) : fs::path(c.out);
  const auto rows = sweep_d(cfg, d_values, seed_list(cfg, seeds), out,
                            cfg.training.workers, &std::cout);
  std::ofstream table(out / "sweep_d.csv");
  write_d_table(table, rows);
  write_d_table(std::cout, rows);
  return 0;
}

int cmd_sweep_alpha(const Common& c, const std::vector<double>& alphas, int seeds) {
  const RunConfig cfg = load_with_overrides(c);
  const fs::path out = c.out.empty() ? default_out("sweep-alpha", c, cfg) : fs::path(c.out);
  const auto rows = sweep_alpha(cfg, alphas, seed_list(cfg, seeds), out,
                                cfg.training.workers, &std::cout);
  std::ofstream table(out / "sweep_alpha.csv");
  write_alpha_table(table, rows);
  write_alpha_table(std::cout, rows);
  return 0;
}

int cmd_oracle(const Common& c, std::optional<int> resolution) {
  const RunConfig cfg = load_run_config(c.config);
  const int h = resolution.value_or(cfg.evaluation.resolution);
  if (h < 1) throw ConfigError("--resolution: must be >= 1");
  const fs::path csv = c.out.empty()
                           ? output_root() / ("oracle-" + fs::path(c.config).stem().string() + ".csv")
                           : fs::path(c.out);
  const OracleFront oracle = run_oracle(cfg.environment, h, csv);
  std::vector<Vec> points;
  for (const auto& e : oracle.entries) points.push_back(e.objectives);
  const Vec suggested = reference_from_points(points);
  std::cout << std::setprecision(17) << "method " << oracle.method << "\npoints "
            << points.size() << "\nreference_suggested";
  for (long i = 0; i < suggested.size(); ++i) std::cout << ' ' << suggested[i];
  std::cout << "\nhv_at_config_reference "
            << hypervolume(points, HvConfig{cfg.evaluation.reference}) << '\n'
            << "-> " << csv.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyper-MORL: hypernetwork Pareto-set learning for multi-objective RL"};
  app.require_subcommand(1);

  Common train_opts;
  auto* train = app.add_subcommand("train", "Train one run and write its output directory");
  add_common(train, train_opts);

  Common eval_opts;
  std::string checkpoint;
  std::optional<int> eval_resolution, eval_episodes;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a preference grid");
  add_common(eval, eval_opts, false);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--resolution", eval_resolution, "Grid resolution H");
  eval->add_option("--episodes", eval_episodes, "Episodes per preference");

  Common sd_opts;
  std::vector<int> d_values{1, 2, 3, 5, 10, 20};
  int sd_seeds = 9;
  auto* sd = app.add_subcommand("sweep-d", "Train per reduced dimension d and tabulate HV");
  add_common(sd, sd_opts);
  sd->add_option("--d", d_values, "d values")->delimiter(',');
  sd->add_option("--seeds", sd_seeds, "Seeds per value, counted up from training.seed");

  Common sa_opts;
  std::vector<double> alphas{0.0, 0.05, 0.10, 0.20};
  int sa_seeds = 9;
  auto* sa = app.add_subcommand("sweep-alpha", "Train per warm-up fraction and tabulate HVIP");
  add_common(sa, sa_opts);
  sa->add_option("--alpha", alphas, "alpha values (must include 0)")->delimiter(',');
  sa->add_option("--seeds", sa_seeds, "Seeds per value, counted up from training.seed");

  Common oracle_opts;
  std::optional<int> oracle_resolution;
  auto* oracle = app.add_subcommand("oracle", "Write the oracle front CSV for a config's environment");
  oracle->add_option("--config", oracle_opts.config, "Run config (YAML)")
      ->required()
      ->check(CLI::ExistingFile);
  oracle->add_option("--out", oracle_opts.out, "Output CSV path");
  oracle->add_option("--resolution", oracle_resolution, "Grid resolution H");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_opts);
    if (*eval) return cmd_eval(eval_opts, checkpoint, eval_resolution, eval_episodes);
    if (*sd) return cmd_sweep_d(sd_opts, d_values, sd_seeds);
    if (*sa) return cmd_sweep_alpha(sa_opts, alphas, sa_seeds);
    if (*oracle) return cmd_oracle(oracle_opts, oracle_resolution);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
