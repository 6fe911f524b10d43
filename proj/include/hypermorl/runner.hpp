#ifndef HYPERMORL_RUNNER_HPP_
#define HYPERMORL_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hypermorl/checkpoint.hpp"
#include "hypermorl/config.hpp"

namespace hypermorl {

// Run directory layout:
//   config.yaml              effective config (after overrides)
//   train_log.jsonl          one record per iteration
//   checkpoints/step_<env steps>.ckpt, checkpoints/final.ckpt
//   fronts/step_<env steps>.csv, fronts/final.csv
//   summary.json
struct RunSummary {
  std::uint64_t seed = 0;
  int d = 0;
  double alpha = 0.0;
  long env_steps = 0;
  long warmup_iterations = 0;
  long psl_iterations = 0;
  long steps_per_trajectory = 0;
  double hv = 0.0;
  double wall_seconds = 0.0;
};

// Trains cfg and writes the run directory. progress receives one line per
// snapshot when non-null.
RunSummary run_training(const RunConfig& cfg, const std::filesystem::path& out,
                        std::ostream* progress = nullptr);

void write_summary_json(std::ostream& out, const RunSummary& s);

// Evaluates a checkpoint on env at the given grid resolution; writes
// front.csv and hv_summary.json under out and returns the front.
struct EvalSummary {
  ParetoFront front;
  double hv = 0.0;
  int excluded = 0;
};
EvalSummary run_eval(const Checkpoint& ckpt, const EnvironmentConfig& env,
                     int resolution, int episodes, const Vec& reference,
                     const std::filesystem::path& out);

struct SweepRow {
  double value = 0.0;  // d or alpha
  std::vector<double> hv;  // one per seed
  double mean = 0.0;
  double stdev = 0.0;   // population standard deviation
  double median = 0.0;
  // alpha sweeps only: HVIP of the mean HV against alpha = 0, and the median
  // of the seed-paired HVIPs.
  double hvip_of_mean = 0.0;
  double hvip_median = 0.0;
};

double median(std::vector<double> v);

// One run per (value, seed) under out/<name>=<value>/seed=<seed>/, runs
// fanned out over `workers` threads. Returns one row per value in order.
std::vector<SweepRow> sweep_d(const RunConfig& base, const std::vector<int>& d_values,
                              const std::vector<std::uint64_t>& seeds,
                              const std::filesystem::path& out, int workers,
                              std::ostream* progress = nullptr);

// Throws ConfigError unless alpha_values contains 0.
std::vector<SweepRow> sweep_alpha(const RunConfig& base,
                                  const std::vector<double>& alpha_values,
                                  const std::vector<std::uint64_t>& seeds,
                                  const std::filesystem::path& out, int workers,
                                  std::ostream* progress = nullptr);

// CSV tables: d,hv_mean,hv_std,hv_median,runs and
// alpha,hv_mean,hv_std,hv_median,hvip,hvip_median,runs.
void write_d_table(std::ostream& out, const std::vector<SweepRow>& rows);
void write_alpha_table(std::ostream& out, const std::vector<SweepRow>& rows);

// Oracle front CSV for the environment section at the given resolution.
OracleFront run_oracle(const EnvironmentConfig& env, int resolution,
                       const std::filesystem::path& csv);

}  // namespace hypermorl

#endif  // HYPERMORL_RUNNER_HPP_
