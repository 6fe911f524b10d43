#include "hypermorl/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"

namespace hypermorl {

namespace fs = std::filesystem;

namespace {

std::string step_name(long env_steps) {
  std::ostringstream name;
  name << "step_" << std::setw(10) << std::setfill('0') << env_steps;
  return name.str();
}

// Writes via a temporary file and rename so readers never see partial files.
template <typename Fn>
void write_atomically(const fs::path& path, Fn&& fn) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    fn(out);
    out.flush();
    if (!out) throw std::runtime_error("failed to write " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint make_checkpoint(const TrainingState& state) {
  Checkpoint ckpt;
  ckpt.phi = state.phi;
  ckpt.env_steps = state.env_steps;
  ckpt.iteration = state.iteration;
  ckpt.rng_digest = rng_digest(state.rng);
  return ckpt;
}

void fill_stats(SweepRow& row) {
  const auto n = static_cast<double>(row.hv.size());
  row.mean = 0.0;
  for (double v : row.hv) row.mean += v;
  row.mean /= n;
  double var = 0.0;
  for (double v : row.hv) var += (v - row.mean) * (v - row.mean);
  row.stdev = std::sqrt(var / n);
  row.median = median(row.hv);
}

template <typename T>
std::string value_dir(const std::string& name, T value) {
  std::ostringstream dir;
  dir << name << '=' << value;
  return dir.str();
}

// Runs every (value, seed) configuration produced by make(value) and returns
// the final HVs grouped by value.
template <typename T, typename Make>
std::vector<SweepRow> sweep(const RunConfig& base, const std::string& name,
                            const std::vector<T>& values,
                            const std::vector<std::uint64_t>& seeds,
                            const fs::path& out, int workers,
                            std::ostream* progress, Make&& make) {
  if (values.empty()) throw ConfigError(name + ": sweep needs at least one value");
  if (seeds.empty()) throw ConfigError("seeds: sweep needs at least one seed");
  struct Job {
    std::size_t row;
    RunConfig cfg;
    fs::path dir;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::uint64_t seed : seeds) {
      RunConfig cfg = make(base, values[i]);
      cfg.training.seed = seed;
      cfg.training.workers = 1;
      cfg.train_config().validate(cfg.environment.make()->spec());
      jobs.push_back({i, std::move(cfg),
                      out / value_dir(name, values[i]) / value_dir("seed", seed)});
    }
  }
  std::vector<double> hv(jobs.size());
  std::mutex progress_mutex;
  detail::parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const RunSummary s = run_training(jobs[j].cfg, jobs[j].dir);
    hv[j] = s.hv;
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      *progress << name << '=' << values[jobs[j].row] << " seed=" << s.seed
                << " hv=" << s.hv << " (" << s.wall_seconds << " s)" << std::endl;
    }
  });
  std::vector<SweepRow> rows(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) rows[i].value = static_cast<double>(values[i]);
  for (std::size_t j = 0; j < jobs.size(); ++j) rows[jobs[j].row].hv.push_back(hv[j]);
  for (auto& row : rows) fill_stats(row);
  return rows;
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_summary_json(std::ostream& out, const RunSummary& s) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["d"] = s.d;
  j["alpha"] = s.alpha;
  j["env_steps"] = s.env_steps;
  j["warmup_iterations"] = s.warmup_iterations;
  j["psl_iterations"] = s.psl_iterations;
  j["steps_per_trajectory"] = s.steps_per_trajectory;
  j["hv"] = s.hv;
  j["wall_seconds"] = s.wall_seconds;
  out << j.dump(2) << '\n';
}

RunSummary run_training(const RunConfig& cfg, const fs::path& out,
                        std::ostream* progress) {
  const auto start = std::chrono::steady_clock::now();
  const TrainConfig tc = cfg.train_config();
  const auto env = cfg.environment.make();
  tc.validate(env->spec());

  fs::create_directories(out / "checkpoints");
  fs::create_directories(out / "fronts");
  write_atomically(out / "config.yaml",
                   [&](std::ostream& o) { o << dump_run_config(cfg); });

  std::ofstream log(out / "train_log.jsonl", std::ios::trunc);
  if (!log) throw std::runtime_error("cannot open " + (out / "train_log.jsonl").string());

  const HvConfig hv_cfg{cfg.evaluation.reference};
  auto on_snapshot = [&](const Snapshot& snap, const TrainingState& state) {
    const std::string name = step_name(snap.env_steps);
    save_checkpoint(out / "checkpoints" / (name + ".ckpt"), make_checkpoint(state));
    write_atomically(out / "fronts" / (name + ".csv"),
                     [&](std::ostream& o) { write_front_csv(o, snap.front); });
    if (progress) {
      *progress << "iteration " << snap.iteration << " env_steps " << snap.env_steps
                << " hv " << snap.hv << std::endl;
    }
  };
  auto on_record = [&](const TrainRecord& rec) { write_train_record(log, rec); };

  TrainResult result = train(tc, *env, on_snapshot, on_record);
  log.flush();

  ParetoFront final_front;
  if (!result.snapshots.empty() &&
      result.snapshots.back().iteration == result.state.iteration) {
    final_front = result.snapshots.back().front;
  } else {
    const auto grid = preference_grid(env->spec().num_objectives, tc.eval_resolution);
    final_front = evaluate_hypernet(result.state.phi, *env, grid, tc.eval_episodes,
                                    false, tc.workers)
                      .front;
  }
  save_checkpoint(out / "checkpoints" / "final.ckpt", make_checkpoint(result.state));
  write_atomically(out / "fronts" / "final.csv",
                   [&](std::ostream& o) { write_front_csv(o, final_front); });

  RunSummary s;
  s.seed = tc.seed;
  s.d = tc.d;
  s.alpha = tc.alpha;
  s.env_steps = result.state.env_steps;
  s.warmup_iterations = result.stages.warmup;
  s.psl_iterations = result.stages.psl;
  s.steps_per_trajectory = result.steps_per_trajectory;
  s.hv = env->spec().num_objectives <= 3 ? hypervolume(final_front, hv_cfg)
                                         : std::numeric_limits<double>::quiet_NaN();
  s.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_atomically(out / "summary.json", [&](std::ostream& o) { write_summary_json(o, s); });
  return s;
}

EvalSummary run_eval(const Checkpoint& ckpt, const EnvironmentConfig& env_cfg,
                     int resolution, int episodes, const Vec& reference,
                     const fs::path& out) {
  const auto env = env_cfg.make();
  const MomdpSpec& spec = env->spec();
  const HypernetParams& phi = ckpt.phi;
  if (phi.m() != spec.num_objectives || phi.policy.input_dim() != spec.state_dim ||
      phi.policy.output_dim() != spec.action_dim) {
    throw ConfigError("checkpoint (m=" + std::to_string(phi.m()) + ", state " +
                      std::to_string(phi.policy.input_dim()) + ", action " +
                      std::to_string(phi.policy.output_dim()) +
                      ") does not match the environment (m=" +
                      std::to_string(spec.num_objectives) + ", state " +
                      std::to_string(spec.state_dim) + ", action " +
                      std::to_string(spec.action_dim) + ")");
  }
  if (reference.size() != spec.num_objectives) {
    throw ConfigError("reference: needs one entry per objective");
  }
  const auto grid = preference_grid(spec.num_objectives, resolution);
  EvalSummary summary;
  summary.front = evaluate_hypernet(phi, *env, grid, episodes).front;
  const HvResult hv = hypervolume_detailed(summary.front.non_dominated(), {reference});
  summary.hv = hv.value;
  summary.excluded = hv.excluded;

  fs::create_directories(out);
  write_atomically(out / "front.csv",
                   [&](std::ostream& o) { write_front_csv(o, summary.front); });
  nlohmann::ordered_json j;
  j["hv"] = summary.hv;
  j["excluded"] = summary.excluded;
  j["points"] = summary.front.entries.size();
  j["resolution"] = resolution;
  j["episodes"] = episodes;
  j["reference"] = std::vector<double>(reference.data(), reference.data() + reference.size());
  j["env_steps"] = ckpt.env_steps;
  write_atomically(out / "hv_summary.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  return summary;
}

std::vector<SweepRow> sweep_d(const RunConfig& base, const std::vector<int>& d_values,
                              const std::vector<std::uint64_t>& seeds,
                              const fs::path& out, int workers, std::ostream* progress) {
  return sweep(base, "d", d_values, seeds, out, workers, progress,
               [](RunConfig cfg, int d) {
                 cfg.training.d = d;
                 return cfg;
               });
}

std::vector<SweepRow> sweep_alpha(const RunConfig& base,
                                  const std::vector<double>& alpha_values,
                                  const std::vector<std::uint64_t>& seeds,
                                  const fs::path& out, int workers,
                                  std::ostream* progress) {
  const auto zero = std::find(alpha_values.begin(), alpha_values.end(), 0.0);
  if (zero == alpha_values.end()) {
    throw ConfigError("alpha: the sweep needs alpha = 0 as the HVIP baseline");
  }
  auto rows = sweep(base, "alpha", alpha_values, seeds, out, workers, progress,
                    [](RunConfig cfg, double alpha) {
                      cfg.training.alpha = alpha;
                      return cfg;
                    });
  const SweepRow& baseline = rows[static_cast<std::size_t>(zero - alpha_values.begin())];
  for (auto& row : rows) {
    row.hvip_of_mean = hvip(row.mean, baseline.mean);
    std::vector<double> paired;
    for (std::size_t k = 0; k < row.hv.size(); ++k) {
      paired.push_back(hvip(row.hv[k], baseline.hv[k]));
    }
    row.hvip_median = median(paired);
  }
  return rows;
}

void write_d_table(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << std::setprecision(17) << "d,hv_mean,hv_std,hv_median,runs\n";
  for (const auto& r : rows) {
    out << r.value << ',' << r.mean << ',' << r.stdev << ',' << r.median << ','
        << r.hv.size() << '\n';
  }
}

void write_alpha_table(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << std::setprecision(17) << "alpha,hv_mean,hv_std,hv_median,hvip,hvip_median,runs\n";
  for (const auto& r : rows) {
    out << r.value << ',' << r.mean << ',' << r.stdev << ',' << r.median << ','
        << r.hvip_of_mean << ',' << r.hvip_median << ',' << r.hv.size() << '\n';
  }
}

OracleFront run_oracle(const EnvironmentConfig& env, int resolution,
                       const fs::path& csv) {
  const int m = env.num_objectives();
  const OracleFront oracle = oracle_front(env, preference_grid(m, resolution));
  ParetoFront front;
  for (const auto& e : oracle.entries) front.entries.push_back({e.preference, e.objectives, false});
  write_atomically(csv, [&](std::ostream& o) { write_front_csv(o, front); });
  return oracle;
}

}  // namespace hypermorl
