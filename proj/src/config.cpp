#include "hypermorl/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hypermorl {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& path,
                         const std::string& why) const {
    std::ostringstream msg;
    msg << source_;
    if (node.IsDefined() && !node.Mark().is_null()) {
      msg << ':' << node.Mark().line + 1 << ':' << node.Mark().column + 1;
    }
    msg << ": " << path << ": " << why;
    throw ConfigError(msg.str());
  }

  void remember(const std::string& key, const YAML::Node& node) {
    marks_[key] = node;
  }

  const YAML::Node* lookup(const std::string& key) const {
    auto it = marks_.find(key);
    return it == marks_.end() ? nullptr : &it->second;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, YAML::Node> marks_;
};

// One mapping node. Keys must be consumed through get()/opt(); finish()
// rejects whatever is left.
class Section {
 public:
  Section(Reader& reader, YAML::Node node, std::string path)
      : reader_(reader), node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) reader_.fail(node_, path_, "expected a mapping");
  }

  YAML::Node get(const std::string& key) {
    YAML::Node child = opt(key);
    if (!child.IsDefined() || child.IsNull()) {
      reader_.fail(node_, qualified(key), "missing required key");
    }
    return child;
  }

  YAML::Node opt(const std::string& key) {
    used_.insert(key);
    const YAML::Node& node = node_;
    YAML::Node child = node[key];
    if (child.IsDefined()) reader_.remember(qualified(key), child);
    return child;
  }

  Section section(const std::string& key) { return Section(reader_, get(key), qualified(key)); }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) reader_.fail(kv.first, qualified(key), "unknown key");
    }
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  Reader& reader() { return reader_; }

 private:
  Reader& reader_;
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename T>
T scalar(Reader& r, const YAML::Node& node, const std::string& path,
         const char* what) {
  if (!node.IsScalar()) r.fail(node, path, std::string("expected ") + what);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    r.fail(node, path, std::string("expected ") + what);
  }
}

double as_double(Section& s, const std::string& key) {
  return scalar<double>(s.reader(), s.get(key), s.qualified(key), "a number");
}

long as_long(Section& s, const std::string& key) {
  const YAML::Node node = s.get(key);
  // Accept 2e6-style integers; reject fractional values.
  const double v = scalar<double>(s.reader(), node, s.qualified(key), "an integer");
  const auto n = static_cast<long>(v);
  if (static_cast<double>(n) != v) s.reader().fail(node, s.qualified(key), "expected an integer");
  return n;
}

int as_int(Section& s, const std::string& key) { return static_cast<int>(as_long(s, key)); }

bool as_bool(Section& s, const std::string& key) {
  return scalar<bool>(s.reader(), s.get(key), s.qualified(key), "true or false");
}

std::string as_string(Section& s, const std::string& key) {
  return scalar<std::string>(s.reader(), s.get(key), s.qualified(key), "a string");
}

std::vector<double> double_list(Reader& r, const YAML::Node& node,
                                const std::string& path) {
  if (!node.IsSequence()) r.fail(node, path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(scalar<double>(r, node[i], path + "[" + std::to_string(i) + "]", "a number"));
  }
  return out;
}

std::vector<int> int_list(Section& s, const std::string& key) {
  const YAML::Node node = s.get(key);
  const auto path = s.qualified(key);
  if (!node.IsSequence()) s.reader().fail(node, path, "expected a list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(scalar<int>(s.reader(), node[i], path + "[" + std::to_string(i) + "]",
                              "an integer"));
  }
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size()));
}

Vec vector_at(Reader& r, const YAML::Node& node, const std::string& path) {
  return to_vec(double_list(r, node, path));
}

Mat matrix_at(Reader& r, const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence() || node.size() == 0) {
    r.fail(node, path, "expected a non-empty list of rows");
  }
  Mat m;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto row = double_list(r, node[i], path + "[" + std::to_string(i) + "]");
    if (i == 0) m.resize(static_cast<long>(node.size()), static_cast<long>(row.size()));
    if (static_cast<long>(row.size()) != m.cols()) r.fail(node[i], path, "ragged matrix rows");
    for (std::size_t j = 0; j < row.size(); ++j) m(static_cast<long>(i), static_cast<long>(j)) = row[j];
  }
  return m;
}

std::vector<Mat> matrix_list(Section& s, const std::string& key) {
  const YAML::Node node = s.get(key);
  const auto path = s.qualified(key);
  if (!node.IsSequence()) s.reader().fail(node, path, "expected a list of matrices");
  std::vector<Mat> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(matrix_at(s.reader(), node[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

EnvironmentConfig parse_environment(Section env) {
  EnvironmentConfig out;
  out.id = as_string(env, "id");
  const YAML::Node params_node = env.get("params");
  Section params(env.reader(), params_node, env.qualified("params"));
  try {
    if (out.id == "mo-lqr") {
      out.lqr.A = matrix_at(env.reader(), params.get("A"), params.qualified("A"));
      out.lqr.B = matrix_at(env.reader(), params.get("B"), params.qualified("B"));
      out.lqr.Q = matrix_list(params, "Q");
      out.lqr.R = matrix_list(params, "R");
      out.lqr.init_std = as_double(params, "init_std");
      out.lqr.horizon = as_int(params, "horizon");
      out.lqr.gamma = as_double(params, "gamma");
      params.finish();
      out.lqr.validate();
    } else if (out.id == "mo-pointnav") {
      const YAML::Node goals = params.get("goals");
      if (!goals.IsSequence()) {
        env.reader().fail(goals, params.qualified("goals"), "expected a list of points");
      }
      for (std::size_t i = 0; i < goals.size(); ++i) {
        out.pointnav.goals.push_back(vector_at(
            env.reader(), goals[i], params.qualified("goals") + "[" + std::to_string(i) + "]"));
      }
      out.pointnav.start = vector_at(env.reader(), params.get("start"), params.qualified("start"));
      out.pointnav.max_speed = as_double(params, "max_speed");
      out.pointnav.horizon = as_int(params, "horizon");
      out.pointnav.gamma = as_double(params, "gamma");
      params.finish();
      out.pointnav.validate();
    } else {
      env.reader().fail(env.get("id"), env.qualified("id"),
                        "unknown environment '" + out.id + "' (mo-lqr | mo-pointnav)");
    }
  } catch (const std::invalid_argument& e) {
    env.reader().fail(params_node, env.qualified("params"), e.what());
  }
  env.finish();
  return out;
}

// Maps the field names used in TrainConfig/PpoConfig validation messages to
// config paths.
const std::map<std::string, std::string>& validation_paths() {
  static const std::map<std::string, std::string> paths{
      {"total_steps", "training.total_steps"},
      {"alpha", "training.alpha"},
      {"num_preferences", "training.num_preferences"},
      {"d", "hypernet.d"},
      {"lr", "training.lr"},
      {"rollouts_per_preference", "training.rollouts_per_preference"},
      {"snapshot_count", "evaluation.snapshot_count"},
      {"eval_resolution", "evaluation.resolution"},
      {"eval_episodes", "evaluation.episodes"},
      {"reference", "evaluation.reference"},
      {"workers", "training.workers"},
      {"policy_hidden", "policy.hidden"},
      {"embedding_hidden", "hypernet.embedding_hidden"},
      {"reward_scale", "training.ppo.reward_scale"},
      {"clip_eps", "training.ppo.clip_eps"},
      {"gae_lambda", "training.ppo.gae_lambda"},
      {"epochs", "training.ppo.epochs"},
      {"critic_lr", "training.ppo.critic_lr"},
      {"critic_epochs", "training.ppo.critic_epochs"},
      {"critic_hidden", "training.ppo.critic_hidden"},
      {"min_log_std", "training.ppo.min_log_std"},
  };
  return paths;
}

}  // namespace

int EnvironmentConfig::num_objectives() const {
  if (id == "mo-lqr") return static_cast<int>(lqr.Q.size());
  if (id == "mo-pointnav") return static_cast<int>(pointnav.goals.size());
  throw ConfigError("environment.id: unknown environment '" + id + "'");
}

std::unique_ptr<Environment> EnvironmentConfig::make() const {
  if (id == "mo-lqr") return std::make_unique<MoLqrEnv>(lqr);
  if (id == "mo-pointnav") return std::make_unique<MoPointNavEnv>(pointnav);
  throw ConfigError("environment.id: unknown environment '" + id + "'");
}

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg = training;
  cfg.eval_resolution = evaluation.resolution;
  cfg.eval_episodes = evaluation.episodes;
  cfg.snapshot_count = evaluation.snapshot_count;
  cfg.eval_reference = evaluation.reference;
  return cfg;
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  Reader reader(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root.IsDefined() || root.IsNull()) throw ConfigError(source + ": empty config");
  Section top(reader, root, "");

  RunConfig cfg;
  cfg.schema_version = as_int(top, "schema_version");
  if (cfg.schema_version != kConfigSchemaVersion) {
    reader.fail(top.get("schema_version"), "schema_version",
                "unsupported version " + std::to_string(cfg.schema_version) +
                    " (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }
  cfg.environment = parse_environment(top.section("environment"));

  TrainConfig& t = cfg.training;
  {
    Section h = top.section("hypernet");
    t.d = as_int(h, "d");
    t.embedding_hidden = int_list(h, "embedding_hidden");
    h.finish();
  }
  {
    Section p = top.section("policy");
    t.policy_hidden = int_list(p, "hidden");
    t.policy_output_gain = as_double(p, "output_gain");
    p.finish();
  }
  {
    Section s = top.section("training");
    t.total_steps = as_long(s, "total_steps");
    t.alpha = as_double(s, "alpha");
    t.num_preferences = as_int(s, "num_preferences");
    t.lr = as_double(s, "lr");
    t.seed = scalar<std::uint64_t>(reader, s.get("seed"), "training.seed",
                                   "a non-negative integer");
    t.rollouts_per_preference = as_int(s, "rollouts_per_preference");
    const std::string mode = as_string(s, "critic_mode");
    if (mode == "shared") {
      t.critic_mode = CriticMode::kShared;
    } else if (mode == "per_slot") {
      t.critic_mode = CriticMode::kPerSlot;
    } else {
      reader.fail(s.get("critic_mode"), "training.critic_mode", "expected shared or per_slot");
    }
    if (s.opt("workers").IsDefined()) t.workers = as_int(s, "workers");
    Section p = s.section("ppo");
    t.ppo.clip_eps = as_double(p, "clip_eps");
    t.ppo.gae_lambda = as_double(p, "gae_lambda");
    t.ppo.epochs = as_int(p, "epochs");
    t.ppo.normalize_advantages = as_bool(p, "normalize_advantages");
    t.ppo.critic_hidden = int_list(p, "critic_hidden");
    t.ppo.critic_lr = as_double(p, "critic_lr");
    t.ppo.critic_epochs = as_int(p, "critic_epochs");
    if (p.opt("reward_scale").IsDefined()) {
      t.ppo.reward_scale = double_list(reader, p.get("reward_scale"), p.qualified("reward_scale"));
    }
    if (p.opt("min_log_std").IsDefined()) t.ppo.min_log_std = as_double(p, "min_log_std");
    p.finish();
    s.finish();
  }
  {
    Section e = top.section("evaluation");
    cfg.evaluation.resolution = as_int(e, "resolution");
    cfg.evaluation.episodes = as_int(e, "episodes");
    cfg.evaluation.snapshot_count = as_int(e, "snapshot_count");
    cfg.evaluation.reference = vector_at(reader, e.get("reference"), e.qualified("reference"));
    e.finish();
  }
  top.finish();

  const int m = cfg.environment.num_objectives();
  if (cfg.evaluation.reference.size() != m) {
    reader.fail(*reader.lookup("evaluation.reference"), "evaluation.reference",
                "needs one entry per objective");
  }
  try {
    cfg.train_config().validate(cfg.environment.make()->spec());
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    const std::string field = msg.substr(0, colon);
    const auto& paths = validation_paths();
    const auto it = paths.find(field);
    if (it != paths.end() && colon != std::string::npos) {
      const YAML::Node* node = reader.lookup(it->second);
      reader.fail(node ? *node : YAML::Node(), it->second, msg.substr(colon + 2));
    }
    throw ConfigError(source + ": " + msg);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.string());
}

namespace {

void emit_vec(YAML::Emitter& out, const Vec& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (long i = 0; i < v.size(); ++i) out << v[i];
  out << YAML::EndSeq;
}

void emit_mat(YAML::Emitter& out, const Mat& m) {
  out << YAML::Flow << YAML::BeginSeq;
  for (long r = 0; r < m.rows(); ++r) emit_vec(out, m.row(r).transpose());
  out << YAML::EndSeq;
}

template <typename T>
void emit_list(YAML::Emitter& out, const std::vector<T>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& x : v) out << x;
  out << YAML::EndSeq;
}

}  // namespace

std::string dump_run_config(const RunConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "schema_version" << YAML::Value << cfg.schema_version;

  out << YAML::Key << "environment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "id" << YAML::Value << cfg.environment.id;
  out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
  if (cfg.environment.id == "mo-lqr") {
    const LqrConfig& l = cfg.environment.lqr;
    out << YAML::Key << "A" << YAML::Value;
    emit_mat(out, l.A);
    out << YAML::Key << "B" << YAML::Value;
    emit_mat(out, l.B);
    for (const char* key : {"Q", "R"}) {
      const auto& mats = key[0] == 'Q' ? l.Q : l.R;
      out << YAML::Key << key << YAML::Value << YAML::BeginSeq;
      for (const auto& m : mats) emit_mat(out, m);
      out << YAML::EndSeq;
    }
    out << YAML::Key << "init_std" << YAML::Value << l.init_std;
    out << YAML::Key << "horizon" << YAML::Value << l.horizon;
    out << YAML::Key << "gamma" << YAML::Value << l.gamma;
  } else {
    const PointNavConfig& p = cfg.environment.pointnav;
    out << YAML::Key << "goals" << YAML::Value << YAML::BeginSeq;
    for (const auto& g : p.goals) emit_vec(out, g);
    out << YAML::EndSeq;
    out << YAML::Key << "start" << YAML::Value;
    emit_vec(out, p.start);
    out << YAML::Key << "max_speed" << YAML::Value << p.max_speed;
    out << YAML::Key << "horizon" << YAML::Value << p.horizon;
    out << YAML::Key << "gamma" << YAML::Value << p.gamma;
  }
  out << YAML::EndMap << YAML::EndMap;

  const TrainConfig& t = cfg.training;
  out << YAML::Key << "hypernet" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "d" << YAML::Value << t.d;
  out << YAML::Key << "embedding_hidden" << YAML::Value;
  emit_list(out, t.embedding_hidden);
  out << YAML::EndMap;

  out << YAML::Key << "policy" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "hidden" << YAML::Value;
  emit_list(out, t.policy_hidden);
  out << YAML::Key << "output_gain" << YAML::Value << t.policy_output_gain;
  out << YAML::EndMap;

  out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "total_steps" << YAML::Value << t.total_steps;
  out << YAML::Key << "alpha" << YAML::Value << t.alpha;
  out << YAML::Key << "num_preferences" << YAML::Value << t.num_preferences;
  out << YAML::Key << "lr" << YAML::Value << t.lr;
  out << YAML::Key << "seed" << YAML::Value << t.seed;
  out << YAML::Key << "rollouts_per_preference" << YAML::Value << t.rollouts_per_preference;
  out << YAML::Key << "critic_mode" << YAML::Value
      << (t.critic_mode == CriticMode::kShared ? "shared" : "per_slot");
  out << YAML::Key << "workers" << YAML::Value << t.workers;
  out << YAML::Key << "ppo" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "clip_eps" << YAML::Value << t.ppo.clip_eps;
  out << YAML::Key << "gae_lambda" << YAML::Value << t.ppo.gae_lambda;
  out << YAML::Key << "epochs" << YAML::Value << t.ppo.epochs;
  out << YAML::Key << "normalize_advantages" << YAML::Value << t.ppo.normalize_advantages;
  out << YAML::Key << "critic_hidden" << YAML::Value;
  emit_list(out, t.ppo.critic_hidden);
  out << YAML::Key << "critic_lr" << YAML::Value << t.ppo.critic_lr;
  out << YAML::Key << "critic_epochs" << YAML::Value << t.ppo.critic_epochs;
  if (!t.ppo.reward_scale.empty()) {
    out << YAML::Key << "reward_scale" << YAML::Value;
    emit_list(out, t.ppo.reward_scale);
  }
  if (t.ppo.min_log_std != kNoLogStdFloor) {
    out << YAML::Key << "min_log_std" << YAML::Value << t.ppo.min_log_std;
  }
  out << YAML::EndMap << YAML::EndMap;

  const EvalConfig& e = cfg.evaluation;
  out << YAML::Key << "evaluation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "resolution" << YAML::Value << e.resolution;
  out << YAML::Key << "episodes" << YAML::Value << e.episodes;
  out << YAML::Key << "snapshot_count" << YAML::Value << e.snapshot_count;
  out << YAML::Key << "reference" << YAML::Value;
  emit_vec(out, e.reference);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

OracleFront oracle_front(const EnvironmentConfig& env,
                         const std::vector<Preference>& grid) {
  if (env.id == "mo-lqr") return lqr_oracle_front(env.lqr, grid);
  if (env.id == "mo-pointnav") return pointnav_oracle_front(env.pointnav, grid);
  throw ConfigError("environment.id: no oracle for '" + env.id + "'");
}

}  // namespace hypermorl
