#include "racer/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "racer/eval.hpp"

namespace racer {

namespace {

std::string where(const std::string& source, const YAML::Mark& m) {
  if (m.line < 0) return source + ": ";
  return source + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1) + ": ";
}

class Reader {
 public:
  Reader(YAML::Node node, std::string path, const std::string& source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (!node_.IsMap()) fail(node_.Mark(), "expected a mapping for '" + display() + "'");
  }

  template <typename T>
  void field(const char* key, T& value) {
    used_.insert(key);
    const YAML::Node n = node_[key];
    if (!n) return;
    read(n, value, qualified(key));
  }

  template <typename F>
  void section(const char* key, F&& f) {
    used_.insert(key);
    const YAML::Node n = node_[key];
    if (!n) return;
    Reader sub(n, qualified(key), source_);
    f(sub);
    sub.finish();
  }

  template <typename T, typename F>
  void list(const char* key, std::vector<T>& items, F&& f) {
    used_.insert(key);
    const YAML::Node n = node_[key];
    if (!n) return;
    if (!n.IsSequence()) fail(n.Mark(), "expected a list for '" + qualified(key) + "'");
    items.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      Reader sub(n[i], qualified(key) + "[" + std::to_string(i) + "]", source_);
      T item{};
      f(sub, item);
      sub.finish();
      items.push_back(item);
    }
  }

  /// Runs a validator and reports failures at this section.
  template <typename F>
  void check(F&& f) {
    try {
      f();
    } catch (const std::invalid_argument& e) {
      fail(node_.Mark(), "invalid '" + display() + "': " + e.what());
    }
  }

  void finish() {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      if (!used_.count(key)) fail(it->first.Mark(), "unknown key '" + qualified(key) + "'");
    }
  }

 private:
  [[noreturn]] void fail(const YAML::Mark& m, const std::string& msg) const {
    throw ConfigError(where(source_, m) + msg, m.line >= 0 ? m.line + 1 : 0);
  }

  std::string display() const { return path_.empty() ? "<root>" : path_; }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  T scalar(const YAML::Node& n, const std::string& name, const char* type) const {
    if (!n.IsScalar()) fail(n.Mark(), "expected " + std::string(type) + " for '" + name + "'");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n.Mark(), "expected " + std::string(type) + " for '" + name + "', got '" + n.Scalar() + "'");
    }
  }

  void read(const YAML::Node& n, double& v, const std::string& name) const { v = scalar<double>(n, name, "a number"); }
  void read(const YAML::Node& n, int& v, const std::string& name) const { v = scalar<int>(n, name, "an integer"); }
  void read(const YAML::Node& n, long long& v, const std::string& name) const {
    v = scalar<long long>(n, name, "an integer");
  }
  void read(const YAML::Node& n, std::uint64_t& v, const std::string& name) const {
    if (n.IsScalar() && !n.Scalar().empty() && n.Scalar().front() == '-') {
      fail(n.Mark(), "expected a non-negative integer for '" + name + "'");
    }
    v = scalar<std::uint64_t>(n, name, "a non-negative integer");
  }
  void read(const YAML::Node& n, bool& v, const std::string& name) const { v = scalar<bool>(n, name, "true or false"); }
  void read(const YAML::Node& n, std::string& v, const std::string& name) const {
    v = scalar<std::string>(n, name, "a string");
  }
  void read(const YAML::Node& n, Vec3& v, const std::string& name) const {
    if (!n.IsSequence() || n.size() != 3) fail(n.Mark(), "expected a list of 3 numbers for '" + name + "'");
    for (std::size_t i = 0; i < 3; ++i) v[static_cast<Eigen::Index>(i)] = scalar<double>(n[i], name, "a number");
  }
  void read(const YAML::Node& n, Mat3& m, const std::string& name) const {
    if (!n.IsSequence() || n.size() != 3) fail(n.Mark(), "expected 3 rows of 3 numbers for '" + name + "'");
    for (std::size_t r = 0; r < 3; ++r) {
      Vec3 row;
      read(n[r], row, name);
      m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
  }
  void read(const YAML::Node& n, std::vector<int>& v, const std::string& name) const {
    if (!n.IsSequence()) fail(n.Mark(), "expected a list of integers for '" + name + "'");
    v.clear();
    for (std::size_t i = 0; i < n.size(); ++i) v.push_back(scalar<int>(n[i], name, "an integer"));
  }
  void read(const YAML::Node& n, std::vector<std::string>& v, const std::string& name) const {
    if (!n.IsSequence()) fail(n.Mark(), "expected a list of strings for '" + name + "'");
    v.clear();
    for (std::size_t i = 0; i < n.size(); ++i) v.push_back(scalar<std::string>(n[i], name, "a string"));
  }

  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> used_;
};

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  // Keep floats recognizable as floats.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

class Writer {
 public:
  explicit Writer(YAML::Emitter& out) : out_(out) {}

  template <typename T>
  void field(const char* key, const T& value) {
    out_ << YAML::Key << key << YAML::Value;
    write(value);
  }

  template <typename F>
  void section(const char* key, F&& f) {
    out_ << YAML::Key << key << YAML::Value << YAML::BeginMap;
    f(*this);
    out_ << YAML::EndMap;
  }

  template <typename T, typename F>
  void list(const char* key, std::vector<T>& items, F&& f) {
    out_ << YAML::Key << key << YAML::Value << YAML::BeginSeq;
    for (T& item : items) {
      out_ << YAML::BeginMap;
      f(*this, item);
      out_ << YAML::EndMap;
    }
    out_ << YAML::EndSeq;
  }

  template <typename F>
  void check(F&&) {}

 private:
  void write(double v) { out_ << num(v); }
  void write(int v) { out_ << v; }
  void write(long long v) { out_ << v; }
  void write(std::uint64_t v) { out_ << v; }
  void write(bool v) { out_ << (v ? "true" : "false"); }
  void write(const std::string& v) { out_ << YAML::DoubleQuoted << v; }
  void write(const Vec3& v) { out_ << YAML::Flow << YAML::BeginSeq << num(v.x()) << num(v.y()) << num(v.z()) << YAML::EndSeq; }
  void write(const Mat3& m) {
    out_ << YAML::BeginSeq;
    for (int r = 0; r < 3; ++r) write(Vec3(m.row(r).transpose()));
    out_ << YAML::EndSeq;
  }
  void write(const std::vector<int>& v) {
    out_ << YAML::Flow << YAML::BeginSeq;
    for (int x : v) out_ << x;
    out_ << YAML::EndSeq;
  }
  void write(const std::vector<std::string>& v) {
    out_ << YAML::Flow << YAML::BeginSeq;
    for (const auto& s : v) out_ << YAML::DoubleQuoted << s;
    out_ << YAML::EndSeq;
  }

  YAML::Emitter& out_;
};

template <typename V>
void visit(V& v, ExperimentConfig& c) {
  v.field("seed", c.seed);
  v.field("output_dir", c.output_dir);
  v.section("drone", [&](V& s) {
    DroneParams& d = c.env.drone;
    s.field("mass", d.mass);
    s.field("gravity", d.gravity);
    s.field("inertia", d.inertia);
    s.field("arm_length", d.arm_length);
    s.field("thrust_coeff", d.thrust_coeff);
    s.field("torque_coeff", d.torque_coeff);
    s.field("drag", d.drag);
    s.field("collision_radius", d.collision_radius);
    s.field("motor_speed_max", d.motor_speed_max);
    s.check([&] { d.validate(); });
  });
  v.section("controller", [&](V& s) {
    PidGains& g = c.env.gains;
    s.field("position_p", g.position_p);
    s.field("position_i", g.position_i);
    s.field("position_d", g.position_d);
    s.field("attitude_p", g.attitude_p);
    s.field("attitude_i", g.attitude_i);
    s.field("attitude_d", g.attitude_d);
    s.field("position_integrator_limit", g.position_integrator_limit);
    s.field("attitude_integrator_limit", g.attitude_integrator_limit);
    s.field("acceleration_limit", g.acceleration_limit);
    s.field("angular_acceleration_limit", g.angular_acceleration_limit);
    s.field("max_tilt", g.max_tilt);
    s.check([&] { g.validate(); });
  });
  v.section("track", [&](V& s) {
    TrackLayout& t = c.env.track;
    s.field("n_gates", t.n_gates);
    s.field("radius", t.radius);
    s.field("altitude", t.altitude);
    s.field("half_width", t.half_width);
    s.field("half_height", t.half_height);
    s.field("frame_thickness", t.frame_thickness);
    s.field("bounds_margin", t.bounds_margin);
    s.field("ceiling", t.ceiling);
    s.check([&] { (void)Track::circle(t); });
  });
  v.section("reward", [&](V& s) {
    RewardWeights& r = c.env.reward;
    s.field("progress_weight", r.progress_weight);
    s.field("collision_weight", r.collision_weight);
    s.field("alignment_weight", r.alignment_weight);
    s.field("progress_scale", r.progress_scale);
    s.field("gate_bonus", r.gate_bonus);
    s.field("collision_penalty", r.collision_penalty);
    s.field("alignment_scale", r.alignment_scale);
    s.field("alignment_threshold", r.alignment_threshold);
    s.check([&] { r.validate(); });
  });
  v.section("observation", [&](V& s) {
    ObservationConfig& o = c.env.observation;
    s.field("history_length", o.history_length);
    s.field("n_opponents", o.n_opponents);
    s.field("n_gates", o.n_gates);
    s.field("samples", o.samples);
    s.field("stride", o.stride);
    s.field("full_history", o.full_history);
    s.field("position_scale", o.position_scale);
    s.field("velocity_scale", o.velocity_scale);
    s.field("angle_scale", o.angle_scale);
    s.field("rate_scale", o.rate_scale);
    s.check([&] { o.validate(); });
  });
  v.section("episode", [&](V& s) {
    EpisodeConfig& e = c.env.episode;
    s.field("laps", e.laps);
    s.field("timeout", e.timeout);
    s.field("substeps", e.substeps);
    s.field("max_offset", e.max_offset);
    s.field("start_distance", e.start_distance);
    s.field("start_longitudinal_jitter", e.start_longitudinal_jitter);
    s.field("start_lateral_jitter", e.start_lateral_jitter);
    s.field("start_vertical_jitter", e.start_vertical_jitter);
    s.check([&] { e.validate(); });
  });
  v.section("network", [&](V& s) {
    NetworkConfig& n = c.network;
    s.field("hidden", n.hidden);
    s.field("hidden_gain", n.hidden_gain);
    s.field("actor_output_gain", n.actor_output_gain);
    s.field("critic_output_gain", n.critic_output_gain);
    s.field("initial_log_std", n.initial_log_std);
    s.check([&] {
      if (n.hidden.empty()) throw std::invalid_argument("at least one hidden layer is required");
      for (int h : n.hidden) {
        if (h < 1) throw std::invalid_argument("hidden layer sizes must be positive");
      }
      if (!(n.initial_log_std >= kLogStdMin && n.initial_log_std <= kLogStdMax)) {
        throw std::invalid_argument("initial_log_std must be in [-5, 2]");
      }
    });
  });
  v.section("ppo", [&](V& s) {
    PpoConfig& p = c.ppo;
    s.field("gamma", p.gamma);
    s.field("lambda", p.lambda);
    s.field("clip_epsilon", p.clip_epsilon);
    s.field("entropy_coef", p.entropy_coef);
    s.field("value_coef", p.value_coef);
    s.field("learning_rate", p.learning_rate);
    s.field("epochs", p.epochs);
    s.field("minibatch_size", p.minibatch_size);
    s.field("rollout_length", p.rollout_length);
    s.field("n_envs", p.n_envs);
    s.field("max_grad_norm", p.max_grad_norm);
    s.field("normalize_advantages", p.normalize_advantages);
    s.check([&] { p.validate(); });
  });
  v.list("stages", c.stages, [&](V& s, StageConfig& st) {
    s.field("stage", st.stage);
    s.field("budget", st.budget);
    s.field("eval_interval", st.eval_interval);
    s.field("n_eval", st.n_eval);
    s.field("win_threshold", st.win_threshold);
    s.field("p_latest", st.p_latest);
    s.field("promotion_success_ratio", st.promotion_success_ratio);
    s.check([&] { st.validate(); });
  });
  v.section("evaluation", [&](V& s) {
    EvaluationSettings& e = c.evaluation;
    s.field("n_runs", e.n_runs);
    s.field("laps", e.laps);
    s.field("scenario", e.scenario);
    s.field("seed", e.seed);
    s.field("slots", e.slots);
    s.check([&] {
      const Scenario sc = parse_scenario(e.scenario);
      if (e.n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
      if (e.laps < 1) throw std::invalid_argument("laps must be >= 1");
      if (!e.slots.empty() && static_cast<int>(e.slots.size()) != scenario_agents(sc)) {
        throw std::invalid_argument("scenario " + e.scenario + " needs " + std::to_string(scenario_agents(sc)) +
                                    " slots");
      }
    });
  });
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  StageConfig s1;
  s1.stage = 1;
  s1.promotion_success_ratio = 0.7;
  StageConfig s2;
  s2.stage = 2;
  StageConfig s3;
  s3.stage = 3;
  c.stages = {s1, s2, s3};
  return c;
}

void ExperimentConfig::validate() const {
  try {
    env.validate();
    (void)Track::circle(env.track);
    ppo.validate();
    for (const StageConfig& s : stages) s.validate();
    const Scenario sc = parse_scenario(evaluation.scenario);
    if (!evaluation.slots.empty() && static_cast<int>(evaluation.slots.size()) != scenario_agents(sc)) {
      throw std::invalid_argument("evaluation slots do not match the scenario");
    }
    if (network.hidden.empty()) throw std::invalid_argument("network needs at least one hidden layer");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& yaml, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(where(source, e.mark) + e.msg, e.mark.line + 1);
  }
  ExperimentConfig cfg = ExperimentConfig::defaults();
  if (root.IsNull()) return cfg;
  Reader reader(root, "", source);
  visit(reader, cfg);
  reader.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_yaml(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  YAML::Emitter out;
  out << YAML::BeginMap;
  Writer writer(out);
  visit(writer, copy);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << to_yaml(cfg);
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Where artifacts go and how they are evaluated do not change what a
  // checkpoint means, so those fields stay out of the hash.
  ExperimentConfig hashed = cfg;
  hashed.output_dir.clear();
  hashed.evaluation = EvaluationSettings{};
  const std::string text = to_yaml(hashed);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < 8 && i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace racer
