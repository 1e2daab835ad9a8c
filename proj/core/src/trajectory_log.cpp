#include "racer/trajectory_log.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace racer {

namespace {

constexpr const char* kFormatTag = "racer-trajectory-v1";
constexpr const char* kColumns =
    "step,time,drone,x,y,z,vx,vy,vz,roll,pitch,yaw,p,q,r,a0,a1,a2,a3,"
    "r_progress,r_collision,r_alignment,r_lap,reward,next_gate,gate_pass,collision,lap";
constexpr int kColumnCount = 28;

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, long row, const char* column) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw TrajectoryLogError("row " + std::to_string(row) + ": bad value '" + s + "' in column " + column, row);
  }
  return v;
}

long parse_long(const std::string& s, long row, const char* column) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw TrajectoryLogError("row " + std::to_string(row) + ": bad integer '" + s + "' in column " + column, row);
  }
  return v;
}

void parse_header_line(const std::string& line, TrajectoryLog& log, bool& saw_format) {
  const auto colon = line.find(':');
  if (colon == std::string::npos) return;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t#");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  const std::string key = trim(line.substr(0, colon));
  const std::string value = trim(line.substr(colon + 1));
  if (key == "format") {
    if (value != kFormatTag) throw TrajectoryLogError("unsupported trajectory log format '" + value + "'", 0);
    saw_format = true;
  } else if (key == "config_hash") {
    log.config_hash = value;
  } else if (key == "weights") {
    std::istringstream ss(value);
    std::string item;
    while (ss >> item) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw TrajectoryLogError("malformed weights header", 0);
      const double v = parse_double(item.substr(eq + 1), 0, "weights");
      const std::string name = item.substr(0, eq);
      if (name == "progress") log.weights.progress_weight = v;
      else if (name == "collision") log.weights.collision_weight = v;
      else if (name == "alignment") log.weights.alignment_weight = v;
      else throw TrajectoryLogError("unknown weight '" + name + "' in header", 0);
    }
  }
}

}  // namespace

TrajectoryWriter::TrajectoryWriter(std::ostream& os, const std::string& config_hash, const RewardWeights& w)
    : os_(os) {
  os_ << "# format: " << kFormatTag << '\n'
      << "# config_hash: " << config_hash << '\n'
      << "# weights: progress=" << fmt(w.progress_weight) << " collision=" << fmt(w.collision_weight)
      << " alignment=" << fmt(w.alignment_weight) << '\n'
      << kColumns << '\n';
}

void TrajectoryWriter::write(const TrajectoryRecord& r) {
  const DroneState& s = r.state;
  os_ << r.step << ',' << fmt(r.time) << ',' << r.drone;
  for (const Vec3* v : {&s.position, &s.velocity, &s.attitude, &s.body_rates}) {
    for (int i = 0; i < 3; ++i) os_ << ',' << fmt((*v)[i]);
  }
  for (int i = 0; i < 4; ++i) os_ << ',' << fmt(r.action[i]);
  os_ << ',' << fmt(r.terms.progress) << ',' << fmt(r.terms.collision) << ',' << fmt(r.terms.alignment) << ','
      << fmt(r.terms.lap_time) << ',' << fmt(r.reward) << ',' << r.next_gate << ',' << int(r.gate_pass) << ','
      << int(r.collision) << ',' << int(r.lap) << '\n';
  ++rows_;
}

TrajectoryLog read_trajectory_log(std::istream& is) {
  TrajectoryLog log;
  bool saw_format = false;
  bool saw_columns = false;
  std::map<int, double> last_time;
  std::string line;
  long row = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      parse_header_line(line, log, saw_format);
      continue;
    }
    if (!saw_columns) {
      if (line != kColumns) throw TrajectoryLogError("unexpected column header: " + line, 0);
      if (!saw_format) throw TrajectoryLogError("missing format header line", 0);
      saw_columns = true;
      continue;
    }
    ++row;
    const std::vector<std::string> f = split(line);
    if (static_cast<int>(f.size()) != kColumnCount) {
      throw TrajectoryLogError("row " + std::to_string(row) + ": expected " + std::to_string(kColumnCount) +
                                   " columns, found " + std::to_string(f.size()),
                               row);
    }
    TrajectoryRecord r;
    int c = 0;
    r.step = parse_long(f[c++], row, "step");
    r.time = parse_double(f[c++], row, "time");
    r.drone = static_cast<int>(parse_long(f[c++], row, "drone"));
    for (Vec3* v : {&r.state.position, &r.state.velocity, &r.state.attitude, &r.state.body_rates}) {
      for (int i = 0; i < 3; ++i) (*v)[i] = parse_double(f[c++], row, "state");
    }
    for (int i = 0; i < 4; ++i) r.action[i] = parse_double(f[c++], row, "action");
    r.terms.progress = parse_double(f[c++], row, "r_progress");
    r.terms.collision = parse_double(f[c++], row, "r_collision");
    r.terms.alignment = parse_double(f[c++], row, "r_alignment");
    r.terms.lap_time = parse_double(f[c++], row, "r_lap");
    r.reward = parse_double(f[c++], row, "reward");
    r.next_gate = static_cast<int>(parse_long(f[c++], row, "next_gate"));
    r.gate_pass = parse_long(f[c++], row, "gate_pass") != 0;
    r.collision = parse_long(f[c++], row, "collision") != 0;
    r.lap = parse_long(f[c++], row, "lap") != 0;

    if (!std::isfinite(r.time)) {
      throw TrajectoryLogError("row " + std::to_string(row) + ": non-finite time", row);
    }
    if (auto it = last_time.find(r.drone); it != last_time.end() && r.time < it->second) {
      throw TrajectoryLogError("row " + std::to_string(row) + ": time decreases for drone " + std::to_string(r.drone),
                               row);
    }
    last_time[r.drone] = r.time;
    const double expected = r.terms.total(log.weights);
    if (!(std::abs(expected - r.reward) <= 1e-9 * (1.0 + std::abs(expected)))) {
      throw TrajectoryLogError("row " + std::to_string(row) + ": reward " + fmt(r.reward) +
                                   " does not match the weighted sum of its terms " + fmt(expected),
                               row);
    }
    log.records.push_back(r);
  }
  if ((saw_format || !log.config_hash.empty()) && !saw_columns) {
    throw TrajectoryLogError("missing column header", 0);
  }
  return log;
}

TrajectoryLog read_trajectory_log(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw TrajectoryLogError("cannot open " + path.string(), 0);
  return read_trajectory_log(is);
}

ReplaySummary export_replay(const TrajectoryLog& log, const std::filesystem::path& out_dir) {
  ReplaySummary summary;
  summary.rows = static_cast<long>(log.records.size());
  std::map<int, std::vector<const TrajectoryRecord*>> by_drone;
  for (const TrajectoryRecord& r : log.records) by_drone[r.drone].push_back(&r);
  if (by_drone.empty()) return summary;

  std::filesystem::create_directories(out_dir);
  for (const auto& [drone, rows] : by_drone) {
    summary.drones.push_back(drone);
    const std::string id = std::to_string(drone);
    const auto path_file = out_dir / ("path_drone" + id + ".csv");
    const auto speed_file = out_dir / ("speed_drone" + id + ".csv");
    const auto reward_file = out_dir / ("rewards_drone" + id + ".csv");
    std::ofstream path_os(path_file), speed_os(speed_file), reward_os(reward_file);
    if (!path_os || !speed_os || !reward_os) throw std::runtime_error("cannot write replay outputs in " + out_dir.string());
    path_os << "time,x,y,z,next_gate,gate_pass,collision\n";
    speed_os << "time,speed\n";
    reward_os << "time,progress,collision,alignment,lap,reward,cumulative\n";
    double cumulative = 0.0;
    for (const TrajectoryRecord* r : rows) {
      const Vec3& p = r->state.position;
      path_os << fmt(r->time) << ',' << fmt(p.x()) << ',' << fmt(p.y()) << ',' << fmt(p.z()) << ',' << r->next_gate
              << ',' << int(r->gate_pass) << ',' << int(r->collision) << '\n';
      speed_os << fmt(r->time) << ',' << fmt(r->state.velocity.norm()) << '\n';
      cumulative += r->reward;
      reward_os << fmt(r->time) << ',' << fmt(r->terms.progress) << ',' << fmt(r->terms.collision) << ','
                << fmt(r->terms.alignment) << ',' << fmt(r->terms.lap_time) << ',' << fmt(r->reward) << ','
                << fmt(cumulative) << '\n';
    }
    summary.files.insert(summary.files.end(), {path_file, speed_file, reward_file});
  }
  return summary;
}

}  // namespace racer
