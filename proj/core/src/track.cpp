#include "racer/track.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace racer {

Vec3 Gate::u_axis() const {
  Vec3 u = Vec3::UnitZ().cross(normal);
  if (u.norm() < 1e-9) u = Vec3::UnitY().cross(normal);
  return u.normalized();
}

Vec3 Gate::v_axis() const { return normal.cross(u_axis()).normalized(); }

Track::Track(std::vector<Gate> gates, Aabb bounds) : gates_(std::move(gates)), bounds_(bounds) {
  if (gates_.size() < 3) throw std::invalid_argument("a track needs at least 3 gates");
  for (const Gate& g : gates_) {
    if (std::abs(g.normal.norm() - 1.0) > 1e-9) throw std::invalid_argument("gate normal must be unit length");
    if (!(g.half_width > 0.0 && g.half_height > 0.0)) {
      throw std::invalid_argument("gate aperture must be positive");
    }
    if (!(g.frame_thickness >= 0.0)) throw std::invalid_argument("frame thickness must be >= 0");
  }
  cumulative_.resize(gates_.size() + 1, 0.0);
  for (int i = 0; i < size(); ++i) {
    cumulative_[static_cast<std::size_t>(i) + 1] = cumulative_[static_cast<std::size_t>(i)] + segment_length(i);
  }
  total_length_ = cumulative_.back();
  if (!(total_length_ > 0.0)) throw std::invalid_argument("track length must be positive");
}

Track Track::circle(const TrackLayout& l) {
  if (l.n_gates < 3) throw std::invalid_argument("track.n_gates must be >= 3");
  if (!(l.radius > 0.0)) throw std::invalid_argument("track.radius must be positive");
  std::vector<Gate> gates;
  gates.reserve(static_cast<std::size_t>(l.n_gates));
  for (int i = 0; i < l.n_gates; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / l.n_gates;
    Gate g;
    g.center = Vec3(l.radius * std::cos(angle), l.radius * std::sin(angle), l.altitude);
    g.normal = Vec3(-std::sin(angle), std::cos(angle), 0.0);
    g.half_width = l.half_width;
    g.half_height = l.half_height;
    g.frame_thickness = l.frame_thickness;
    gates.push_back(g);
  }
  const double extent = l.radius + l.bounds_margin;
  Aabb bounds{Vec3(-extent, -extent, 0.0), Vec3(extent, extent, l.ceiling)};
  return Track(std::move(gates), bounds);
}

int Track::wrap_index(int i) const {
  const int n = size();
  return ((i % n) + n) % n;
}

double Track::segment_length(int segment) const {
  const int s = wrap_index(segment);
  return (gate(wrap_index(s + 1)).center - gate(s).center).norm();
}

double Track::segment_start(int segment) const {
  return cumulative_[static_cast<std::size_t>(wrap_index(segment))];
}

Vec3 Track::segment_direction(int segment) const {
  const int s = wrap_index(segment);
  return (gate(wrap_index(s + 1)).center - gate(s).center).normalized();
}

Vec3 Track::point_at(double arc) const {
  arc = std::fmod(arc, total_length_);
  if (arc < 0.0) arc += total_length_;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), arc);
  int s = static_cast<int>(std::distance(cumulative_.begin(), it)) - 1;
  s = std::clamp(s, 0, size() - 1);
  return gate(s).center + segment_direction(s) * (arc - cumulative_[static_cast<std::size_t>(s)]);
}

CenterlinePoint Track::project_segment(const Vec3& p, int segment) const {
  const int s = wrap_index(segment);
  const Vec3 a = gate(s).center;
  const Vec3 ab = gate(wrap_index(s + 1)).center - a;
  const double len2 = ab.squaredNorm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  CenterlinePoint out;
  out.segment = s;
  out.distance = (a + t * ab - p).norm();
  out.arc = cumulative_[static_cast<std::size_t>(s)] + t * std::sqrt(len2);
  if (out.arc >= total_length_) out.arc -= total_length_;
  return out;
}

double Track::approach_arc(const Vec3& p, int next_gate) const {
  const int g = wrap_index(next_gate);
  const double arc = std::fmod(cumulative_[static_cast<std::size_t>(g)] - (p - gate(g).center).norm(), total_length_);
  return arc < 0.0 ? arc + total_length_ : arc;
}

CenterlinePoint Track::project(const Vec3& p, int hint_segment) const {
  CenterlinePoint best = project_segment(p, hint_segment);
  for (int offset : {-1, 1}) {
    const CenterlinePoint c = project_segment(p, hint_segment + offset);
    if (c.distance < best.distance) best = c;
  }
  return best;
}

CenterlinePoint Track::project(const Vec3& p) const {
  CenterlinePoint best = project_segment(p, 0);
  for (int s = 1; s < size(); ++s) {
    const CenterlinePoint c = project_segment(p, s);
    if (c.distance < best.distance) best = c;
  }
  return best;
}

bool gate_passed(const Vec3& prev, const Vec3& next, const Gate& gate) {
  const double d0 = (prev - gate.center).dot(gate.normal);
  const double d1 = (next - gate.center).dot(gate.normal);
  // Crossing in +normal direction: from the back half-space (or the plane) to the front.
  if (!(d0 <= 0.0 && d1 > 0.0)) return false;
  const double t = d0 / (d0 - d1);
  const Vec3 hit = prev + t * (next - prev) - gate.center;
  return std::abs(hit.dot(gate.u_axis())) <= gate.half_width &&
         std::abs(hit.dot(gate.v_axis())) <= gate.half_height;
}

double progress_delta(double prev_arc, double new_arc, double total_length) {
  double d = std::fmod(new_arc - prev_arc, total_length);
  if (d >= 0.5 * total_length) d -= total_length;
  if (d < -0.5 * total_length) d += total_length;
  return d;
}

namespace {

// Sphere vs oriented box given in gate-local coordinates.
bool sphere_hits_box(const Vec3& local_center, const Vec3& box_center, const Vec3& half_extent,
                     double radius) {
  const Vec3 d = local_center - box_center;
  const Vec3 closest = d.cwiseMax(-half_extent).cwiseMin(half_extent);
  return (d - closest).squaredNorm() <= radius * radius;
}

}  // namespace

bool sphere_hits_gate_frame(const Vec3& center, double radius, const Gate& gate) {
  const double t = gate.frame_thickness;
  if (t <= 0.0) return false;
  const Vec3 rel = center - gate.center;
  const Vec3 local(rel.dot(gate.u_axis()), rel.dot(gate.v_axis()), rel.dot(gate.normal));
  const double hw = gate.half_width, hh = gate.half_height;
  const std::array<std::pair<Vec3, Vec3>, 4> bars = {{
      {Vec3(-(hw + 0.5 * t), 0.0, 0.0), Vec3(0.5 * t, hh + t, 0.5 * t)},
      {Vec3(hw + 0.5 * t, 0.0, 0.0), Vec3(0.5 * t, hh + t, 0.5 * t)},
      {Vec3(0.0, -(hh + 0.5 * t), 0.0), Vec3(hw + t, 0.5 * t, 0.5 * t)},
      {Vec3(0.0, hh + 0.5 * t, 0.0), Vec3(hw + t, 0.5 * t, 0.5 * t)},
  }};
  for (const auto& [c, e] : bars) {
    if (sphere_hits_box(local, c, e, radius)) return true;
  }
  return false;
}

}  // namespace racer
