#pragma once

#include <cstddef>
#include <vector>

#include "racer/control.hpp"
#include "racer/dynamics.hpp"

namespace racer {

/// Rectangular gate. The aperture is spanned by the gate-local axes u
/// (horizontal) and v; the frame is four bars of square cross-section
/// frame_thickness surrounding it.
struct Gate {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
  double half_width = 0.5;
  double half_height = 0.5;
  double frame_thickness = 0.05;

  [[nodiscard]] Vec3 u_axis() const;
  [[nodiscard]] Vec3 v_axis() const;
};

/// Parameters of the regular polygon circuit generated by Track::circle.
struct TrackLayout {
  int n_gates = 6;
  double radius = 5.0;
  double altitude = 1.5;
  double half_width = 0.5;
  double half_height = 0.5;
  double frame_thickness = 0.05;
  /// Horizontal margin between the circle and the world bounds, m.
  double bounds_margin = 3.0;
  double ceiling = 4.0;

  bool operator==(const TrackLayout&) const = default;
};

/// Projection of a point onto the closed centerline.
struct CenterlinePoint {
  int segment = 0;
  double arc = 0.0;  ///< in [0, total_length)
  double distance = 0.0;
};

/// Ordered gates forming a closed circuit. Segment i runs from gate i to gate
/// i+1 (mod n); arc length 0 is at gate 0.
class Track {
 public:
  Track(std::vector<Gate> gates, Aabb bounds);

  /// Gates on a horizontal circle, counter-clockwise, normals tangent to the
  /// circle in the direction of travel.
  static Track circle(const TrackLayout& layout);

  [[nodiscard]] const std::vector<Gate>& gates() const { return gates_; }
  [[nodiscard]] const Gate& gate(int i) const { return gates_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] int size() const { return static_cast<int>(gates_.size()); }
  [[nodiscard]] const Aabb& bounds() const { return bounds_; }
  [[nodiscard]] double total_length() const { return total_length_; }
  [[nodiscard]] double segment_length(int segment) const;
  /// Arc position of the start of a segment (= its first gate).
  [[nodiscard]] double segment_start(int segment) const;
  [[nodiscard]] Vec3 segment_direction(int segment) const;
  [[nodiscard]] Vec3 point_at(double arc) const;

  /// Orthogonal projection restricted to segments {hint-1, hint, hint+1}.
  [[nodiscard]] CenterlinePoint project(const Vec3& p, int hint_segment) const;
  /// Unrestricted projection onto the whole centerline.
  [[nodiscard]] CenterlinePoint project(const Vec3& p) const;
  /// Projection clamped to one segment.
  [[nodiscard]] CenterlinePoint project_segment(const Vec3& p, int segment) const;
  /// Arc position of a drone heading for next_gate: the gate's own arc
  /// position minus the straight-line distance to its center, in [0, total).
  /// Never exceeds the unpassed gate, and rises only when closing on it.
  [[nodiscard]] double approach_arc(const Vec3& p, int next_gate) const;

  [[nodiscard]] int wrap_index(int i) const;

 private:

  std::vector<Gate> gates_;
  Aabb bounds_;
  std::vector<double> cumulative_;
  double total_length_ = 0.0;
};

/// True iff the segment prev->next crosses the gate plane moving along +normal
/// and the crossing point lies inside the aperture.
[[nodiscard]] bool gate_passed(const Vec3& prev, const Vec3& next, const Gate& gate);

/// Signed shortest wrap-around difference (new - prev) on a loop of the given length.
[[nodiscard]] double progress_delta(double prev_arc, double new_arc, double total_length);

/// True iff a sphere intersects any of the four frame bars of the gate.
[[nodiscard]] bool sphere_hits_gate_frame(const Vec3& center, double radius, const Gate& gate);

}  // namespace racer
