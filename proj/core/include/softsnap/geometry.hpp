#pragma once

#include <cmath>
#include <numbers>

namespace softsnap {

inline constexpr double kPi = std::numbers::pi;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double k, Point2 p) { return {k * p.x, k * p.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

// Unit vector at angle theta.
inline Point2 heading(double theta) { return {std::cos(theta), std::sin(theta)}; }

// Rib-center pose. theta is the rib's own direction; the spine leaves the rib
// along theta + pi/2.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Point2 position() const { return {x, y}; }
  friend bool operator==(const Pose2&, const Pose2&) = default;
};

inline double degrees(double radians) { return radians * 180.0 / kPi; }
inline double radians(double degrees) { return degrees * kPi / 180.0; }

}  // namespace softsnap
