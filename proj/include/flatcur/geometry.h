#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace flatcur {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;
};

inline constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
inline constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 unit(Vec2 a) { return a / norm(a); }
inline double arg(Vec2 a) { return std::atan2(a.y, a.x); }
inline Vec2 polar(double angle) { return {std::cos(angle), std::sin(angle)}; }
inline constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }
inline Vec2 rotate(Vec2 a, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * a.x - s * a.y, s * a.x + c * a.y};
}

// Wraps an angle into [0, period).
inline double wrap(double angle, double period = kTwoPi) {
  double r = std::fmod(angle, period);
  if (r < 0) r += period;
  if (r >= period) r -= period;
  return r;
}

// Unsigned angle from a to b measured counterclockwise, in [0, 2pi).
inline double ccwAngle(Vec2 a, Vec2 b) { return wrap(std::atan2(cross(a, b), dot(a, b))); }

// Unsigned angle between two vectors, in [0, pi].
inline double angleBetween(Vec2 a, Vec2 b) { return std::abs(std::atan2(cross(a, b), dot(a, b))); }

// Orientation-preserving isometry x -> R(angle) x + translation.
struct Isometry {
  double angle = 0.0;
  Vec2 translation{};

  Vec2 apply(Vec2 p) const { return rotate(p, angle) + translation; }
  Vec2 applyLinear(Vec2 v) const { return rotate(v, angle); }

  // (this * other)(p) = this(other(p))
  Isometry operator*(const Isometry& other) const {
    return {angle + other.angle, rotate(other.translation, angle) + translation};
  }
  Isometry inverse() const { return {-angle, -rotate(translation, -angle)}; }

  static Isometry identity() { return {}; }
};

enum class ErrorKind {
  Syntax,
  Validation,
  Geometry,
  Topology,
  NullHomotopic,
  IterationCap,
  Argument,
};

std::string errorKindName(ErrorKind kind);

class FlatcurError : public std::runtime_error {
 public:
  FlatcurError(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace flatcur
