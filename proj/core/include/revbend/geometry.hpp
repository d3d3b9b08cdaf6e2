#pragma once

#include <cmath>

namespace revbend {

struct Vec2 {
  double x = 0.0;
  double z = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, z + o.z}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, z - o.z}; }
  Vec2 operator*(double c) const { return {x * c, z * c}; }
  double dot(Vec2 o) const { return x * o.x + z * o.z; }
  double norm() const { return std::hypot(x, z); }
};

inline Vec2 operator*(double c, Vec2 v) { return v * c; }
inline double det(Vec2 a, Vec2 b) { return a.x * b.z - a.z * b.x; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double c) const { return {x * c, y * c, z * c}; }
  double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

inline Vec3 operator*(double c, Vec3 v) { return v * c; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Axis-aligned box in the profile plane. Perturbation support must stay
// inside one of these, and the whole construction must keep x > 0.
struct SupportBox {
  double x_min = 0.0;
  double x_max = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;

  bool contains(Vec2 p) const {
    return p.x >= x_min && p.x <= x_max && p.z >= z_min && p.z <= z_max;
  }
  bool contains(const SupportBox& inner) const {
    return inner.x_min >= x_min && inner.x_max <= x_max &&
           inner.z_min >= z_min && inner.z_max <= z_max;
  }
};

}  // namespace revbend
