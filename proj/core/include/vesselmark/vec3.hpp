#pragma once

#include <cmath>
#include <ostream>

namespace vm {

// Tagged 3-component vector. The tag keeps world millimetres, continuous
// voxel indices and free vectors from being mixed up silently; converting
// between them is always an explicit call.
template <typename Tag>
struct Triple {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Triple() = default;
  constexpr Triple(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  constexpr Triple& operator+=(const Triple& o) {
    x += o.x; y += o.y; z += o.z;
    return *this;
  }
  constexpr Triple& operator-=(const Triple& o) {
    x -= o.x; y -= o.y; z -= o.z;
    return *this;
  }
  constexpr Triple& operator*=(double s) {
    x *= s; y *= s; z *= s;
    return *this;
  }

  friend constexpr Triple operator+(Triple a, const Triple& b) { return a += b; }
  friend constexpr Triple operator-(Triple a, const Triple& b) { return a -= b; }
  friend constexpr Triple operator-(const Triple& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Triple operator*(Triple a, double s) { return a *= s; }
  friend constexpr Triple operator*(double s, Triple a) { return a *= s; }
  friend constexpr Triple operator/(const Triple& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  friend constexpr bool operator==(const Triple&, const Triple&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Triple& t) {
    return os << '(' << t.x << ", " << t.y << ", " << t.z << ')';
  }

  // Reinterpret the components under another tag.
  template <typename Other>
  constexpr Triple<Other> as() const { return {x, y, z}; }
};

struct FreeTag {};
struct MmTag {};
struct VoxelTag {};

using Vec3 = Triple<FreeTag>;        // displacements, forces, directions
using PointMm = Triple<MmTag>;       // world coordinates in millimetres
using VoxelPos = Triple<VoxelTag>;   // continuous voxel index

template <typename T>
constexpr double dot(const Triple<T>& a, const Triple<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <typename T>
constexpr Triple<T> cross(const Triple<T>& a, const Triple<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <typename T>
double norm(const Triple<T>& a) {
  return std::sqrt(dot(a, a));
}

template <typename T>
double distance(const Triple<T>& a, const Triple<T>& b) {
  return norm(a - b);
}

template <typename T>
bool is_finite(const Triple<T>& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// Displacement between two tagged points as a free vector.
template <typename T>
constexpr Vec3 offset(const Triple<T>& from, const Triple<T>& to) {
  return (to - from).template as<FreeTag>();
}

template <typename T>
constexpr Triple<T> translate(const Triple<T>& p, const Vec3& d) {
  return {p.x + d.x, p.y + d.y, p.z + d.z};
}

}  // namespace vm
