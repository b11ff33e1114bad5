#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "bevfuse/types.hpp"

namespace bevfuse {

// Box size. `w` is the extent along the heading axis (cos yaw, sin yaw),
// `l` the lateral extent, `h` the vertical extent.
struct BoxSize {
  double w = 1.0;
  double l = 1.0;
  double h = 1.0;
};

// 3D box with the 9-attribute layout (x, y, z, w, l, h, yaw, vx, vy).
struct Box3D {
  Vec3 center;
  BoxSize size;
  double yaw = 0.0;
  Vec2 velocity;

  bool valid() const { return size.w > 0.0 && size.l > 0.0 && size.h > 0.0; }
};

struct RotatedRect {
  Vec2 center;
  double w = 1.0;
  double l = 1.0;
  double yaw = 0.0;

  double area() const { return w * l; }
  // Counter-clockwise, starting from the (+w/2, +l/2) corner.
  std::array<Vec2, 4> corners() const;
};

struct KeySamples {
  Vec2 center;
  Vec2 top;
  Vec2 bottom;
  Vec2 left;
  Vec2 right;
};

// Maps any angle into (-pi, pi].
double normalize_yaw(double yaw);

RotatedRect project_to_bev(const Box3D& box);
KeySamples key_samples(const RotatedRect& rect);

// Exact BEV IoU of two rotated rectangles via convex clipping.
double rotated_iou_2d(const RotatedRect& a, const RotatedRect& b);

// Area of the intersection of two convex rectangles.
double rotated_intersection_area(const RotatedRect& a, const RotatedRect& b);

double center_distance_bev(const Box3D& a, const Box3D& b);
double volume(const Box3D& box);

// Inclusive point-in-oriented-box test.
bool point_in_box(const Vec3& point, const Box3D& box);
bool point_in_rect(Vec2 point, const RotatedRect& rect, double tolerance = 0.0);
std::size_t points_in_box(std::span<const Vec3> points, const Box3D& box);

}  // namespace bevfuse
