#include "bevfuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace bevfuse {
namespace {

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

double shoelace(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(twice);
}

Vec2 segment_line_intersection(Vec2 p, Vec2 q, Vec2 a, Vec2 b) {
  const double dp = cross(a, b, p);
  const double dq = cross(a, b, q);
  const double t = dp / (dp - dq);
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

}  // namespace

double normalize_yaw(double yaw) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double y = std::fmod(yaw, two_pi);
  if (y <= -std::numbers::pi) y += two_pi;
  if (y > std::numbers::pi) y -= two_pi;
  return y;
}

std::array<Vec2, 4> RotatedRect::corners() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double hw = 0.5 * w;
  const double hl = 0.5 * l;
  const std::array<Vec2, 4> local{{{hw, hl}, {-hw, hl}, {-hw, -hl}, {hw, -hl}}};
  std::array<Vec2, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {center.x + local[i].x * c - local[i].y * s, center.y + local[i].x * s + local[i].y * c};
  }
  return out;
}

RotatedRect project_to_bev(const Box3D& box) {
  return {{box.center.x, box.center.y}, box.size.w, box.size.l, box.yaw};
}

KeySamples key_samples(const RotatedRect& rect) {
  const double c = std::cos(rect.yaw);
  const double s = std::sin(rect.yaw);
  const double hw = 0.5 * rect.w;
  const double hl = 0.5 * rect.l;
  const Vec2 ctr = rect.center;
  KeySamples k;
  k.center = ctr;
  k.right = {ctr.x + hw * c, ctr.y + hw * s};
  k.left = {ctr.x - hw * c, ctr.y - hw * s};
  k.top = {ctr.x - hl * s, ctr.y + hl * c};
  k.bottom = {ctr.x + hl * s, ctr.y - hl * c};
  return k;
}

double rotated_intersection_area(const RotatedRect& a, const RotatedRect& b) {
  // Circumscribed-circle rejection.
  const double dx = a.center.x - b.center.x;
  const double dy = a.center.y - b.center.y;
  const double ra = 0.5 * std::hypot(a.w, a.l);
  const double rb = 0.5 * std::hypot(b.w, b.l);
  if (dx * dx + dy * dy >= (ra + rb) * (ra + rb)) return 0.0;

  // Sutherland-Hodgman: clip a's polygon by each edge of b (both CCW).
  const auto ca = a.corners();
  const auto cb = b.corners();
  std::vector<Vec2> poly(ca.begin(), ca.end());
  std::vector<Vec2> next;
  next.reserve(8);
  for (std::size_t e = 0; e < 4 && !poly.empty(); ++e) {
    const Vec2 ea = cb[e];
    const Vec2 eb = cb[(e + 1) % 4];
    next.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2 cur = poly[i];
      const Vec2 prev = poly[(i + poly.size() - 1) % poly.size()];
      const bool cur_in = cross(ea, eb, cur) >= 0.0;
      const bool prev_in = cross(ea, eb, prev) >= 0.0;
      if (cur_in) {
        if (!prev_in) next.push_back(segment_line_intersection(prev, cur, ea, eb));
        next.push_back(cur);
      } else if (prev_in) {
        next.push_back(segment_line_intersection(prev, cur, ea, eb));
      }
    }
    poly.swap(next);
  }
  if (poly.size() < 3) return 0.0;
  return shoelace(poly);
}

double rotated_iou_2d(const RotatedRect& a, const RotatedRect& b) {
  const double inter = rotated_intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  const double iou = inter / uni;
  return std::clamp(iou, 0.0, 1.0);
}

double center_distance_bev(const Box3D& a, const Box3D& b) {
  return std::hypot(a.center.x - b.center.x, a.center.y - b.center.y);
}

double volume(const Box3D& box) { return box.size.w * box.size.l * box.size.h; }

bool point_in_box(const Vec3& point, const Box3D& box) {
  const double dx = point.x - box.center.x;
  const double dy = point.y - box.center.y;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double lx = dx * c + dy * s;
  const double ly = -dx * s + dy * c;
  return std::abs(lx) <= 0.5 * box.size.w && std::abs(ly) <= 0.5 * box.size.l &&
         std::abs(point.z - box.center.z) <= 0.5 * box.size.h;
}

bool point_in_rect(Vec2 point, const RotatedRect& rect, double tolerance) {
  const double dx = point.x - rect.center.x;
  const double dy = point.y - rect.center.y;
  const double c = std::cos(rect.yaw);
  const double s = std::sin(rect.yaw);
  const double lx = dx * c + dy * s;
  const double ly = -dx * s + dy * c;
  return std::abs(lx) <= 0.5 * rect.w + tolerance && std::abs(ly) <= 0.5 * rect.l + tolerance;
}

std::size_t points_in_box(std::span<const Vec3> points, const Box3D& box) {
  std::size_t n = 0;
  for (const auto& p : points) n += point_in_box(p, box) ? 1 : 0;
  return n;
}

}  // namespace bevfuse
