#ifndef URBANFORM_GEOMETRY_HPP
#define URBANFORM_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace urbanform {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Closed ring: front() == back().
using Ring = std::vector<Point>;

struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;
};

struct Box {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  static Box centered(Point c, double half_w, double half_h) {
    return {c.x - half_w, c.y - half_h, c.x + half_w, c.y + half_h};
  }

  bool empty() const { return min_x > max_x || min_y > max_y; }
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }

  void expand(Point p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }

  void expand(const Box& b) {
    min_x = std::min(min_x, b.min_x);
    min_y = std::min(min_y, b.min_y);
    max_x = std::max(max_x, b.max_x);
    max_y = std::max(max_y, b.max_y);
  }

  bool contains(Point p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }

  bool intersects(const Box& b) const {
    return !(b.min_x > max_x || b.max_x < min_x || b.min_y > max_y || b.max_y < min_y);
  }
};

inline Box bounds(std::span<const Point> pts) {
  Box b;
  for (const auto& p : pts) b.expand(p);
  return b;
}

inline Box bounds(const Polygon& poly) { return bounds(poly.exterior); }

// Shoelace formula; positive for counter-clockwise rings.
inline double signed_area(std::span<const Point> ring) {
  if (ring.size() < 3) return 0.0;
  // Vertices taken relative to the first one to limit cancellation.
  const Point o = ring.front();
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const double ax = ring[i].x - o.x, ay = ring[i].y - o.y;
    const double bx = ring[i + 1].x - o.x, by = ring[i + 1].y - o.y;
    twice += ax * by - bx * ay;
  }
  return 0.5 * twice;
}

// Exterior area minus hole areas.
inline double area(const Polygon& poly) {
  double a = std::abs(signed_area(poly.exterior));
  for (const auto& h : poly.holes) a -= std::abs(signed_area(h));
  return a;
}

inline double perimeter(std::span<const Point> ring) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    len += std::hypot(ring[i + 1].x - ring[i].x, ring[i + 1].y - ring[i].y);
  }
  return len;
}

// Area-weighted centroid of the polygon with holes removed.
inline Point centroid(const Polygon& poly) {
  double sx = 0.0, sy = 0.0, total = 0.0;
  auto accumulate = [&](const Ring& ring, double sign) {
    if (ring.size() < 4) return;
    const Point o = ring.front();
    double a2 = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const double ax = ring[i].x - o.x, ay = ring[i].y - o.y;
      const double bx = ring[i + 1].x - o.x, by = ring[i + 1].y - o.y;
      const double cross = ax * by - bx * ay;
      a2 += cross;
      cx += (ax + bx) * cross;
      cy += (ay + by) * cross;
    }
    if (a2 == 0.0) return;
    // Ring centroid relative to o, weighted by |area| with the given sign.
    const double w = sign * std::abs(a2) * 0.5;
    sx += w * (o.x + cx / (3.0 * a2));
    sy += w * (o.y + cy / (3.0 * a2));
    total += w;
  };
  accumulate(poly.exterior, 1.0);
  for (const auto& h : poly.holes) accumulate(h, -1.0);
  if (total == 0.0) {
    const Box b = bounds(poly.exterior);
    return {0.5 * (b.min_x + b.max_x), 0.5 * (b.min_y + b.max_y)};
  }
  return {sx / total, sy / total};
}

namespace detail {

inline double orient(Point a, Point b, Point c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

inline bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

}  // namespace detail

// Closed-segment intersection test, including touching and collinear overlap.
inline bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  using detail::orient;
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && detail::on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && detail::on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && detail::on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && detail::on_segment(p1, p2, q2)) return true;
  return false;
}

// A closed ring is simple when no two non-adjacent edges touch and adjacent
// edges share only their common vertex.
inline bool is_simple(std::span<const Point> ring) {
  const std::size_t n = ring.size() - 1;  // edge count
  if (ring.size() < 4 || ring.front() != ring.back()) return false;
  std::vector<Box> edge_box(n);
  for (std::size_t i = 0; i < n; ++i) {
    edge_box[i].expand(ring[i]);
    edge_box[i].expand(ring[i + 1]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (!edge_box[i].intersects(edge_box[j])) continue;
      if (adjacent) {
        // Folding back onto the previous edge is a degenerate spike.
        const Point shared = (j == i + 1) ? ring[j] : ring[i];
        const Point a = (j == i + 1) ? ring[i] : ring[i + 1];
        const Point b = (j == i + 1) ? ring[j + 1] : ring[j];
        if (detail::orient(a, shared, b) == 0 &&
            ((b.x - shared.x) * (a.x - shared.x) + (b.y - shared.y) * (a.y - shared.y)) > 0) {
          return false;
        }
        continue;
      }
      if (segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1])) return false;
    }
  }
  return true;
}

// Crossing-number test; points exactly on the boundary may go either way.
inline bool point_in_ring(Point p, std::span<const Point> ring) {
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const Point a = ring[i], b = ring[i + 1];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

inline bool point_in_polygon(Point p, const Polygon& poly) {
  if (!point_in_ring(p, poly.exterior)) return false;
  for (const auto& h : poly.holes) {
    if (point_in_ring(p, h)) return false;
  }
  return true;
}

// Removes consecutive duplicate vertices and closes the ring.
inline Ring close_ring(Ring ring) {
  Ring out;
  out.reserve(ring.size() + 1);
  for (const auto& p : ring) {
    if (out.empty() || out.back() != p) out.push_back(p);
  }
  if (!out.empty() && out.front() != out.back()) out.push_back(out.front());
  return out;
}

// Reverses the ring if its orientation does not match the requested sign.
inline void orient_ring(Ring& ring, bool counter_clockwise) {
  const double a = signed_area(ring);
  if ((a > 0) != counter_clockwise) std::reverse(ring.begin(), ring.end());
}

// Sutherland-Hodgman clip of a closed ring against an axis-aligned box. The
// result may contain degenerate bridge edges along the box for concave input;
// they enclose zero area and do not change even-odd fills.
inline Ring clip_ring(std::span<const Point> ring, const Box& box) {
  if (ring.size() < 4) return {};
  std::vector<Point> current(ring.begin(), ring.end() - 1);
  auto clip_edge = [&current](auto inside, auto intersect) {
    std::vector<Point> out;
    const std::size_t n = current.size();
    if (n == 0) return;
    out.reserve(n + 4);
    for (std::size_t i = 0; i < n; ++i) {
      const Point cur = current[i];
      const Point prev = current[(i + n - 1) % n];
      const bool cin = inside(cur), pin = inside(prev);
      if (cin) {
        if (!pin) out.push_back(intersect(prev, cur));
        out.push_back(cur);
      } else if (pin) {
        out.push_back(intersect(prev, cur));
      }
    }
    current = std::move(out);
  };
  auto at_x = [](Point a, Point b, double x) {
    const double t = (x - a.x) / (b.x - a.x);
    return Point{x, a.y + t * (b.y - a.y)};
  };
  auto at_y = [](Point a, Point b, double y) {
    const double t = (y - a.y) / (b.y - a.y);
    return Point{a.x + t * (b.x - a.x), y};
  };
  clip_edge([&](Point p) { return p.x >= box.min_x; },
            [&](Point a, Point b) { return at_x(a, b, box.min_x); });
  clip_edge([&](Point p) { return p.x <= box.max_x; },
            [&](Point a, Point b) { return at_x(a, b, box.max_x); });
  clip_edge([&](Point p) { return p.y >= box.min_y; },
            [&](Point a, Point b) { return at_y(a, b, box.min_y); });
  clip_edge([&](Point p) { return p.y <= box.max_y; },
            [&](Point a, Point b) { return at_y(a, b, box.max_y); });
  if (current.size() < 3) return {};
  current.push_back(current.front());
  return current;
}

// Polygon intersected with a box; nullopt when nothing of positive area remains.
inline std::optional<Polygon> clip_polygon(const Polygon& poly, const Box& box) {
  Polygon out;
  out.exterior = clip_ring(poly.exterior, box);
  if (out.exterior.empty() || signed_area(out.exterior) == 0.0) return std::nullopt;
  for (const auto& h : poly.holes) {
    Ring c = clip_ring(h, box);
    if (!c.empty() && signed_area(c) != 0.0) out.holes.push_back(std::move(c));
  }
  return out;
}

template <typename F>
Polygon transform(const Polygon& poly, F&& f) {
  Polygon out;
  out.exterior.reserve(poly.exterior.size());
  for (const auto& p : poly.exterior) out.exterior.push_back(f(p));
  for (const auto& h : poly.holes) {
    Ring r;
    r.reserve(h.size());
    for (const auto& p : h) r.push_back(f(p));
    out.holes.push_back(std::move(r));
  }
  return out;
}

inline Polygon translated(const Polygon& poly, double dx, double dy) {
  return transform(poly, [=](Point p) { return Point{p.x + dx, p.y + dy}; });
}

// Rotation about the origin by `radians`, counter-clockwise.
inline Polygon rotated(const Polygon& poly, double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  return transform(poly, [=](Point p) { return Point{c * p.x - s * p.y, s * p.x + c * p.y}; });
}

inline Polygon rectangle(double min_x, double min_y, double max_x, double max_y) {
  return {{{min_x, min_y}, {max_x, min_y}, {max_x, max_y}, {min_x, max_y}, {min_x, min_y}}, {}};
}

}  // namespace urbanform

#endif  // URBANFORM_GEOMETRY_HPP
