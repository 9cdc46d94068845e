#include "cpwlslice/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "cpwlslice/error.hpp"

namespace cpwlslice {
namespace {

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

double coordinate_scale(const std::vector<Point2>& pts) {
  double s = 1.0;
  for (const auto& p : pts) s = std::max({s, std::abs(p.x()), std::abs(p.y())});
  return s;
}

}  // namespace

std::optional<Line2> Line2::make(const Point2& w, double b, Provenance prov, double min_norm) {
  const double n = w.norm();
  if (!(n > min_norm) || !std::isfinite(n) || !std::isfinite(b)) return std::nullopt;
  Line2 line;
  line.normal = w / n;
  line.offset = b / n;
  line.provenance.push_back(prov);
  return line;
}

double signed_area(const std::vector<Point2>& loop) {
  double twice = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    twice += cross(loop[i], loop[(i + 1) % loop.size()]);
  }
  return 0.5 * twice;
}

ConvexPoly2::ConvexPoly2(std::vector<Point2> vertices, double eps) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw GeometryError("polygon needs at least 3 vertices");
  for (const auto& v : vertices_) {
    if (!v.allFinite()) throw GeometryError("polygon vertex is not finite");
  }
  const double tol = eps * coordinate_scale(vertices_);
  if (!(signed_area(vertices_) > 0.0)) throw GeometryError("polygon must be counter-clockwise");
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& prev = vertices_[(i + n - 1) % n];
    const Point2& cur = vertices_[i];
    const Point2& nxt = vertices_[(i + 1) % n];
    if ((nxt - cur).norm() <= tol) throw GeometryError("polygon has repeated vertices");
    const Point2 chord = nxt - prev;
    const double len = chord.norm();
    // Convex CCW: every vertex lies on or to the right of the chord joining its neighbours.
    if (len > 0.0 && cross(chord, cur - prev) / len > tol) {
      throw GeometryError("polygon is not convex");
    }
  }
}

ConvexPoly2 ConvexPoly2::square(double half_extent) {
  return rectangle(-half_extent, -half_extent, half_extent, half_extent);
}

ConvexPoly2 ConvexPoly2::rectangle(double x0, double y0, double x1, double y1) {
  return ConvexPoly2({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

ConvexPoly2 ConvexPoly2::from_loop(std::vector<Point2> loop, double eps) {
  const double tol = eps * coordinate_scale(loop);
  if (signed_area(loop) < 0.0) std::reverse(loop.begin(), loop.end());
  bool changed = true;
  while (changed && loop.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < loop.size() && loop.size() >= 3; ++i) {
      const std::size_t n = loop.size();
      const Point2& prev = loop[(i + n - 1) % n];
      const Point2& cur = loop[i];
      const Point2& nxt = loop[(i + 1) % n];
      bool drop = (cur - prev).norm() <= tol;
      if (!drop) {
        const Point2 chord = nxt - prev;
        const double len = chord.norm();
        drop = len <= tol || std::abs(cross(chord, cur - prev)) / len <= tol;
      }
      if (drop) {
        loop.erase(loop.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        --i;
      }
    }
  }
  return ConvexPoly2(std::move(loop), eps);
}

double ConvexPoly2::area() const { return signed_area(vertices_); }

double ConvexPoly2::diameter() const {
  double d = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    for (std::size_t j = i + 1; j < vertices_.size(); ++j) {
      d = std::max(d, (vertices_[i] - vertices_[j]).norm());
    }
  }
  return d;
}

bool ConvexPoly2::contains(const Point2& p, double eps) const {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Point2 e = next(i) - vertices_[i];
    if (cross(e, p - vertices_[i]) < -eps * e.norm()) return false;
  }
  return true;
}

std::optional<Chord> clip_chord(const Line2& line, const ConvexPoly2& poly, const Tolerances& tol) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  const double eps = tol.geom * coordinate_scale(v);

  std::vector<int> sign(n);
  std::vector<double> f(n);
  bool pos = false;
  bool neg = false;
  for (std::size_t k = 0; k < n; ++k) {
    f[k] = line.eval(v[k]);
    sign[k] = f[k] > eps ? 1 : (f[k] < -eps ? -1 : 0);
    pos |= sign[k] > 0;
    neg |= sign[k] < 0;
  }
  // Missing, grazing a vertex, or lying along an edge: no chord.
  if (!pos || !neg) return std::nullopt;

  std::vector<BoundaryHit> hits;
  for (std::size_t k = 0; k < n && hits.size() < 3; ++k) {
    const std::size_t k1 = (k + 1) % n;
    if (sign[k] == 0) {
      hits.push_back({v[k], k, 0.0, true});
    } else if (sign[k] * sign[k1] < 0) {
      const double t = f[k] / (f[k] - f[k1]);
      hits.push_back({v[k] + t * (v[k1] - v[k]), k, t, false});
    }
  }
  if (hits.size() != 2) {
    throw GeometryError("line crosses convex polygon boundary " + std::to_string(hits.size()) +
                        " times");
  }
  const Point2 d = line.direction();
  if (d.dot(hits[0].point) > d.dot(hits[1].point)) std::swap(hits[0], hits[1]);
  Chord chord{hits[0], hits[1]};
  if (chord.segment().length() <= eps) return std::nullopt;
  return chord;
}

PolygonMetrics polygon_metrics(const ConvexPoly2& poly, const Tolerances& tol) {
  PolygonMetrics m;
  m.area = poly.area();
  for (const auto& p : poly.vertices()) m.centroid += p;
  if (poly.size() > 0) m.centroid /= static_cast<double>(poly.size());
  m.degenerate = !(m.area >= tol.area);
  return m;
}

}  // namespace cpwlslice
