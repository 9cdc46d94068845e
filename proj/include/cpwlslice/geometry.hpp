#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

namespace cpwlslice {

using Point2 = Eigen::Vector2d;

/// Tolerances shared by the planar routines. All distances are in slice units.
struct Tolerances {
  double geom = 1e-12;  // incidence / coincidence / node merging
  double line = 1e-14;  // minimum normal norm before a line counts as constant
  double area = 1e-16;  // faces below this area are degenerate
};

/// Which layer/unit/breakpoint produced a line. Layer -1 marks synthetic lines.
struct Provenance {
  int layer = -1;
  int unit = -1;
  int breakpoint = 0;

  bool operator==(const Provenance&) const = default;
};

/// {u : normal . u + offset = 0} with |normal| = 1.
struct Line2 {
  Point2 normal{1.0, 0.0};
  double offset = 0.0;
  std::vector<Provenance> provenance;

  /// Normalizes (w, b). Returns nothing if |w| <= min_norm.
  static std::optional<Line2> make(const Point2& w, double b, Provenance prov = {},
                                   double min_norm = Tolerances{}.line);

  double eval(const Point2& p) const { return normal.dot(p) + offset; }
  Point2 direction() const { return {-normal.y(), normal.x()}; }
};

/// Counter-clockwise convex polygon.
class ConvexPoly2 {
 public:
  ConvexPoly2() = default;
  /// Validates: at least 3 vertices, CCW, convex, no repeated vertices.
  explicit ConvexPoly2(std::vector<Point2> vertices, double eps = Tolerances{}.geom);

  static ConvexPoly2 square(double half_extent);
  static ConvexPoly2 rectangle(double x0, double y0, double x1, double y1);

  /// Reorients to CCW and drops repeated/collinear vertices before validating.
  static ConvexPoly2 from_loop(std::vector<Point2> loop, double eps = Tolerances{}.geom);

  const std::vector<Point2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Point2& operator[](std::size_t i) const { return vertices_[i]; }
  const Point2& next(std::size_t i) const { return vertices_[(i + 1) % vertices_.size()]; }

  double area() const;
  double diameter() const;
  /// True if p is inside or within `eps` of the boundary.
  bool contains(const Point2& p, double eps = 0.0) const;

 private:
  std::vector<Point2> vertices_;
};

double signed_area(const std::vector<Point2>& loop);

struct Segment2 {
  Point2 a;
  Point2 b;

  double length() const { return (b - a).norm(); }
  Point2 at(double t) const { return a + t * (b - a); }
};

/// Where a chord endpoint lies on the polygon boundary.
struct BoundaryHit {
  Point2 point;
  std::size_t edge = 0;  // polygon edge (vertex edge -> edge+1)
  double t = 0.0;        // parameter along that edge, 0 at its start vertex
  bool at_vertex = false;
};

struct Chord {
  BoundaryHit entry;
  BoundaryHit exit;

  Segment2 segment() const { return {entry.point, exit.point}; }
};

/// Chord of `line` inside `poly`. Lines that miss, only touch a vertex, or run
/// along an edge (within eps) return nothing, as do chords shorter than eps.
std::optional<Chord> clip_chord(const Line2& line, const ConvexPoly2& poly,
                                const Tolerances& tol = {});

inline std::optional<Segment2> clip_line(const Line2& line, const ConvexPoly2& poly,
                                         const Tolerances& tol = {}) {
  auto chord = clip_chord(line, poly, tol);
  if (!chord) return std::nullopt;
  return chord->segment();
}

struct PolygonMetrics {
  double area = 0.0;
  Point2 centroid = Point2::Zero();
  bool degenerate = false;
};

/// Shoelace area and vertex-average centroid.
PolygonMetrics polygon_metrics(const ConvexPoly2& poly, const Tolerances& tol = {});

}  // namespace cpwlslice
