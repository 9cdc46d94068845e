#include "cpwlslice/arrangement.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <unordered_map>

#include "cpwlslice/error.hpp"

namespace cpwlslice {
namespace {

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Node store that merges points closer than `radius`.
class NodeIndex {
 public:
  NodeIndex(std::vector<Point2>& nodes, double radius) : nodes_(nodes), radius_(radius) {}

  int find_or_add(const Point2& p) {
    const auto [cx, cy] = cell(p);
    int best = -1;
    double best_dist = radius_;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid_.find(key(cx + dx, cy + dy));
        if (it == grid_.end()) continue;
        for (int id : it->second) {
          const double d = (nodes_[id] - p).norm();
          if (d <= best_dist) {
            best_dist = d;
            best = id;
          }
        }
      }
    }
    if (best >= 0) return best;
    return add(p);
  }

  int add(const Point2& p) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(p);
    const auto [cx, cy] = cell(p);
    grid_[key(cx, cy)].push_back(id);
    return id;
  }

 private:
  std::pair<std::int64_t, std::int64_t> cell(const Point2& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / radius_)),
            static_cast<std::int64_t>(std::floor(p.y() / radius_))};
  }
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return static_cast<std::uint64_t>(x) * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(y);
  }

  std::vector<Point2>& nodes_;
  double radius_;
  std::unordered_map<std::uint64_t, std::vector<int>> grid_;
};

struct Stop {
  double t;
  int node;
};

void sort_stops(std::vector<Stop>& stops) {
  std::sort(stops.begin(), stops.end(), [](const Stop& x, const Stop& y) {
    return x.t < y.t || (x.t == y.t && x.node < y.node);
  });
}

bool same_line(const Line2& x, const Line2& y, double angle_eps, double offset_eps) {
  const bool forward = (x.normal - y.normal).norm() <= angle_eps &&
                       std::abs(x.offset - y.offset) <= offset_eps;
  const bool backward = (x.normal + y.normal).norm() <= angle_eps &&
                        std::abs(x.offset + y.offset) <= offset_eps;
  return forward || backward;
}

}  // namespace

std::size_t ArrangementGraph::boundary_edge_count() const {
  return static_cast<std::size_t>(std::count_if(
      edges.begin(), edges.end(), [](const GraphEdge& e) { return e.label == kBoundaryLabel; }));
}

ArrangementGraph build_arrangement(const ConvexPoly2& poly, const std::vector<Line2>& lines,
                                   const Tolerances& tol) {
  ArrangementGraph g;
  double scale = 1.0;
  for (const auto& v : poly.vertices()) scale = std::max({scale, std::abs(v.x()), std::abs(v.y())});
  const double eps = tol.geom * scale;

  // Coincident lines collapse to the first occurrence.
  std::vector<Line2> unique;
  for (const auto& line : lines) {
    auto it = std::find_if(unique.begin(), unique.end(),
                           [&](const Line2& u) { return same_line(u, line, tol.geom, eps); });
    if (it != unique.end()) {
      it->provenance.insert(it->provenance.end(), line.provenance.begin(), line.provenance.end());
      ++g.duplicate_lines;
    } else {
      unique.push_back(line);
    }
  }

  NodeIndex index(g.nodes, eps);
  const std::size_t corners = poly.size();
  std::vector<std::vector<Stop>> boundary(corners);
  for (std::size_t k = 0; k < corners; ++k) boundary[k].push_back({0.0, index.add(poly[k])});

  struct Cut {
    Chord chord;
    double t0;
    double t1;
    std::vector<Stop> stops;
  };
  std::vector<Cut> cuts;
  for (auto& line : unique) {
    auto chord = clip_chord(line, poly, tol);
    if (!chord) {
      ++g.missed_lines;
      continue;
    }
    const Point2 d = line.direction();
    Cut cut{*chord, d.dot(chord->entry.point), d.dot(chord->exit.point), {}};
    for (const BoundaryHit* hit : {&chord->entry, &chord->exit}) {
      const int node = hit->at_vertex ? static_cast<int>(hit->edge) : index.find_or_add(hit->point);
      if (!hit->at_vertex) boundary[hit->edge].push_back({hit->t, node});
      cut.stops.push_back({d.dot(g.nodes[node]), node});
    }
    g.lines.push_back(std::move(line));
    cuts.push_back(std::move(cut));
  }

  // Pairwise intersections inside both chords (with eps slack at the ends).
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const Line2& li = g.lines[i];
    for (std::size_t j = i + 1; j < cuts.size(); ++j) {
      const Line2& lj = g.lines[j];
      const double det = cross(li.normal, lj.normal);
      if (std::abs(det) <= tol.geom) continue;
      const Point2 p{(-li.offset * lj.normal.y() + lj.offset * li.normal.y()) / det,
                     (-lj.offset * li.normal.x() + li.offset * lj.normal.x()) / det};
      const double ti = li.direction().dot(p);
      const double tj = lj.direction().dot(p);
      if (ti < cuts[i].t0 - eps || ti > cuts[i].t1 + eps) continue;
      if (tj < cuts[j].t0 - eps || tj > cuts[j].t1 + eps) continue;
      const int node = index.find_or_add(p);
      cuts[i].stops.push_back({li.direction().dot(g.nodes[node]), node});
      cuts[j].stops.push_back({lj.direction().dot(g.nodes[node]), node});
    }
  }

  std::unordered_map<std::uint64_t, int> seen;
  auto add_edge = [&](int a, int b, int label) {
    if (a == b) return;
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    if (!seen.emplace(lo << 32 | hi, static_cast<int>(g.edges.size())).second) return;
    g.edges.push_back({a, b, label});
  };

  // Boundary first, counter-clockwise, so edge 0 is always a boundary edge.
  for (std::size_t k = 0; k < corners; ++k) {
    auto& stops = boundary[k];
    stops.push_back({1.0, static_cast<int>((k + 1) % corners)});
    sort_stops(stops);
    for (std::size_t s = 1; s < stops.size(); ++s) {
      add_edge(stops[s - 1].node, stops[s].node, kBoundaryLabel);
    }
  }
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    auto& stops = cuts[i].stops;
    sort_stops(stops);
    for (std::size_t s = 1; s < stops.size(); ++s) {
      add_edge(stops[s - 1].node, stops[s].node, static_cast<int>(i));
    }
  }

  g.incident.assign(g.nodes.size(), {});
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    g.incident[g.edges[e].a].push_back(static_cast<int>(e));
    g.incident[g.edges[e].b].push_back(static_cast<int>(e));
  }
  return g;
}

namespace {

/// Directed view: half-edge h = 2e runs a->b, h = 2e+1 runs b->a.
class HalfEdges {
 public:
  explicit HalfEdges(const ArrangementGraph& g) : g_(g), position_(2 * g.edges.size()) {
    outgoing_.resize(g.nodes.size());
    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
      auto& out = outgoing_[n];
      for (int e : g.incident[n]) out.push_back(g.edges[e].a == static_cast<int>(n) ? 2 * e : 2 * e + 1);
      std::vector<double> angle(out.size());
      for (std::size_t k = 0; k < out.size(); ++k) {
        const Point2 d = g.nodes[head(out[k])] - g.nodes[n];
        angle[k] = std::atan2(d.y(), d.x());
      }
      std::vector<std::size_t> order(out.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return angle[x] < angle[y] || (angle[x] == angle[y] && out[x] < out[y]);
      });
      std::vector<int> sorted;
      for (std::size_t k : order) sorted.push_back(out[k]);
      out = std::move(sorted);
      for (std::size_t k = 0; k < out.size(); ++k) position_[out[k]] = static_cast<int>(k);
    }
  }

  int tail(int h) const { return h % 2 == 0 ? g_.edges[h / 2].a : g_.edges[h / 2].b; }
  int head(int h) const { return h % 2 == 0 ? g_.edges[h / 2].b : g_.edges[h / 2].a; }
  static int twin(int h) { return h ^ 1; }
  bool boundary(int h) const { return g_.edges[h / 2].label == kBoundaryLabel; }

  /// Next half-edge around the face on the left of h: at h's head, the first
  /// outgoing edge clockwise from the way back.
  int successor(int h) const {
    const auto& out = outgoing_[head(h)];
    const int back = position_[twin(h)];
    return out[(back + out.size() - 1) % out.size()];
  }

 private:
  const ArrangementGraph& g_;
  std::vector<std::vector<int>> outgoing_;
  std::vector<int> position_;
};

}  // namespace

CycleTraversal trace_cycles(const ArrangementGraph& graph, const Tolerances& tol) {
  CycleTraversal out;
  const std::size_t half_count = 2 * graph.edges.size();
  out.uses.assign(half_count, 0);
  if (graph.edges.empty()) throw GeometryError("arrangement has no edges");

  const HalfEdges half(graph);
  // Boundary edges are stored counter-clockwise, so only their a->b direction
  // borders a bounded face.
  std::vector<char> available(half_count, 1);
  int seed = -1;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    if (graph.edges[e].label == kBoundaryLabel) {
      available[2 * e + 1] = 0;
      if (seed < 0) seed = static_cast<int>(2 * e);
    }
  }
  if (seed < 0) throw GeometryError("arrangement has no boundary edge");

  std::deque<int> queue{seed};
  while (!queue.empty()) {
    const int closing = queue.front();
    queue.pop_front();
    if (!available[closing]) continue;
    available[closing] = 0;
    ++out.uses[closing];

    // Path from the head of `closing` back to its tail.
    std::vector<int> cycle_edges{closing};
    for (int h = half.successor(closing); h != closing; h = half.successor(h)) {
      if (!available[h] || cycle_edges.size() > half_count) {
        throw GeometryError("face search from node " + std::to_string(half.head(closing)) +
                            " cannot reach node " + std::to_string(half.tail(closing)));
      }
      available[h] = 0;
      ++out.uses[h];
      cycle_edges.push_back(h);
    }
    for (int h : cycle_edges) {
      if (!half.boundary(h) && available[HalfEdges::twin(h)]) queue.push_back(HalfEdges::twin(h));
    }

    Face face;
    std::vector<Point2> loop;
    for (int h : cycle_edges) {
      face.cycle.push_back(half.tail(h));
      loop.push_back(graph.nodes[half.tail(h)]);
    }
    face.area = signed_area(loop);
    if (face.area < -tol.area) {
      throw GeometryError("face search produced a clockwise cycle");
    }
    face.degenerate = !(face.area >= tol.area);
    if (!face.degenerate) {
      try {
        face.polygon = ConvexPoly2::from_loop(std::move(loop), tol.geom);
      } catch (const GeometryError&) {
        face.degenerate = true;
      }
    }
    out.faces.push_back(std::move(face));
  }

  for (std::size_t h = 0; h < half_count; ++h) {
    if (available[h]) {
      throw GeometryError("arrangement is disconnected: edge " + std::to_string(h / 2) +
                          " was never reached");
    }
  }

  auto centroid = [&](const Face& f) {
    Point2 c = Point2::Zero();
    for (int n : f.cycle) c += graph.nodes[n];
    return Point2(c / static_cast<double>(f.cycle.size()));
  };
  std::vector<Point2> keys;
  std::vector<std::size_t> order(out.faces.size());
  std::iota(order.begin(), order.end(), 0);
  for (const auto& f : out.faces) keys.push_back(centroid(f));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return keys[x].x() < keys[y].x() || (keys[x].x() == keys[y].x() && keys[x].y() < keys[y].y());
  });
  std::vector<Face> sorted;
  sorted.reserve(order.size());
  for (std::size_t k : order) sorted.push_back(std::move(out.faces[k]));
  out.faces = std::move(sorted);
  return out;
}

}  // namespace cpwlslice
