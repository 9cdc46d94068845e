#pragma once

#include <cstddef>
#include <vector>

#include "cpwlslice/geometry.hpp"

namespace cpwlslice {

inline constexpr int kBoundaryLabel = -1;

struct GraphEdge {
  int a = 0;
  int b = 0;
  int label = kBoundaryLabel;  // index into ArrangementGraph::lines, or kBoundaryLabel
};

/// Planar graph of a convex polygon cut by lines. Boundary edges are listed in
/// counter-clockwise order and carry kBoundaryLabel.
struct ArrangementGraph {
  std::vector<Point2> nodes;
  std::vector<GraphEdge> edges;
  std::vector<Line2> lines;               // deduplicated, clipped-to-polygon lines
  std::vector<std::vector<int>> incident;  // node -> incident edge ids
  std::size_t duplicate_lines = 0;         // merged into an earlier line
  std::size_t missed_lines = 0;            // did not cut the polygon

  std::size_t boundary_edge_count() const;
  int other_end(int edge, int node) const {
    return edges[edge].a == node ? edges[edge].b : edges[edge].a;
  }
};

/// Nodes are the line/line intersections inside the polygon, line/boundary
/// crossings and polygon corners. Each line's nodes are sorted along the line
/// and chained; boundary edges are split at crossings. Coincident lines are
/// merged (provenance concatenated) and counted in duplicate_lines.
ArrangementGraph build_arrangement(const ConvexPoly2& poly, const std::vector<Line2>& lines,
                                   const Tolerances& tol = {});

struct Face {
  std::vector<int> cycle;  // node ids, counter-clockwise
  ConvexPoly2 polygon;     // collinear nodes removed; empty when degenerate
  double area = 0.0;       // signed area of the node cycle
  bool degenerate = false;
};

/// Traversal bookkeeping from find_cycles, per directed edge.
struct CycleTraversal {
  std::vector<Face> faces;
  // uses[2*e] counts traversals a->b of edge e, uses[2*e+1] counts b->a.
  std::vector<int> uses;
};

/// Enumerates the bounded faces with a queue-driven search seeded by a
/// boundary edge. Each popped directed edge is closed into a cycle by a path
/// search from its head back to its tail over the directed edges that remain;
/// interior edges found on the path enqueue their reverse direction, and
/// boundary edges are retired in both directions. The path search expands only
/// the embedding successor at each node (next edge clockwise from the arrival
/// direction), so each cycle is exactly the face to the left of the popped edge.
///
/// Faces are returned sorted by centroid (x, then y).
CycleTraversal trace_cycles(const ArrangementGraph& graph, const Tolerances& tol = {});

inline std::vector<Face> find_cycles(const ArrangementGraph& graph, const Tolerances& tol = {}) {
  return trace_cycles(graph, tol).faces;
}

}  // namespace cpwlslice
