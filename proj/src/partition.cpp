#include "cpwlslice/partition.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cpwlslice/error.hpp"
#include "parallel.hpp"

namespace cpwlslice {

Region root_region(const Roi& roi) {
  Region root;
  root.id = 0;
  root.parent = -1;
  root.poly = roi.domain;
  root.affine.linear = roi.frame;
  root.affine.offset = roi.offset;
  return root;
}

std::vector<Line2> project_hyperplanes(const CpwlNetwork& net, std::size_t layer_index,
                                       const Region& region, const Tolerances& tol,
                                       SliceAffine* pre_out, std::size_t* constant_lines,
                                       std::size_t* missed_lines) {
  SliceAffine pre;
  try {
    pre = project_preactivation(region.affine, net.lowered(layer_index));
  } catch (const DimensionError& e) {
    throw DimensionError(e.what(), layer_index);
  }
  const Activation& act = net.layer(layer_index).activation;
  std::vector<Line2> lines;
  for (Eigen::Index i = 0; i < pre.linear.rows(); ++i) {
    const Point2 w = pre.linear.row(i).transpose();
    for (std::size_t k = 0; k < act.breakpoints().size(); ++k) {
      const Provenance prov{static_cast<int>(layer_index), static_cast<int>(i), static_cast<int>(k)};
      auto line = Line2::make(w, pre.offset[i] - act.breakpoints()[k], prov, tol.line);
      if (!line) {
        if (constant_lines) ++*constant_lines;
        continue;
      }
      if (!clip_chord(*line, region.poly, tol)) {
        if (missed_lines) ++*missed_lines;
        continue;
      }
      lines.push_back(std::move(*line));
    }
  }
  if (pre_out) *pre_out = std::move(pre);
  return lines;
}

namespace {

Region make_child(const Region& parent, ConvexPoly2 poly, const SliceAffine& pre,
                  const Activation& act) {
  Region child;
  child.parent = parent.id;
  const Point2 centroid = polygon_metrics(poly).centroid;
  const Vec z = pre(centroid);
  std::vector<Segment> segments(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    segments[static_cast<std::size_t>(i)] = static_cast<Segment>(act.segment_of(z[i]));
  }
  child.affine = apply_segments(pre, act, segments);
  child.state = parent.state;
  child.state.layers.push_back(std::move(segments));
  child.poly = std::move(poly);
  return child;
}

}  // namespace

SubdivideResult subdivide(const Region& region, const std::vector<Line2>& lines,
                          const SliceAffine& pre, const CpwlNetwork& net,
                          std::size_t layer_index, const Tolerances& tol) {
  const Activation& act = net.layer(layer_index).activation;
  SubdivideResult result;
  if (lines.empty()) {
    result.children.push_back(make_child(region, region.poly, pre, act));
    return result;
  }
  const ArrangementGraph graph = build_arrangement(region.poly, lines, tol);
  result.duplicate_lines = graph.duplicate_lines;
  std::vector<Face> faces = find_cycles(graph, tol);
  for (auto& face : faces) {
    if (face.degenerate) {
      result.dropped_area += std::max(face.area, 0.0);
      ++result.dropped_faces;
      continue;
    }
    result.children.push_back(make_child(region, std::move(face.polygon), pre, act));
  }
  return result;
}

Partition compute_partition(const CpwlNetwork& net, const Roi& roi, const PartitionOptions& options) {
  if (roi.input_dim() != net.input_dim()) {
    throw DimensionError("ROI lives in dimension " + std::to_string(roi.input_dim()) +
                         " but the network expects " + std::to_string(net.input_dim()));
  }
  const std::size_t depth = options.up_to_layer.value_or(net.num_layers());
  if (depth > net.num_layers()) {
    throw Error("up_to_layer " + std::to_string(depth) + " exceeds network depth " +
                std::to_string(net.num_layers()));
  }

  Partition partition;
  partition.domain_area = roi.domain.area();
  partition.regions.push_back(root_region(roi));

  for (std::size_t layer = 0; layer < depth; ++layer) {
    const auto& parents = partition.regions;
    struct Work {
      SubdivideResult result;
      std::size_t constant_lines = 0;
      std::size_t missed_lines = 0;
      std::string error;
    };
    std::vector<Work> work(parents.size());
    detail::parallel_for(parents.size(), options.threads, [&](std::size_t r) {
      Work& w = work[r];
      SliceAffine pre;
      const auto lines = project_hyperplanes(net, layer, parents[r], options.tol, &pre,
                                             &w.constant_lines, &w.missed_lines);
      try {
        w.result = subdivide(parents[r], lines, pre, net, layer, options.tol);
      } catch (const GeometryError& e) {
        // Keep the region whole so the partition still tiles the domain.
        w.error = "layer " + std::to_string(layer) + ", region " + std::to_string(parents[r].id) +
                  ": " + e.what();
        w.result = subdivide(parents[r], {}, pre, net, layer, options.tol);
      }
    });

    std::vector<Region> next;
    for (auto& w : work) {
      partition.constant_lines += w.constant_lines;
      partition.missed_lines += w.missed_lines;
      partition.duplicate_lines += w.result.duplicate_lines;
      partition.dropped_area += w.result.dropped_area;
      partition.dropped_faces += w.result.dropped_faces;
      if (!w.error.empty()) partition.errors.push_back(std::move(w.error));
      for (auto& child : w.result.children) {
        child.id = static_cast<int>(next.size());
        next.push_back(std::move(child));
      }
    }
    partition.regions = std::move(next);
    partition.layer_region_counts.push_back(partition.regions.size());
    partition.depth = layer + 1;
    if (options.keep_layers) {
      LayerSnapshot snap;
      for (const auto& r : partition.regions) {
        snap.ids.push_back(r.id);
        snap.parents.push_back(r.parent);
        snap.polys.push_back(r.poly);
      }
      partition.layers.push_back(std::move(snap));
    }
  }

  if (partition.dropped_area > options.max_dropped_fraction * partition.domain_area) {
    partition.errors.push_back("dropped sliver area " + std::to_string(partition.dropped_area) +
                               " exceeds " + std::to_string(options.max_dropped_fraction) +
                               " of the domain");
  }
  return partition;
}

std::vector<BoundarySegment> decision_boundary(
    const Partition& partition, const CpwlNetwork& net,
    std::optional<std::pair<std::size_t, std::size_t>> classes, const Tolerances& tol) {
  if (partition.depth != net.num_layers()) {
    throw Error("decision boundary needs a partition through all " +
                std::to_string(net.num_layers()) + " layers (got " +
                std::to_string(partition.depth) + ")");
  }
  const std::size_t outputs = net.output_dim();
  if (outputs > 1 && !classes) {
    throw Error("network has " + std::to_string(outputs) +
                " outputs; a class pair is required for the decision boundary");
  }
  if (classes) {
    if (outputs < 2) throw Error("a class pair needs a multi-output head");
    if (classes->first >= outputs || classes->second >= outputs || classes->first == classes->second) {
      throw Error("invalid class pair");
    }
  }
  std::vector<BoundarySegment> segments;
  for (const auto& region : partition.regions) {
    Point2 w;
    double b;
    if (classes) {
      const auto i = static_cast<Eigen::Index>(classes->first);
      const auto j = static_cast<Eigen::Index>(classes->second);
      w = (region.affine.linear.row(i) - region.affine.linear.row(j)).transpose();
      b = region.affine.offset[i] - region.affine.offset[j];
    } else {
      w = region.affine.linear.row(0).transpose();
      b = region.affine.offset[0];
    }
    auto line = Line2::make(w, b, {}, tol.line);
    if (!line) continue;
    if (auto seg = clip_line(*line, region.poly, tol)) {
      segments.push_back({region.id, *seg});
    }
  }
  return segments;
}

std::vector<Point2> sample_boundary_2d(const std::vector<BoundarySegment>& segments,
                                       std::size_t count, unsigned long long seed) {
  std::vector<double> lengths;
  lengths.reserve(segments.size());
  double total = 0.0;
  for (const auto& s : segments) {
    lengths.push_back(s.segment.length());
    total += lengths.back();
  }
  if (segments.empty() || !(total > 0.0)) throw Error("cannot sample an empty decision boundary");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(lengths.begin(), lengths.end());
  std::uniform_real_distribution<double> position(0.0, 1.0);
  std::vector<Point2> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto& seg = segments[pick(rng)].segment;
    out.push_back(seg.at(position(rng)));
  }
  return out;
}

Mat sample_boundary(const std::vector<BoundarySegment>& segments, const Roi& roi,
                    std::size_t count, unsigned long long seed) {
  const auto points = sample_boundary_2d(segments, count, seed);
  Mat out(static_cast<Eigen::Index>(roi.input_dim()), static_cast<Eigen::Index>(count));
  for (std::size_t k = 0; k < points.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = roi.lift(points[k]);
  }
  return out;
}

std::vector<Adjacency> region_adjacency(const Partition& partition, double eps) {
  const auto& regions = partition.regions;
  struct Box {
    double x0, x1, y0, y1;
  };
  std::vector<Box> boxes;
  boxes.reserve(regions.size());
  for (const auto& r : regions) {
    Box b{INFINITY, -INFINITY, INFINITY, -INFINITY};
    for (const auto& v : r.poly.vertices()) {
      b.x0 = std::min(b.x0, v.x());
      b.x1 = std::max(b.x1, v.x());
      b.y0 = std::min(b.y0, v.y());
      b.y1 = std::max(b.y1, v.y());
    }
    boxes.push_back(b);
  }
  std::vector<int> order(regions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return boxes[a].x0 < boxes[b].x0; });

  std::vector<Adjacency> out;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const int a = order[oi];
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const int b = order[oj];
      if (boxes[b].x0 > boxes[a].x1 + eps) break;
      if (boxes[b].y0 > boxes[a].y1 + eps || boxes[a].y0 > boxes[b].y1 + eps) continue;
      const auto& pa = regions[a].poly;
      const auto& pb = regions[b].poly;
      for (std::size_t i = 0; i < pa.size(); ++i) {
        const Point2 p0 = pa[i];
        const Point2 p1 = pa.next(i);
        const Point2 d = (p1 - p0).normalized();
        const Point2 n{-d.y(), d.x()};
        for (std::size_t j = 0; j < pb.size(); ++j) {
          const Point2 q0 = pb[j];
          const Point2 q1 = pb.next(j);
          if (std::abs(n.dot(q0 - p0)) > eps || std::abs(n.dot(q1 - p0)) > eps) continue;
          if (d.dot(q1 - q0) >= 0.0) continue;  // neighbours traverse a shared edge oppositely
          const double lo = std::max(0.0, d.dot(q1 - p0));
          const double hi = std::min((p1 - p0).norm(), d.dot(q0 - p0));
          if (hi - lo <= eps) continue;
          out.push_back({a, b, {p0 + lo * d, p0 + hi * d}});
        }
      }
    }
  }
  return out;
}

}  // namespace cpwlslice
