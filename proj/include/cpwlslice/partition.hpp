#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpwlslice/arrangement.hpp"
#include "cpwlslice/geometry.hpp"
#include "cpwlslice/network.hpp"

namespace cpwlslice {

/// Two-dimensional affine slice x(u) = frame * u + offset of the input space,
/// restricted to a convex domain in slice coordinates.
struct Roi {
  Eigen::Matrix<double, Eigen::Dynamic, 2> frame;  // S x 2, orthonormal columns
  Vec offset;                                      // S
  ConvexPoly2 domain;

  std::size_t input_dim() const { return static_cast<std::size_t>(offset.size()); }
  Vec lift(const Point2& u) const { return frame * u + offset; }
};

/// Either three anchor points (the first becomes the origin of the slice) or a
/// center with two spanning directions. The domain is the square
/// [-half_extent, half_extent]^2 unless `polygon` is given.
struct RoiSpec {
  std::vector<Vec> anchors;
  std::optional<Vec> center;
  std::vector<Vec> directions;
  double half_extent = 1.0;
  std::optional<std::vector<Point2>> polygon;
};

Roi make_roi(const RoiSpec& spec);

/// Validates an explicit frame/offset/domain triple.
Roi make_roi(Eigen::Matrix<double, Eigen::Dynamic, 2> frame, Vec offset, ConvexPoly2 domain);

struct Region {
  int id = 0;
  int parent = -1;
  ConvexPoly2 poly;
  ActivationState state;  // layers 0..depth-1
  SliceAffine affine;     // output of the deepest processed layer
};

struct BoundarySegment {
  int region_id = 0;
  Segment2 segment;
};

/// Snapshot of one layer's partition, kept when PartitionOptions::keep_layers.
struct LayerSnapshot {
  std::vector<int> ids;
  std::vector<int> parents;
  std::vector<ConvexPoly2> polys;
};

struct Partition {
  std::vector<Region> regions;
  std::vector<std::size_t> layer_region_counts;
  std::vector<LayerSnapshot> layers;
  std::size_t depth = 0;  // number of layers processed
  double domain_area = 0.0;
  double dropped_area = 0.0;
  std::size_t dropped_faces = 0;
  std::size_t constant_lines = 0;  // lines dropped because the unit is constant on a region
  std::size_t missed_lines = 0;    // lines dropped because they miss their region
  std::size_t duplicate_lines = 0;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

struct PartitionOptions {
  std::optional<std::size_t> up_to_layer;  // number of layers to process
  std::size_t threads = 1;
  Tolerances tol;
  bool keep_layers = false;
  double max_dropped_fraction = 1e-6;
};

/// Back-projects every unit/breakpoint hyperplane of `layer_index` into the
/// region through the region's slice affine. `pre` receives the layer's
/// pre-activation map when non-null.
std::vector<Line2> project_hyperplanes(const CpwlNetwork& net, std::size_t layer_index,
                                       const Region& region, const Tolerances& tol = {},
                                       SliceAffine* pre = nullptr,
                                       std::size_t* constant_lines = nullptr,
                                       std::size_t* missed_lines = nullptr);

struct SubdivideResult {
  std::vector<Region> children;  // canonical centroid order; ids unassigned
  double dropped_area = 0.0;
  std::size_t dropped_faces = 0;
  std::size_t duplicate_lines = 0;
};

/// Splits `region` by the (pre-clipped) lines of layer `layer_index` and
/// advances each child's state and affine map through that layer.
SubdivideResult subdivide(const Region& region, const std::vector<Line2>& lines,
                          const SliceAffine& pre, const CpwlNetwork& net,
                          std::size_t layer_index, const Tolerances& tol = {});

/// Root region: the whole domain with the slice parametrization itself as
/// its affine map (frame, offset).
Region root_region(const Roi& roi);

Partition compute_partition(const CpwlNetwork& net, const Roi& roi,
                            const PartitionOptions& options = {});

/// Zero level set of the output (single-output head) or of output_i - output_j,
/// clipped to each region.
std::vector<BoundarySegment> decision_boundary(
    const Partition& partition, const CpwlNetwork& net,
    std::optional<std::pair<std::size_t, std::size_t>> classes = std::nullopt,
    const Tolerances& tol = {});

/// Length-weighted boundary samples lifted to input space (one column per sample).
Mat sample_boundary(const std::vector<BoundarySegment>& segments, const Roi& roi,
                    std::size_t count, unsigned long long seed);

/// Same, in slice coordinates.
std::vector<Point2> sample_boundary_2d(const std::vector<BoundarySegment>& segments,
                                       std::size_t count, unsigned long long seed);

struct Adjacency {
  int first = 0;   // region index
  int second = 0;  // region index
  Segment2 shared;
};

/// Pairs of regions sharing a boundary piece of positive length.
std::vector<Adjacency> region_adjacency(const Partition& partition, double eps = 1e-9);

}  // namespace cpwlslice
