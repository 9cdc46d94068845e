#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cpwlslice/geometry.hpp"
#include "cpwlslice/partition.hpp"

namespace cpwlslice {

struct RegionStats {
  double area = 0.0;
  std::size_t n_vertices = 0;
  double ecc_vertex = 1.0;  // max / min pairwise vertex distance
  double ecc_edge = 1.0;    // longest / shortest edge
};

/// Nothing for degenerate polygons (area below tol.area).
std::optional<RegionStats> region_stats(const ConvexPoly2& poly, const Tolerances& tol = {});

struct AreaHistogram {
  std::vector<double> edges;  // log-spaced, size bins+1
  std::vector<std::size_t> counts;
};

struct PartitionStats {
  std::size_t region_count = 0;  // included (non-degenerate) regions
  std::size_t degenerate_count = 0;
  double total_area = 0.0;
  double avg_region_volume = 0.0;
  double avg_n_vertices = 0.0;
  double ecc_vertex_mean = 0.0;
  double ecc_vertex_median = 0.0;
  double ecc_vertex_max = 0.0;
  double ecc_edge_mean = 0.0;
  double ecc_edge_median = 0.0;
  double ecc_edge_max = 0.0;
  double dropped_area = 0.0;
  AreaHistogram area_histogram;
};

PartitionStats aggregate_stats(const std::vector<ConvexPoly2>& polys, const Tolerances& tol = {},
                               std::size_t histogram_bins = 20);
PartitionStats aggregate_stats(const Partition& partition, const Tolerances& tol = {},
                               std::size_t histogram_bins = 20);

/// Architecture-comparison row: label, parameter count, ARV, mean vertices,
/// eccentricity, region count.
struct SummaryRow {
  std::string architecture;
  std::size_t parameters = 0;
  double avg_region_volume = 0.0;
  double avg_n_vertices = 0.0;
  double ecc_vertex = 0.0;
  double ecc_edge = 0.0;
  std::size_t region_count = 0;
};

SummaryRow summary_row(const std::string& architecture, const CpwlNetwork& net,
                       const PartitionStats& stats);

}  // namespace cpwlslice
