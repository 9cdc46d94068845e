#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpwlslice/partition.hpp"
#include "cpwlslice/stats.hpp"

namespace cpwlslice {

inline constexpr char kRegionsSchema[] = "regions/1";
inline constexpr char kToolVersion[] = "cpwlslice 1.0.0";

/// ROI file: {"anchors": [a0, a1, a2]} or {"center": c, "directions": [d1, d2]},
/// plus optional "half_extent" (default 1) and "polygon" ([[u, v], ...]).
/// An explicit {"T": S x 2 rows, "c": [...], "domain": [[u, v], ...]} is also
/// accepted, which is the "roi" block of a regions document.
Roi parse_roi(const nlohmann::json& doc);
Roi read_roi(const std::filesystem::path& path);

struct RegionsMeta {
  Tolerances tol;
  double dropped_area = 0.0;
  std::vector<std::size_t> layer_region_counts;
  nlohmann::json timings;  // omitted from output when null
};

nlohmann::json regions_to_json(const Partition& partition, const Roi& roi,
                               const std::vector<BoundarySegment>& boundary,
                               const RegionsMeta& meta);

/// Compact single-line dump with a trailing newline.
std::string dump_json(const nlohmann::json& doc);

void write_regions_json(const Partition& partition, const Roi& roi,
                        const std::vector<BoundarySegment>& boundary, const RegionsMeta& meta,
                        const std::filesystem::path& path);

struct RegionsDocument {
  Roi roi;
  std::vector<Region> regions;
  std::vector<BoundarySegment> boundary;
  nlohmann::json meta;
};

RegionsDocument parse_regions_json(const nlohmann::json& doc);
RegionsDocument read_regions_json(const std::filesystem::path& path);

struct SvgStyle {
  double width_px = 800.0;
  double edge_width = 0.6;
  double boundary_width = 2.0;
  double fill_opacity = 0.85;
  bool draw_edges = true;
};

std::string render_svg(const Partition& partition, const Roi& roi,
                       const std::vector<BoundarySegment>& boundary, const SvgStyle& style = {});
void write_svg(const Partition& partition, const Roi& roi,
               const std::vector<BoundarySegment>& boundary, const std::filesystem::path& path,
               const SvgStyle& style = {});

inline constexpr char kStatsCsvHeader[] =
    "region_count,arv,avg_vertices,ecc_vertex_mean,ecc_edge_mean,dropped_area";

std::string stats_csv(const PartitionStats& stats);
void write_stats_csv(const PartitionStats& stats, const std::filesystem::path& path);

std::string summary_csv(const std::vector<SummaryRow>& rows);

/// Writes `contents` to `path`, throwing Error when the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& contents);

}  // namespace cpwlslice
