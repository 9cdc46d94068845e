#include "cpwlslice/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cpwlslice {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::optional<RegionStats> region_stats(const ConvexPoly2& poly, const Tolerances& tol) {
  const PolygonMetrics m = polygon_metrics(poly, tol);
  if (m.degenerate || poly.size() < 3) return std::nullopt;
  RegionStats s;
  s.area = m.area;
  s.n_vertices = poly.size();
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    for (std::size_t j = i + 1; j < poly.size(); ++j) {
      const double d = (poly[i] - poly[j]).norm();
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
  }
  double emin = std::numeric_limits<double>::infinity();
  double emax = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const double e = (poly.next(i) - poly[i]).norm();
    emin = std::min(emin, e);
    emax = std::max(emax, e);
  }
  s.ecc_vertex = dmax / dmin;
  s.ecc_edge = emax / emin;
  return s;
}

PartitionStats aggregate_stats(const std::vector<ConvexPoly2>& polys, const Tolerances& tol,
                               std::size_t histogram_bins) {
  PartitionStats out;
  std::vector<double> areas;
  std::vector<double> ecc_v;
  std::vector<double> ecc_e;
  double vertices = 0.0;
  for (const auto& poly : polys) {
    auto s = region_stats(poly, tol);
    if (!s) {
      ++out.degenerate_count;
      continue;
    }
    areas.push_back(s->area);
    ecc_v.push_back(s->ecc_vertex);
    ecc_e.push_back(s->ecc_edge);
    vertices += static_cast<double>(s->n_vertices);
  }
  out.region_count = areas.size();
  if (areas.empty()) return out;
  for (double a : areas) out.total_area += a;
  const double n = static_cast<double>(areas.size());
  out.avg_region_volume = out.total_area / n;
  out.avg_n_vertices = vertices / n;
  out.ecc_vertex_mean = mean(ecc_v);
  out.ecc_vertex_median = median(ecc_v);
  out.ecc_vertex_max = *std::max_element(ecc_v.begin(), ecc_v.end());
  out.ecc_edge_mean = mean(ecc_e);
  out.ecc_edge_median = median(ecc_e);
  out.ecc_edge_max = *std::max_element(ecc_e.begin(), ecc_e.end());

  if (histogram_bins > 0) {
    const double lo = std::log10(*std::min_element(areas.begin(), areas.end()));
    double hi = std::log10(*std::max_element(areas.begin(), areas.end()));
    if (hi <= lo) hi = lo + 1.0;
    auto& h = out.area_histogram;
    for (std::size_t b = 0; b <= histogram_bins; ++b) {
      h.edges.push_back(std::pow(10.0, lo + (hi - lo) * static_cast<double>(b) /
                                               static_cast<double>(histogram_bins)));
    }
    h.counts.assign(histogram_bins, 0);
    for (double a : areas) {
      auto bin = static_cast<std::size_t>((std::log10(a) - lo) / (hi - lo) *
                                          static_cast<double>(histogram_bins));
      ++h.counts[std::min(bin, histogram_bins - 1)];
    }
  }
  return out;
}

PartitionStats aggregate_stats(const Partition& partition, const Tolerances& tol,
                               std::size_t histogram_bins) {
  std::vector<ConvexPoly2> polys;
  polys.reserve(partition.regions.size());
  for (const auto& r : partition.regions) polys.push_back(r.poly);
  PartitionStats s = aggregate_stats(polys, tol, histogram_bins);
  s.dropped_area = partition.dropped_area;
  return s;
}

SummaryRow summary_row(const std::string& architecture, const CpwlNetwork& net,
                       const PartitionStats& stats) {
  return {architecture,           net.parameter_count(), stats.avg_region_volume,
          stats.avg_n_vertices,   stats.ecc_vertex_mean, stats.ecc_edge_mean,
          stats.region_count};
}

}  // namespace cpwlslice
