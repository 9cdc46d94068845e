#include "cpwlslice/regions_io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cpwlslice/error.hpp"

namespace cpwlslice {
namespace {

using nlohmann::json;

json point_json(const Point2& p) { return json::array({p.x(), p.y()}); }

Point2 parse_point(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error("expected a 2D point [u, v]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec parse_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<Point2> parse_points(const json& j) {
  std::vector<Point2> pts;
  for (const auto& p : j) pts.push_back(parse_point(p));
  return pts;
}

std::vector<Segment> decode_segments(const std::string& code) {
  std::vector<Segment> out;
  out.reserve(code.size());
  for (char ch : code) {
    if (ch >= '0' && ch <= '9') {
      out.push_back(static_cast<Segment>(ch - '0'));
    } else if (ch >= 'a' && ch <= 'z') {
      out.push_back(static_cast<Segment>(ch - 'a' + 10));
    } else {
      throw Error(std::string("invalid activation code character '") + ch + "'");
    }
  }
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// 32-bit FNV-1a over the activation code, used to pick a stable fill colour.
std::uint32_t fnv1a(const ActivationState& state) {
  std::uint32_t h = 2166136261u;
  for (const auto& layer : state.layers) {
    for (Segment s : layer) {
      h ^= s;
      h *= 16777619u;
    }
    h ^= 0xFFu;
    h *= 16777619u;
  }
  return h;
}

}  // namespace

Roi parse_roi(const json& doc) {
  try {
    if (doc.contains("T")) {
      const auto rows = doc.at("T");
      Eigen::Matrix<double, Eigen::Dynamic, 2> frame(static_cast<Eigen::Index>(rows.size()), 2);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const Point2 r = parse_point(rows[i]);
        frame.row(static_cast<Eigen::Index>(i)) = r.transpose();
      }
      return make_roi(std::move(frame), parse_vec(doc.at("c")),
                      ConvexPoly2::from_loop(parse_points(doc.at("domain"))));
    }
    RoiSpec spec;
    if (doc.contains("anchors")) {
      for (const auto& a : doc["anchors"]) spec.anchors.push_back(parse_vec(a));
    }
    if (doc.contains("center")) spec.center = parse_vec(doc["center"]);
    if (doc.contains("directions")) {
      for (const auto& d : doc["directions"]) spec.directions.push_back(parse_vec(d));
    }
    spec.half_extent = doc.value("half_extent", 1.0);
    if (doc.contains("polygon")) spec.polygon = parse_points(doc["polygon"]);
    return make_roi(spec);
  } catch (const json::exception& e) {
    throw RoiError(std::string("malformed ROI: ") + e.what());
  } catch (const GeometryError& e) {
    throw RoiError(std::string("malformed ROI domain: ") + e.what());
  }
}

Roi read_roi(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RoiError("cannot open ROI file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw RoiError("ROI file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_roi(doc);
}

json regions_to_json(const Partition& partition, const Roi& roi,
                     const std::vector<BoundarySegment>& boundary, const RegionsMeta& meta) {
  json doc;
  doc["schema"] = kRegionsSchema;

  json frame = json::array();
  for (Eigen::Index i = 0; i < roi.frame.rows(); ++i) {
    frame.push_back({roi.frame(i, 0), roi.frame(i, 1)});
  }
  json domain = json::array();
  for (const auto& v : roi.domain.vertices()) domain.push_back(point_json(v));
  doc["roi"] = {{"T", std::move(frame)},
                {"c", std::vector<double>(roi.offset.data(), roi.offset.data() + roi.offset.size())},
                {"domain", std::move(domain)}};

  json regions = json::array();
  for (const auto& r : partition.regions) {
    json verts = json::array();
    for (const auto& v : r.poly.vertices()) verts.push_back(point_json(v));
    json codes = json::array();
    for (const auto& layer : r.state.layers) codes.push_back(encode_segments(layer));
    json rows = json::array();
    for (Eigen::Index i = 0; i < r.affine.linear.rows(); ++i) {
      rows.push_back({r.affine.linear(i, 0), r.affine.linear(i, 1)});
    }
    regions.push_back({{"id", r.id},
                       {"parent", r.parent},
                       {"vertices_2d", std::move(verts)},
                       {"activation_code", std::move(codes)},
                       {"affine",
                        {{"A_hat", std::move(rows)},
                         {"b_hat", std::vector<double>(r.affine.offset.data(),
                                                       r.affine.offset.data() + r.affine.offset.size())}}}});
  }
  doc["regions"] = std::move(regions);

  json segs = json::array();
  for (const auto& s : boundary) {
    segs.push_back({{"region_id", s.region_id}, {"p0", point_json(s.segment.a)}, {"p1", point_json(s.segment.b)}});
  }
  doc["boundary"] = std::move(segs);

  json m{{"tool_version", kToolVersion},
         {"tolerances", {{"geom", meta.tol.geom}, {"line", meta.tol.line}, {"area", meta.tol.area}}},
         {"dropped_area", meta.dropped_area},
         {"layer_region_counts", meta.layer_region_counts}};
  if (!meta.timings.is_null()) m["timings"] = meta.timings;
  doc["meta"] = std::move(m);
  return doc;
}

std::string dump_json(const json& doc) { return doc.dump() + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  if (!out) throw Error("failed writing " + path.string());
}

void write_regions_json(const Partition& partition, const Roi& roi,
                        const std::vector<BoundarySegment>& boundary, const RegionsMeta& meta,
                        const std::filesystem::path& path) {
  write_text(path, dump_json(regions_to_json(partition, roi, boundary, meta)));
}

RegionsDocument parse_regions_json(const json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != kRegionsSchema) {
      throw Error("unsupported regions schema '" + doc["schema"].get<std::string>() + "'");
    }
    RegionsDocument out{parse_roi(doc.at("roi")), {}, {}, doc.value("meta", json::object())};
    for (const auto& r : doc.at("regions")) {
      Region region;
      region.id = r.at("id").get<int>();
      region.parent = r.at("parent").get<int>();
      region.poly = ConvexPoly2(parse_points(r.at("vertices_2d")));
      for (const auto& code : r.at("activation_code")) {
        region.state.layers.push_back(decode_segments(code.get<std::string>()));
      }
      const auto& rows = r.at("affine").at("A_hat");
      region.affine.linear.resize(static_cast<Eigen::Index>(rows.size()), 2);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        region.affine.linear.row(static_cast<Eigen::Index>(i)) = parse_point(rows[i]).transpose();
      }
      region.affine.offset = parse_vec(r.at("affine").at("b_hat"));
      out.regions.push_back(std::move(region));
    }
    for (const auto& s : doc.at("boundary")) {
      out.boundary.push_back({s.at("region_id").get<int>(), {parse_point(s.at("p0")), parse_point(s.at("p1"))}});
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed regions document: ") + e.what());
  }
}

RegionsDocument read_regions_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_regions_json(json::parse(in));
}

std::string render_svg(const Partition& partition, const Roi& roi,
                       const std::vector<BoundarySegment>& boundary, const SvgStyle& style) {
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  for (const auto& v : roi.domain.vertices()) {
    x0 = std::min(x0, v.x());
    x1 = std::max(x1, v.x());
    y0 = std::min(y0, v.y());
    y1 = std::max(y1, v.y());
  }
  const double scale = style.width_px / (x1 - x0);
  const double height = (y1 - y0) * scale;
  auto px = [&](const Point2& p) {
    std::ostringstream s;
    s << std::setprecision(10) << (p.x() - x0) * scale << ',' << (y1 - p.y()) * scale;
    return s.str();
  };

  std::ostringstream svg;
  svg << std::setprecision(10);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width_px << "\" height=\""
      << height << "\" viewBox=\"0 0 " << style.width_px << ' ' << height << "\">\n";
  svg << "<g id=\"regions\" stroke=\"" << (style.draw_edges ? "black" : "none")
      << "\" stroke-width=\"" << style.edge_width << "\" stroke-linejoin=\"round\">\n";
  for (const auto& r : partition.regions) {
    const std::uint32_t h = fnv1a(r.state);
    svg << "<polygon data-id=\"" << r.id << "\" points=\"";
    for (std::size_t i = 0; i < r.poly.size(); ++i) svg << (i ? " " : "") << px(r.poly[i]);
    svg << "\" fill=\"hsl(" << h % 360 << ',' << 45 + (h >> 9) % 40 << "%," << 55 + (h >> 17) % 30
        << "%)\" fill-opacity=\"" << style.fill_opacity << "\"/>\n";
  }
  svg << "</g>\n";
  if (!boundary.empty()) {
    svg << "<g id=\"decision-boundary\" stroke=\"#b00000\" stroke-width=\"" << style.boundary_width
        << "\" stroke-linecap=\"round\">\n";
    for (const auto& s : boundary) {
      const std::string a = px(s.segment.a);
      const std::string b = px(s.segment.b);
      const auto ca = a.find(',');
      const auto cb = b.find(',');
      svg << "<line x1=\"" << a.substr(0, ca) << "\" y1=\"" << a.substr(ca + 1) << "\" x2=\""
          << b.substr(0, cb) << "\" y2=\"" << b.substr(cb + 1) << "\"/>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_svg(const Partition& partition, const Roi& roi,
               const std::vector<BoundarySegment>& boundary, const std::filesystem::path& path,
               const SvgStyle& style) {
  write_text(path, render_svg(partition, roi, boundary, style));
}

std::string stats_csv(const PartitionStats& s) {
  std::ostringstream out;
  out << kStatsCsvHeader << '\n'
      << s.region_count << ',' << format_number(s.avg_region_volume) << ','
      << format_number(s.avg_n_vertices) << ',' << format_number(s.ecc_vertex_mean) << ','
      << format_number(s.ecc_edge_mean) << ',' << format_number(s.dropped_area) << '\n';
  return out.str();
}

void write_stats_csv(const PartitionStats& stats, const std::filesystem::path& path) {
  write_text(path, stats_csv(stats));
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "architecture,parameters,arv,avg_vertices,ecc_vertex,ecc_edge,region_count\n";
  for (const auto& r : rows) {
    out << r.architecture << ',' << r.parameters << ',' << format_number(r.avg_region_volume) << ','
        << format_number(r.avg_n_vertices) << ',' << format_number(r.ecc_vertex) << ','
        << format_number(r.ecc_edge) << ',' << r.region_count << '\n';
  }
  return out.str();
}

}  // namespace cpwlslice
