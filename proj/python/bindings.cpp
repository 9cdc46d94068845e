#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cpwlslice/cpwlslice.hpp"

namespace py = pybind11;
using namespace cpwlslice;

namespace {

using ClassPair = std::optional<std::pair<std::size_t, std::size_t>>;

Eigen::MatrixX2d vertices_of(const ConvexPoly2& poly) {
  Eigen::MatrixX2d v(static_cast<Eigen::Index>(poly.size()), 2);
  for (std::size_t i = 0; i < poly.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = poly[i].transpose();
  return v;
}

std::vector<Point2> points_of(const Eigen::MatrixX2d& m) {
  std::vector<Point2> pts;
  for (Eigen::Index i = 0; i < m.rows(); ++i) pts.emplace_back(m(i, 0), m(i, 1));
  return pts;
}

std::vector<std::string> activation_code(const Region& r) {
  std::vector<std::string> code;
  for (const auto& layer : r.state.layers) code.push_back(encode_segments(layer));
  return code;
}

py::dict stats_dict(const PartitionStats& s) {
  py::dict d;
  d["region_count"] = s.region_count;
  d["degenerate_count"] = s.degenerate_count;
  d["total_area"] = s.total_area;
  d["arv"] = s.avg_region_volume;
  d["avg_vertices"] = s.avg_n_vertices;
  d["ecc_vertex_mean"] = s.ecc_vertex_mean;
  d["ecc_vertex_median"] = s.ecc_vertex_median;
  d["ecc_vertex_max"] = s.ecc_vertex_max;
  d["ecc_edge_mean"] = s.ecc_edge_mean;
  d["ecc_edge_median"] = s.ecc_edge_median;
  d["ecc_edge_max"] = s.ecc_edge_max;
  d["dropped_area"] = s.dropped_area;
  d["histogram_edges"] = s.area_histogram.edges;
  d["histogram_counts"] = s.area_histogram.counts;
  return d;
}

LayerSpec dense_layer(Mat weight, Vec bias, Activation activation) {
  return LayerSpec{DenseLayer{std::move(weight), std::move(bias)}, std::move(activation)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact linear-region partitions of piecewise-linear networks on 2D input slices";
  m.attr("__version__") = "1.0.0";

  auto error = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<UnsupportedLayerError>(m, "UnsupportedLayerError", error.ptr());
  py::register_exception<RoiError>(m, "RoiError", error.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", error.ptr());

  py::class_<Activation>(m, "Activation")
      .def_static("identity", &Activation::identity)
      .def_static("relu", &Activation::relu)
      .def_static("leaky_relu", &Activation::leaky_relu, py::arg("alpha"))
      .def_static("abs", &Activation::abs)
      .def_static("pwl", &Activation::pwl, py::arg("breakpoints"), py::arg("slopes"),
                  py::arg("value_at_zero") = 0.0)
      .def_property_readonly("kind", [](const Activation& a) { return to_string(a.kind()); })
      .def_property_readonly("breakpoints", &Activation::breakpoints)
      .def_property_readonly("slopes", &Activation::slopes)
      .def("__call__", [](const Activation& a, double x) { return a(x); });

  py::class_<CpwlNetwork>(m, "Network")
      .def_static(
          "from_dense",
          [](const std::vector<std::tuple<Mat, Vec, Activation>>& layers) {
            std::vector<LayerSpec> specs;
            for (const auto& [w, b, act] : layers) specs.push_back(dense_layer(w, b, act));
            return CpwlNetwork(std::move(specs));
          },
          py::arg("layers"), "Builds an MLP from (weight, bias, activation) triples.")
      .def_property_readonly("input_dim", &CpwlNetwork::input_dim)
      .def_property_readonly("output_dim", &CpwlNetwork::output_dim)
      .def_property_readonly("num_layers", &CpwlNetwork::num_layers)
      .def_property_readonly("parameter_count", &CpwlNetwork::parameter_count)
      .def("forward", [](const CpwlNetwork& n, const Vec& x) { return Vec(forward(n, x).output()); },
           py::arg("x"))
      .def("structured_forward", &structured_forward, py::arg("x"))
      .def(
          "activation_state",
          [](const CpwlNetwork& n, const Vec& x) { return activation_state(n, x).layers; },
          py::arg("x"))
      .def(
          "verify",
          [](const CpwlNetwork& n, std::size_t samples, double tol, unsigned seed) {
            const auto r = verify_equivalence(n, samples, tol, seed);
            return py::make_tuple(r.passed, r.max_discrepancy);
          },
          py::arg("samples") = 3, py::arg("tol") = 1e-10, py::arg("seed") = 0,
          "Compares the lowered-matrix and direct forward passes; returns (passed, max discrepancy).");

  m.def("load_model", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("path"));
  m.def(
      "parse_model",
      [](const py::bytes& data) {
        const std::string s = data;
        return parse_model(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())).network;
      },
      py::arg("data"));
  m.def(
      "serialize_model",
      [](const CpwlNetwork& n) {
        const auto bytes = serialize_model(n);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("network"));
  m.def("write_model", [](const CpwlNetwork& n, const std::filesystem::path& p) { write_model(n, p); },
        py::arg("network"), py::arg("path"));

  py::class_<Roi>(m, "Roi")
      .def_readonly("frame", &Roi::frame)
      .def_readonly("offset", &Roi::offset)
      .def_property_readonly("domain", [](const Roi& r) { return vertices_of(r.domain); })
      .def_property_readonly("area", [](const Roi& r) { return r.domain.area(); })
      .def("lift", [](const Roi& r, const Eigen::Vector2d& u) { return Vec(r.lift(u)); }, py::arg("u"));

  m.def(
      "make_roi",
      [](std::optional<std::vector<Vec>> anchors, std::optional<Vec> center,
         std::optional<std::vector<Vec>> directions, double half_extent,
         std::optional<Eigen::MatrixX2d> polygon) {
        RoiSpec spec;
        if (anchors) spec.anchors = *anchors;
        spec.center = center;
        if (directions) spec.directions = *directions;
        spec.half_extent = half_extent;
        if (polygon) spec.polygon = points_of(*polygon);
        return make_roi(spec);
      },
      py::kw_only(), py::arg("anchors") = py::none(), py::arg("center") = py::none(),
      py::arg("directions") = py::none(), py::arg("half_extent") = 1.0, py::arg("polygon") = py::none());
  m.def("read_roi", &read_roi, py::arg("path"));

  py::class_<Region>(m, "Region")
      .def_readonly("id", &Region::id)
      .def_readonly("parent", &Region::parent)
      .def_property_readonly("vertices", [](const Region& r) { return vertices_of(r.poly); })
      .def_property_readonly("area", [](const Region& r) { return r.poly.area(); })
      .def_property_readonly("activation_code", &activation_code)
      .def_property_readonly("A_hat", [](const Region& r) { return Mat(r.affine.linear); })
      .def_property_readonly("b_hat", [](const Region& r) { return r.affine.offset; })
      .def("__call__", [](const Region& r, const Eigen::Vector2d& u) { return Vec(r.affine(u)); }, py::arg("u"));

  py::class_<BoundarySegment>(m, "BoundarySegment")
      .def_readonly("region_id", &BoundarySegment::region_id)
      .def_property_readonly("p0", [](const BoundarySegment& s) { return Point2(s.segment.a); })
      .def_property_readonly("p1", [](const BoundarySegment& s) { return Point2(s.segment.b); });

  py::class_<Partition>(m, "Partition")
      .def_readonly("regions", &Partition::regions)
      .def_readonly("layer_region_counts", &Partition::layer_region_counts)
      .def_readonly("depth", &Partition::depth)
      .def_readonly("domain_area", &Partition::domain_area)
      .def_readonly("dropped_area", &Partition::dropped_area)
      .def_readonly("errors", &Partition::errors)
      .def_property_readonly("ok", &Partition::ok)
      .def("__len__", [](const Partition& p) { return p.regions.size(); });

  m.def(
      "compute_partition",
      [](const CpwlNetwork& net, const Roi& roi, std::optional<std::size_t> up_to_layer, std::size_t threads) {
        PartitionOptions opt;
        opt.up_to_layer = up_to_layer;
        opt.threads = threads;
        py::gil_scoped_release release;
        return compute_partition(net, roi, opt);
      },
      py::arg("network"), py::arg("roi"), py::arg("up_to_layer") = py::none(), py::arg("threads") = 1);

  m.def(
      "decision_boundary",
      [](const Partition& p, const CpwlNetwork& net, ClassPair classes) {
        return decision_boundary(p, net, classes);
      },
      py::arg("partition"), py::arg("network"), py::arg("classes") = py::none());

  m.def(
      "sample_boundary",
      [](const std::vector<BoundarySegment>& segments, const Roi& roi, std::size_t count,
         unsigned long long seed) { return Mat(sample_boundary(segments, roi, count, seed).transpose()); },
      py::arg("segments"), py::arg("roi"), py::arg("count"), py::arg("seed") = 0,
      "Length-weighted boundary samples in input space, one row per sample.");

  m.def("aggregate_stats", [](const Partition& p) { return stats_dict(aggregate_stats(p)); },
        py::arg("partition"));
  m.def(
      "region_stats",
      [](const Eigen::MatrixX2d& vertices) -> py::object {
        const auto s = region_stats(ConvexPoly2::from_loop(points_of(vertices)));
        if (!s) return py::none();
        py::dict d;
        d["area"] = s->area;
        d["n_vertices"] = s->n_vertices;
        d["ecc_vertex"] = s->ecc_vertex;
        d["ecc_edge"] = s->ecc_edge;
        return d;
      },
      py::arg("vertices"));

  m.def(
      "regions_json",
      [](const Partition& p, const Roi& roi, const std::vector<BoundarySegment>& boundary) {
        return dump_json(regions_to_json(p, roi, boundary, {{}, p.dropped_area, p.layer_region_counts, nullptr}));
      },
      py::arg("partition"), py::arg("roi"), py::arg("boundary") = std::vector<BoundarySegment>{});
  m.def(
      "render_svg",
      [](const Partition& p, const Roi& roi, const std::vector<BoundarySegment>& boundary) {
        return render_svg(p, roi, boundary);
      },
      py::arg("partition"), py::arg("roi"), py::arg("boundary") = std::vector<BoundarySegment>{});
}
