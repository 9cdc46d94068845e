#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "support.hpp"

using namespace cpwlslice;
using namespace cpwlslice::testing;

namespace {

Roi identity_roi(double h = 1.0) {
  RoiSpec spec;
  spec.center = Vec::Zero(2);
  spec.directions = {Vec::Unit(2, 0), Vec::Unit(2, 1)};
  spec.half_extent = h;
  return make_roi(spec);
}

CpwlNetwork single_layer(const std::vector<std::pair<Point2, double>>& lines) {
  Mat w(static_cast<Eigen::Index>(lines.size()), 2);
  Vec b(static_cast<Eigen::Index>(lines.size()));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    w.row(static_cast<Eigen::Index>(i)) = lines[i].first.transpose();
    b[static_cast<Eigen::Index>(i)] = lines[i].second;
  }
  return CpwlNetwork({dense(w, b, Activation::relu())});
}

double total_area(const Partition& p) {
  double a = 0.0;
  for (const auto& r : p.regions) a += r.poly.area();
  return a;
}

}  // namespace

TEST_CASE("make_roi from anchors and directions") {
  RoiSpec a;
  a.anchors = {Vec::Zero(2), Vec::Unit(2, 0), Vec::Unit(2, 1)};
  const Roi r = make_roi(a);
  CHECK((r.frame - Eigen::Matrix2d::Identity()).norm() < 1e-15);
  CHECK(r.offset.norm() == 0.0);
  CHECK(r.domain.area() == doctest::Approx(4.0));

  RoiSpec d;
  d.center = Vec::Zero(3);
  d.directions = {Vec::Unit(3, 0) * 2.0, Vec::Unit(3, 1) * 3.0};
  const Roi r3 = make_roi(d);
  CHECK((r3.frame.col(0) - Vec::Unit(3, 0)).norm() < 1e-15);
  CHECK((r3.frame.col(1) - Vec::Unit(3, 1)).norm() < 1e-15);
}

TEST_CASE("make_roi in high dimension keeps anchors on the plane") {
  std::mt19937_64 rng(31);
  RoiSpec spec;
  spec.anchors = {random_vector(rng, 784), random_vector(rng, 784), random_vector(rng, 784)};
  const Roi roi = make_roi(spec);
  CHECK((roi.frame.transpose() * roi.frame - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
  for (const auto& x : spec.anchors) {
    // Least-squares coordinates in the plane, then the residual of the lift.
    const Eigen::Vector2d u = roi.frame.colPivHouseholderQr().solve(x - roi.offset);
    CHECK((roi.lift(u) - x).norm() <= 1e-10 * (1.0 + x.norm()));
  }
}

TEST_CASE("make_roi rejects degenerate specifications") {
  RoiSpec collinear;
  collinear.anchors = {Vec::Zero(2), Vec::Unit(2, 0), Vec::Unit(2, 0) * 2.0};
  CHECK_THROWS_AS(make_roi(collinear), RoiError);
  RoiSpec nearly;
  nearly.center = Vec::Zero(2);
  Vec d2(2);
  d2 << 1.0, 1e-10;
  nearly.directions = {Vec::Unit(2, 0), d2};
  CHECK_THROWS_AS(make_roi(nearly), RoiError);
  RoiSpec ok;
  ok.center = Vec::Zero(2);
  d2 << 1.0, 1e-6;
  ok.directions = {Vec::Unit(2, 0), d2};
  CHECK_NOTHROW(make_roi(ok));
  RoiSpec neg = ok;
  neg.half_extent = -1.0;
  CHECK_THROWS_AS(make_roi(neg), RoiError);
}

TEST_CASE("project_hyperplanes: first layer with the identity slice") {
  Mat w(1, 2);
  w << 1.0, 0.0;
  Vec b(1);
  b << -0.3;
  const CpwlNetwork net({dense(w, b, Activation::relu())});
  const Region root = root_region(identity_roi());
  const auto lines = project_hyperplanes(net, 0, root);
  REQUIRE(lines.size() == 1);
  const Line2& l = lines[0];
  CHECK(std::abs(std::abs(l.normal.x()) - 1.0) < 1e-15);
  CHECK(std::abs(l.normal.y()) < 1e-15);
  CHECK(std::abs(l.eval({0.3, 0.7})) < 1e-15);
  CHECK(l.provenance.at(0) == Provenance{0, 0, 0});
}

TEST_CASE("project_hyperplanes: dead upstream region drops every line") {
  std::mt19937_64 rng(3);
  const auto net = random_mlp(rng, {2, 5, 4, 1});
  Region dead = root_region(identity_roi());
  dead.affine.linear = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(5, 2);
  dead.affine.offset = Vec::Ones(5);
  std::size_t constant = 0;
  const auto lines = project_hyperplanes(net, 1, dead, {}, nullptr, &constant);
  CHECK(lines.empty());
  CHECK(constant == 4);
}

TEST_CASE("project_hyperplanes: pwl breakpoints give parallel lines") {
  Mat w(1, 2);
  w << 0.6, 0.8;
  Vec b(1);
  b << 0.1;
  const CpwlNetwork net({dense(w, b, Activation::pwl({-1.0, 1.0}, {0.5, 1.0, 2.0}, 0.0))});
  const auto lines = project_hyperplanes(net, 0, root_region(identity_roi()));
  REQUIRE(lines.size() == 2);
  const Point2 n0 = lines[0].normal, n1 = lines[1].normal;
  CHECK(std::abs(n0.x() * n1.y() - n0.y() * n1.x()) < 1e-12);
  std::set<int> bps;
  for (const auto& l : lines) bps.insert(l.provenance.at(0).breakpoint);
  CHECK(bps == std::set<int>{0, 1});
  // The two lines sit at pre-activation -1 and +1.
  for (const auto& l : lines) {
    const double t = l.provenance.at(0).breakpoint == 0 ? -1.0 : 1.0;
    const Point2 foot = -l.offset * l.normal;
    CHECK(std::abs(0.6 * foot.x() + 0.8 * foot.y() + 0.1 - t) < 1e-12);
  }
}

TEST_CASE("subdivide: zero and one line") {
  Mat w(1, 2);
  w << 1.0, 0.0;
  Vec b(1);
  b << -5.0;
  const CpwlNetwork net({dense(w, b, Activation::relu())});
  const Region root = root_region(identity_roi());
  SliceAffine pre;
  const auto none = project_hyperplanes(net, 0, root, {}, &pre);
  CHECK(none.empty());
  const auto r0 = subdivide(root, none, pre, net, 0);
  REQUIRE(r0.children.size() == 1);
  CHECK(r0.children[0].poly.area() == doctest::Approx(4.0));
  CHECK(r0.children[0].state.layers.at(0).at(0) == 0);
  CHECK(r0.children[0].affine.linear.norm() == 0.0);

  b << -0.25;
  const CpwlNetwork net1({dense(w, b, Activation::relu())});
  const auto one = project_hyperplanes(net1, 0, root, {}, &pre);
  const auto r1 = subdivide(root, one, pre, net1, 0);
  REQUIRE(r1.children.size() == 2);
  CHECK(std::abs(r1.children[0].poly.area() + r1.children[1].poly.area() - 4.0) <= 1e-12);
  CHECK(r1.children[0].state.layers[0][0] == 0);  // left of x = 0.25
  CHECK(r1.children[1].state.layers[0][0] == 1);
}

TEST_CASE("subdivide: child states match the forward pass inside each child") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const auto net = random_mlp(rng, {6, 12, 12, 1});
    const Roi roi = random_roi(rng, 6, 1.5);
    // A random parent: one of the first-layer regions.
    const auto first = compute_partition(net, roi, {.up_to_layer = 1});
    const Region& parent = first.regions[std::uniform_int_distribution<std::size_t>(0, first.regions.size() - 1)(rng)];
    SliceAffine pre;
    const auto lines = project_hyperplanes(net, 1, parent, {}, &pre);
    const auto res = subdivide(parent, lines, pre, net, 1);
    double area = 0.0;
    for (const auto& child : res.children) {
      area += child.poly.area();
      REQUIRE(child.state.layers.size() == 2);
      for (int k = 0; k < 5; ++k) {
        const Point2 u = random_interior_point(rng, child.poly);
        const auto oracle = relu_pattern_oracle(net, to_std(roi.lift(u)));
        CHECK(std::vector<int>(child.state.layers[1].begin(), child.state.layers[1].end()) == oracle[1]);
        CHECK(std::vector<int>(child.state.layers[0].begin(), child.state.layers[0].end()) == oracle[0]);
      }
    }
    CHECK(std::abs(area - parent.poly.area()) <= 1e-10 * parent.poly.area());
  }
}

TEST_CASE("compute_partition: a purely linear network is one region") {
  std::mt19937_64 rng(5);
  const auto net = random_mlp(rng, {4, 8, 8, 2}, Activation::identity());
  const auto part = compute_partition(net, random_roi(rng, 4));
  CHECK(part.ok());
  CHECK(part.regions.size() == 1);
  CHECK(part.layer_region_counts == std::vector<std::size_t>{1, 1, 1});
}

TEST_CASE("compute_partition: one relu layer matches the raw line arrangement") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {1, 3, 10, 40}) {
    std::vector<std::pair<Point2, double>> lines;
    for (int k = 0; k < n; ++k) lines.push_back({{u(rng), u(rng)}, 0.7 * u(rng)});
    const auto net = single_layer(lines);
    const auto part = compute_partition(net, identity_roi());
    std::vector<Line2> raw;
    for (const auto& [w, b] : lines) raw.push_back(*Line2::make(w, b));
    const auto faces = find_cycles(build_arrangement(ConvexPoly2::square(1.0), raw));
    CHECK(part.regions.size() == faces.size());
    CHECK(part.ok());
  }
}

TEST_CASE("compute_partition: grid sweep agrees with stored patterns") {
  std::mt19937_64 rng(47);
  const auto net = random_mlp(rng, {10, 16, 16, 16, 1});
  const Roi roi = random_roi(rng, 10, 1.0);
  const auto part = compute_partition(net, roi);
  REQUIRE(part.ok());
  CHECK(std::abs(total_area(part) - 4.0) <= 1e-9 * 4.0);

  const auto grid = locate_grid(part, roi, 200, 1e-7);
  std::set<std::vector<std::vector<int>>> seen;
  std::set<int> hit_regions;
  std::size_t mismatches = 0;
  for (const auto& g : grid) {
    REQUIRE(g.region >= 0);
    const auto pattern = relu_pattern_oracle(net, to_std(roi.lift(g.u)));
    seen.insert(pattern);
    if (g.near_edge) continue;
    hit_regions.insert(g.region);
    if (pattern != stored_pattern(part.regions[static_cast<std::size_t>(g.region)])) ++mismatches;
  }
  CHECK(mismatches == 0);
  std::set<std::vector<std::vector<int>>> stored;
  for (const auto& r : part.regions) stored.insert(stored_pattern(r));
  for (const auto& p : seen) CHECK(stored.count(p) == 1);
  CHECK(part.regions.size() >= seen.size());
  CHECK(seen.size() == hit_regions.size());
}

TEST_CASE("compute_partition: affine maps agree with the forward pass") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 3; ++trial) {
    const auto net = random_mlp(rng, {5, 10, 10, 3});
    const Roi roi = random_roi(rng, 5, 2.0);
    const auto part = compute_partition(net, roi);
    REQUIRE(part.ok());
    for (const auto& r : part.regions) {
      for (int k = 0; k < 3; ++k) {
        const Point2 u = random_interior_point(rng, r.poly);
        const auto y = mlp_oracle(net, to_std(roi.lift(u)));
        const Vec a = r.affine(u);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(a[static_cast<Eigen::Index>(i)] - y[i]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("compute_partition: layer snapshots refine and tile") {
  std::mt19937_64 rng(59);
  const auto net = random_mlp(rng, {3, 8, 8, 1});
  const Roi roi = random_roi(rng, 3);
  const auto part = compute_partition(net, roi, {.keep_layers = true});
  REQUIRE(part.layers.size() == 3);
  for (std::size_t l = 0; l < part.layers.size(); ++l) {
    const auto& snap = part.layers[l];
    CHECK(snap.polys.size() == part.layer_region_counts[l]);
    double area = 0.0;
    for (const auto& p : snap.polys) area += p.area();
    CHECK(std::abs(area - 4.0) <= 1e-9 * 4.0);
    if (l == 0) continue;
    const auto& prev = part.layers[l - 1];
    for (std::size_t i = 0; i < snap.polys.size(); ++i) {
      const auto it = std::find(prev.ids.begin(), prev.ids.end(), snap.parents[i]);
      REQUIRE(it != prev.ids.end());
      const auto& parent = prev.polys[static_cast<std::size_t>(it - prev.ids.begin())];
      for (const auto& v : snap.polys[i].vertices()) CHECK(parent.contains(v, 1e-9));
    }
  }
}

TEST_CASE("compute_partition: up_to_layer and dimension checks") {
  std::mt19937_64 rng(61);
  const auto net = random_mlp(rng, {3, 6, 6, 1});
  const Roi roi = random_roi(rng, 3);
  const auto p1 = compute_partition(net, roi, {.up_to_layer = 1});
  CHECK(p1.depth == 1);
  CHECK(p1.layer_region_counts.size() == 1);
  CHECK(p1.regions.front().state.layers.size() == 1);
  CHECK_THROWS(compute_partition(net, roi, {.up_to_layer = 4}));
  CHECK_THROWS_AS(compute_partition(net, random_roi(rng, 4)), DimensionError);
}

TEST_CASE("compute_partition is identical for any thread count") {
  std::mt19937_64 rng(67);
  const auto net = random_mlp(rng, {4, 12, 12, 1});
  const Roi roi = random_roi(rng, 4);
  const auto a = compute_partition(net, roi, {.threads = 1});
  const auto b = compute_partition(net, roi, {.threads = 4});
  REQUIRE(a.regions.size() == b.regions.size());
  for (std::size_t i = 0; i < a.regions.size(); ++i) {
    CHECK(a.regions[i].id == b.regions[i].id);
    CHECK(a.regions[i].parent == b.regions[i].parent);
    CHECK(a.regions[i].poly.vertices() == b.regions[i].poly.vertices());
    CHECK(a.regions[i].affine.linear == b.regions[i].affine.linear);
  }
}

TEST_CASE("adjacent regions have continuous affine maps") {
  std::mt19937_64 rng(71);
  const auto net = random_mlp(rng, {6, 10, 10, 2}, Activation::leaky_relu(0.1));
  const Roi roi = random_roi(rng, 6, 1.5);
  const auto part = compute_partition(net, roi);
  const auto adj = region_adjacency(part);
  CHECK(adj.size() >= part.regions.size() - 1);
  for (const auto& a : adj) {
    const auto& r = part.regions[static_cast<std::size_t>(a.first)];
    const auto& s = part.regions[static_cast<std::size_t>(a.second)];
    for (const Point2& p : {a.shared.a, a.shared.b})
      CHECK((r.affine(p) - s.affine(p)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("decision_boundary: linear classifier diagonal") {
  Mat w(1, 2);
  w << 1.0, -1.0;
  const CpwlNetwork net({dense(w, Vec::Zero(1), Activation::identity())});
  const auto part = compute_partition(net, identity_roi());
  const auto segs = decision_boundary(part, net);
  REQUIRE(segs.size() == 1);
  const Segment2 s = segs[0].segment;
  const Point2 lo = s.a.x() < s.b.x() ? s.a : s.b;
  const Point2 hi = s.a.x() < s.b.x() ? s.b : s.a;
  CHECK((lo - Point2(-1, -1)).norm() < 1e-12);
  CHECK((hi - Point2(1, 1)).norm() < 1e-12);
}

TEST_CASE("decision_boundary: positive network has no boundary") {
  std::mt19937_64 rng(73);
  auto layers = random_mlp(rng, {2, 8, 1}).layers();
  auto& head = std::get<DenseLayer>(layers.back().linear);
  head.weight = head.weight.cwiseAbs();
  head.bias = Vec::Constant(1, 0.5);
  const CpwlNetwork net(std::move(layers));
  const auto part = compute_partition(net, identity_roi());
  CHECK(decision_boundary(part, net).empty());
  CHECK_THROWS(sample_boundary({}, identity_roi(), 3, 1));
}

TEST_CASE("decision_boundary: head and depth checks") {
  std::mt19937_64 rng(79);
  const auto net = random_mlp(rng, {2, 6, 3});
  const auto part = compute_partition(net, identity_roi());
  CHECK_THROWS(decision_boundary(part, net));
  CHECK_THROWS(decision_boundary(part, net, std::pair<std::size_t, std::size_t>{0, 3}));
  CHECK_THROWS(decision_boundary(compute_partition(net, identity_roi(), {.up_to_layer = 1}), net,
                                 std::pair<std::size_t, std::size_t>{0, 1}));
  const auto segs = decision_boundary(part, net, std::pair<std::size_t, std::size_t>{0, 2});
  for (const auto& s : segs) {
    for (const Point2& p : {s.segment.a, s.segment.b}) {
      const auto y = mlp_oracle(net, {p.x(), p.y()});
      CHECK(std::abs(y[0] - y[2]) <= 1e-9);
    }
  }
}

TEST_CASE("decision_boundary: two-moons fixture residuals") {
  const auto net = load_model(fixture("two_moons.splc"));
  const Roi roi = read_roi(fixture("two_moons_roi.json"));
  const auto part = compute_partition(net, roi);
  REQUIRE(part.ok());
  const auto segs = decision_boundary(part, net);
  REQUIRE_FALSE(segs.empty());
  for (const auto& s : segs) {
    const Point2 mid = 0.5 * (s.segment.a + s.segment.b);
    CHECK(std::abs(mlp_oracle(net, to_std(roi.lift(mid)))[0]) <= 1e-6);
    const auto& poly = part.regions[static_cast<std::size_t>(s.region_id)].poly;
    CHECK(poly.contains(s.segment.a, 1e-9));
    CHECK(poly.contains(s.segment.b, 1e-9));
  }
  const Mat x = sample_boundary(segs, roi, 500, 7);
  CHECK(x.cols() == 500);
  for (Eigen::Index k = 0; k < x.cols(); ++k)
    CHECK(std::abs(mlp_oracle(net, to_std(x.col(k)))[0]) <= 1e-6);
}

TEST_CASE("sample_boundary: collinear points and reproducibility") {
  const std::vector<BoundarySegment> one{{0, {{0.0, 0.0}, {0.6, 0.8}}}};
  const auto pts = sample_boundary_2d(one, 3, 11);
  REQUIRE(pts.size() == 3);
  for (const auto& p : pts) {
    CHECK(std::abs(p.x() * 0.8 - p.y() * 0.6) < 1e-15);
    CHECK(p.x() >= 0.0);
    CHECK(p.x() <= 0.6);
  }
  CHECK(sample_boundary_2d(one, 3, 11) == pts);
  CHECK(sample_boundary_2d(one, 3, 12) != pts);
}

TEST_CASE("sample_boundary: length-weighted selection") {
  const std::vector<BoundarySegment> two{{0, {{0.0, 0.0}, {1.0, 0.0}}}, {1, {{0.0, 1.0}, {3.0, 1.0}}}};
  const std::size_t n = 100000;
  const auto pts = sample_boundary_2d(two, n, 2024);
  std::size_t second = 0;
  for (const auto& p : pts) second += p.y() > 0.5 ? 1 : 0;
  const double ratio = static_cast<double>(second) / static_cast<double>(n - second);
  CHECK(std::abs(ratio - 3.0) / 3.0 < 0.02);
}
