#pragma once

// Shared helpers for the unit and acceptance suites. The oracles here are
// written directly against the definitions (plain loops) and never call the
// library's lowering, forward or affine-composition code.

#include <cmath>
#include <filesystem>
#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpwlslice/cpwlslice.hpp"

namespace cpwlslice::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(CPWLSLICE_FIXTURE_DIR) / name;
}

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0) {
  return random_matrix(rng, n, 1, sd).col(0);
}

inline LayerSpec dense(Mat w, Vec b, Activation act) {
  return LayerSpec{DenseLayer{std::move(w), std::move(b)}, std::move(act)};
}

/// Random MLP with `dims` = {input, hidden..., output}; last layer identity.
inline CpwlNetwork random_mlp(std::mt19937_64& rng, const std::vector<int>& dims,
                              Activation hidden = Activation::relu(), double bias_sd = 0.5) {
  std::vector<LayerSpec> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const bool last = l + 2 == dims.size();
    layers.push_back(dense(random_matrix(rng, dims[l + 1], dims[l], std::sqrt(2.0 / dims[l])),
                           random_vector(rng, dims[l + 1], bias_sd),
                           last ? Activation::identity() : hidden));
  }
  return CpwlNetwork(std::move(layers));
}

/// Random slice through a random center with half extent `h`.
inline Roi random_roi(std::mt19937_64& rng, int dim, double h = 1.0) {
  RoiSpec spec;
  spec.center = random_vector(rng, dim, 0.5);
  spec.directions = {random_vector(rng, dim), random_vector(rng, dim)};
  spec.half_extent = h;
  return make_roi(spec);
}

inline double relu_oracle(double x) { return x > 0.0 ? x : 0.0; }

/// Hand-rolled dense forward: explicit loops, clamp for relu, identity otherwise.
inline std::vector<double> mlp_oracle(const CpwlNetwork& net, const std::vector<double>& x) {
  std::vector<double> z = x;
  for (const auto& layer : net.layers()) {
    const auto& d = std::get<DenseLayer>(layer.linear);
    std::vector<double> next(static_cast<std::size_t>(d.weight.rows()));
    for (Eigen::Index i = 0; i < d.weight.rows(); ++i) {
      double acc = d.bias[i];
      for (Eigen::Index j = 0; j < d.weight.cols(); ++j) acc += d.weight(i, j) * z[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = layer.activation.kind() == ActivationKind::kRelu ? relu_oracle(acc) : acc;
    }
    z = std::move(next);
  }
  return z;
}

/// Direct sliding-window convolution over a (C, H, W) tensor.
inline std::vector<double> conv_oracle(const Conv2dLayer& c, const std::vector<double>& x) {
  const int ho = (c.input.height + 2 * c.padding - c.kernel_h) / c.stride + 1;
  const int wo = (c.input.width + 2 * c.padding - c.kernel_w) / c.stride + 1;
  std::vector<double> y(static_cast<std::size_t>(c.out_channels * ho * wo), 0.0);
  for (int o = 0; o < c.out_channels; ++o)
    for (int r = 0; r < ho; ++r)
      for (int s = 0; s < wo; ++s) {
        double acc = c.bias[o];
        for (int i = 0; i < c.input.channels; ++i)
          for (int p = 0; p < c.kernel_h; ++p)
            for (int q = 0; q < c.kernel_w; ++q) {
              const int yy = r * c.stride + p - c.padding;
              const int xx = s * c.stride + q - c.padding;
              if (yy < 0 || xx < 0 || yy >= c.input.height || xx >= c.input.width) continue;
              acc += c.kernel[static_cast<std::size_t>(((o * c.input.channels + i) * c.kernel_h + p) * c.kernel_w + q)] *
                     x[static_cast<std::size_t>((i * c.input.height + yy) * c.input.width + xx)];
            }
        y[static_cast<std::size_t>((o * ho + r) * wo + s)] = acc;
      }
  return y;
}

/// Uniform random point inside a convex polygon (rejection from its bounding box).
inline Point2 random_interior_point(std::mt19937_64& rng, const ConvexPoly2& poly) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& v : poly.vertices()) {
    x0 = std::min(x0, v.x());
    x1 = std::max(x1, v.x());
    y0 = std::min(y0, v.y());
    y1 = std::max(y1, v.y());
  }
  std::uniform_real_distribution<double> ux(x0, x1);
  std::uniform_real_distribution<double> uy(y0, y1);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Point2 p{ux(rng), uy(rng)};
    if (poly.contains(p, -1e-12 * std::max(1.0, x1 - x0))) return p;
  }
  // Very thin polygon: fall back to a random convex combination of vertices.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point2 p = Point2::Zero();
  double total = 0.0;
  for (const auto& v : poly.vertices()) {
    const double w = u(rng) + 1e-3;
    p += w * v;
    total += w;
  }
  return p / total;
}

/// n lines in general position whose pairwise intersections all lie strictly
/// inside [-margin, margin]^2.
inline std::vector<std::pair<Point2, double>> general_position_lines(std::mt19937_64& rng, int n,
                                                                     double margin = 0.9) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::vector<std::pair<Point2, double>> lines;
    for (int k = 0; k < n; ++k) {
      const double theta = M_PI * (k + 0.3 * u(rng)) / n;
      const Point2 w{std::cos(theta), std::sin(theta)};
      const Point2 through{0.25 * u(rng), 0.25 * u(rng)};
      lines.push_back({w, -w.dot(through)});
    }
    std::vector<Point2> pts;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      for (int j = i + 1; j < n && ok; ++j) {
        const auto& [wi, bi] = lines[i];
        const auto& [wj, bj] = lines[j];
        const double det = wi.x() * wj.y() - wi.y() * wj.x();
        const Point2 p{(-bi * wj.y() + bj * wi.y()) / det, (-bj * wi.x() + bi * wj.x()) / det};
        ok = std::abs(p.x()) < margin && std::abs(p.y()) < margin;
        for (const auto& q : pts) ok = ok && (q - p).norm() > 1e-3;
        pts.push_back(p);
      }
    if (ok) return lines;
  }
  throw std::runtime_error("could not draw lines in general position");
}


/// Per-layer relu on/off pattern from plain loops (1 where the pre-activation
/// is >= 0, matching the right-hand convention at a breakpoint). Non-relu
/// layers contribute a single segment 0.
inline std::vector<std::vector<int>> relu_pattern_oracle(const CpwlNetwork& net,
                                                         const std::vector<double>& x) {
  std::vector<std::vector<int>> pattern;
  std::vector<double> z = x;
  for (const auto& layer : net.layers()) {
    const auto& d = std::get<DenseLayer>(layer.linear);
    const bool relu = layer.activation.kind() == ActivationKind::kRelu;
    std::vector<double> next(static_cast<std::size_t>(d.weight.rows()));
    std::vector<int> bits(next.size(), 0);
    for (Eigen::Index i = 0; i < d.weight.rows(); ++i) {
      double acc = d.bias[i];
      for (Eigen::Index j = 0; j < d.weight.cols(); ++j) acc += d.weight(i, j) * z[static_cast<std::size_t>(j)];
      if (relu) bits[static_cast<std::size_t>(i)] = acc >= 0.0 ? 1 : 0;
      next[static_cast<std::size_t>(i)] = relu ? relu_oracle(acc) : acc;
    }
    pattern.push_back(std::move(bits));
    z = std::move(next);
  }
  return pattern;
}

inline std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

inline std::vector<std::vector<int>> stored_pattern(const Region& r) {
  std::vector<std::vector<int>> out;
  for (const auto& layer : r.state.layers) out.emplace_back(layer.begin(), layer.end());
  return out;
}

/// Distance from p to the boundary of a convex polygon (p assumed inside).
inline double distance_to_boundary(const ConvexPoly2& poly, const Point2& p) {
  double best = INFINITY;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i];
    const Point2 e = poly.next(i) - a;
    const double t = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
    best = std::min(best, (a + t * e - p).norm());
  }
  return best;
}

struct GridHit {
  Point2 u;
  int region = -1;        // index into partition.regions, -1 if unlocated
  bool near_edge = false;  // within the exclusion band of a region edge
};

/// n x n cell-centred grid over the bounding box of the domain; every point is
/// located by a brute-force containment scan over region bounding boxes.
inline std::vector<GridHit> locate_grid(const Partition& part, const Roi& roi, int n,
                                        double edge_band) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& v : roi.domain.vertices()) {
    x0 = std::min(x0, v.x());
    x1 = std::max(x1, v.x());
    y0 = std::min(y0, v.y());
    y1 = std::max(y1, v.y());
  }
  const double dx = (x1 - x0) / n, dy = (y1 - y0) / n;
  std::vector<GridHit> grid(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) grid[static_cast<std::size_t>(i) * n + j].u = {x0 + (i + 0.5) * dx, y0 + (j + 0.5) * dy};
  for (std::size_t r = 0; r < part.regions.size(); ++r) {
    const auto& poly = part.regions[r].poly;
    double bx0 = INFINITY, bx1 = -INFINITY, by0 = INFINITY, by1 = -INFINITY;
    for (const auto& v : poly.vertices()) {
      bx0 = std::min(bx0, v.x());
      bx1 = std::max(bx1, v.x());
      by0 = std::min(by0, v.y());
      by1 = std::max(by1, v.y());
    }
    const int i0 = std::max(0, static_cast<int>(std::floor((bx0 - x0) / dx - 0.5)));
    const int i1 = std::min(n - 1, static_cast<int>(std::ceil((bx1 - x0) / dx - 0.5)));
    const int j0 = std::max(0, static_cast<int>(std::floor((by0 - y0) / dy - 0.5)));
    const int j1 = std::min(n - 1, static_cast<int>(std::ceil((by1 - y0) / dy - 0.5)));
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j) {
        auto& g = grid[static_cast<std::size_t>(i) * n + j];
        if (!poly.contains(g.u, edge_band)) continue;
        if (distance_to_boundary(poly, g.u) <= edge_band) g.near_edge = true;
        if (g.region < 0) g.region = static_cast<int>(r);
      }
  }
  return grid;
}

}  // namespace cpwlslice::testing
