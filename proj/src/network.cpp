#include "cpwlslice/network.hpp"

#include <cmath>
#include <random>

#include "cpwlslice/error.hpp"

namespace cpwlslice {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

int window_count(int extent, int kernel, int stride) {
  if (kernel <= 0 || stride <= 0 || extent < kernel) return 0;
  return (extent - kernel) / stride + 1;
}

bool all_finite(const Mat& m) { return m.allFinite(); }

LoweredLayer finish(std::vector<Eigen::Triplet<double>>& triplets, std::size_t rows,
                    std::size_t cols, Vec bias, std::size_t dense_threshold) {
  SparseMat sparse(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  sparse.setFromTriplets(triplets.begin(), triplets.end());
  sparse.makeCompressed();
  LoweredLayer out;
  out.bias = std::move(bias);
  if (rows * cols <= dense_threshold) {
    out.matrix = Mat(sparse);
  } else {
    out.matrix = std::move(sparse);
  }
  return out;
}

}  // namespace

Shape3 Conv2dLayer::output() const {
  return {out_channels, window_count(input.height + 2 * padding, kernel_h, stride),
          window_count(input.width + 2 * padding, kernel_w, stride)};
}

Shape3 AvgPool2dLayer::output() const {
  return {input.channels, window_count(input.height, kernel, stride),
          window_count(input.width, kernel, stride)};
}

std::size_t LayerSpec::in_dim() const {
  return std::visit(Overloaded{
                        [](const DenseLayer& d) { return static_cast<std::size_t>(d.weight.cols()); },
                        [](const Conv2dLayer& c) { return c.input.size(); },
                        [](const AvgPool2dLayer& p) { return p.input.size(); },
                        [](const FlattenLayer& f) { return f.input.size(); },
                    },
                    linear);
}

std::size_t LayerSpec::out_dim() const {
  return std::visit(Overloaded{
                        [](const DenseLayer& d) { return static_cast<std::size_t>(d.weight.rows()); },
                        [](const Conv2dLayer& c) { return c.output().size(); },
                        [](const AvgPool2dLayer& p) { return p.output().size(); },
                        [](const FlattenLayer& f) { return f.input.size(); },
                    },
                    linear);
}

std::string LayerSpec::kind_name() const {
  return std::visit(Overloaded{
                        [](const DenseLayer&) { return std::string("dense"); },
                        [](const Conv2dLayer&) { return std::string("conv2d"); },
                        [](const AvgPool2dLayer&) { return std::string("avgpool2d"); },
                        [](const FlattenLayer&) { return std::string("flatten"); },
                    },
                    linear);
}

std::size_t LoweredLayer::rows() const {
  return std::visit([](const auto& m) { return static_cast<std::size_t>(m.rows()); }, matrix);
}

std::size_t LoweredLayer::cols() const {
  return std::visit([](const auto& m) { return static_cast<std::size_t>(m.cols()); }, matrix);
}

Mat LoweredLayer::multiply(const Mat& x) const {
  return std::visit([&](const auto& m) -> Mat { return m * x; }, matrix);
}

Vec LoweredLayer::apply(const Vec& x) const {
  Vec out = std::visit([&](const auto& m) -> Vec { return m * x; }, matrix);
  return out + bias;
}

Vec LoweredLayer::row(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  return std::visit(Overloaded{
                        [&](const Mat& m) -> Vec { return m.row(r).transpose(); },
                        [&](const SparseMat& m) -> Vec { return Vec(m.row(r).transpose()); },
                    },
                    matrix);
}

LoweredLayer lower_to_dense(const LayerSpec& layer, std::size_t dense_threshold) {
  return std::visit(
      Overloaded{
          [](const DenseLayer& d) { return LoweredLayer{d.weight, d.bias}; },
          [&](const Conv2dLayer& c) {
            const Shape3 out = c.output();
            std::vector<Eigen::Triplet<double>> triplets;
            triplets.reserve(out.size() * c.input.channels * c.kernel_h * c.kernel_w);
            Vec bias(static_cast<Eigen::Index>(out.size()));
            for (int oc = 0; oc < out.channels; ++oc) {
              for (int oy = 0; oy < out.height; ++oy) {
                for (int ox = 0; ox < out.width; ++ox) {
                  const int row = (oc * out.height + oy) * out.width + ox;
                  bias[row] = c.bias[oc];
                  for (int ic = 0; ic < c.input.channels; ++ic) {
                    for (int ky = 0; ky < c.kernel_h; ++ky) {
                      const int iy = oy * c.stride - c.padding + ky;
                      if (iy < 0 || iy >= c.input.height) continue;
                      for (int kx = 0; kx < c.kernel_w; ++kx) {
                        const int ix = ox * c.stride - c.padding + kx;
                        if (ix < 0 || ix >= c.input.width) continue;
                        const double w = c.weight(oc, ic, ky, kx);
                        if (w == 0.0) continue;
                        const int col = (ic * c.input.height + iy) * c.input.width + ix;
                        triplets.emplace_back(row, col, w);
                      }
                    }
                  }
                }
              }
            }
            return finish(triplets, out.size(), c.input.size(), std::move(bias), dense_threshold);
          },
          [&](const AvgPool2dLayer& p) {
            const Shape3 out = p.output();
            const double weight = 1.0 / static_cast<double>(p.kernel * p.kernel);
            std::vector<Eigen::Triplet<double>> triplets;
            triplets.reserve(out.size() * p.kernel * p.kernel);
            for (int ch = 0; ch < out.channels; ++ch) {
              for (int oy = 0; oy < out.height; ++oy) {
                for (int ox = 0; ox < out.width; ++ox) {
                  const int row = (ch * out.height + oy) * out.width + ox;
                  for (int ky = 0; ky < p.kernel; ++ky) {
                    for (int kx = 0; kx < p.kernel; ++kx) {
                      const int iy = oy * p.stride + ky;
                      const int ix = ox * p.stride + kx;
                      triplets.emplace_back(row, (ch * p.input.height + iy) * p.input.width + ix,
                                            weight);
                    }
                  }
                }
              }
            }
            return finish(triplets, out.size(), p.input.size(),
                          Vec::Zero(static_cast<Eigen::Index>(out.size())), dense_threshold);
          },
          [&](const FlattenLayer& f) {
            const std::size_t n = f.input.size();
            std::vector<Eigen::Triplet<double>> triplets;
            triplets.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
              triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
            }
            return finish(triplets, n, n, Vec::Zero(static_cast<Eigen::Index>(n)), dense_threshold);
          },
      },
      layer.linear);
}

namespace {

void validate_layer(const LayerSpec& layer, std::size_t index) {
  std::visit(
      Overloaded{
          [&](const DenseLayer& d) {
            if (d.weight.rows() == 0 || d.weight.cols() == 0) {
              throw DimensionError("dense weight matrix is empty", index);
            }
            if (d.bias.size() != d.weight.rows()) {
              throw DimensionError("dense bias has " + std::to_string(d.bias.size()) +
                                       " entries, expected " + std::to_string(d.weight.rows()),
                                   index);
            }
            if (!all_finite(d.weight) || !d.bias.allFinite()) {
              throw Error("layer " + std::to_string(index) + ": non-finite weight");
            }
          },
          [&](const Conv2dLayer& c) {
            if (c.input.size() == 0 || c.out_channels <= 0 || c.kernel_h <= 0 ||
                c.kernel_w <= 0 || c.stride <= 0 || c.padding < 0) {
              throw DimensionError("invalid conv2d geometry", index);
            }
            if (c.output().size() == 0) {
              throw DimensionError("conv2d kernel larger than padded input", index);
            }
            const std::size_t expected = static_cast<std::size_t>(c.out_channels) *
                                         c.input.channels * c.kernel_h * c.kernel_w;
            if (c.kernel.size() != expected) {
              throw DimensionError("conv2d kernel has " + std::to_string(c.kernel.size()) +
                                       " entries, expected " + std::to_string(expected),
                                   index);
            }
            if (c.bias.size() != c.out_channels) {
              throw DimensionError("conv2d bias must have one entry per output channel", index);
            }
            for (double w : c.kernel) {
              if (!std::isfinite(w)) throw Error("layer " + std::to_string(index) + ": non-finite weight");
            }
            if (!c.bias.allFinite()) throw Error("layer " + std::to_string(index) + ": non-finite weight");
          },
          [&](const AvgPool2dLayer& p) {
            if (p.input.size() == 0 || p.kernel <= 0 || p.stride <= 0 || p.output().size() == 0) {
              throw DimensionError("invalid avgpool2d geometry", index);
            }
          },
          [&](const FlattenLayer& f) {
            if (f.input.size() == 0) throw DimensionError("flatten input is empty", index);
          },
      },
      layer.linear);
}

}  // namespace

CpwlNetwork::CpwlNetwork(std::vector<LayerSpec> layers, std::size_t dense_threshold)
    : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    validate_layer(layers_[i], i);
    if (i > 0 && layers_[i].in_dim() != layers_[i - 1].out_dim()) {
      throw DimensionError("input dim " + std::to_string(layers_[i].in_dim()) +
                               " does not match previous output dim " +
                               std::to_string(layers_[i - 1].out_dim()),
                           i);
    }
  }
  input_dim_ = layers_.front().in_dim();
  lowered_.reserve(layers_.size());
  for (const auto& layer : layers_) lowered_.push_back(lower_to_dense(layer, dense_threshold));
}

std::size_t CpwlNetwork::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) {
    count += std::visit(Overloaded{
                            [](const DenseLayer& d) {
                              return static_cast<std::size_t>(d.weight.size() + d.bias.size());
                            },
                            [](const Conv2dLayer& c) {
                              return c.kernel.size() + static_cast<std::size_t>(c.bias.size());
                            },
                            [](const AvgPool2dLayer&) { return std::size_t{0}; },
                            [](const FlattenLayer&) { return std::size_t{0}; },
                        },
                        layer.linear);
  }
  return count;
}

namespace {

void check_input(const CpwlNetwork& net, const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != net.input_dim()) {
    throw DimensionError("input has length " + std::to_string(x.size()) + ", network expects " +
                             std::to_string(net.input_dim()),
                         0);
  }
}

Vec activate(const Activation& act, const Vec& pre) {
  Vec out(pre.size());
  for (Eigen::Index i = 0; i < pre.size(); ++i) out[i] = act(pre[i]);
  return out;
}

}  // namespace

ForwardTrace forward(const CpwlNetwork& net, const Vec& x) {
  check_input(net, x);
  ForwardTrace trace;
  trace.pre_activations.reserve(net.num_layers());
  trace.outputs.reserve(net.num_layers());
  const Vec* z = &x;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    trace.pre_activations.push_back(net.lowered(l).apply(*z));
    trace.outputs.push_back(activate(net.layer(l).activation, trace.pre_activations.back()));
    z = &trace.outputs.back();
  }
  return trace;
}

Vec structured_forward(const CpwlNetwork& net, const Vec& x) {
  check_input(net, x);
  Vec z = x;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const LayerSpec& layer = net.layer(l);
    Vec pre = std::visit(
        Overloaded{
            [&](const DenseLayer& d) -> Vec { return d.weight * z + d.bias; },
            [&](const Conv2dLayer& c) -> Vec {
              const Shape3 out = c.output();
              Vec y(static_cast<Eigen::Index>(out.size()));
              const auto at = [&](int ch, int iy, int ix) {
                if (iy < 0 || iy >= c.input.height || ix < 0 || ix >= c.input.width) return 0.0;
                return z[(ch * c.input.height + iy) * c.input.width + ix];
              };
              for (int oc = 0; oc < out.channels; ++oc) {
                for (int oy = 0; oy < out.height; ++oy) {
                  for (int ox = 0; ox < out.width; ++ox) {
                    double acc = c.bias[oc];
                    for (int ic = 0; ic < c.input.channels; ++ic) {
                      for (int ky = 0; ky < c.kernel_h; ++ky) {
                        for (int kx = 0; kx < c.kernel_w; ++kx) {
                          acc += c.weight(oc, ic, ky, kx) *
                                 at(ic, oy * c.stride - c.padding + ky, ox * c.stride - c.padding + kx);
                        }
                      }
                    }
                    y[(oc * out.height + oy) * out.width + ox] = acc;
                  }
                }
              }
              return y;
            },
            [&](const AvgPool2dLayer& p) -> Vec {
              const Shape3 out = p.output();
              Vec y(static_cast<Eigen::Index>(out.size()));
              for (int ch = 0; ch < out.channels; ++ch) {
                for (int oy = 0; oy < out.height; ++oy) {
                  for (int ox = 0; ox < out.width; ++ox) {
                    double acc = 0.0;
                    for (int ky = 0; ky < p.kernel; ++ky) {
                      for (int kx = 0; kx < p.kernel; ++kx) {
                        acc += z[(ch * p.input.height + oy * p.stride + ky) * p.input.width +
                                 ox * p.stride + kx];
                      }
                    }
                    y[(ch * out.height + oy) * out.width + ox] = acc / (p.kernel * p.kernel);
                  }
                }
              }
              return y;
            },
            [&](const FlattenLayer&) -> Vec { return z; },
        },
        layer.linear);
    z = activate(layer.activation, pre);
  }
  return z;
}

ActivationState activation_state(const CpwlNetwork& net, const Vec& x) {
  const ForwardTrace trace = forward(net, x);
  ActivationState state;
  state.layers.resize(net.num_layers());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const Activation& act = net.layer(l).activation;
    const Vec& pre = trace.pre_activations[l];
    auto& segs = state.layers[l];
    segs.resize(static_cast<std::size_t>(pre.size()));
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
      segs[static_cast<std::size_t>(i)] = static_cast<Segment>(act.segment_of(pre[i]));
    }
  }
  return state;
}

SliceAffine project_preactivation(const SliceAffine& prev, const LoweredLayer& layer) {
  if (prev.dim() != layer.cols()) {
    throw DimensionError("slice affine has dim " + std::to_string(prev.dim()) +
                         ", layer expects " + std::to_string(layer.cols()));
  }
  SliceAffine pre;
  pre.linear = layer.multiply(prev.linear);
  pre.offset = layer.multiply(prev.offset) + layer.bias;
  return pre;
}

SliceAffine apply_segments(const SliceAffine& pre, const Activation& activation,
                           std::span<const Segment> segments) {
  if (segments.size() != pre.dim()) {
    throw DimensionError("state has " + std::to_string(segments.size()) + " units, layer has " +
                         std::to_string(pre.dim()));
  }
  SliceAffine out = pre;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double s = activation.slope(segments[i]);
    out.linear.row(r) *= s;
    out.offset[r] = s * pre.offset[r] + activation.offset(segments[i]);
  }
  return out;
}

SliceAffine advance_affine(const SliceAffine& prev, const CpwlNetwork& net,
                           std::size_t layer_index, std::span<const Segment> segments) {
  try {
    return apply_segments(project_preactivation(prev, net.lowered(layer_index)),
                          net.layer(layer_index).activation, segments);
  } catch (const DimensionError& e) {
    throw DimensionError(e.what(), layer_index);
  }
}

EquivalenceReport verify_equivalence(const CpwlNetwork& net, std::size_t samples,
                                     double tolerance, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  EquivalenceReport report;
  report.samples = samples;
  for (std::size_t k = 0; k < samples; ++k) {
    Vec x(static_cast<Eigen::Index>(net.input_dim()));
    for (auto& v : x) v = normal(rng);
    const Vec lowered = forward(net, x).output();
    const Vec direct = structured_forward(net, x);
    for (Eigen::Index i = 0; i < lowered.size(); ++i) {
      const double scale = std::max(1.0, std::abs(direct[i]));
      report.max_discrepancy = std::max(report.max_discrepancy, std::abs(lowered[i] - direct[i]) / scale);
    }
  }
  report.passed = report.max_discrepancy <= tolerance;
  return report;
}

}  // namespace cpwlslice
