#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cpwlslice/activation.hpp"

namespace cpwlslice {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Channel-first tensor shape; vectorized in (c, h, w) row-major order.
struct Shape3 {
  int channels = 1;
  int height = 1;
  int width = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  bool operator==(const Shape3&) const = default;
};

struct DenseLayer {
  Mat weight;  // out_dim x in_dim
  Vec bias;    // out_dim
};

struct Conv2dLayer {
  Shape3 input;
  int out_channels = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int padding = 0;
  std::vector<double> kernel;  // (out_ch, in_ch, kh, kw)
  Vec bias;                    // out_channels

  Shape3 output() const;
  double weight(int oc, int ic, int ky, int kx) const {
    return kernel[((static_cast<std::size_t>(oc) * input.channels + ic) * kernel_h + ky) *
                      kernel_w + kx];
  }
};

struct AvgPool2dLayer {
  Shape3 input;
  int kernel = 2;
  int stride = 2;

  Shape3 output() const;
};

struct FlattenLayer {
  Shape3 input;
};

using LinearPart = std::variant<DenseLayer, Conv2dLayer, AvgPool2dLayer, FlattenLayer>;

struct LayerSpec {
  LinearPart linear;
  Activation activation;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::string kind_name() const;
};

/// Explicit matrix form of a layer's linear part: z = matrix * x + bias.
struct LoweredLayer {
  std::variant<Mat, SparseMat> matrix;
  Vec bias;

  std::size_t rows() const;
  std::size_t cols() const;
  bool is_sparse() const { return std::holds_alternative<SparseMat>(matrix); }

  /// matrix * x (no bias). `x` may have any number of columns.
  Mat multiply(const Mat& x) const;
  Vec apply(const Vec& x) const;  // matrix * x + bias
  Vec row(std::size_t i) const;
};

inline constexpr std::size_t kDefaultDenseThreshold = std::size_t{1} << 24;

/// Lowers a structured layer to an explicit matrix. Conv, pooling and flatten
/// produce sparse row-indexed matrices unless rows*cols is below
/// `dense_threshold`, in which case a dense matrix is materialized.
LoweredLayer lower_to_dense(const LayerSpec& layer,
                            std::size_t dense_threshold = kDefaultDenseThreshold);

/// Immutable continuous piecewise-linear network. Layers are validated and
/// lowered on construction; the object is safe to share between threads.
class CpwlNetwork {
 public:
  explicit CpwlNetwork(std::vector<LayerSpec> layers,
                       std::size_t dense_threshold = kDefaultDenseThreshold);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_.back().out_dim(); }
  std::size_t num_layers() const { return layers_.size(); }
  const LayerSpec& layer(std::size_t i) const { return layers_[i]; }
  const LoweredLayer& lowered(std::size_t i) const { return lowered_[i]; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t parameter_count() const;

 private:
  std::vector<LayerSpec> layers_;
  std::vector<LoweredLayer> lowered_;
  std::size_t input_dim_ = 0;
};

struct ForwardTrace {
  std::vector<Vec> pre_activations;  // W z + b per layer
  std::vector<Vec> outputs;          // sigma(W z + b) per layer

  const Vec& output() const { return outputs.back(); }
};

/// Evaluates the network through its lowered matrices.
ForwardTrace forward(const CpwlNetwork& net, const Vec& x);

/// Evaluates the network layer by layer on the structured definitions
/// (sliding-window convolution, window averages). Independent of lowering.
Vec structured_forward(const CpwlNetwork& net, const Vec& x);

ActivationState activation_state(const CpwlNetwork& net, const Vec& x);

/// Affine map of one layer's output in slice coordinates: z(u) = linear * u + offset.
struct SliceAffine {
  Eigen::Matrix<double, Eigen::Dynamic, 2> linear;
  Vec offset;

  std::size_t dim() const { return static_cast<std::size_t>(offset.size()); }
  Vec operator()(const Vec2& u) const { return linear * u + offset; }
};

/// Pre-activation map of `layer` given the previous layer's slice affine:
/// (W * linear, W * offset + b).
SliceAffine project_preactivation(const SliceAffine& prev, const LoweredLayer& layer);

/// Composes a pre-activation map with per-unit segments: diag(s) * pre + o.
SliceAffine apply_segments(const SliceAffine& pre, const Activation& activation,
                           std::span<const Segment> segments);

/// Slice-restricted affine map of layer `layer_index`'s output, given the map
/// of the previous layer and that layer's activation segments.
SliceAffine advance_affine(const SliceAffine& prev, const CpwlNetwork& net,
                           std::size_t layer_index, std::span<const Segment> segments);

/// Result of comparing the lowered forward pass against the structured one.
struct EquivalenceReport {
  bool passed = false;
  double max_discrepancy = 0.0;
  std::size_t samples = 0;
};

EquivalenceReport verify_equivalence(const CpwlNetwork& net, std::size_t samples = 3,
                                     double tolerance = 1e-10, unsigned seed = 0);

}  // namespace cpwlslice
