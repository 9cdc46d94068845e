#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cpwlslice {

enum class ActivationKind { kIdentity, kRelu, kLeakyRelu, kAbs, kPwl };

std::string to_string(ActivationKind kind);
ActivationKind activation_kind_from_string(const std::string& name);

/// A continuous scalar piecewise-linear function applied element-wise.
///
/// Every kind is stored in the general form: sorted breakpoints t_1 < ... < t_K
/// and K+1 slopes. Segment j covers [t_j, t_{j+1}) with t_0 = -inf, so a value
/// sitting exactly on a breakpoint belongs to the right-hand segment. Offsets
/// are derived once from the slopes and the value at zero so the function is
/// continuous across every breakpoint.
class Activation {
 public:
  Activation();  // identity

  static Activation identity();
  static Activation relu();
  static Activation leaky_relu(double alpha);
  static Activation abs();
  static Activation pwl(std::vector<double> breakpoints, std::vector<double> slopes,
                        double value_at_zero);

  ActivationKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double value_at_zero() const { return value_at_zero_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::vector<double>& offsets() const { return offsets_; }
  std::size_t num_segments() const { return slopes_.size(); }

  std::size_t segment_of(double x) const;
  double slope(std::size_t segment) const { return slopes_[segment]; }
  double offset(std::size_t segment) const { return offsets_[segment]; }
  double operator()(double x) const;

 private:
  Activation(ActivationKind kind, std::vector<double> breakpoints, std::vector<double> slopes,
             double value_at_zero, double alpha);

  ActivationKind kind_;
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  std::vector<double> offsets_;
  double value_at_zero_ = 0.0;
  double alpha_ = 0.0;
};

/// Per-unit segment selector. Indexes into Activation::slopes()/offsets().
using Segment = std::uint16_t;

/// Activation segments for every unit of every processed layer.
struct ActivationState {
  std::vector<std::vector<Segment>> layers;

  bool operator==(const ActivationState&) const = default;
};

/// One character per unit: '0'-'9' then 'a'-'z'. Used for region codes.
std::string encode_segments(std::span<const Segment> segments);

}  // namespace cpwlslice
