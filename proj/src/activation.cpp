#include "cpwlslice/activation.hpp"

#include <algorithm>
#include <cmath>

#include "cpwlslice/error.hpp"

namespace cpwlslice {

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kIdentity: return "identity";
    case ActivationKind::kRelu: return "relu";
    case ActivationKind::kLeakyRelu: return "leaky_relu";
    case ActivationKind::kAbs: return "abs";
    case ActivationKind::kPwl: return "pwl";
  }
  return "unknown";
}

ActivationKind activation_kind_from_string(const std::string& name) {
  if (name == "identity" || name == "linear") return ActivationKind::kIdentity;
  if (name == "relu") return ActivationKind::kRelu;
  if (name == "leaky_relu") return ActivationKind::kLeakyRelu;
  if (name == "abs") return ActivationKind::kAbs;
  if (name == "pwl") return ActivationKind::kPwl;
  throw Error("unknown activation kind '" + name + "'");
}

Activation::Activation() : Activation(identity()) {}

Activation::Activation(ActivationKind kind, std::vector<double> breakpoints,
                       std::vector<double> slopes, double value_at_zero, double alpha)
    : kind_(kind),
      breakpoints_(std::move(breakpoints)),
      slopes_(std::move(slopes)),
      value_at_zero_(value_at_zero),
      alpha_(alpha) {
  if (slopes_.size() != breakpoints_.size() + 1) {
    throw Error("pwl activation needs exactly one more slope than breakpoints (got " +
                std::to_string(slopes_.size()) + " slopes, " +
                std::to_string(breakpoints_.size()) + " breakpoints)");
  }
  for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k - 1] < breakpoints_[k])) {
      throw Error("pwl breakpoints must be strictly increasing");
    }
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(breakpoints_.begin(), breakpoints_.end(), finite) ||
      !std::all_of(slopes_.begin(), slopes_.end(), finite) || !std::isfinite(value_at_zero_)) {
    throw Error("pwl activation parameters must be finite");
  }
  if (slopes_.size() > 36) {
    throw Error("pwl activation supports at most 35 breakpoints");
  }

  // Anchor the segment containing zero, then walk outwards enforcing continuity.
  offsets_.assign(slopes_.size(), 0.0);
  const std::size_t anchor = segment_of(0.0);
  offsets_[anchor] = value_at_zero_;
  for (std::size_t j = anchor + 1; j < slopes_.size(); ++j) {
    const double t = breakpoints_[j - 1];
    offsets_[j] = slopes_[j - 1] * t + offsets_[j - 1] - slopes_[j] * t;
  }
  for (std::size_t j = anchor; j-- > 0;) {
    const double t = breakpoints_[j];
    offsets_[j] = slopes_[j + 1] * t + offsets_[j + 1] - slopes_[j] * t;
  }
}

Activation Activation::identity() { return {ActivationKind::kIdentity, {}, {1.0}, 0.0, 0.0}; }

Activation Activation::relu() { return {ActivationKind::kRelu, {0.0}, {0.0, 1.0}, 0.0, 0.0}; }

Activation Activation::leaky_relu(double alpha) {
  return {ActivationKind::kLeakyRelu, {0.0}, {alpha, 1.0}, 0.0, alpha};
}

Activation Activation::abs() { return {ActivationKind::kAbs, {0.0}, {-1.0, 1.0}, 0.0, 0.0}; }

Activation Activation::pwl(std::vector<double> breakpoints, std::vector<double> slopes,
                           double value_at_zero) {
  return {ActivationKind::kPwl, std::move(breakpoints), std::move(slopes), value_at_zero, 0.0};
}

std::size_t Activation::segment_of(double x) const {
  return static_cast<std::size_t>(
      std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin());
}

double Activation::operator()(double x) const {
  const std::size_t j = segment_of(x);
  return slopes_[j] * x + offsets_[j];
}

std::string encode_segments(std::span<const Segment> segments) {
  static constexpr char kDigits[] = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string out;
  out.reserve(segments.size());
  for (Segment s : segments) out.push_back(kDigits[s]);
  return out;
}

}  // namespace cpwlslice
