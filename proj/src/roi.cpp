#include <cmath>

#include "cpwlslice/error.hpp"
#include "cpwlslice/partition.hpp"

namespace cpwlslice {
namespace {

constexpr double kMinAngle = 1e-8;
constexpr double kOrthoTol = 1e-12;

Eigen::Matrix<double, Eigen::Dynamic, 2> gram_schmidt(const Vec& d1, const Vec& d2) {
  const double n1 = d1.norm();
  const double n2 = d2.norm();
  if (!(n1 > 0.0) || !(n2 > 0.0)) throw RoiError("slice direction has zero length");
  Eigen::Matrix<double, Eigen::Dynamic, 2> frame(d1.size(), 2);
  frame.col(0) = d1 / n1;
  Vec v = d2 - frame.col(0).dot(d2) * frame.col(0);
  if (v.norm() / n2 < std::sin(kMinAngle)) {
    throw RoiError("slice directions are linearly dependent (anchors collinear)");
  }
  // Second pass keeps orthogonality at round-off level in high dimension.
  v -= frame.col(0).dot(v) * frame.col(0);
  frame.col(1) = v / v.norm();
  return frame;
}

}  // namespace

Roi make_roi(Eigen::Matrix<double, Eigen::Dynamic, 2> frame, Vec offset, ConvexPoly2 domain) {
  if (frame.rows() != offset.size() || frame.rows() < 2) {
    throw RoiError("frame must be S x 2 with S >= 2 matching the offset length");
  }
  if (!frame.allFinite() || !offset.allFinite()) throw RoiError("frame/offset must be finite");
  const Eigen::Matrix2d gram = frame.transpose() * frame;
  if ((gram - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() > kOrthoTol) {
    throw RoiError("frame columns are not orthonormal");
  }
  if (domain.size() < 3) throw RoiError("domain polygon is empty");
  return Roi{std::move(frame), std::move(offset), std::move(domain)};
}

Roi make_roi(const RoiSpec& spec) {
  Vec d1;
  Vec d2;
  Vec origin;
  if (!spec.anchors.empty()) {
    if (spec.anchors.size() != 3) throw RoiError("anchor mode needs exactly three points");
    if (spec.center || !spec.directions.empty()) {
      throw RoiError("give either anchors or center+directions, not both");
    }
    const auto dim = spec.anchors[0].size();
    for (const auto& a : spec.anchors) {
      if (a.size() != dim) throw RoiError("anchors have different dimensions");
    }
    origin = spec.anchors[0];
    d1 = spec.anchors[1] - spec.anchors[0];
    d2 = spec.anchors[2] - spec.anchors[0];
  } else if (spec.center) {
    if (spec.directions.size() != 2) throw RoiError("direction mode needs exactly two directions");
    origin = *spec.center;
    d1 = spec.directions[0];
    d2 = spec.directions[1];
    if (d1.size() != origin.size() || d2.size() != origin.size()) {
      throw RoiError("directions and center have different dimensions");
    }
  } else {
    throw RoiError("ROI needs anchors or center+directions");
  }
  if (origin.size() < 2) throw RoiError("input space must have dimension >= 2");

  ConvexPoly2 domain;
  if (spec.polygon) {
    try {
      domain = ConvexPoly2::from_loop(*spec.polygon);
    } catch (const GeometryError& e) {
      throw RoiError(std::string("invalid domain polygon: ") + e.what());
    }
  } else {
    if (!(spec.half_extent > 0.0) || !std::isfinite(spec.half_extent)) {
      throw RoiError("half extent must be positive");
    }
    domain = ConvexPoly2::square(spec.half_extent);
  }
  return make_roi(gram_schmidt(d1, d2), origin, std::move(domain));
}

}  // namespace cpwlslice
