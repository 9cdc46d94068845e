"""Exact linear regions and decision boundaries of piecewise-linear networks on 2D slices."""

from ._core import (
    Activation,
    BoundarySegment,
    DimensionError,
    Error,
    FormatError,
    GeometryError,
    Network,
    Partition,
    Region,
    Roi,
    RoiError,
    UnsupportedLayerError,
    __version__,
    aggregate_stats,
    compute_partition,
    decision_boundary,
    load_model,
    make_roi,
    parse_model,
    read_roi,
    region_stats,
    regions_json,
    render_svg,
    sample_boundary,
    serialize_model,
    write_model,
)

__all__ = [
    "Activation",
    "BoundarySegment",
    "DimensionError",
    "Error",
    "FormatError",
    "GeometryError",
    "Network",
    "Partition",
    "Region",
    "Roi",
    "RoiError",
    "UnsupportedLayerError",
    "__version__",
    "aggregate_stats",
    "compute_partition",
    "decision_boundary",
    "load_model",
    "make_roi",
    "parse_model",
    "read_roi",
    "region_stats",
    "regions_json",
    "render_svg",
    "sample_boundary",
    "serialize_model",
    "write_model",
]
