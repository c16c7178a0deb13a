"""Reconstruct watertight STL meshes from stacks of CT slices.

The pipeline runs per slice (parse, enhance, threshold, morphology,
boundary tracing, contour smoothing) and then across slices (layer
alignment, wall stitching, Delaunay caps, STL encoding).
"""

from .contour import ContourPolyline, parse_points, read_points, shoelace_area, write_points
from .delaunay import constrained_triangulation, triangulate
from .dicom import DicomMeta, SliceImage, hu_to_gray, parse_dicom, parse_pgm, write_dicom, write_pgm
from .errors import SingularFitWarning, SliceMeshError
from .imaging import EnhanceParams, enhance, mean_filter, median_filter, power_law
from .mesh import TriangleMesh, audit, merge
from .phantom import make_phantom, write_phantom
from .pipeline import PipelineConfig, convert, reconstruct, stitch_files
from .predicates import incircle, orient2d
from .segmentation import morph, select_roi, threshold, trace_contours
from .smoothing import SmoothingParams, resample_closed, smooth_contour, smooth_sequence
from .stitch import LayerStack, StitchPlan, assemble, build_wall, cap_layer, plan_stitch
from .stl import read_stl, write_ascii_stl, write_binary_stl

__version__ = "0.1.0"

__all__ = [
    "ContourPolyline",
    "DicomMeta",
    "EnhanceParams",
    "LayerStack",
    "PipelineConfig",
    "SingularFitWarning",
    "SliceImage",
    "SliceMeshError",
    "SmoothingParams",
    "StitchPlan",
    "TriangleMesh",
    "assemble",
    "audit",
    "build_wall",
    "cap_layer",
    "constrained_triangulation",
    "convert",
    "enhance",
    "hu_to_gray",
    "incircle",
    "make_phantom",
    "mean_filter",
    "median_filter",
    "merge",
    "morph",
    "orient2d",
    "parse_dicom",
    "parse_pgm",
    "parse_points",
    "plan_stitch",
    "power_law",
    "read_points",
    "write_points",
    "read_stl",
    "reconstruct",
    "resample_closed",
    "select_roi",
    "shoelace_area",
    "smooth_contour",
    "smooth_sequence",
    "stitch_files",
    "threshold",
    "trace_contours",
    "triangulate",
    "write_ascii_stl",
    "write_binary_stl",
    "write_dicom",
    "write_phantom",
    "write_pgm",
]
