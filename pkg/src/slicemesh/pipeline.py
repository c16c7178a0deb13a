"""End-to-end reconstruction: slice directory -> contours -> STL.

The segmentation threshold is applied to Hounsfield units by default; the
enhanced gray image is still computed for every slice and summarised in the
report. ``threshold_space="enhanced"`` thresholds the enhanced image instead,
at the gray level the HU threshold maps to.
"""

from __future__ import annotations

import json
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .contour import ContourPolyline, read_points
from .dicom import DEFAULT_SLICE_THICKNESS_MM, hu_to_gray, list_slice_files, read_slice
from .errors import LayerMismatch, MalformedPointFile, SingularFitWarning, SliceMeshError
from .imaging import EnhanceParams, enhance, power_law
from .mesh import TriangleMesh, audit
from .segmentation import MORPH_OPS, ROI_POLICIES, apply_schedule, select_roi, threshold, trace_contours
from .smoothing import METHODS, SmoothingParams, resample_closed, smooth_contour
from .stitch import LayerStack, assemble
from .stl import write_ascii_stl, write_binary_stl

log = logging.getLogger(__name__)

SMOOTH_METHODS = METHODS + ("none",)


class StageError(SliceMeshError):
    """A data error tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


@dataclass(frozen=True)
class PipelineConfig:
    gamma: float = 0.3
    c: float = 1.0
    median_kernel: int = 9
    mean_kernel: int = 9
    window_min: float = -1024.0
    window_max: float = 3071.0
    threshold_hu: float = 400.0
    threshold_space: str = "hu"
    morph_schedule: tuple = (("close", 3),)
    min_points: int = 8
    roi_policy: str = "largest_area"
    span: float = 0.1
    smooth_method: str = "loess2"
    resample_n: int | None = None
    z_spacing_mm: float | None = None
    default_thickness_mm: float = DEFAULT_SLICE_THICKNESS_MM
    slice_range: tuple[int, int] | None = None
    output_format: str = "binary"
    workers: int = 1

    def __post_init__(self):
        EnhanceParams(self.c, self.gamma, self.median_kernel, self.mean_kernel)
        if self.smooth_method != "none":
            SmoothingParams(self.span, self.smooth_method)
        if self.smooth_method not in SMOOTH_METHODS:
            raise ValueError(f"smooth_method must be one of {SMOOTH_METHODS}")
        if self.threshold_space not in ("hu", "enhanced"):
            raise ValueError("threshold_space must be 'hu' or 'enhanced'")
        if self.roi_policy not in ROI_POLICIES:
            raise ValueError(f"roi_policy must be one of {ROI_POLICIES}")
        if self.output_format not in ("binary", "ascii"):
            raise ValueError("output_format must be 'binary' or 'ascii'")
        if not self.window_min < self.window_max:
            raise ValueError("window_min must be below window_max")
        schedule = tuple((str(op), int(k)) for op, k in self.morph_schedule)
        for op, k in schedule:
            if op not in MORPH_OPS or k < 1 or k % 2 == 0:
                raise ValueError(f"invalid morphology step {op}:{k}")
        object.__setattr__(self, "morph_schedule", schedule)
        if self.slice_range is not None:
            lo, hi = (int(v) for v in self.slice_range)
            if lo < 0 or hi < lo:
                raise ValueError(f"invalid slice range {lo}..{hi}")
            object.__setattr__(self, "slice_range", (lo, hi))
        if self.resample_n is not None and self.resample_n < 3:
            raise ValueError("resample_n must be at least 3")
        if self.z_spacing_mm is not None and not self.z_spacing_mm > 0:
            raise ValueError("z_spacing_mm must be positive")
        if self.min_points < 3:
            raise ValueError("min_points must be at least 3")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @classmethod
    def from_mapping(cls, values: dict, base: PipelineConfig | None = None) -> PipelineConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        values = dict(values)
        if "morph_schedule" in values:
            values["morph_schedule"] = tuple(tuple(step) for step in values["morph_schedule"])
        if values.get("slice_range") is not None:
            values["slice_range"] = tuple(values["slice_range"])
        return replace(base or cls(), **values)

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> PipelineConfig:
        return cls.from_mapping(json.loads(Path(path).read_text()))

    @property
    def enhance_params(self) -> EnhanceParams:
        return EnhanceParams(self.c, self.gamma, self.median_kernel, self.mean_kernel)

    def gray_threshold(self) -> float:
        """The enhanced-gray level that the HU threshold maps to."""
        t = np.clip(self.threshold_hu, self.window_min, self.window_max)
        g = (t - self.window_min) / (self.window_max - self.window_min) * 255.0
        return float(power_law(np.array([[g]]), self.c, self.gamma)[0, 0])


def _process_slice(path: str, index: int, config: PipelineConfig) -> dict:
    stage = "parse"
    try:
        image = read_slice(path, slice_index=index, default_thickness_mm=config.default_thickness_mm)
        stage = "enhance"
        gray = hu_to_gray(image, config.window_min, config.window_max)
        enhanced = enhance(gray.pixels, config.enhance_params)
        stage = "segment"
        if config.threshold_space == "hu":
            mask = threshold(image, config.threshold_hu)
        else:
            mask = threshold(enhanced, config.gray_threshold())
        mask = apply_schedule(mask, config.morph_schedule)
        traced = trace_contours(mask, config.min_points)
        if not traced:
            raise SliceMeshError("no region above threshold")
        chosen = select_roi(traced, config.roi_policy)
        row_mm, col_mm = image.pixel_spacing_mm
        scale = np.array([col_mm, row_mm])
        stage = "smooth"
        fallbacks = 0
        out = []
        for c in chosen:
            raw_points = len(c)
            if config.smooth_method != "none":
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", SingularFitWarning)
                    c = smooth_contour(c, SmoothingParams(config.span, config.smooth_method))
                fallbacks += len(caught)
            if config.resample_n:
                c = resample_closed(c, config.resample_n)
            out.append((raw_points, ContourPolyline(c.points * scale)))
    except SliceMeshError as exc:
        raise StageError(stage, f"{Path(path).name}: {exc}") from None
    return {
        "index": index,
        "file": Path(path).name,
        "thickness_mm": image.slice_thickness_mm,
        "contours_traced": len(traced),
        "contours": [c for _, c in out],
        "points_raw": [n for n, _ in out],
        "points_smoothed": [len(c) for _, c in out],
        "enhanced_mean": float(enhanced.mean()),
        "foreground_pixels": int(mask.sum()),
        "singular_fit_warnings": fallbacks,
    }


def _select_files(input_dir, config: PipelineConfig) -> list[tuple[int, Path]]:
    files = list(enumerate(list_slice_files(input_dir)))
    if config.slice_range is not None:
        lo, hi = config.slice_range
        files = [(k, p) for k, p in files if lo <= k <= hi]
    return files


def _stack_report(stack: LayerStack, mesh: TriangleMesh) -> dict:
    info = audit(mesh)
    info["wall_layers"] = len(stack.layers) - 1
    info["z_spacing_mm"] = stack.z_spacing_mm
    info["layers"] = len(stack.layers)
    return info


def reconstruct(input_dir, config: PipelineConfig | None = None) -> tuple[TriangleMesh, dict]:
    """Run every stage on a directory of slices; returns the mesh and a report."""
    config = config or PipelineConfig()
    files = _select_files(input_dir, config)
    if len(files) < 2:
        detail = "no slices in range" if not files else "need at least 2 slices in range"
        raise StageError("parse", detail)
    log.info("processing %d slices from %s with %d worker(s)", len(files), input_dir, config.workers)
    args = [(str(p), k, config) for k, p in files]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_slice = list(pool.map(_process_slice, *zip(*args)))
    else:
        per_slice = [_process_slice(*a) for a in args]

    for s in per_slice:
        log.info(
            "slice %s: %d contour(s) traced, points %s -> %s, %d fallback fit(s)",
            s["file"], s["contours_traced"], s["points_raw"], s["points_smoothed"], s["singular_fit_warnings"],
        )
    layers = []
    for s in per_slice:
        if len(s["contours"]) != 1:
            raise StageError(
                "stitch", f"slice {s['file']} has {len(s['contours'])} contours; stitching needs exactly one"
            )
        layers.append(s["contours"][0])
    z = config.z_spacing_mm or per_slice[0]["thickness_mm"]
    try:
        stack = LayerStack.from_contours(layers, z_spacing_mm=z)
        mesh = assemble(stack)
    except SliceMeshError as exc:
        raise StageError("stitch", str(exc)) from None
    report = {"slices": [{k: v for k, v in s.items() if k != "contours"} for s in per_slice]}
    report.update(_stack_report(stack, mesh))
    log.info("mesh: %d facets, watertight=%s, volume %.1f", report["facets"], report["watertight"], report["signed_volume"])
    return mesh, report


def encode(mesh: TriangleMesh, fmt: str, name: str = "slicemesh") -> bytes:
    if fmt == "ascii":
        return write_ascii_stl(mesh, name).encode("ascii")
    return write_binary_stl(mesh, f"{name} binary STL")


def write_mesh(mesh: TriangleMesh, out, fmt: str) -> None:
    try:
        Path(out).write_bytes(encode(mesh, fmt))
    except OSError as exc:
        raise StageError("write", str(exc)) from None


def convert(input_dir, config: PipelineConfig | None, out) -> dict:
    config = config or PipelineConfig()
    mesh, report = reconstruct(input_dir, config)
    write_mesh(mesh, out, config.output_format)
    report["output"] = str(out)
    return report


def stitch_files(contour_files, z: float, out, fmt: str = "binary") -> dict:
    """Stack one contour per point file, ``z`` apart, and write the closed mesh."""
    if len(contour_files) < 2:
        raise StageError("parse", "need at least 2 contour files")
    layers = []
    for path in contour_files:
        try:
            contours = read_points(path)
        except MalformedPointFile as exc:
            raise StageError("parse", f"{Path(path).name}: {exc}") from None
        except OSError as exc:
            raise StageError("parse", str(exc)) from None
        if len(contours) != 1:
            raise StageError("parse", f"{Path(path).name}: expected one contour, found {len(contours)}")
        layers.append(contours[0])
    try:
        stack = LayerStack.from_contours(layers, z_spacing_mm=z)
        mesh = assemble(stack)
    except (SliceMeshError, LayerMismatch) as exc:
        raise StageError("stitch", str(exc)) from None
    write_mesh(mesh, out, fmt)
    report = {
        "slices": [
            {"index": k, "file": Path(p).name, "contours_traced": 1, "points_raw": [len(c)], "points_smoothed": [len(c)]}
            for k, (p, c) in enumerate(zip(contour_files, layers))
        ]
    }
    report.update(_stack_report(stack, mesh))
    report["output"] = str(out)
    return report


def format_report(report: dict) -> str:
    """Flatten a report into ``key=value`` lines."""
    lines = []

    def emit(prefix, value):
        if isinstance(value, dict):
            for k, v in value.items():
                emit(f"{prefix}.{k}" if prefix else k, v)
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{prefix}={len(value)}")
            for k, v in enumerate(value):
                emit(f"{prefix}.{k}", v)
        elif isinstance(value, (list, tuple)):
            lines.append(f"{prefix}={','.join(_scalar(v) for v in value)}")
        else:
            lines.append(f"{prefix}={_scalar(value)}")

    emit("", report)
    return "\n".join(lines) + "\n"


def _scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_dict(config: PipelineConfig) -> dict:
    return asdict(config)


__all__ = [
    "PipelineConfig",
    "StageError",
    "convert",
    "format_report",
    "reconstruct",
    "stitch_files",
]
