"""Command-line entry point: ``slicemesh <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
The log level is read from ``SLICEMESH_LOG_LEVEL`` (default ``WARNING``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

from .contour import read_points, write_points
from .errors import SingularFitWarning, SliceMeshError
from .mesh import audit
from .phantom import SHAPES, make_phantom, write_phantom
from .pipeline import SMOOTH_METHODS, PipelineConfig, StageError, convert, format_report, stitch_files
from .segmentation import MORPH_OPS, ROI_POLICIES
from .smoothing import METHODS, SmoothingParams, smooth_contour
from .stl import load_stl

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("slicemesh")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _odd_int(text: str) -> int:
    k = int(text)
    if k < 1 or k % 2 == 0:
        raise argparse.ArgumentTypeError(f"expected an odd integer >= 1, got {text}")
    return k


def _schedule(text: str) -> tuple:
    """``close:3,open:5`` -> ((close, 3), (open, 5)); ``none`` -> ()."""
    if text.strip().lower() == "none":
        return ()
    steps = []
    for part in text.split(","):
        op, _, k = part.strip().partition(":")
        if op not in MORPH_OPS:
            raise argparse.ArgumentTypeError(f"unknown morphology op {op!r}")
        steps.append((op, _odd_int(k or "3")))
    return tuple(steps)


def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        lo, sep, hi = text.partition("..")
    try:
        return (int(lo), int(hi)) if sep else (int(lo), int(lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected FIRST:LAST, got {text!r}") from None


def _add_output(p):
    p.add_argument("-o", "--out", required=True, help="output STL path")
    p.add_argument("--report", help="also write the key=value report to this file")
    p.add_argument("--summary-json", help="write the report as JSON to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slicemesh", description="Reconstruct watertight STL meshes from CT slice stacks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", help="slice directory -> STL")
    p.add_argument("input_dir", help="directory of .dcm or .pgm slices, ordered by filename")
    _add_output(p)
    p.add_argument("--config", help="JSON file of pipeline settings (flags override it)")
    g = p.add_argument_group("enhancement")
    g.add_argument("--gamma", type=float, help="power-law exponent (default 0.3)")
    g.add_argument("--c", type=float, help="power-law scale (default 1.0)")
    g.add_argument("--median-kernel", type=_odd_int, help="median filter size (default 9, i.e. 9x9)")
    g.add_argument("--mean-kernel", type=_odd_int, help="mean filter size (default 9, i.e. 9x9)")
    g.add_argument("--window-min", type=float, help="HU mapped to gray 0 (default -1024)")
    g.add_argument("--window-max", type=float, help="HU mapped to gray 255 (default 3071)")
    g = p.add_argument_group("segmentation")
    g.add_argument("--threshold", dest="threshold_hu", type=float, help="foreground is HU above this (default 400)")
    g.add_argument(
        "--threshold-space",
        choices=("hu", "enhanced"),
        help="threshold raw HU or the enhanced image at the mapped gray level (default hu)",
    )
    g.add_argument("--morph", dest="morph_schedule", type=_schedule, help="e.g. close:3,open:3 or none (default close:3)")
    g.add_argument("--roi", dest="roi_policy", choices=ROI_POLICIES, help="contour selection (default largest_area)")
    g.add_argument("--min-points", type=int, help="drop traced contours shorter than this (default 8)")
    g = p.add_argument_group("contours")
    g.add_argument("--span", type=float, help="smoothing window as a fraction of the contour, in (0, 1) (default 0.1)")
    g.add_argument("--method", dest="smooth_method", choices=SMOOTH_METHODS, help="smoother (default loess2)")
    g.add_argument("--resample", dest="resample_n", type=int, help="resample every contour to N points")
    g = p.add_argument_group("mesh")
    g.add_argument("--z-spacing", dest="z_spacing_mm", type=float, help="layer spacing in mm (default: slice thickness)")
    g.add_argument("--slices", dest="slice_range", type=_range, help="inclusive positional range FIRST:LAST")
    g.add_argument("--format", dest="output_format", choices=("binary", "ascii"), help="STL encoding (default binary)")
    g.add_argument("--workers", type=int, help="parallel per-slice workers (default 1)")

    p = sub.add_parser("stitch", help="contour point files -> STL")
    p.add_argument("contour_files", nargs="+", help="one contour per file, bottom layer first")
    p.add_argument("--z", type=float, default=1.0, help="layer spacing in mm (default 1.0)")
    p.add_argument("--format", choices=("binary", "ascii"), default="binary", help="STL encoding (default binary)")
    _add_output(p)

    p = sub.add_parser("smooth", help="smooth the contours of a point file")
    p.add_argument("points_in", help="point file, blank lines between contours")
    p.add_argument("points_out", help="where to write the smoothed contours")
    p.add_argument("--span", type=float, default=0.1, help="window fraction in (0, 1) (default 0.1)")
    p.add_argument("--method", choices=METHODS, default="loess2", help="smoother (default loess2)")
    p.add_argument(
        "--wrap",
        choices=("auto", "cyclic", "open"),
        default="auto",
        help="let windows cross the closing edge; auto treats a wide closing gap as an open arc (default auto)",
    )

    p = sub.add_parser("phantom", help="write a synthetic slice stack")
    p.add_argument("out_dir")
    p.add_argument("--shape", choices=SHAPES, default="cylinder", help="default cylinder")
    p.add_argument("--size", type=int, default=512, help="image side in pixels (default 512)")
    p.add_argument("--slices", type=int, default=8, help="number of slices (default 8)")
    p.add_argument("--radius", type=float, default=50.0, help="cylinder radius in px (default 50)")
    p.add_argument("--side", type=float, default=100.0, help="box side in px (default 100)")
    p.add_argument("--major-radius", type=float, default=100.0, help="torus ring radius in px (default 100)")
    p.add_argument("--minor-radius", type=float, default=40.0, help="torus tube radius in px (default 40)")
    p.add_argument("--thickness", type=float, default=1.5, help="slice thickness in mm (default 1.5)")
    p.add_argument("--bits", type=int, default=12, help="bits stored (default 12)")
    p.add_argument("--format", choices=("pgm", "dicom", "both"), default="pgm", help="slice file format (default pgm)")

    p = sub.add_parser("validate", help="audit an existing STL file")
    p.add_argument("stl")
    p.add_argument("--summary-json", help="write the audit as JSON to this file")
    return parser


_CONFIG_KEYS = (
    "gamma",
    "c",
    "median_kernel",
    "mean_kernel",
    "window_min",
    "window_max",
    "threshold_hu",
    "threshold_space",
    "morph_schedule",
    "roi_policy",
    "min_points",
    "span",
    "smooth_method",
    "resample_n",
    "z_spacing_mm",
    "slice_range",
    "output_format",
    "workers",
)


def config_from_args(args) -> PipelineConfig:
    """Defaults, then the config file, then explicit flags."""
    try:
        base = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
        flags = {k: getattr(args, k) for k in _CONFIG_KEYS if getattr(args, k) is not None}
        return PipelineConfig.from_mapping(flags, base)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    except SliceMeshError as exc:
        raise UsageError(f"{type(exc).__name__}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def _emit(report: dict, args) -> None:
    text = format_report(report)
    sys.stdout.write(text)
    if getattr(args, "report", None):
        Path(args.report).write_text(text)
    if getattr(args, "summary_json", None):
        Path(args.summary_json).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def _cmd_convert(args) -> int:
    config = config_from_args(args)
    _emit(convert(args.input_dir, config, args.out), args)
    return EXIT_OK


def _cmd_stitch(args) -> int:
    if not args.z > 0:
        raise UsageError("--z must be positive")
    _emit(stitch_files(args.contour_files, args.z, args.out, args.format), args)
    return EXIT_OK


def _cmd_smooth(args) -> int:
    params = SmoothingParams(args.span, args.method, args.wrap)
    try:
        contours = read_points(args.points_in)
    except OSError as exc:
        raise StageError("parse", str(exc)) from None
    fallbacks = 0
    out = []
    for c in contours:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", SingularFitWarning)
            out.append(smooth_contour(c, params))
        fallbacks += len(caught)
    write_points(args.points_out, out)
    sys.stdout.write(
        format_report(
            {
                "contours": len(out),
                "points_in": [len(c) for c in contours],
                "points_out": [len(c) for c in out],
                "singular_fit_warnings": fallbacks,
            }
        )
    )
    return EXIT_OK


def _cmd_phantom(args) -> int:
    slices = make_phantom(
        args.shape,
        size=args.size,
        n_slices=args.slices,
        radius=args.radius,
        side=args.side,
        major_radius=args.major_radius,
        minor_radius=args.minor_radius,
        slice_thickness_mm=args.thickness,
        bits_stored=args.bits,
    )
    formats = ("pgm", "dicom") if args.format == "both" else (args.format,)
    paths = write_phantom(slices, args.out_dir, formats)
    sys.stdout.write(format_report({"shape": args.shape, "slices": len(slices), "files": len(paths)}))
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        mesh = load_stl(args.stl)
    except OSError as exc:
        raise StageError("parse", str(exc)) from None
    report = audit(mesh)
    _emit(report, args)
    return EXIT_OK if report["watertight"] else EXIT_DATA


_COMMANDS = {
    "convert": _cmd_convert,
    "stitch": _cmd_stitch,
    "smooth": _cmd_smooth,
    "phantom": _cmd_phantom,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    level = os.environ.get("SLICEMESH_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"slicemesh {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"slicemesh {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SliceMeshError as exc:
        print(f"slicemesh {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        log.debug("internal error", exc_info=True)
        print(f"slicemesh {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
