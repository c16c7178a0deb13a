"""Slice readers: a strict subset of DICOM CT plus binary PGM.

Only uncompressed little-endian transfer syntaxes are accepted. Every length
field is checked against the remaining buffer before use, so arbitrary byte
sequences produce either a :class:`SliceImage` or a :class:`DicomError`.
"""

from __future__ import annotations

import math
import os
import re
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    DicomError,
    InvalidWindow,
    LengthMismatch,
    MalformedHeader,
    MissingTag,
    TruncatedFile,
    TruncatedPixelData,
    UnsupportedTransferSyntax,
)

IMPLICIT_LE = "1.2.840.10008.1.2"
EXPLICIT_LE = "1.2.840.10008.1.2.1"
CT_IMAGE_STORAGE = "1.2.840.10008.5.1.4.1.1.2"

DEFAULT_SLICE_THICKNESS_MM = 1.5

ROWS = (0x0028, 0x0010)
COLUMNS = (0x0028, 0x0011)
PIXEL_SPACING = (0x0028, 0x0030)
BITS_ALLOCATED = (0x0028, 0x0100)
BITS_STORED = (0x0028, 0x0101)
PIXEL_REPRESENTATION = (0x0028, 0x0103)
RESCALE_INTERCEPT = (0x0028, 0x1052)
RESCALE_SLOPE = (0x0028, 0x1053)
SLICE_THICKNESS = (0x0018, 0x0050)
PIXEL_DATA = (0x7FE0, 0x0010)
TRANSFER_SYNTAX = (0x0002, 0x0010)

_REQUIRED = {
    ROWS: "Rows",
    COLUMNS: "Columns",
    BITS_ALLOCATED: "BitsAllocated",
    BITS_STORED: "BitsStored",
    PIXEL_REPRESENTATION: "PixelRepresentation",
    RESCALE_INTERCEPT: "RescaleIntercept",
    RESCALE_SLOPE: "RescaleSlope",
    SLICE_THICKNESS: "SliceThickness",
    PIXEL_DATA: "PixelData",
}
_WANTED = set(_REQUIRED) | {PIXEL_SPACING, TRANSFER_SYNTAX}

# explicit VRs whose length field is 4 bytes after 2 reserved bytes
_LONG_VRS = {b"OB", b"OD", b"OF", b"OL", b"OV", b"OW", b"SQ", b"SV", b"UC", b"UN", b"UR", b"UT", b"UV"}
_UNDEFINED = 0xFFFFFFFF
_ITEM = (0xFFFE, 0xE000)
_ITEM_END = (0xFFFE, 0xE00D)
_SEQ_END = (0xFFFE, 0xE0DD)
_MAX_DEPTH = 16


@dataclass(frozen=True)
class SliceImage:
    """One CT slice in Hounsfield units.

    ``pixels`` has shape ``(height, width)``; row ``0`` is the first stored row.
    """

    pixels: np.ndarray
    bits_stored: int = 16
    slice_thickness_mm: float = DEFAULT_SLICE_THICKNESS_MM
    slice_index: int = 0
    pixel_spacing_mm: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] == 0 or px.shape[1] == 0:
            raise ValueError(f"pixels must be a non-empty 2-D grid, got shape {px.shape}")
        if not 8 <= self.bits_stored <= 16:
            raise ValueError(f"bits_stored must be in [8, 16], got {self.bits_stored}")
        if not self.slice_thickness_mm > 0:
            raise ValueError("slice_thickness_mm must be positive")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class DicomMeta:
    rows: int
    columns: int
    bits_allocated: int
    bits_stored: int
    pixel_representation: int
    rescale_slope: float
    rescale_intercept: float
    slice_thickness_mm: float
    transfer_syntax: str = "implicit-VR-little-endian"
    pixel_spacing_mm: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.rescale_slope == 0:
            raise DicomError("RescaleSlope must be non-zero")
        if self.bits_stored > self.bits_allocated:
            raise DicomError(
                f"BitsStored {self.bits_stored} exceeds BitsAllocated {self.bits_allocated}"
            )


class _Reader:
    """Bounds-checked cursor over a byte buffer."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def take(self, n: int) -> bytes:
        if n < 0 or n > self.remaining():
            raise TruncatedFile(
                f"need {n} bytes at offset {self.pos}, only {self.remaining()} left"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def tag(self) -> tuple[int, int]:
        group, elem = struct.unpack("<HH", self.take(4))
        return group, elem


def _element_header(r: _Reader, explicit: bool) -> tuple[tuple[int, int], bytes | None, int]:
    tag = r.tag()
    if tag[0] == 0xFFFE:
        # item / delimiters never carry a VR
        (length,) = struct.unpack("<I", r.take(4))
        return tag, None, length
    if explicit:
        vr = r.take(2)
        if vr in _LONG_VRS:
            r.take(2)
            (length,) = struct.unpack("<I", r.take(4))
        else:
            if not (vr.isalpha() and vr.isupper()):
                raise DicomError(f"invalid VR {vr!r} for tag ({tag[0]:04X},{tag[1]:04X})")
            (length,) = struct.unpack("<H", r.take(2))
        return tag, vr, length
    (length,) = struct.unpack("<I", r.take(4))
    return tag, None, length


def _skip_undefined(r: _Reader, explicit: bool, depth: int) -> None:
    """Skip an undefined-length sequence up to and including its delimiter."""
    if depth > _MAX_DEPTH:
        raise DicomError("sequence nesting too deep")
    while True:
        tag, _, length = _element_header(r, explicit)
        if tag == _SEQ_END:
            return
        if tag != _ITEM:
            raise DicomError(f"expected item tag in sequence, got ({tag[0]:04X},{tag[1]:04X})")
        if length != _UNDEFINED:
            r.take(length)
            continue
        # undefined-length item: elements until the item delimiter
        while True:
            etag, _, elen = _element_header(r, explicit)
            if etag == _ITEM_END:
                break
            if elen == _UNDEFINED:
                _skip_undefined(r, explicit, depth + 1)
            else:
                r.take(elen)


def _read_elements(r: _Reader, explicit: bool, stop_after_group2: bool = False) -> dict:
    found: dict[tuple[int, int], bytes] = {}
    while r.remaining() > 0:
        if stop_after_group2:
            if r.remaining() < 2 or struct.unpack_from("<H", r.data, r.pos)[0] != 0x0002:
                break
        tag, vr, length = _element_header(r, explicit)
        if length == _UNDEFINED:
            if tag == PIXEL_DATA:
                raise UnsupportedTransferSyntax("encapsulated (compressed) pixel data is not supported")
            _skip_undefined(r, explicit, 0)
            continue
        value = r.take(length)
        if tag in _WANTED:
            found[tag] = value
        if tag == PIXEL_DATA:
            break
    return found


def _us(found: dict, tag: tuple[int, int]) -> int:
    raw = found[tag]
    if len(raw) < 2:
        raise DicomError(f"tag ({tag[0]:04X},{tag[1]:04X}) too short for US")
    return struct.unpack_from("<H", raw)[0]


def _ds(found: dict, tag: tuple[int, int]) -> list[float]:
    text = found[tag].decode("ascii", errors="replace").strip("\x00 ")
    try:
        values = [float(v) for v in text.split("\\")]
    except ValueError:
        raise DicomError(f"tag ({tag[0]:04X},{tag[1]:04X}) is not a decimal string: {text!r}") from None
    if not all(math.isfinite(v) for v in values):
        raise DicomError(f"tag ({tag[0]:04X},{tag[1]:04X}) is not finite: {text!r}")
    return values


def _looks_explicit(data: bytes, pos: int) -> bool:
    vr = data[pos + 4 : pos + 6]
    return len(vr) == 2 and vr.isalpha() and vr.isupper()


def _parse(data: bytes) -> tuple[DicomMeta, bytes]:
    data = bytes(data)
    if len(data) >= 132 and data[128:132] == b"DICM":
        r = _Reader(data, 132)
        meta_group = _read_elements(r, explicit=True, stop_after_group2=True)
        if TRANSFER_SYNTAX not in meta_group:
            raise MissingTag(TRANSFER_SYNTAX, "TransferSyntaxUID")
        uid = meta_group[TRANSFER_SYNTAX].decode("ascii", errors="replace").strip("\x00 ")
        if uid == IMPLICIT_LE:
            explicit = False
        elif uid == EXPLICIT_LE:
            explicit = True
        else:
            raise UnsupportedTransferSyntax(f"transfer syntax {uid} is not supported")
    else:
        if len(data) < 8:
            raise TruncatedFile("file too short to hold a data element")
        r = _Reader(data, 0)
        explicit = _looks_explicit(data, 0)
    found = _read_elements(r, explicit)

    for tag, name in _REQUIRED.items():
        if tag not in found:
            raise MissingTag(tag, name)
    spacing = (1.0, 1.0)
    if PIXEL_SPACING in found:
        values = _ds(found, PIXEL_SPACING)
        if len(values) >= 2 and values[0] > 0 and values[1] > 0:
            spacing = (values[0], values[1])
    meta = DicomMeta(
        rows=_us(found, ROWS),
        columns=_us(found, COLUMNS),
        bits_allocated=_us(found, BITS_ALLOCATED),
        bits_stored=_us(found, BITS_STORED),
        pixel_representation=_us(found, PIXEL_REPRESENTATION),
        rescale_slope=_ds(found, RESCALE_SLOPE)[0],
        rescale_intercept=_ds(found, RESCALE_INTERCEPT)[0],
        slice_thickness_mm=_ds(found, SLICE_THICKNESS)[0],
        transfer_syntax="explicit-VR-little-endian" if explicit else "implicit-VR-little-endian",
        pixel_spacing_mm=spacing,
    )
    return meta, found[PIXEL_DATA]


def parse_dicom_meta(data: bytes) -> DicomMeta:
    """Parse only the header fields of a DICOM slice."""
    return _parse(data)[0]


def parse_dicom(data: bytes, slice_index: int = 0) -> SliceImage:
    """Decode a single-frame uncompressed CT DICOM file into Hounsfield units.

    Accepts files with the 128-byte preamble and ``DICM`` magic, or raw data
    sets starting at the first element. Stored values are masked to
    ``BitsStored`` (sign-extended when ``PixelRepresentation`` is 1) and then
    rescaled with ``value * RescaleSlope + RescaleIntercept``.
    """
    meta, raw = _parse(data)
    if meta.rows == 0 or meta.columns == 0:
        raise DicomError("image has zero rows or columns")
    if meta.bits_allocated not in (8, 16):
        raise UnsupportedTransferSyntax(f"BitsAllocated {meta.bits_allocated} is not supported")
    if not 1 <= meta.bits_stored <= meta.bits_allocated:
        raise DicomError(f"BitsStored {meta.bits_stored} out of range")
    if meta.pixel_representation not in (0, 1):
        raise DicomError(f"PixelRepresentation {meta.pixel_representation} is invalid")
    if not meta.slice_thickness_mm > 0:
        raise DicomError(f"SliceThickness {meta.slice_thickness_mm} must be positive")

    count = meta.rows * meta.columns
    nbytes = count * (meta.bits_allocated // 8)
    # odd-length values are padded to even length with one byte
    if len(raw) != nbytes and not (nbytes % 2 == 1 and len(raw) == nbytes + 1):
        raise LengthMismatch(f"PixelData has {len(raw)} bytes, expected {nbytes}")

    dtype = "<u2" if meta.bits_allocated == 16 else "u1"
    stored = np.frombuffer(raw, dtype=dtype, count=count).astype(np.int64)
    stored &= (1 << meta.bits_stored) - 1
    if meta.pixel_representation == 1:
        sign = 1 << (meta.bits_stored - 1)
        stored = (stored ^ sign) - sign

    slope, intercept = meta.rescale_slope, meta.rescale_intercept
    if float(slope).is_integer() and float(intercept).is_integer():
        hu = stored * int(slope) + int(intercept)
        hu = hu.astype(np.int32 if np.abs(hu).max(initial=0) < 2**31 else np.int64)
    else:
        hu = stored * slope + intercept
    return SliceImage(
        pixels=hu.reshape(meta.rows, meta.columns),
        bits_stored=min(max(meta.bits_stored, 8), 16),
        slice_thickness_mm=meta.slice_thickness_mm,
        slice_index=slice_index,
        pixel_spacing_mm=meta.pixel_spacing_mm,
    )


def _element(tag, vr: bytes, value: bytes) -> bytes:
    if len(value) % 2:
        value += b"\x00" if vr in (b"UI", b"OB", b"OW") else b" "
    head = struct.pack("<HH", *tag) + vr
    if vr in _LONG_VRS:
        return head + b"\x00\x00" + struct.pack("<I", len(value)) + value
    return head + struct.pack("<H", len(value)) + value


def _ds_text(value: float) -> bytes:
    text = repr(float(value))
    if text.endswith(".0"):
        text = text[:-2]
    if len(text) > 16:
        text = f"{value:.10g}"
    return text.encode("ascii")


def write_dicom(
    image: SliceImage,
    *,
    rescale_slope: float = 1.0,
    rescale_intercept: float = -1024.0,
) -> bytes:
    """Encode a slice as a minimal explicit-VR little-endian CT DICOM file.

    HU values are stored as unsigned ``(hu - intercept) / slope`` in 16-bit
    words with ``image.bits_stored`` significant bits.
    """
    stored = np.rint((np.asarray(image.pixels, dtype=np.float64) - rescale_intercept) / rescale_slope)
    top = (1 << image.bits_stored) - 1
    if stored.min(initial=0) < 0 or stored.max(initial=0) > top:
        raise ValueError(
            f"HU range [{image.pixels.min()}, {image.pixels.max()}] does not fit "
            f"{image.bits_stored} bits with slope {rescale_slope}, intercept {rescale_intercept}"
        )
    pixel_bytes = stored.astype("<u2").tobytes()

    meta = (
        _element((0x0002, 0x0001), b"OB", b"\x00\x01")
        + _element((0x0002, 0x0002), b"UI", CT_IMAGE_STORAGE.encode())
        + _element(TRANSFER_SYNTAX, b"UI", EXPLICIT_LE.encode())
    )
    group_length = _element((0x0002, 0x0000), b"UL", struct.pack("<I", len(meta)))
    row_mm, col_mm = image.pixel_spacing_mm
    body = (
        _element((0x0008, 0x0060), b"CS", b"CT")
        + _element(SLICE_THICKNESS, b"DS", _ds_text(image.slice_thickness_mm))
        + _element((0x0020, 0x0013), b"IS", str(image.slice_index).encode())
        + _element((0x0028, 0x0002), b"US", struct.pack("<H", 1))
        + _element((0x0028, 0x0004), b"CS", b"MONOCHROME2")
        + _element(ROWS, b"US", struct.pack("<H", image.height))
        + _element(COLUMNS, b"US", struct.pack("<H", image.width))
        + _element(PIXEL_SPACING, b"DS", _ds_text(row_mm) + b"\\" + _ds_text(col_mm))
        + _element(BITS_ALLOCATED, b"US", struct.pack("<H", 16))
        + _element(BITS_STORED, b"US", struct.pack("<H", image.bits_stored))
        + _element((0x0028, 0x0102), b"US", struct.pack("<H", image.bits_stored - 1))
        + _element(PIXEL_REPRESENTATION, b"US", struct.pack("<H", 0))
        + _element(RESCALE_INTERCEPT, b"DS", _ds_text(rescale_intercept))
        + _element(RESCALE_SLOPE, b"DS", _ds_text(rescale_slope))
        + _element(PIXEL_DATA, b"OW", pixel_bytes)
    )
    return b"\x00" * 128 + b"DICM" + group_length + meta + body


# -- PGM ----------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def parse_pgm(
    data: bytes,
    slice_thickness_mm: float = DEFAULT_SLICE_THICKNESS_MM,
    slice_index: int = 0,
) -> SliceImage:
    """Read a binary (P5) PGM; sample values are taken verbatim as HU."""
    data = bytes(data)
    pos = 0
    tokens = []
    for _ in range(4):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise MalformedHeader("PGM header is incomplete")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise MalformedHeader(f"unsupported PGM magic {tokens[0][:8]!r}; only binary P5 is accepted")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeader("PGM width, height and maxval must be integers") from None
    if width <= 0 or height <= 0:
        raise MalformedHeader(f"invalid PGM size {width}x{height}")
    if not 0 < maxval <= 65535:
        raise MalformedHeader(f"PGM maxval {maxval} out of range")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MalformedHeader("PGM header must end with a single whitespace byte")
    pos += 1

    wide = maxval > 255
    count = width * height
    nbytes = count * (2 if wide else 1)
    if len(data) - pos < nbytes:
        raise TruncatedPixelData(f"PGM pixel data has {len(data) - pos} bytes, expected {nbytes}")
    pixels = np.frombuffer(data, dtype=">u2" if wide else "u1", count=count, offset=pos)
    return SliceImage(
        pixels=pixels.astype(np.int32).reshape(height, width),
        bits_stored=min(max(maxval.bit_length(), 8), 16),
        slice_thickness_mm=slice_thickness_mm,
        slice_index=slice_index,
    )


def write_pgm(image: SliceImage) -> bytes:
    """Encode a slice as binary PGM with ``maxval = 2**bits_stored - 1``.

    Only non-negative integral HU values are representable.
    """
    px = np.asarray(image.pixels)
    maxval = (1 << image.bits_stored) - 1
    if not np.all(np.equal(np.mod(px, 1), 0)):
        raise ValueError("PGM can only store integral sample values")
    if px.min(initial=0) < 0 or px.max(initial=0) > maxval:
        raise ValueError(f"sample values must lie in [0, {maxval}] for PGM output")
    header = f"P5\n{image.width} {image.height}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else "u1"
    return header + px.astype(dtype).tobytes()


# -- gray mapping and directory loading ---------------------------------------


def hu_to_gray(image: SliceImage, window_min: float = -1024.0, window_max: float = 3071.0) -> SliceImage:
    """Clamp HU to ``[window_min, window_max]`` and map linearly onto 0..255.

    Rounds half up, so the window midpoint maps to 128.
    """
    if not window_min < window_max:
        raise InvalidWindow(f"window_min {window_min} must be below window_max {window_max}")
    hu = np.clip(np.asarray(image.pixels, dtype=np.float64), window_min, window_max)
    scaled = (hu - window_min) / (window_max - window_min) * 255.0
    gray = np.floor(scaled + 0.5).astype(np.int32)
    return replace(image, pixels=gray, bits_stored=8)


SLICE_EXTENSIONS = (".dcm", ".pgm")


def list_slice_files(directory: str | os.PathLike) -> list[Path]:
    """Slice files in lexicographic order.

    DICOM files win when both kinds are present, so a directory written with
    both encodings is not read twice.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DicomError(f"{directory} is not a directory")
    files = [p for p in directory.iterdir() if p.is_file()]
    for ext in SLICE_EXTENSIONS:
        chosen = sorted((p for p in files if p.suffix.lower() == ext), key=lambda p: p.name)
        if chosen:
            return chosen
    return []


def read_slice(
    path: str | os.PathLike,
    slice_index: int = 0,
    default_thickness_mm: float = DEFAULT_SLICE_THICKNESS_MM,
) -> SliceImage:
    path = Path(path)
    data = path.read_bytes()
    if path.suffix.lower() == ".pgm":
        return parse_pgm(data, slice_thickness_mm=default_thickness_mm, slice_index=slice_index)
    return parse_dicom(data, slice_index=slice_index)


__all__ = [
    "DicomMeta",
    "SliceImage",
    "hu_to_gray",
    "list_slice_files",
    "parse_dicom",
    "parse_dicom_meta",
    "parse_pgm",
    "read_slice",
    "write_dicom",
    "write_pgm",
]
