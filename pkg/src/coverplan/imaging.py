"""
Outer-boundary extraction from grayscale map images.

Only netpbm graymaps are read (binary ``P5`` and ASCII ``P2``); convert other
formats beforehand, e.g. ``convert map.png -colorspace Gray map.pgm``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy import ndimage

from .geometry import GeometryError, Polygon
from .raster import RasterGrid, boundary_chain, simplify_closed


class ImageFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray  # uint8, shape (height, width), row 0 at the top

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ImageFormatError("gray image must be 2-D")
        px = px.astype(np.uint8, copy=True)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(data: bytes, count: int):
    """First ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        m = _TOKEN.match(data, pos)
        if not m:
            raise ImageFormatError("malformed PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def parse_pgm(data: bytes) -> GrayImage:
    magic = data[:2]
    if magic in (b"P1", b"P3", b"P4", b"P6", b"P7"):
        raise ImageFormatError(f"unsupported image format {magic.decode()} (grayscale PGM only)")
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError("not a PGM file")
    try:
        (_, w, h, maxval), pos = _header_tokens(data, 4)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise ImageFormatError("malformed PGM header") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise ImageFormatError("malformed PGM header")
    n = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        payload = data[pos:]
        if len(payload) < n * dtype.itemsize:
            raise ImageFormatError("truncated PGM payload")
        values = np.frombuffer(payload, dtype=dtype, count=n).astype(np.int64)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(body) < n:
            raise ImageFormatError("truncated PGM payload")
        try:
            values = np.array([int(t) for t in body[:n]], dtype=np.int64)
        except ValueError:
            raise ImageFormatError("non-integer PGM sample") from None
    if values.max(initial=0) > maxval:
        raise ImageFormatError("PGM sample exceeds maxval")
    if maxval != 255:
        values = np.rint(values * (255.0 / maxval)).astype(np.int64)
    return GrayImage(values.reshape(height, width))


def load_image(path: Union[str, Path]) -> GrayImage:
    return parse_pgm(Path(path).read_bytes())


def write_pgm(img: GrayImage, path: Union[str, Path], binary: bool = True) -> None:
    h, w = img.pixels.shape
    if binary:
        Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + img.pixels.tobytes())
    else:
        rows = "\n".join(" ".join(str(v) for v in row) for row in img.pixels)
        Path(path).write_text(f"P2\n{w} {h}\n255\n{rows}\n")


def threshold_segment(img: GrayImage, threshold: int, scale: float = 1.0, dark: bool = True) -> RasterGrid:
    """Binary region mask: pixels at or below ``threshold`` (or above, if not ``dark``).

    The raster is flipped so that image row 0 becomes the top row (largest y),
    and each pixel maps to a ``scale`` x ``scale`` meter cell.
    """
    px = img.pixels[::-1]
    mask = px <= threshold if dark else px > threshold
    return RasterGrid((0.0, 0.0), scale, mask)


def largest_component(cells: np.ndarray) -> np.ndarray:
    labels, count = ndimage.label(cells)
    if count == 0:
        raise GeometryError("segmentation is empty")
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (1 + int(np.argmax(sizes)))


def extract_boundary(grid: RasterGrid, simplify_tol: float) -> Polygon:
    """Counter-clockwise outer contour of the largest 4-connected region.

    The contour runs along pixel edges, so its area matches the region's
    pixel area (holes included). ``simplify_tol`` is in meters; 0 keeps one
    vertex per boundary edge.
    """
    region = largest_component(grid.cells)
    corners, _ = boundary_chain(region)
    pts = np.asarray(grid.origin) + corners * grid.cell_size
    pts = simplify_closed(pts, simplify_tol, keep_first=False)
    return Polygon(pts)
