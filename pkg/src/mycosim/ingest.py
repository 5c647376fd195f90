"""
Image to conductive-grid conversion.

A photograph (or drawing) of a mycelium network is thresholded into a boolean
mask, thickened by morphological dilation and block-projected onto the node
lattice used by the FitzHugh-Nagumo engine.

Grid file layout (``MYCOGRID1``), UTF-8 text::

    MYCOGRID1
    rows <int>
    cols <int>
    source <free text>
    rule <free text>
    data
    <run lengths, whitespace separated>

Run lengths describe the row-major mask, alternating between non-conductive
and conductive runs and always starting with a non-conductive run (which may
have length 0).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import EmptyDomainError, GridFormatError, ImageDecodeError

GRID_MAGIC = "MYCOGRID1"

# 4-connectivity: the neighbour graph of the five-node Laplacian
FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class RgbImage:
    pixels: np.ndarray  # (height, width, 3) uint8
    source: str = "<memory>"

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"pixels must have shape (height, width, 3), got {px.shape}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise ImageDecodeError("zero-dimension image")
        object.__setattr__(self, "pixels", px.astype(np.uint8, copy=False))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


@dataclass(frozen=True)
class ThresholdRule:
    r_min: int = 170
    g_min: int = 170
    b_max: int = 200

    def __post_init__(self):
        for name in ("r_min", "g_min", "b_max"):
            value = getattr(self, name)
            if not 0 <= value <= 255:
                raise ValueError(f"{name} must be in [0, 255], got {value}")

    def describe(self):
        return f"r>{self.r_min} g>{self.g_min} b<{self.b_max}"


@dataclass(frozen=True)
class ConductiveGrid:
    mask: np.ndarray  # (rows, cols) bool
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2:
            raise ValueError("mask must be 2-D")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def rows(self):
        return self.mask.shape[0]

    @property
    def cols(self):
        return self.mask.shape[1]

    @property
    def shape(self):
        return self.mask.shape

    @property
    def n_conductive(self):
        return int(self.mask.sum())

    def require_nonempty(self):
        if self.n_conductive == 0:
            raise EmptyDomainError("empty domain: grid has no conductive nodes")


def load_image(path) -> RgbImage:
    """Decode a PNG or binary PPM (P6) file. Any alpha channel is dropped."""
    path = os.fspath(path)
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "PPM"):
                raise ImageDecodeError(f"{path}: unsupported format {im.format!r} (PNG or PPM expected)")
            im.load()
            if im.mode in ("RGB", "RGBA", "P", "L", "LA"):
                rgb = im.convert("RGB")
            else:
                raise ImageDecodeError(f"{path}: unsupported pixel mode {im.mode!r}")
            pixels = np.array(rgb, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except UnidentifiedImageError as exc:
        raise ImageDecodeError(f"{path}: not a decodable image") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        if isinstance(exc, ImageDecodeError):
            raise
        raise ImageDecodeError(f"{path}: decode error: {exc}") from exc
    return RgbImage(pixels, source=os.path.basename(path))


def threshold_to_mask(img: RgbImage, rule: ThresholdRule = ThresholdRule()) -> np.ndarray:
    px = img.pixels
    return (px[..., 0] > rule.r_min) & (px[..., 1] > rule.g_min) & (px[..., 2] < rule.b_max)


def dilate(mask, iterations=1):
    """Binary dilation with the 3x3 (8-neighbour) structuring element.

    ``iterations=0`` returns an unchanged copy; scipy would otherwise read 0 as
    "repeat until stable".
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    if iterations == 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=EIGHT_CONNECTED, iterations=iterations)


def resolve_transpose(source_shape, target_shape, mode="auto"):
    """Decide whether the source mask is transposed before projection.

    ``auto`` transposes when one shape is portrait and the other landscape.
    """
    if mode in ("on", True):
        return True
    if mode in ("off", False):
        return False
    if mode != "auto":
        raise ValueError(f"transpose mode must be auto|on|off, got {mode!r}")
    src_portrait = source_shape[0] > source_shape[1]
    tgt_portrait = target_shape[0] > target_shape[1]
    return src_portrait != tgt_portrait


def _block_edges(n_source, n_target):
    k = np.arange(n_target)
    lo = (k * n_source) // n_target
    hi = -((-(k + 1) * n_source) // n_target)  # ceil
    return lo, hi


def project_to_grid(mask, target_rows, target_cols, provenance=None) -> ConductiveGrid:
    """Block-project a mask onto a ``target_rows x target_cols`` lattice.

    Target node (i, j) covers source rows ``[floor(i*H/R), ceil((i+1)*H/R))``
    and the analogous column range; it is conductive if any source pixel in
    that rectangle is. Works for both down- and up-sampling.
    """
    if target_rows <= 0 or target_cols <= 0:
        raise ValueError("target dimensions must be positive")
    mask = np.asarray(mask, dtype=bool)
    H, W = mask.shape
    r_lo, r_hi = _block_edges(H, target_rows)
    c_lo, c_hi = _block_edges(W, target_cols)
    # summed-area table, padded with a leading zero row/column
    sat = np.zeros((H + 1, W + 1), dtype=np.int64)
    sat[1:, 1:] = mask.cumsum(0).cumsum(1)
    R0, C0 = r_lo[:, None], c_lo[None, :]
    R1, C1 = r_hi[:, None], c_hi[None, :]
    counts = sat[R1, C1] - sat[R0, C1] - sat[R1, C0] + sat[R0, C0]
    return ConductiveGrid(counts > 0, provenance=dict(provenance or {}))


def connected_components(grid):
    """Label 4-connected conductive clusters.

    Returns
    -------
    labels : (rows, cols) int array, -1 on non-conductive nodes and dense
        component ids from 0 elsewhere (ordered by first node in row-major order).
    sizes : int array, node count per component.
    """
    mask = grid.mask if isinstance(grid, ConductiveGrid) else np.asarray(grid, dtype=bool)
    labels, n = ndimage.label(mask, structure=FOUR_CONNECTED)
    sizes = np.bincount(labels.ravel(), minlength=n + 1)[1:]
    return labels.astype(np.int64) - 1, sizes.astype(np.int64)


def ingest(img, rule=ThresholdRule(), dilate_iterations=1, rows=364, cols=985,
           transpose="auto"):
    """Threshold, dilate and project an image; returns ``(grid, stage_counts)``.

    ``stage_counts`` lists the conductive-pixel count after each stage.
    """
    mask = threshold_to_mask(img, rule)
    counts = {"threshold": int(mask.sum())}
    mask = dilate(mask, dilate_iterations)
    counts["dilate"] = int(mask.sum())
    flip = resolve_transpose(mask.shape, (rows, cols), transpose)
    if flip:
        mask = mask.T
    provenance = {
        "source": img.source,
        "rule": rule.describe(),
        "dilate": dilate_iterations,
        "transpose": "on" if flip else "off",
    }
    grid = project_to_grid(mask, rows, cols, provenance)
    counts["project"] = grid.n_conductive
    return grid, counts


# -- serialisation ------------------------------------------------------------

def _run_lengths(flat):
    flat = flat.astype(np.int8)
    change = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        runs.insert(0, 0)
    return runs


def write_grid(grid, path):
    runs = _run_lengths(grid.mask.ravel())
    prov = grid.provenance
    lines = [
        GRID_MAGIC,
        f"rows {grid.rows}",
        f"cols {grid.cols}",
        f"source {prov.get('source', 'unknown')}",
        "rule " + " ".join(f"{k}={v}" for k, v in sorted(prov.items()) if k != "source"),
        "data",
    ]
    body = []
    for i in range(0, len(runs), 20):
        body.append(" ".join(str(r) for r in runs[i:i + 20]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines + body) + "\n")


def read_grid(path) -> ConductiveGrid:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != GRID_MAGIC:
        raise GridFormatError(f"{path}: missing {GRID_MAGIC} header")
    header = {}
    i = 1
    while i < len(lines) and lines[i].strip() != "data":
        key, _, value = lines[i].partition(" ")
        header[key] = value.strip()
        i += 1
    if i == len(lines):
        raise GridFormatError(f"{path}: no data section")
    try:
        rows, cols = int(header["rows"]), int(header["cols"])
        runs = [int(tok) for tok in " ".join(lines[i + 1:]).split()]
    except (KeyError, ValueError) as exc:
        raise GridFormatError(f"{path}: bad header or run lengths ({exc})") from exc
    if rows <= 0 or cols <= 0 or any(r < 0 for r in runs) or sum(runs) != rows * cols:
        raise GridFormatError(f"{path}: run lengths do not cover {rows}x{cols} nodes")
    values = np.arange(len(runs)) % 2 == 1
    flat = np.repeat(values, runs)
    provenance = {"source": header.get("source", "unknown")}
    for item in header.get("rule", "").split():
        k, _, v = item.partition("=")
        provenance[k] = v
    return ConductiveGrid(flat.reshape(rows, cols), provenance=provenance)


def write_pgm(mask, path):
    """Binary PGM (P5): 0 = non-conductive, 255 = conductive."""
    mask = np.asarray(mask, dtype=bool)
    data = np.where(mask, 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{mask.shape[1]} {mask.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
