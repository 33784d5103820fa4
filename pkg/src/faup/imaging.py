"""Image front-end: PGM I/O, bilinear resize, Canny edges, landmark patches.

Only 8-bit PGM (binary P5 and ASCII P2) is read or written, keeping the
module free of image codec dependencies.  Pixels are held as float64
luminance in [0, 255].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, PgmError
from .geometry import POINT_NAMES

DEFAULT_WORKING_SIZE = (490, 400)  # (width, height) -> 196000-dim vectors

CANNY_SIGMA = 1.4
CANNY_LOW = 0.1    # fraction of the max gradient magnitude
CANNY_HIGH = 0.3
PATCH_RADIUS = 3


@dataclass(frozen=True)
class Image:
    width: int
    height: int
    pixels: np.ndarray  # (height, width) float64 in [0, 255]

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width):
            raise InvalidInputError(
                f"pixel array {self.pixels.shape} does not match "
                f"{self.height}x{self.width}")


@dataclass(frozen=True)
class EdgeMap:
    width: int
    height: int
    mask: np.ndarray  # (height, width) bool


def make_image(pixels: np.ndarray) -> Image:
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError("pixels must be a non-empty 2-D array")
    return Image(width=arr.shape[1], height=arr.shape[0], pixels=arr)


# ---------------------------------------------------------------------------
# PGM parsing.  Tokens are whitespace separated; '#' starts a comment that
# runs to end of line.  Errors report the byte offset of the failure.
# ---------------------------------------------------------------------------

def _tokenize(data: bytes, count: int, start: int) -> tuple[list[tuple[bytes, int]], int]:
    """Read whitespace-separated tokens, skipping '#' comments.

    Returns (token, byte offset) pairs and the position after the last one.
    """
    tokens: list[tuple[bytes, int]] = []
    pos = start
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos] not in (0x0A, 0x0D):
                pos += 1
            continue
        if pos >= n:
            raise PgmError(f"unexpected end of data at byte {pos}")
        tok_start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append((data[tok_start:pos], tok_start))
    return tokens, pos


def _int_token(token: bytes, offset: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise PgmError(f"non-numeric {what} {token!r} at byte {offset}") from None


def load_pgm(data: bytes) -> Image:
    """Parse binary (P5) or ASCII (P2) PGM bytes with maxval <= 255."""
    if len(data) < 2:
        raise PgmError("not a PGM: shorter than a magic number (byte 0)")
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise PgmError(f"unsupported magic {magic!r} at byte 0")
    header, pos = _tokenize(data, 3, 2)
    width = _int_token(*header[0], "width")
    height = _int_token(*header[1], "height")
    maxval = _int_token(*header[2], "maxval")
    if width <= 0 or height <= 0:
        raise PgmError(f"bad dimensions {width}x{height} in header")
    if maxval > 255 or maxval <= 0:
        raise PgmError(f"maxval {maxval} unsupported (need 1..255)")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        payload = data[pos:pos + count]
        if len(payload) < count:
            raise PgmError(
                f"truncated payload at byte {pos + len(payload)}: "
                f"expected {count} pixels, got {len(payload)}")
        arr = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    else:
        tokens, pos = _tokenize(data, count, pos)
        arr = np.array([_int_token(tok, off, "pixel") for tok, off in tokens],
                       dtype=np.float64)
    if arr.max(initial=0) > maxval:
        raise PgmError(f"pixel value exceeds declared maxval {maxval}")
    return make_image(arr.reshape(height, width))


def read_pgm(path: "str | Path") -> Image:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise PgmError(f"cannot read {path}: {exc}") from exc
    return load_pgm(data)


def pgm_bytes(source: "Image | EdgeMap") -> bytes:
    if isinstance(source, EdgeMap):
        arr = np.where(source.mask, 255, 0).astype(np.uint8)
    else:
        arr = np.clip(np.rint(source.pixels), 0, 255).astype(np.uint8)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode()
    return header + arr.tobytes()


def write_pgm(source: "Image | EdgeMap", path: "str | Path") -> None:
    Path(path).write_bytes(pgm_bytes(source))


# ---------------------------------------------------------------------------
# Resize and vectorization
# ---------------------------------------------------------------------------

def resize(img: Image, width: int, height: int) -> Image:
    """Bilinear resample to width x height (pixel-center convention)."""
    if width < 1 or height < 1:
        raise InvalidInputError("target size must be at least 1x1")
    if width == img.width and height == img.height:
        return make_image(img.pixels.copy())
    src = img.pixels
    x = (np.arange(width) + 0.5) * (img.width / width) - 0.5
    y = (np.arange(height) + 0.5) * (img.height / height) - 0.5
    x = np.clip(x, 0.0, img.width - 1.0)
    y = np.clip(y, 0.0, img.height - 1.0)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    wx = (x - x0)[None, :]
    wy = (y - y0)[:, None]
    top = src[np.ix_(y0, x0)] * (1 - wx) + src[np.ix_(y0, x1)] * wx
    bottom = src[np.ix_(y1, x0)] * (1 - wx) + src[np.ix_(y1, x1)] * wx
    return make_image(top * (1 - wy) + bottom * wy)


def scale_pixel_coords(points: dict[str, tuple[float, float]],
                       from_size: tuple[int, int],
                       to_size: tuple[int, int]) -> dict[str, tuple[float, float]]:
    """Map pixel landmarks through the resize convention above."""
    (w0, h0), (w1, h1) = from_size, to_size
    sx, sy = w1 / w0, h1 / h0
    return {name: ((px + 0.5) * sx - 0.5, (py + 0.5) * sy - 0.5)
            for name, (px, py) in points.items()}


def image_to_vector(img: Image, expected_size: tuple[int, int] | None = None) -> np.ndarray:
    """Row-major flatten scaled to [0, 1]."""
    if expected_size is not None and (img.width, img.height) != tuple(expected_size):
        raise InvalidInputError(
            f"image is {img.width}x{img.height}, expected {expected_size[0]}x{expected_size[1]}")
    return (img.pixels / 255.0).ravel()


def vector_to_image(vec: np.ndarray, size: tuple[int, int]) -> Image:
    width, height = size
    arr = np.asarray(vec, dtype=np.float64)
    if arr.size != width * height:
        raise InvalidInputError(f"vector length {arr.size} != {width}x{height}")
    return make_image(np.clip(arr.reshape(height, width) * 255.0, 0.0, 255.0))


# ---------------------------------------------------------------------------
# Canny edge detection
# ---------------------------------------------------------------------------

def _conv1d(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(arr, pad, mode="reflect")
    out = np.zeros_like(arr)
    for offset, weight in enumerate(kernel):
        if axis == 0:
            out += weight * padded[offset:offset + arr.shape[0], :]
        else:
            out += weight * padded[:, offset:offset + arr.shape[1]]
    return out


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def canny(img: Image, low: float = CANNY_LOW, high: float = CANNY_HIGH,
          sigma: float = CANNY_SIGMA) -> EdgeMap:
    """Gaussian blur, Sobel gradients, 4-direction NMS, hysteresis linking.

    ``low`` and ``high`` are fractions of the maximum gradient magnitude
    (the retained-edge thresholds); hysteresis keeps weak pixels 8-connected
    to a strong pixel.  Border pixels never become edges.
    """
    if not (0.0 <= low <= high):
        raise InvalidInputError(f"need 0 <= low <= high, got low={low} high={high}")
    if sigma <= 0.0:
        raise InvalidInputError("sigma must be positive")

    blurred = img.pixels
    g = _gaussian_kernel(sigma)
    blurred = _conv1d(_conv1d(blurred, g, 0), g, 1)

    smooth = np.array([1.0, 2.0, 1.0])
    diff = np.array([-1.0, 0.0, 1.0])
    gx = _conv1d(_conv1d(blurred, smooth, 0), diff, 1)
    gy = _conv1d(_conv1d(blurred, diff, 0), smooth, 1)
    mag = np.hypot(gx, gy)

    max_mag = float(mag.max(initial=0.0))
    if max_mag <= 0.0:
        return EdgeMap(img.width, img.height, np.zeros_like(mag, dtype=bool))

    # quantize gradient direction to 0/45/90/135 degrees
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    direction = np.zeros(mag.shape, dtype=np.uint8)
    direction[(angle >= 22.5) & (angle < 67.5)] = 1
    direction[(angle >= 67.5) & (angle < 112.5)] = 2
    direction[(angle >= 112.5) & (angle < 157.5)] = 3

    # non-maximum suppression: survive when > one neighbour and >= the other
    # along the gradient so plateau pairs keep a single pixel
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(mag.shape, dtype=bool)
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")
    for d, (dy, dx) in offsets.items():
        fwd = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        back = padded[1 - dy:1 - dy + h, 1 - dx:1 - dx + w]
        sel = direction == d
        keep |= sel & (mag > back) & (mag >= fwd)

    keep[0, :] = keep[-1, :] = False
    keep[:, 0] = keep[:, -1] = False

    strong = keep & (mag >= high * max_mag)
    weak = keep & (mag >= low * max_mag)

    # hysteresis: grow the strong set through 8-connected weak pixels
    linked = strong.copy()
    for _ in range(h * w):
        grown = linked.copy()
        grown[1:, :] |= linked[:-1, :]
        grown[:-1, :] |= linked[1:, :]
        grown[:, 1:] |= linked[:, :-1]
        grown[:, :-1] |= linked[:, 1:]
        grown[1:, 1:] |= linked[:-1, :-1]
        grown[1:, :-1] |= linked[:-1, 1:]
        grown[:-1, 1:] |= linked[1:, :-1]
        grown[:-1, :-1] |= linked[1:, 1:]
        grown &= weak
        grown |= linked
        if np.array_equal(grown, linked):
            break
        linked = grown
    return EdgeMap(img.width, img.height, linked)


# ---------------------------------------------------------------------------
# Landmark patches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Patch:
    center_id: str
    center: tuple[float, float]   # pixel coordinates
    radius: int
    values: np.ndarray            # (2r+1)^2 floats, zero-padded at borders


def extract_patch(grid: np.ndarray, center: tuple[float, float], radius: int,
                  center_id: str = "") -> Patch:
    h, w = grid.shape
    cx = int(round(center[0]))
    cy = int(round(center[1]))
    size = 2 * radius + 1
    window = np.zeros((size, size), dtype=np.float64)
    y0, y1 = cy - radius, cy + radius + 1
    x0, x1 = cx - radius, cx + radius + 1
    sy0, sy1 = max(y0, 0), min(y1, h)
    sx0, sx1 = max(x0, 0), min(x1, w)
    if sy0 < sy1 and sx0 < sx1:
        window[sy0 - y0:sy1 - y0, sx0 - x0:sx1 - x0] = grid[sy0:sy1, sx0:sx1]
    return Patch(center_id, (float(center[0]), float(center[1])), radius,
                 window.ravel())


def extract_patches(source: "EdgeMap | Image",
                    landmarks_px: dict[str, tuple[float, float]],
                    monitored: "frozenset[str] | set[str]",
                    radius: int = PATCH_RADIUS) -> np.ndarray:
    """Concatenated pixel windows around the monitored points.

    Points follow canonical order; windows have fixed size (2r+1)^2 with
    zero padding beyond the image border, so the output length is exactly
    len(monitored) * (2r+1)^2.  Edge-map sources yield 0/1 values,
    luminance sources values in [0, 1].
    """
    if not monitored:
        raise InvalidInputError("monitored point set must be non-empty")
    if radius < 1:
        raise InvalidInputError("radius must be at least 1")
    unknown = set(monitored) - set(POINT_NAMES)
    if unknown:
        raise InvalidInputError(f"unknown points: {sorted(unknown)}")
    if isinstance(source, EdgeMap):
        grid = source.mask.astype(np.float64)
    else:
        grid = source.pixels / 255.0
    parts = []
    for name in POINT_NAMES:
        if name not in monitored:
            continue
        if name not in landmarks_px:
            raise InvalidInputError(f"no pixel coordinate for point {name}")
        parts.append(extract_patch(grid, landmarks_px[name], radius, name).values)
    return np.concatenate(parts)
