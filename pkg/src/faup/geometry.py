"""24-point geometric face model: normalization and intensity differencing.

The model tracks 24 named 2D feature points on brows, eyes and mouth.
A face is normalized by re-centering on the midpoint of the inner eye
corners, rotating the inter-ocular axis onto the x-axis and dividing by
the inter-ocular distance, which pins el1 to (-0.5, 0) and er1 to
(0.5, 0).  The result is invariant under similarity transforms of the
input (translation, rotation, uniform positive scaling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError, LandmarkFileError

# Canonical point order.  Feature vectors, landmark files written by this
# package and the scalar series fed to cumulative_diff all use this order.
POINT_NAMES: tuple[str, ...] = (
    "bl1", "bl2", "bl3",
    "br1", "br2", "br3",
    "el1", "el2", "el3", "el4",
    "er1", "er2", "er3", "er4",
    "ml1", "ml2", "ml3",
    "mm1", "mm2", "mm3", "mm4",
    "mr1", "mr2", "mr3",
)

POINT_INDEX: dict[str, int] = {name: i for i, name in enumerate(POINT_NAMES)}

# Role partition.  The stable inner eye corners are pinned by
# normalization; passive points carry no significant muscle movement;
# the remaining 18 points are active.
STABLE_POINTS = frozenset({"er1", "el1"})
PASSIVE_POINTS = frozenset({"er4", "el4", "mr2", "ml2"})
ACTIVE_POINTS = frozenset(POINT_NAMES) - STABLE_POINTS - PASSIVE_POINTS

_EL1 = POINT_INDEX["el1"]
_ER1 = POINT_INDEX["er1"]

_EPS = 1e-12


class FaceModel:
    """Immutable set of the 24 feature points.

    Coordinates are stored as a read-only (24, 2) float array in canonical
    point order.  ``frame_tag`` optionally records a sequence index.
    """

    __slots__ = ("coords", "frame_tag")

    def __init__(self, coords: np.ndarray, frame_tag: int | None = None):
        arr = np.asarray(coords, dtype=np.float64)
        if arr.shape != (24, 2):
            raise InvalidInputError(f"expected (24, 2) coordinates, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("face coordinates must be finite")
        if np.all(arr[_EL1] == arr[_ER1]):
            raise DegenerateGeometryError("inner eye corners el1 and er1 coincide")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)
        object.__setattr__(self, "frame_tag", frame_tag)

    def __setattr__(self, name, value):
        raise AttributeError("FaceModel is immutable")

    @classmethod
    def from_points(cls, points: dict[str, tuple[float, float]],
                    frame_tag: int | None = None) -> "FaceModel":
        missing = set(POINT_NAMES) - set(points)
        extra = set(points) - set(POINT_NAMES)
        if missing or extra:
            raise InvalidInputError(
                f"need exactly the 24 canonical points; missing={sorted(missing)} "
                f"unknown={sorted(extra)}")
        arr = np.array([points[name] for name in POINT_NAMES], dtype=np.float64)
        return cls(arr, frame_tag)

    def point(self, name: str) -> tuple[float, float]:
        x, y = self.coords[POINT_INDEX[name]]
        return float(x), float(y)

    def as_dict(self) -> dict[str, tuple[float, float]]:
        return {name: self.point(name) for name in POINT_NAMES}

    def with_coords(self, coords: np.ndarray) -> "FaceModel":
        return FaceModel(coords, self.frame_tag)

    def allclose(self, other: "FaceModel", tol: float = 1e-9) -> bool:
        return bool(np.allclose(self.coords, other.coords, rtol=0.0, atol=tol))


def translate_points(face: FaceModel) -> FaceModel:
    """Shift all points so the midpoint of el1 and er1 lands on the origin.

    The midpoint is subtracted on both axes.
    """
    el1 = face.coords[_EL1]
    er1 = face.coords[_ER1]
    if np.all(el1 == er1):
        raise DegenerateGeometryError("inner eye corners el1 and er1 coincide")
    mid = (el1 + er1) / 2.0
    return face.with_coords(face.coords - mid)


def rotate_points(face: FaceModel) -> FaceModel:
    """Rotate so the el1->er1 axis lies on the x-axis with er1.x > 0.

    Expects a translated face (el1/er1 midpoint at the origin).  The
    rotation angle is atan2 of the el1->er1 vector, applied negatively,
    which also rights upside-down inputs.
    """
    el1 = face.coords[_EL1]
    er1 = face.coords[_ER1]
    vec = er1 - el1
    if vec[0] == 0.0 and vec[1] == 0.0:
        raise DegenerateGeometryError("inner eye corners el1 and er1 coincide")
    theta = math.atan2(vec[1], vec[0])
    cos_t = math.cos(-theta)
    sin_t = math.sin(-theta)
    rot = np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    return face.with_coords(face.coords @ rot.T)


def scale_points(face: FaceModel) -> FaceModel:
    """Divide all coordinates by the inter-ocular distance 2 * er1.x.

    Expects a translated and rotated face, er1 = (d/2, 0) with d > 0.
    After translation el1.x = -er1.x, so the single division covers both
    eye-based scale factors.
    """
    d = 2.0 * face.coords[_ER1, 0]
    if d <= _EPS:
        raise DegenerateGeometryError(f"non-positive inter-ocular distance {d!r}")
    return face.with_coords(face.coords / d)


def normalize_face(face: FaceModel) -> FaceModel:
    """Compose translation, rotation and scaling into the canonical frame."""
    return scale_points(rotate_points(translate_points(face)))


class Displacement:
    """Per-point (dx, dy) offsets of an expressive face from a neutral one."""

    __slots__ = ("deltas",)

    def __init__(self, deltas: np.ndarray):
        arr = np.asarray(deltas, dtype=np.float64)
        if arr.shape != (24, 2):
            raise InvalidInputError(f"expected (24, 2) deltas, got {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "deltas", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Displacement is immutable")

    def of(self, name: str) -> tuple[float, float]:
        dx, dy = self.deltas[POINT_INDEX[name]]
        return float(dx), float(dy)

    def __neg__(self) -> "Displacement":
        return Displacement(-self.deltas)


def displacement(expressive: FaceModel, neutral: FaceModel) -> Displacement:
    """Per-point difference expressive - neutral (both faces normalized)."""
    return Displacement(expressive.coords - neutral.coords)


class DiffInterpretation(Enum):
    ELONGATION = "elongation"
    CONTRACTION = "contraction"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class DiffResult:
    value: float
    interpretation: DiffInterpretation


def cumulative_diff(expressive: "np.ndarray | list[float]",
                    neutral: "np.ndarray | list[float]") -> DiffResult:
    """Cumulative intensity difference between matched scalar series.

    value = sum_i (E[i+1] - E[i]) - sum_i (N[i+1] - N[i]); positive values
    read as muscle elongation, negative as contraction.  Series must have
    equal length n >= 2.  Callers scalarize faces one value per feature
    point in canonical order, separately for x and y.
    """
    e = np.asarray(expressive, dtype=np.float64)
    n = np.asarray(neutral, dtype=np.float64)
    if e.ndim != 1 or n.ndim != 1:
        raise InvalidInputError("cumulative_diff expects 1-D series")
    if e.shape != n.shape:
        raise InvalidInputError(f"length mismatch: {e.shape[0]} vs {n.shape[0]}")
    if e.shape[0] < 2:
        raise InvalidInputError("series need at least 2 entries")
    if not (np.all(np.isfinite(e)) and np.all(np.isfinite(n))):
        raise InvalidInputError("series must be finite")
    value = float(np.sum(np.diff(e)) - np.sum(np.diff(n)))
    if value > 0:
        kind = DiffInterpretation.ELONGATION
    elif value < 0:
        kind = DiffInterpretation.CONTRACTION
    else:
        kind = DiffInterpretation.NEUTRAL
    return DiffResult(value, kind)


def face_series(faces: list[FaceModel], name: str, axis: int) -> np.ndarray:
    """Scalar series of one point's x (axis=0) or y (axis=1) over faces."""
    if axis not in (0, 1):
        raise InvalidInputError("axis must be 0 (x) or 1 (y)")
    idx = POINT_INDEX[name]
    return np.array([f.coords[idx, axis] for f in faces], dtype=np.float64)


# ---------------------------------------------------------------------------
# Landmark file format: one "<id> <x> <y>" line per point, 24 lines in any
# order, '#' comment lines ignored.
# ---------------------------------------------------------------------------

def parse_landmarks(text: str, frame_tag: int | None = None) -> FaceModel:
    points: dict[str, tuple[float, float]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise LandmarkFileError(f"line {lineno}: expected '<id> <x> <y>', got {raw!r}")
        name, xs, ys = parts
        if name not in POINT_INDEX:
            raise LandmarkFileError(f"line {lineno}: unknown point id {name!r}")
        if name in points:
            raise LandmarkFileError(f"line {lineno}: duplicate point id {name!r}")
        try:
            points[name] = (float(xs), float(ys))
        except ValueError as exc:
            raise LandmarkFileError(f"line {lineno}: bad coordinate in {raw!r}") from exc
    if len(points) != 24:
        missing = sorted(set(POINT_NAMES) - set(points))
        raise LandmarkFileError(f"expected 24 points, got {len(points)}; missing {missing}")
    try:
        return FaceModel.from_points(points, frame_tag)
    except (InvalidInputError, DegenerateGeometryError) as exc:
        raise LandmarkFileError(str(exc)) from exc


def read_landmarks(path: "str | Path") -> FaceModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise LandmarkFileError(f"cannot read {path}: {exc}") from exc
    return parse_landmarks(text)


def format_landmarks(face: FaceModel) -> str:
    lines = [f"{name} {float(face.coords[i, 0])!r} {float(face.coords[i, 1])!r}"
             for i, name in enumerate(POINT_NAMES)]
    return "\n".join(lines) + "\n"


def write_landmarks(face: FaceModel, path: "str | Path") -> None:
    Path(path).write_text(format_landmarks(face))
