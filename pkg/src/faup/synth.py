"""Deterministic synthetic dataset generator.

Expressive faces are produced by displacing a fixed neutral 24-point
template along each action unit's bound points (up/down on y, stretch and
tighten on x relative to the face midline), with additive composition
across AUs and optional Gaussian noise on active points.  All randomness
flows through an in-repo SplitMix64 stream so identical configurations
yield bit-identical datasets on any platform.  Faces can optionally be
rendered to PGM line sketches with matching pixel-landmark files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aucodes import (
    EMOTIONS,
    Emotion,
    OBSERVABLE_AUS,
    au_bindings,
    emotion_aus,
)
from .errors import DatasetError, InvalidInputError
from .geometry import (
    ACTIVE_POINTS,
    FaceModel,
    POINT_INDEX,
    POINT_NAMES,
    format_landmarks,
    parse_landmarks,
)
from .imaging import Image, make_image

DEFAULT_INTENSITY = 0.05
DEFAULT_NOISE = 0.01
DEFAULT_RENDER_SIZE = (490, 400)


class SplitMix64:
    """SplitMix64 stream (gamma 0x9E3779B97F4A7C15) with Box-Muller gaussians.

    Fully specified by its constants, so sequences are identical across
    platforms and language runtimes.
    """

    _MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self._state = seed & self._MASK
        self._spare: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & self._MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def gauss(self) -> float:
        if self._spare is not None:
            z = self._spare
            self._spare = None
            return z
        u1 = self.uniform() or 2.0 ** -53
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)


# Fixed bilaterally symmetric neutral layout in normalized coordinates
# (inter-ocular distance 1, inner eye corners at (-0.5, 0) and (0.5, 0)).
NEUTRAL_TEMPLATE: dict[str, tuple[float, float]] = {
    "bl1": (-0.45, 0.45), "bl2": (-0.80, 0.55), "bl3": (-1.15, 0.45),
    "br1": (0.45, 0.45), "br2": (0.80, 0.55), "br3": (1.15, 0.45),
    "el1": (-0.50, 0.00), "el2": (-0.80, 0.12), "el3": (-0.80, -0.12), "el4": (-1.10, 0.00),
    "er1": (0.50, 0.00), "er2": (0.80, 0.12), "er3": (0.80, -0.12), "er4": (1.10, 0.00),
    "ml1": (-0.55, -1.05), "ml2": (-0.28, -0.95), "ml3": (-0.28, -1.15),
    "mm1": (-0.09, -0.92), "mm2": (0.09, -0.92), "mm3": (-0.09, -1.18), "mm4": (0.09, -1.18),
    "mr1": (0.55, -1.05), "mr2": (0.28, -0.95), "mr3": (0.28, -1.15),
}

# Side of the face midline each point sits on in the template; stretch moves
# away from the midline, tighten toward it.
MIDLINE_SIGN = {name: (1.0 if x > 0 else -1.0)
                 for name, (x, _) in NEUTRAL_TEMPLATE.items()}


def neutral_template() -> FaceModel:
    """The fixed neutral face; a fixed point of normalize_face."""
    return FaceModel.from_points(NEUTRAL_TEMPLATE)


def apply_aus(face: FaceModel, aus: "frozenset[int] | set[int]",
              intensity: float) -> FaceModel:
    """Displace the bound points of each observable AU by ``intensity``.

    up/down move y, stretch/tighten move x away from / toward the face
    midline.  AUs sharing points compose additively; non-observable AUs
    displace nothing.
    """
    if intensity <= 0:
        raise InvalidInputError("intensity must be positive")
    coords = face.coords.copy()
    for au in sorted(aus):
        binding = au_bindings(au)
        if binding is None:
            continue
        for name in binding.points:
            idx = POINT_INDEX[name]
            action = binding.point_action
            if action == "up":
                coords[idx, 1] += intensity
            elif action == "down":
                coords[idx, 1] -= intensity
            elif action == "stretch":
                coords[idx, 0] += MIDLINE_SIGN[name] * intensity
            elif action == "tight":
                coords[idx, 0] -= MIDLINE_SIGN[name] * intensity
    return face.with_coords(coords)


# Distinguishing AU subsets driving generation, derived from each emotion's
# full AU set restricted to observable AUs.  Three kinds of confound are
# removed so that thresholded displacement on the unique-marker points
# recovers the generating emotion:
#   - AU1 cancels AU4 on br1/bl1 under additive composition (Fear, Sadness
#     need AU4's downward signal for their markers);
#   - AU26 is point-identical to the Surprise marker AU16 (dropped from
#     Fear and Anger so their faces do not read as Surprise);
#   - AU20 is point-identical to the Happiness markers 6/12/14 (dropped
#     from Surprise and Fear so neither their expressive faces nor
#     transition scans from a Surprise state read a latent Happiness
#     signal; Anger keeps it because AU7 cancels it there).
GENERATION_AUS: dict[Emotion, frozenset[int]] = {
    Emotion.SURPRISE: frozenset({1, 2, 5, 16, 26}),
    Emotion.FEAR: frozenset({2, 4, 5}),
    Emotion.DISGUST: frozenset({2, 4, 9, 17}),
    Emotion.ANGER: frozenset({2, 4, 7, 9, 20}),
    Emotion.HAPPINESS: frozenset({1, 6, 12, 14}),
    Emotion.SADNESS: frozenset({4, 23}),
}

for _e, _aus in GENERATION_AUS.items():
    assert _aus <= (emotion_aus(_e) & OBSERVABLE_AUS)
del _e, _aus


@dataclass(frozen=True)
class SynthConfig:
    per_class: int = 10
    noise_sigma: float = DEFAULT_NOISE
    intensity: float = DEFAULT_INTENSITY
    seed: int = 42
    render: bool = False
    render_size: tuple[int, int] = DEFAULT_RENDER_SIZE

    def __post_init__(self):
        if self.per_class < 1:
            raise InvalidInputError("per_class must be >= 1")
        if self.noise_sigma < 0:
            raise InvalidInputError("noise_sigma must be >= 0")
        if self.intensity <= 0:
            raise InvalidInputError("intensity must be positive")


@dataclass(frozen=True)
class LabeledSample:
    neutral: FaceModel
    expressive: FaceModel
    emotion: Emotion
    image: Image | None = None
    pix_landmarks: dict[str, tuple[float, float]] | None = None


def _add_noise(face: FaceModel, sigma: float, rng: SplitMix64) -> FaceModel:
    """Gaussian jitter on active points only, in canonical point order."""
    if sigma == 0.0:
        return face
    coords = face.coords.copy()
    for idx, name in enumerate(POINT_NAMES):
        if name not in ACTIVE_POINTS:
            continue
        coords[idx, 0] += sigma * rng.gauss()
        coords[idx, 1] += sigma * rng.gauss()
    return face.with_coords(coords)


def expression_face(emotion: Emotion, intensity: float) -> FaceModel:
    """Noise-free expressive face for one emotion."""
    return apply_aus(neutral_template(), GENERATION_AUS[emotion], intensity)


def generate_dataset(cfg: SynthConfig) -> list[LabeledSample]:
    """per_class labeled samples per emotion, deterministic for a fixed seed."""
    rng = SplitMix64(cfg.seed)
    template = neutral_template()
    samples = []
    for emotion in EMOTIONS:
        base = expression_face(emotion, cfg.intensity)
        for _ in range(cfg.per_class):
            expressive = _add_noise(base, cfg.noise_sigma, rng)
            image = pix = None
            if cfg.render:
                image, pix = render_face(expressive, *cfg.render_size)
            samples.append(LabeledSample(template, expressive, emotion, image, pix))
    return samples


@dataclass(frozen=True)
class SequenceSample:
    faces: list[FaceModel]
    states: list[Emotion]          # ground-truth state per frame
    boundaries: list[int]          # first frame index of each new state


def generate_sequence(path: list[Emotion], frames_per_state: int,
                      cfg: SynthConfig) -> SequenceSample:
    """Hold each state for frames_per_state frames, stepping at boundaries.

    Per-frame noise is applied on top of each state's expressive face.  The
    step at a block boundary is the endpoint case of interpolating between
    the two states' faces; it keeps threshold crossings aligned with the
    ground-truth boundary.
    """
    if not path:
        raise InvalidInputError("path must be non-empty")
    if frames_per_state < 2:
        raise InvalidInputError("frames_per_state must be >= 2")
    rng = SplitMix64(cfg.seed)
    faces: list[FaceModel] = []
    states: list[Emotion] = []
    for state in path:
        base = expression_face(state, cfg.intensity)
        for _ in range(frames_per_state):
            face = _add_noise(base, cfg.noise_sigma, rng)
            faces.append(FaceModel(face.coords, frame_tag=len(faces)))
            states.append(state)
    boundaries = [t * frames_per_state for t in range(1, len(path))]
    return SequenceSample(faces, states, boundaries)


# ---------------------------------------------------------------------------
# Rendering: white canvas, anti-aliased dark polylines through the brow,
# eye and mouth point groups.
# ---------------------------------------------------------------------------

_POLYLINES = (
    ("bl1", "bl2", "bl3"),
    ("br1", "br2", "br3"),
    ("el1", "el2", "el4", "el3", "el1"),
    ("er1", "er2", "er4", "er3", "er1"),
    ("ml1", "ml2", "mm1", "mm2", "mr2", "mr1", "mr3", "mm4", "mm3", "ml3", "ml1"),
)

_STROKE = 1.5  # pixels; ink fades linearly to white across this distance
_FACE_Y_CENTER = -0.3  # template y mapped to the canvas center row


def _pixel_scale(width: int, height: int) -> float:
    return min(width, height) / 3.5


def face_to_pixels(face: FaceModel, width: int, height: int) -> dict[str, tuple[float, float]]:
    s = _pixel_scale(width, height)
    cx, cy = width / 2.0, height / 2.0
    return {name: (cx + x * s, cy - (y - _FACE_Y_CENTER) * s)
            for name, (x, y) in face.as_dict().items()}


def pixels_to_face(points: dict[str, tuple[float, float]], width: int,
                   height: int) -> FaceModel:
    s = _pixel_scale(width, height)
    cx, cy = width / 2.0, height / 2.0
    return FaceModel.from_points(
        {name: ((px - cx) / s, (cy - py) / s + _FACE_Y_CENTER)
         for name, (px, py) in points.items()})


def render_face(face: FaceModel, width: int = DEFAULT_RENDER_SIZE[0],
                height: int = DEFAULT_RENDER_SIZE[1]) -> tuple[Image, dict[str, tuple[float, float]]]:
    """Render the face sketch; returns the image and pixel landmarks."""
    pix = face_to_pixels(face, width, height)
    canvas = np.full((height, width), 255.0)
    for line in _POLYLINES:
        for a_name, b_name in zip(line, line[1:]):
            _stroke_segment(canvas, pix[a_name], pix[b_name])
    return make_image(canvas), pix


def _stroke_segment(canvas: np.ndarray, a: tuple[float, float],
                    b: tuple[float, float]) -> None:
    h, w = canvas.shape
    margin = int(math.ceil(_STROKE)) + 1
    x0 = max(int(math.floor(min(a[0], b[0]))) - margin, 0)
    x1 = min(int(math.ceil(max(a[0], b[0]))) + margin, w - 1)
    y0 = max(int(math.floor(min(a[1], b[1]))) - margin, 0)
    y1 = min(int(math.ceil(max(a[1], b[1]))) + margin, h - 1)
    if x0 > x1 or y0 > y1:
        return
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0.0:
        t = np.zeros_like(xs, dtype=np.float64)
    else:
        t = np.clip(((xs - ax) * dx + (ys - ay) * dy) / seg_len2, 0.0, 1.0)
    dist = np.hypot(xs - (ax + t * dx), ys - (ay + t * dy))
    ink = np.clip(dist / _STROKE, 0.0, 1.0) * 255.0
    region = canvas[y0:y1 + 1, x0:x1 + 1]
    np.minimum(region, ink, out=region)


# ---------------------------------------------------------------------------
# Dataset directory layout: <root>/<emotion>/<index>.landmarks with optional
# <index>.pgm and <index>.pixlandmarks siblings, plus a manifest.tsv with
# columns sample-path, emotion, seed.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetRecord:
    path: str
    emotion: Emotion
    expressive: FaceModel
    image: Image | None = None
    pix_landmarks: dict[str, tuple[float, float]] | None = None


def _format_pixlandmarks(points: dict[str, tuple[float, float]]) -> str:
    lines = [f"{name} {float(points[name][0])!r} {float(points[name][1])!r}"
             for name in POINT_NAMES]
    return "\n".join(lines) + "\n"


def parse_pixlandmarks(text: str) -> dict[str, tuple[float, float]]:
    points: dict[str, tuple[float, float]] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, xs, ys = line.split()
        points[name] = (float(xs), float(ys))
    if set(points) != set(POINT_NAMES):
        raise DatasetError("pixel landmark file does not list all 24 points")
    return points


def write_dataset(samples: list[LabeledSample], out_dir: "str | Path",
                  seed: int) -> None:
    from .imaging import write_pgm

    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    counters: dict[Emotion, int] = {}
    for sample in samples:
        idx = counters.get(sample.emotion, 0)
        counters[sample.emotion] = idx + 1
        sub = root / sample.emotion.value
        sub.mkdir(exist_ok=True)
        rel = f"{sample.emotion.value}/{idx:04d}.landmarks"
        (root / rel).write_text(format_landmarks(sample.expressive))
        if sample.image is not None:
            write_pgm(sample.image, root / f"{sample.emotion.value}/{idx:04d}.pgm")
            (root / f"{sample.emotion.value}/{idx:04d}.pixlandmarks").write_text(
                _format_pixlandmarks(sample.pix_landmarks))
        rows.append((rel, sample.emotion.value, seed))
    manifest = "sample-path\temotion\tseed\n" + "".join(
        f"{p}\t{e}\t{s}\n" for p, e, s in rows)
    (root / "manifest.tsv").write_text(manifest)


def load_dataset(root: "str | Path") -> list[DatasetRecord]:
    from .imaging import read_pgm

    root = Path(root)
    manifest = root / "manifest.tsv"
    if not manifest.is_file():
        raise DatasetError(f"no manifest.tsv under {root}")
    records = []
    lines = manifest.read_text().splitlines()
    if not lines or lines[0].split("\t")[:2] != ["sample-path", "emotion"]:
        raise DatasetError("manifest.tsv missing 'sample-path\\temotion\\tseed' header")
    by_value = {e.value: e for e in EMOTIONS}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 3:
            raise DatasetError(f"manifest line {lineno}: expected 3 columns")
        rel, emotion_name = parts[0], parts[1]
        if emotion_name not in by_value:
            raise DatasetError(f"manifest line {lineno}: unknown emotion {emotion_name!r}")
        lm_path = root / rel
        if not lm_path.is_file():
            raise DatasetError(f"missing landmark file {lm_path}")
        face = parse_landmarks(lm_path.read_text())
        image = pix = None
        pgm_path = lm_path.with_suffix(".pgm")
        if pgm_path.is_file():
            image = read_pgm(pgm_path)
            pix_path = lm_path.with_suffix(".pixlandmarks")
            if not pix_path.is_file():
                raise DatasetError(f"{pgm_path} has no matching .pixlandmarks")
            pix = parse_pixlandmarks(pix_path.read_text())
        records.append(DatasetRecord(rel, by_value[emotion_name], face, image, pix))
    if not records:
        raise DatasetError(f"manifest under {root} lists no samples")
    return records


def write_sequence(seq: SequenceSample, out_dir: "str | Path") -> None:
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    for i, face in enumerate(seq.faces):
        (root / f"frame_{i:04d}.landmarks").write_text(format_landmarks(face))
    truth = "frame\tstate\n" + "".join(
        f"{i}\t{state.value}\n" for i, state in enumerate(seq.states))
    (root / "ground_truth.tsv").write_text(truth)


def load_sequence(root: "str | Path") -> list[FaceModel]:
    root = Path(root)
    paths = sorted(root.glob("frame_*.landmarks"))
    if not paths:
        raise DatasetError(f"no frame_*.landmarks files under {root}")
    return [parse_landmarks(p.read_text(), frame_tag=i) for i, p in enumerate(paths)]
