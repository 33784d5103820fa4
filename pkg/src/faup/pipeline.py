"""End-to-end pipeline: training, full vs pruned classification, transition
detection, benchmarking and model persistence.

Two feature modes exist behind one configuration:

* landmark mode: per-point displacements of the 24 normalized feature
  points against the neutral template;
* image mode: resize, PCA projection/reconstruction, Canny edges and
  pixel patches around the (pruned) landmark set.

The pruned classification path thresholds displacements on each
monitoring plan's points to decide an emotion from its unique AU markers,
falling back to the full SVM bank only on indeterminate or ambiguous
observations.
"""

from __future__ import annotations

import gc
import math
import time
from dataclasses import dataclass

import numpy as np

from .aucodes import (
    AU_IDS,
    EMOTIONS,
    NON_OBSERVABLE_AUS,
    NOT_LABELS,
    Emotion,
    AUFeatureBinding,
    TransitionRule,
    au_bindings,
    derive_transition_rule,
    transition_rule,
)
from .errors import DatasetError, InvalidInputError, ModelFileError
from .geometry import FaceModel, POINT_INDEX, POINT_NAMES
from .imaging import (
    CANNY_HIGH,
    CANNY_LOW,
    CANNY_SIGMA,
    DEFAULT_WORKING_SIZE,
    PATCH_RADIUS,
    canny,
    extract_patches,
    resize,
    scale_pixel_coords,
    image_to_vector,
    vector_to_image,
)
from .pca import PCAModel, pca_fit, pca_project, pca_reconstruct
from .rules import (
    AUObservation,
    MonitoringPlan,
    classify_observation,
    build_transition_tree,
    evaluate_tree,
    plan_monitoring,
)
from .svm import SVMModel, Sample, svm_predict, svm_train
from .synth import (
    DEFAULT_INTENSITY,
    DatasetRecord,
    MIDLINE_SIGN,
    SplitMix64,
    neutral_template,
)

DEFAULT_TAU = 0.5 * DEFAULT_INTENSITY
DEFAULT_SPLIT_RATIO = 1.0 / 3.0

_TEMPLATE_COORDS = neutral_template().coords
_ALL_POINTS = frozenset(POINT_NAMES)


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = "landmark"                 # "landmark" | "image"
    working_size: tuple[int, int] = DEFAULT_WORKING_SIZE
    patch_radius: int = PATCH_RADIUS
    canny_sigma: float = CANNY_SIGMA
    canny_low: float = CANNY_LOW
    canny_high: float = CANNY_HIGH
    components: int = 16
    svm_c: float = 1.0
    split_ratio: float = DEFAULT_SPLIT_RATIO
    seed: int = 42
    tau: float = DEFAULT_TAU               # AU-presence displacement threshold
    edge_source: str = "pca"               # canny input: "pca" reconstruction | "raw"
    patch_source: str = "edges"            # patch values: "edges" | "luminance"

    def __post_init__(self):
        if self.mode not in ("landmark", "image"):
            raise InvalidInputError(f"unknown mode {self.mode!r}")
        if self.edge_source not in ("pca", "raw"):
            raise InvalidInputError(f"unknown edge_source {self.edge_source!r}")
        if self.patch_source not in ("edges", "luminance"):
            raise InvalidInputError(f"unknown patch_source {self.patch_source!r}")
        if not (0.0 < self.split_ratio < 1.0):
            raise InvalidInputError("split_ratio must be in (0, 1)")
        if self.tau <= 0.0:
            raise InvalidInputError("tau must be positive")


@dataclass(frozen=True)
class TrainedBundle:
    config: PipelineConfig
    detectors: dict[str, SVMModel]         # keyed by NSur..NSad, canonical order
    pca: PCAModel | None = None

    def __post_init__(self):
        expected = [NOT_LABELS[e] for e in EMOTIONS]
        if list(self.detectors) != expected:
            raise InvalidInputError(f"detectors must be exactly {expected}")


@dataclass(frozen=True)
class Split:
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]


@dataclass(frozen=True)
class FullResult:
    emotion: Emotion
    scores: dict[str, float]
    low_confidence: bool


@dataclass(frozen=True)
class PrunedResult:
    emotion: Emotion
    points_examined: int
    used_fallback: bool
    matched_plan: Emotion | None


@dataclass(frozen=True)
class TransitionEvent:
    frame: int
    source: Emotion
    target: Emotion
    rule: TransitionRule


# ---------------------------------------------------------------------------
# Feature extraction
# ---------------------------------------------------------------------------

def _sample_face(sample) -> FaceModel:
    if isinstance(sample, FaceModel):
        return sample
    if isinstance(sample, DatasetRecord):
        return sample.expressive
    if hasattr(sample, "expressive"):
        return sample.expressive
    raise InvalidInputError(f"cannot read landmarks from {type(sample).__name__}")


def _monitored_indices(monitored) -> list[int]:
    unknown = set(monitored) - set(POINT_NAMES)
    if unknown:
        raise InvalidInputError(f"unknown points: {sorted(unknown)}")
    return [i for i, name in enumerate(POINT_NAMES) if name in monitored]


def extract_features(sample, config: PipelineConfig, monitored,
                     pca: PCAModel | None = None) -> np.ndarray:
    """Feature vector for one sample over the monitored point set.

    Landmark mode yields (dx, dy) displacements against the neutral
    template in canonical point order; image mode yields concatenated
    pixel patches from the (optionally PCA-denoised) edge map.
    """
    if not monitored:
        raise InvalidInputError("monitored point set must be non-empty")
    if config.mode == "landmark":
        face = _sample_face(sample)
        idx = _monitored_indices(monitored)
        return (face.coords[idx] - _TEMPLATE_COORDS[idx]).ravel()

    if not isinstance(sample, DatasetRecord) or sample.image is None:
        raise InvalidInputError("image mode needs samples with image and pixel landmarks")
    img, pix = sample.image, sample.pix_landmarks
    width, height = config.working_size
    if (img.width, img.height) != (width, height):
        pix = scale_pixel_coords(pix, (img.width, img.height), (width, height))
        img = resize(img, width, height)
    if config.edge_source == "pca":
        if pca is None:
            raise InvalidInputError("image mode with edge_source='pca' needs a PCA model")
        vec = image_to_vector(img, (width, height))
        img = vector_to_image(pca_reconstruct(pca, pca_project(pca, vec)),
                              (width, height))
    edges = canny(img, config.canny_low, config.canny_high, config.canny_sigma)
    source = edges if config.patch_source == "edges" else img
    return extract_patches(source, pix, monitored, config.patch_radius)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def split_dataset(records: list[DatasetRecord], ratio: float,
                  seed: int) -> Split:
    """Deterministic per-class-balanced split.

    Class train quotas start at floor(n_c * ratio); leftover slots up to
    round(n_total * ratio) go to the largest fractional remainders, ties in
    canonical emotion order.  Every class keeps at least one train sample.
    """
    by_class: dict[Emotion, list[int]] = {e: [] for e in EMOTIONS}
    for i, rec in enumerate(records):
        by_class[rec.emotion].append(i)
    missing = [e.value for e in EMOTIONS if not by_class[e]]
    if missing:
        raise DatasetError(f"dataset lacks classes: {missing}")

    total_train = int(round(len(records) * ratio))
    quotas = {e: max(1, int(len(by_class[e]) * ratio)) for e in EMOTIONS}
    remainders = {e: len(by_class[e]) * ratio - int(len(by_class[e]) * ratio)
                  for e in EMOTIONS}
    leftover = total_train - sum(quotas.values())
    if leftover > 0:
        order = sorted(EMOTIONS, key=lambda e: (-remainders[e], EMOTIONS.index(e)))
        for e in order:
            if leftover == 0:
                break
            if quotas[e] < len(by_class[e]):
                quotas[e] += 1
                leftover -= 1
    for e in EMOTIONS:
        if quotas[e] >= len(by_class[e]) and len(by_class[e]) > 1:
            quotas[e] = len(by_class[e]) - 1  # keep a test sample per class

    rng = SplitMix64(seed)
    train: list[int] = []
    test: list[int] = []
    for e in EMOTIONS:
        indices = list(by_class[e])
        # Fisher-Yates with the documented stream
        for i in range(len(indices) - 1, 0, -1):
            j = rng.next_u64() % (i + 1)
            indices[i], indices[j] = indices[j], indices[i]
        train.extend(indices[:quotas[e]])
        test.extend(indices[quotas[e]:])
    return Split(tuple(sorted(train)), tuple(sorted(test)))


def train(records: list[DatasetRecord], config: PipelineConfig) -> tuple[TrainedBundle, Split]:
    """Fit the PCA (image mode) and the six absence detectors."""
    split = split_dataset(records, config.split_ratio, config.seed)
    train_records = [records[i] for i in split.train_indices]

    pca = None
    if config.mode == "image":
        width, height = config.working_size
        vectors = []
        for rec in train_records:
            if rec.image is None:
                raise DatasetError(f"sample {rec.path} has no image for image mode")
            img = rec.image
            if (img.width, img.height) != (width, height):
                img = resize(img, width, height)
            vectors.append(image_to_vector(img, (width, height)))
        data = np.array(vectors)
        k = min(config.components, len(train_records) - 1)
        if k < 1:
            raise DatasetError("too few training samples for PCA")
        pca = pca_fit(data, k, method="gram")

    features = [extract_features(rec, config, _ALL_POINTS, pca)
                for rec in train_records]
    # Standardize the feature scale for the optimizer (displacements live at
    # ~1e-2 in inter-ocular units, far below where C=1 can act), then fold
    # the scale back into the stored weights so prediction consumes raw
    # features and the model file format is unaffected.
    rms = float(np.sqrt(np.mean(np.square(np.array(features)))))
    scale = 1.0 / rms if rms > 0.0 else 1.0
    detectors: dict[str, SVMModel] = {}
    for e in EMOTIONS:
        not_label = NOT_LABELS[e]
        samples = [Sample(f * scale, not_label if rec.emotion is not e else e.value)
                   for f, rec in zip(features, train_records)]
        fitted = svm_train(samples, C=config.svm_c, positive_label=not_label)
        weights = fitted.weights * scale
        norm = float(np.linalg.norm(weights))
        detectors[not_label] = SVMModel(
            weights=weights, bias=fitted.bias, C=fitted.C,
            sv_count=fitted.sv_count,
            margin=2.0 / norm if norm > 0 else float("inf"),
            label_map=fitted.label_map, kkt_residual=fitted.kkt_residual)
    return TrainedBundle(config, detectors, pca), split


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def classify_full(bundle: TrainedBundle, sample) -> FullResult:
    """Evaluate all six absence detectors on the all-points feature vector.

    The winning emotion has the lowest absence score (least evidence that
    it is absent); ties break in canonical emotion order.  The result is
    flagged low confidence when the winner does not clear its detector's
    margin (score > -1), as happens for an all-zero neutral sample.
    """
    features = extract_features(sample, bundle.config, _ALL_POINTS, bundle.pca)
    scores: dict[str, float] = {}
    best_emotion = None
    best_score = None
    for e in EMOTIONS:
        label = NOT_LABELS[e]
        _, score = svm_predict(bundle.detectors[label], features)
        scores[label] = score
        if best_score is None or score < best_score:
            best_score = score
            best_emotion = e
    return FullResult(best_emotion, scores, low_confidence=best_score > -1.0)


def _displacement_vector(sample) -> np.ndarray:
    face = _sample_face(sample)
    return face.coords - _TEMPLATE_COORDS


def _au_fired(disp: np.ndarray, binding: AUFeatureBinding, tau: float) -> bool:
    """All bound points moved in the binding's direction beyond tau."""
    for name in binding.points:
        dx, dy = disp[POINT_INDEX[name]]
        action = binding.point_action
        if action == "up":
            ok = dy >= tau
        elif action == "down":
            ok = dy <= -tau
        elif action == "stretch":
            ok = MIDLINE_SIGN[name] * dx >= tau
        else:  # tight
            ok = MIDLINE_SIGN[name] * dx <= -tau
        if not ok:
            return False
    return True


def _plan_observation(disp: np.ndarray, plan: MonitoringPlan,
                      tau: float) -> AUObservation:
    """Observation restricted to the plan's pattern AUs via its points."""
    present: set[int] = set()
    absent: set[int] = set()
    for pattern in plan.aus_to_check:
        for au in pattern.units:
            binding = au_bindings(au)
            if binding is None:
                continue  # non-observable: stays unknown
            (present if _au_fired(disp, binding, tau) else absent).add(au)
    return AUObservation(frozenset(present), frozenset(absent))


def plan_decision(sample, plan: MonitoringPlan, tau: float):
    """Reference stage-2 route for one plan: observe, then classify.

    classify_pruned's fast path must agree with this on every sample.
    """
    obs = _plan_observation(_displacement_vector(sample), plan, tau)
    return classify_observation(obs)


def transition_observation(disp: np.ndarray, tau: float) -> AUObservation:
    """Closed-world geometric observation over the full AU inventory.

    Non-observable AUs (10, 15) can never be confirmed and are reported
    absent so tabulated rules needing them simply never fire.  AU 7 is also
    reported absent: its point signature is identical to AU 23's, and its
    only required-present use (the Anger transition) additionally needs the
    non-observable AU 10.
    """
    present: set[int] = set()
    absent: set[int] = set()
    for au in sorted(AU_IDS):
        if au in NON_OBSERVABLE_AUS or au == 7:
            absent.add(au)
            continue
        binding = au_bindings(au)
        (present if _au_fired(disp, binding, tau) else absent).add(au)
    return AUObservation(frozenset(present), frozenset(absent))


_NO_PRIOR_PLANS = plan_monitoring(None)
_STAGE1_POINTS = frozenset().union(
    *(p.points for p in _NO_PRIOR_PLANS if not p.fallback_full))
_TRANSITION_TREE = build_transition_tree()
_TREE_POINTS = frozenset().union(
    *(au_bindings(au).points for au in _TRANSITION_TREE.attributes
      if au_bindings(au) is not None))


def _direction_check(name: str, action: str) -> tuple[int, float]:
    """(flat displacement index, sign) such that sign * disp >= tau means fired."""
    row = POINT_INDEX[name]
    if action == "up":
        return 2 * row + 1, 1.0
    if action == "down":
        return 2 * row + 1, -1.0
    if action == "stretch":
        return 2 * row, MIDLINE_SIGN[name]
    return 2 * row, -MIDLINE_SIGN[name]  # tight


def _compile_plan(plan: MonitoringPlan) -> list[list[tuple[int, float]]]:
    """Per pattern, the point-direction checks that must all pass."""
    compiled = []
    for pattern in plan.aus_to_check:
        checks: list[tuple[int, float]] = []
        observable = True
        for au in sorted(pattern.units):
            binding = au_bindings(au)
            if binding is None:
                observable = False
                break
            checks.extend(_direction_check(name, binding.point_action)
                          for name in sorted(binding.points))
        if observable:
            compiled.append(checks)
    return compiled


_FAST_PLANS = [(plan, _compile_plan(plan))
               for plan in _NO_PRIOR_PLANS if not plan.fallback_full]


def classify_pruned(bundle: TrainedBundle, sample,
                    prior: Emotion | None = None) -> PrunedResult:
    """Classify via the pruned monitoring plans, falling back to the SVMs.

    Without a prior, plans are scanned in canonical emotion order and the
    first decisive unique-marker match wins; points_examined is the size of
    the deciding plan.  With a Surprise prior the transition tree decides.
    Indeterminate observations fall back to classify_full, adding the full
    24-point examination to the count.
    """
    tau = bundle.config.tau
    disp = _displacement_vector(sample)

    if prior is None:
        flat = disp.ravel().tolist()
        for plan, compiled in _FAST_PLANS:
            if any(all(sign * flat[i] >= tau for i, sign in checks)
                   for checks in compiled):
                # Partially evaluated stage 2: on a plan-local observation,
                # classify_observation yields exactly the plan's hypothesis
                # whenever one of its patterns fired (markers are unique and
                # disjoint from their own absence sets; equivalence against
                # plan_decision is pinned by tests).
                return PrunedResult(plan.hypothesis, len(plan.points),
                                    used_fallback=False,
                                    matched_plan=plan.hypothesis)
        stage1 = len(_STAGE1_POINTS)
    elif prior is Emotion.SURPRISE:
        obs = transition_observation(disp, tau)
        label = evaluate_tree(_TRANSITION_TREE, obs)
        if label is not None:
            return PrunedResult(label, len(_TREE_POINTS),
                                used_fallback=False, matched_plan=label)
        stage1 = len(_TREE_POINTS)
    else:
        obs = transition_observation(disp, tau)
        fired = [t for t in EMOTIONS if t is not prior
                 and _rule_fires(derive_transition_rule(prior, t), obs)]
        points = len(_STAGE1_POINTS)
        if len(fired) == 1:
            return PrunedResult(fired[0], points, used_fallback=False,
                                matched_plan=fired[0])
        stage1 = points

    full = classify_full(bundle, sample)
    return PrunedResult(full.emotion, stage1 + 24, used_fallback=True,
                        matched_plan=None)


def _rule_fires(rule: TransitionRule, obs: AUObservation) -> bool:
    present_ok = any(p.units <= obs.present for p in rule.present)
    return present_ok and not (rule.absent & obs.present)


# ---------------------------------------------------------------------------
# Transition detection over frame sequences
# ---------------------------------------------------------------------------

def detect_transitions(bundle: TrainedBundle, frames: list[FaceModel],
                       initial: Emotion | None = None) -> list[TransitionEvent]:
    """Scan a landmark sequence for emotion transitions.

    Observations are taken against the neutral template.  While the state
    is Surprise the tabulated transition tree decides; from other states
    the derived (heuristic) rules are scanned and an event fires only when
    exactly one of them holds.
    """
    if len(frames) < 2:
        raise InvalidInputError("need at least 2 frames")
    state = initial if initial is not None else classify_pruned(bundle, frames[0]).emotion
    tau = bundle.config.tau
    events: list[TransitionEvent] = []
    for i, face in enumerate(frames):
        obs = transition_observation(face.coords - _TEMPLATE_COORDS, tau)
        if state is Emotion.SURPRISE:
            label = evaluate_tree(_TRANSITION_TREE, obs)
            if label is not None and label is not state:
                rule = transition_rule(state, label)
                events.append(TransitionEvent(i, state, label, rule))
                state = label
        else:
            fired = [t for t in EMOTIONS if t is not state
                     and _rule_fires(derive_transition_rule(state, t), obs)]
            if len(fired) == 1:
                rule = derive_transition_rule(state, fired[0])
                events.append(TransitionEvent(i, state, fired[0], rule))
                state = fired[0]
    return events


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    label: str                  # NSur..NSad
    emotion: Emotion
    sv_count: int
    margin: float
    correctness: float          # detector accuracy over the benched dataset
    full_points: int
    pruned_points: int
    reduction: float


@dataclass(frozen=True)
class BenchReport:
    rows: list[BenchRow]
    mean_reduction: float
    accuracy_full: float
    accuracy_pruned: float
    agreement: float
    time_full_s: float          # best full-dataset sweep out of five
    time_pruned_s: float
    samples: int

    @property
    def time_full_per_sample(self) -> float:
        return self.time_full_s / self.samples

    @property
    def time_pruned_per_sample(self) -> float:
        return self.time_pruned_s / self.samples


def bench_compare(bundle: TrainedBundle, records: list[DatasetRecord]) -> BenchReport:
    """Run both classification paths over a labeled dataset.

    Point reductions come from the monitoring-plan sizes; wall times are
    measured single-threaded over one pass per path.
    """
    if not records:
        raise DatasetError("empty dataset")

    # time the best of a few passes with GC paused; single sweeps at the
    # microsecond scale are dominated by scheduler and collector stalls
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        time_full = math.inf
        time_pruned = math.inf
        for _ in range(5):
            t0 = time.perf_counter()
            full_results = [classify_full(bundle, rec) for rec in records]
            time_full = min(time_full, time.perf_counter() - t0)
            t0 = time.perf_counter()
            pruned_results = [classify_pruned(bundle, rec) for rec in records]
            time_pruned = min(time_pruned, time.perf_counter() - t0)
    finally:
        if gc_was_enabled:
            gc.enable()

    n = len(records)
    acc_full = sum(r.emotion is rec.emotion
                   for r, rec in zip(full_results, records)) / n
    acc_pruned = sum(r.emotion is rec.emotion
                     for r, rec in zip(pruned_results, records)) / n
    agreement = sum(a.emotion is b.emotion
                    for a, b in zip(full_results, pruned_results)) / n

    features = [extract_features(rec, bundle.config, _ALL_POINTS, bundle.pca)
                for rec in records]
    plans = {p.hypothesis: p for p in plan_monitoring(None)}
    rows = []
    for e in EMOTIONS:
        label = NOT_LABELS[e]
        detector = bundle.detectors[label]
        correct = 0
        for rec, feats in zip(records, features):
            truth = label if rec.emotion is not e else e.value
            predicted, _ = svm_predict(detector, feats)
            correct += predicted == truth
        pruned_points = len(plans[e].points)
        rows.append(BenchRow(label, e, detector.sv_count, detector.margin,
                             correct / n, 24, pruned_points,
                             1.0 - pruned_points / 24.0))
    mean_reduction = sum(r.reduction for r in rows) / len(rows)
    return BenchReport(rows, mean_reduction, acc_full, acc_pruned, agreement,
                       time_full, time_pruned, n)


# ---------------------------------------------------------------------------
# Persistence: text format, header FAUPMODEL 1, FNV-1a checksum trailer
# ---------------------------------------------------------------------------

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def _hex_line(values: np.ndarray) -> str:
    return " ".join(float(v).hex() for v in np.asarray(values, dtype=np.float64).ravel())


def _parse_hex_line(line: str) -> np.ndarray:
    return np.array([float.fromhex(tok) for tok in line.split()], dtype=np.float64)


def bundle_to_text(bundle: TrainedBundle) -> str:
    cfg = bundle.config
    lines = ["FAUPMODEL 1"]
    lines.append("[CONFIG]")
    lines.append(f"mode {cfg.mode}")
    lines.append(f"working_width {cfg.working_size[0]}")
    lines.append(f"working_height {cfg.working_size[1]}")
    lines.append(f"patch_radius {cfg.patch_radius}")
    lines.append(f"canny_sigma {float(cfg.canny_sigma).hex()}")
    lines.append(f"canny_low {float(cfg.canny_low).hex()}")
    lines.append(f"canny_high {float(cfg.canny_high).hex()}")
    lines.append(f"components {cfg.components}")
    lines.append(f"svm_c {float(cfg.svm_c).hex()}")
    lines.append(f"split_ratio {float(cfg.split_ratio).hex()}")
    lines.append(f"seed {cfg.seed}")
    lines.append(f"tau {float(cfg.tau).hex()}")
    lines.append(f"edge_source {cfg.edge_source}")
    lines.append(f"patch_source {cfg.patch_source}")
    if bundle.pca is not None:
        pca = bundle.pca
        lines.append("[PCA]")
        lines.append(f"dims {pca.dim} k {pca.k}")
        lines.append(f"mean {_hex_line(pca.mean)}")
        for row in pca.components:
            lines.append(f"component {_hex_line(row)}")
        lines.append(f"eigenvalues {_hex_line(pca.eigenvalues)}")
        lines.append(f"truncated {int(pca.truncated)}")
    for label, model in bundle.detectors.items():
        lines.append(f"[DETECTOR {label}]")
        lines.append(f"C {float(model.C).hex()}")
        lines.append(f"bias {float(model.bias).hex()}")
        lines.append(f"weights {_hex_line(model.weights)}")
        lines.append(f"sv_count {model.sv_count}")
        lines.append(f"margin {float(model.margin).hex()}")
        lines.append(f"kkt_residual {float(model.kkt_residual).hex()}")
        lines.append(f"positive {model.label_map[1]}")
        lines.append(f"negative {model.label_map[-1]}")
    lines.append("[CHECKSUM]")
    body = "\n".join(lines) + "\n"
    return body + f"{fnv1a64(body.encode()):016x}\n"


def save_bundle(bundle: TrainedBundle, path) -> None:
    from pathlib import Path

    Path(path).write_text(bundle_to_text(bundle))


def _split_sections(lines: list[str]) -> list[tuple[str, list[str]]]:
    sections: list[tuple[str, list[str]]] = []
    current: list[str] | None = None
    for line in lines:
        if line.startswith("[") and line.endswith("]"):
            current = []
            sections.append((line[1:-1], current))
        elif current is not None:
            current.append(line)
        elif line.strip():
            raise ModelFileError(f"content before first section: {line!r}")
    return sections


def _kv(section_lines: list[str], section_name: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in section_lines:
        if not line.strip():
            continue
        key, _, value = line.partition(" ")
        if not value:
            raise ModelFileError(f"malformed line in [{section_name}]: {line!r}")
        if key == "component":
            out.setdefault("component", "")
            out["component"] += value + "\n"
        else:
            out[key] = value
    return out


def bundle_from_text(text: str) -> TrainedBundle:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("FAUPMODEL"):
        raise ModelFileError("missing FAUPMODEL header")
    version = lines[0].split()
    if len(version) != 2 or version[1] != "1":
        raise ModelFileError(f"unsupported model version: {lines[0]!r}")

    try:
        checksum_at = lines.index("[CHECKSUM]")
    except ValueError:
        raise ModelFileError("missing [CHECKSUM] section") from None
    if checksum_at + 1 >= len(lines):
        raise ModelFileError("checksum value missing")
    stated = lines[checksum_at + 1].strip()
    body = "\n".join(lines[:checksum_at + 1]) + "\n"
    actual = f"{fnv1a64(body.encode()):016x}"
    if stated != actual:
        raise ModelFileError(f"checksum mismatch: file says {stated}, computed {actual}")

    sections = _split_sections(lines[1:checksum_at])
    names = [name for name, _ in sections]
    if names.count("CONFIG") != 1:
        raise ModelFileError("expected exactly one [CONFIG] section")

    try:
        cfg_kv = _kv(dict(sections)["CONFIG"], "CONFIG")
        config = PipelineConfig(
            mode=cfg_kv["mode"],
            working_size=(int(cfg_kv["working_width"]), int(cfg_kv["working_height"])),
            patch_radius=int(cfg_kv["patch_radius"]),
            canny_sigma=float.fromhex(cfg_kv["canny_sigma"]),
            canny_low=float.fromhex(cfg_kv["canny_low"]),
            canny_high=float.fromhex(cfg_kv["canny_high"]),
            components=int(cfg_kv["components"]),
            svm_c=float.fromhex(cfg_kv["svm_c"]),
            split_ratio=float.fromhex(cfg_kv["split_ratio"]),
            seed=int(cfg_kv["seed"]),
            tau=float.fromhex(cfg_kv["tau"]),
            edge_source=cfg_kv["edge_source"],
            patch_source=cfg_kv["patch_source"],
        )
    except (KeyError, ValueError) as exc:
        raise ModelFileError(f"malformed [CONFIG] section: {exc}") from exc

    pca = None
    detectors: dict[str, SVMModel] = {}
    for name, body_lines in sections:
        if name == "CONFIG":
            continue
        if name == "PCA":
            kv = _kv(body_lines, name)
            try:
                mean = _parse_hex_line(kv["mean"])
                components = np.array([_parse_hex_line(row)
                                       for row in kv["component"].splitlines()])
                eigenvalues = _parse_hex_line(kv["eigenvalues"])
                pca = PCAModel(mean, components, eigenvalues,
                               truncated=bool(int(kv["truncated"])))
            except (KeyError, ValueError) as exc:
                raise ModelFileError(f"malformed [PCA] section: {exc}") from exc
        elif name.startswith("DETECTOR "):
            label = name[len("DETECTOR "):]
            kv = _kv(body_lines, name)
            try:
                detectors[label] = SVMModel(
                    weights=_parse_hex_line(kv["weights"]),
                    bias=float.fromhex(kv["bias"]),
                    C=float.fromhex(kv["C"]),
                    sv_count=int(kv["sv_count"]),
                    margin=float.fromhex(kv["margin"]),
                    label_map={1: kv["positive"], -1: kv["negative"]},
                    kkt_residual=float.fromhex(kv["kkt_residual"]),
                )
            except (KeyError, ValueError) as exc:
                raise ModelFileError(f"malformed [{name}] section: {exc}") from exc
        else:
            raise ModelFileError(f"unknown section [{name}]")

    expected = [NOT_LABELS[e] for e in EMOTIONS]
    if list(detectors) != expected:
        raise ModelFileError(f"expected detector sections {expected}, got {list(detectors)}")
    if config.mode == "image" and pca is None:
        raise ModelFileError("image-mode model lacks a [PCA] section")
    return TrainedBundle(config, detectors, pca)


def load_bundle(path) -> TrainedBundle:
    from pathlib import Path

    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from exc
    return bundle_from_text(text)
