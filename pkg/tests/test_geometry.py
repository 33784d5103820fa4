import math

import numpy as np
import pytest

from faup.errors import DegenerateGeometryError, InvalidInputError, LandmarkFileError
from faup.geometry import (
    ACTIVE_POINTS,
    DiffInterpretation,
    FaceModel,
    PASSIVE_POINTS,
    POINT_NAMES,
    STABLE_POINTS,
    cumulative_diff,
    displacement,
    face_series,
    format_landmarks,
    normalize_face,
    parse_landmarks,
    read_landmarks,
    rotate_points,
    scale_points,
    translate_points,
    write_landmarks,
)
from faup.synth import neutral_template


def make_face(el1, er1, extra=None):
    """Face with prescribed eye corners; other points spread deterministically."""
    rng = np.random.default_rng(0)
    points = {}
    for i, name in enumerate(POINT_NAMES):
        points[name] = (float(i) * 0.13 - 1.0, float((i * 7) % 5) * 0.21 - 0.4)
    points["el1"] = el1
    points["er1"] = er1
    if extra:
        points.update(extra)
    return FaceModel.from_points(points)


def random_face(rng):
    coords = rng.uniform(-2.0, 2.0, size=(24, 2))
    while np.allclose(coords[POINT_NAMES.index("el1")], coords[POINT_NAMES.index("er1")]):
        coords = rng.uniform(-2.0, 2.0, size=(24, 2))
    return FaceModel(coords)


def similarity(face, scale, angle, shift):
    rot = np.array([[math.cos(angle), -math.sin(angle)],
                    [math.sin(angle), math.cos(angle)]])
    return FaceModel(scale * face.coords @ rot.T + np.asarray(shift))


class TestRolePartition:
    def test_counts(self):
        assert len(POINT_NAMES) == 24
        assert len(set(POINT_NAMES)) == 24
        assert STABLE_POINTS == {"er1", "el1"}
        assert PASSIVE_POINTS == {"er4", "el4", "mr2", "ml2"}
        assert len(ACTIVE_POINTS) == 18
        assert STABLE_POINTS | PASSIVE_POINTS | ACTIVE_POINTS == set(POINT_NAMES)


class TestFaceModel:
    def test_requires_all_points(self):
        with pytest.raises(InvalidInputError):
            FaceModel.from_points({"el1": (0, 0)})

    def test_rejects_coincident_eye_corners(self):
        coords = np.zeros((24, 2))
        with pytest.raises(DegenerateGeometryError):
            FaceModel(coords)

    def test_immutable(self):
        face = make_face((-1, 0), (1, 0))
        with pytest.raises(AttributeError):
            face.coords = None
        with pytest.raises(ValueError):
            face.coords[0, 0] = 5.0


class TestTranslate:
    def test_midpoint_subtracted_both_axes(self):
        face = make_face((2, 4), (6, 4), extra={"mm1": (4, 4)})
        out = translate_points(face)
        assert out.point("mm1") == (0.0, 0.0)
        assert out.point("el1") == (-2.0, 0.0)
        assert out.point("er1") == (2.0, 0.0)

    def test_already_centered_is_identity(self):
        face = make_face((-1, 0), (1, 0))
        out = translate_points(face)
        assert np.array_equal(out.coords, face.coords)

    def test_diagonal_midpoint(self):
        face = make_face((0, 0), (1, 1), extra={"mm1": (0.5, 0.5)})
        out = translate_points(face)
        assert out.point("mm1") == (0.0, 0.0)


class TestRotate:
    def test_quarter_roll(self):
        face = translate_points(make_face((-0.5, -0.5), (0.5, 0.5)))
        out = rotate_points(face)
        x, y = out.point("er1")
        assert math.isclose(x, math.sqrt(2) / 2, abs_tol=1e-12)
        assert abs(y) < 1e-12
        xl, yl = out.point("el1")
        assert math.isclose(xl, -math.sqrt(2) / 2, abs_tol=1e-12)
        assert abs(yl) < 1e-12

    def test_level_eyes_unchanged(self):
        face = make_face((-1, 0), (1, 0))
        out = rotate_points(face)
        assert np.allclose(out.coords, face.coords, atol=1e-15)

    def test_upside_down_face_rights_itself(self):
        face = translate_points(make_face((0.5, 0.5), (-0.5, -0.5)))
        out = rotate_points(face)
        assert out.point("er1")[0] > 0


class TestScale:
    def test_divide_by_interocular_distance(self):
        face = make_face((-2, 0), (2, 0), extra={"mm1": (1, 1)})
        out = scale_points(face)
        assert out.point("mm1") == (0.25, 0.25)
        assert out.point("er1") == (0.5, 0.0)

    def test_unit_distance_is_identity(self):
        face = make_face((-0.5, 0), (0.5, 0))
        out = scale_points(face)
        assert np.array_equal(out.coords, face.coords)

    def test_continues_rotation_example(self):
        r = math.sqrt(2) / 2
        face = make_face((-r, 0), (r, 0), extra={"mm1": (r, 0)})
        out = scale_points(face)
        assert math.isclose(out.point("mm1")[0], 0.5, abs_tol=1e-12)

    def test_degenerate_distance_rejected(self):
        face = make_face((0.5, 0), (-0.5, 0))  # er1.x negative before rotation
        with pytest.raises(DegenerateGeometryError):
            scale_points(face)


class TestNormalize:
    def test_already_normalized_fixed_point(self):
        face = neutral_template()
        out = normalize_face(face)
        assert np.allclose(out.coords, face.coords, atol=1e-12)

    def test_pins_eye_corners(self):
        face = make_face((2, 4), (6, 4))
        out = normalize_face(face)
        assert out.point("el1") == (-0.5, 0.0)
        assert out.point("er1")[0] == 0.5
        assert abs(out.point("er1")[1]) < 1e-12

    def test_similarity_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            face = random_face(rng)
            scale = rng.uniform(0.1, 10.0)
            angle = rng.uniform(0.0, 2 * math.pi)
            shift = rng.uniform(-20, 20, size=2)
            a = normalize_face(face)
            b = normalize_face(similarity(face, scale, angle, shift))
            assert np.allclose(a.coords, b.coords, atol=1e-9)

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            once = normalize_face(random_face(rng))
            twice = normalize_face(once)
            assert np.allclose(once.coords, twice.coords, atol=1e-9)

    def test_degenerate_propagates(self):
        coords = np.arange(48, dtype=float).reshape(24, 2)
        coords[POINT_NAMES.index("er1")] = coords[POINT_NAMES.index("el1")]
        with pytest.raises(DegenerateGeometryError):
            FaceModel(coords)


class TestDisplacement:
    def test_identity_is_zero(self):
        face = normalize_face(make_face((2, 4), (6, 4)))
        disp = displacement(face, face)
        assert np.array_equal(disp.deltas, np.zeros((24, 2)))

    def test_single_point_shift(self):
        neutral = neutral_template()
        coords = neutral.coords.copy()
        coords[POINT_NAMES.index("br1")] += [0.0, 0.05]
        disp = displacement(FaceModel(coords), neutral)
        assert disp.of("br1") == (0.0, pytest.approx(0.05))

    def test_stable_points_zero_after_normalization(self):
        rng = np.random.default_rng(3)
        a = normalize_face(random_face(rng))
        b = normalize_face(random_face(rng))
        disp = displacement(a, b)
        for name in ("er1", "el1"):
            dx, dy = disp.of(name)
            assert abs(dx) < 1e-12 and abs(dy) < 1e-12

    def test_antisymmetry(self):
        rng = np.random.default_rng(5)
        a = normalize_face(random_face(rng))
        b = normalize_face(random_face(rng))
        assert np.allclose(displacement(a, b).deltas,
                           (-displacement(b, a)).deltas, atol=0)


class TestCumulativeDiff:
    def test_elongation_example(self):
        result = cumulative_diff([1, 3, 6], [1, 2, 3])
        assert result.value == pytest.approx(3.0)
        assert result.interpretation is DiffInterpretation.ELONGATION

    def test_identical_series_neutral(self):
        result = cumulative_diff([2.0, 5.0, 9.0], [2.0, 5.0, 9.0])
        assert result.value == 0.0
        assert result.interpretation is DiffInterpretation.NEUTRAL

    def test_contraction_example(self):
        result = cumulative_diff([5, 4, 2], [5, 5, 5])
        assert result.value == pytest.approx(-3.0)
        assert result.interpretation is DiffInterpretation.CONTRACTION

    def test_matches_telescoped_closed_form(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            n = int(rng.integers(2, 40))
            e = rng.normal(size=n)
            m = rng.normal(size=n)
            expected = (e[-1] - e[0]) - (m[-1] - m[0])
            assert cumulative_diff(e, m).value == pytest.approx(expected, abs=1e-12)

    def test_errors(self):
        with pytest.raises(InvalidInputError):
            cumulative_diff([1, 2], [1, 2, 3])
        with pytest.raises(InvalidInputError):
            cumulative_diff([1], [1])
        with pytest.raises(InvalidInputError):
            cumulative_diff([1, float("nan")], [1, 2])

    def test_face_series_helper(self):
        faces = [neutral_template(), neutral_template()]
        series = face_series(faces, "mm1", 1)
        assert series.shape == (2,)
        assert series[0] == series[1]


class TestLandmarkIO:
    def test_round_trip(self, tmp_path):
        face = neutral_template()
        path = tmp_path / "face.landmarks"
        write_landmarks(face, path)
        again = read_landmarks(path)
        assert np.array_equal(face.coords, again.coords)

    def test_comments_and_order_ignored(self):
        face = neutral_template()
        lines = format_landmarks(face).splitlines()
        shuffled = "\n".join(["# header comment"] + lines[::-1] + ["# trailing"])
        again = parse_landmarks(shuffled)
        assert np.array_equal(face.coords, again.coords)

    def test_missing_point_rejected(self):
        face = neutral_template()
        text = "\n".join(format_landmarks(face).splitlines()[:-1])
        with pytest.raises(LandmarkFileError):
            parse_landmarks(text)

    def test_duplicate_rejected(self):
        face = neutral_template()
        text = format_landmarks(face) + "mm1 0.0 0.0\n"
        with pytest.raises(LandmarkFileError):
            parse_landmarks(text)

    def test_unknown_id_rejected(self):
        with pytest.raises(LandmarkFileError):
            parse_landmarks("zz9 1.0 2.0\n")

    def test_bad_coordinate_rejected(self):
        with pytest.raises(LandmarkFileError):
            parse_landmarks("mm1 1.0 fish\n")
