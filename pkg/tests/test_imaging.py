import numpy as np
import pytest

from faup.errors import InvalidInputError, PgmError
from faup.geometry import POINT_NAMES
from faup.imaging import (
    EdgeMap,
    canny,
    extract_patches,
    image_to_vector,
    load_pgm,
    make_image,
    pgm_bytes,
    read_pgm,
    resize,
    vector_to_image,
    write_pgm,
)


class TestPgm:
    def test_minimal_p5(self):
        img = load_pgm(b"P5 2 2 255\n\x00\x40\x80\xff")
        assert (img.width, img.height) == (2, 2)
        assert img.pixels[0, 0] == 0 and img.pixels[1, 1] == 255

    def test_comment_between_tokens(self):
        plain = load_pgm(b"P5 2 2 255\n\x01\x02\x03\x04")
        commented = load_pgm(b"P5 2\n# a comment\n2 255\n\x01\x02\x03\x04")
        assert np.array_equal(plain.pixels, commented.pixels)

    def test_truncated_payload_names_offset(self):
        with pytest.raises(PgmError, match="byte"):
            load_pgm(b"P5 2 2 255\n\x01\x02\x03")

    def test_maxval_above_255_rejected(self):
        with pytest.raises(PgmError, match="maxval"):
            load_pgm(b"P5 1 1 65535\n\x00\x00")

    def test_ascii_p2(self):
        img = load_pgm(b"P2\n3 1\n255\n0 128 255\n")
        assert list(img.pixels[0]) == [0.0, 128.0, 255.0]

    def test_ascii_truncated(self):
        with pytest.raises(PgmError):
            load_pgm(b"P2 2 2 255 0 1 2")

    def test_bad_magic(self):
        with pytest.raises(PgmError, match="magic"):
            load_pgm(b"P6 1 1 255 abc")

    def test_non_numeric_header(self):
        with pytest.raises(PgmError, match="non-numeric"):
            load_pgm(b"P5 x 2 255 ...")

    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        img = make_image(rng.integers(0, 256, size=(7, 5)).astype(float))
        path = tmp_path / "img.pgm"
        write_pgm(img, path)
        first = path.read_bytes()
        again = read_pgm(path)
        write_pgm(again, path)
        assert path.read_bytes() == first

    def test_edge_map_written_binary(self, tmp_path):
        mask = np.zeros((2, 2), dtype=bool)
        mask[0, 1] = True
        data = pgm_bytes(EdgeMap(2, 2, mask))
        img = load_pgm(data)
        assert sorted(img.pixels.ravel()) == [0, 0, 0, 255]


class TestResize:
    def test_identity(self):
        rng = np.random.default_rng(1)
        img = make_image(rng.uniform(0, 255, size=(6, 9)))
        out = resize(img, 9, 6)
        assert np.array_equal(out.pixels, img.pixels)

    def test_constant_stays_constant(self):
        img = make_image(np.full((4, 4), 37.0))
        out = resize(img, 11, 3)
        assert np.allclose(out.pixels, 37.0)

    def test_two_to_four_upsample(self):
        img = make_image(np.array([[0.0, 255.0]]))
        out = resize(img, 4, 1)
        assert np.allclose(out.pixels[0], [0.0, 63.75, 191.25, 255.0])
        assert np.all(np.diff(out.pixels[0]) >= 0)

    def test_bad_target(self):
        img = make_image(np.zeros((2, 2)))
        with pytest.raises(InvalidInputError):
            resize(img, 0, 2)


class TestVectorize:
    def test_working_size_length(self):
        img = make_image(np.zeros((400, 490)))
        vec = image_to_vector(img, (490, 400))
        assert vec.shape == (196000,)

    def test_all_black_zero_vector(self):
        img = make_image(np.zeros((3, 4)))
        assert not image_to_vector(img).any()

    def test_row_major_layout(self):
        pixels = np.zeros((2, 3))
        pixels[0, 1] = 255.0
        vec = image_to_vector(make_image(pixels))
        assert vec[1] == 1.0
        assert vec.sum() == 1.0

    def test_size_mismatch(self):
        img = make_image(np.zeros((3, 4)))
        with pytest.raises(InvalidInputError):
            image_to_vector(img, (490, 400))

    def test_vector_round_trip(self):
        rng = np.random.default_rng(2)
        img = make_image(rng.uniform(0, 255, size=(5, 4)))
        vec = image_to_vector(img)
        back = vector_to_image(vec, (4, 5))
        assert np.allclose(back.pixels, img.pixels, atol=1e-9)


class TestCanny:
    def test_constant_image_empty(self):
        img = make_image(np.full((32, 32), 128.0))
        edges = canny(img)
        assert edges.mask.dtype == bool
        assert not edges.mask.any()

    def test_vertical_step_single_column(self):
        w = h = 40
        pixels = np.zeros((h, w))
        pixels[:, w // 2:] = 255.0
        edges = canny(make_image(pixels))
        interior = edges.mask[10:-10, :]
        cols = np.nonzero(interior.any(axis=0))[0]
        assert len(cols) == 1, f"edge columns: {cols}"
        assert abs(cols[0] - w // 2) <= 1
        # one pixel per interior row, and none on the border
        assert np.all(interior.sum(axis=1) == 1)
        assert not edges.mask[0].any() and not edges.mask[-1].any()

    def test_rerun_on_binarized_map_stays_near_boundaries(self):
        w = h = 40
        pixels = np.zeros((h, w))
        pixels[:, w // 2:] = 255.0
        first = canny(make_image(pixels))
        binary = make_image(np.where(first.mask, 255.0, 0.0))
        second = canny(binary)
        ys, xs = np.nonzero(second.mask)
        # all edges within the blur radius of the original step column
        assert np.all(np.abs(xs - w // 2) <= 6)

    def test_invalid_parameters(self):
        img = make_image(np.zeros((4, 4)))
        with pytest.raises(InvalidInputError):
            canny(img, low=0.5, high=0.2)
        with pytest.raises(InvalidInputError):
            canny(img, low=-0.1, high=0.2)
        with pytest.raises(InvalidInputError):
            canny(img, sigma=0.0)


class TestPatches:
    landmarks = {name: (10.0 + i, 8.0 + (i % 5)) for i, name in enumerate(POINT_NAMES)}

    def grid(self):
        rng = np.random.default_rng(3)
        return make_image(rng.uniform(0, 255, size=(30, 40)))

    def test_full_point_set_length(self):
        vec = extract_patches(self.grid(), self.landmarks, set(POINT_NAMES), radius=3)
        assert vec.shape == (24 * 49,)

    def test_pruned_plan_length(self):
        vec = extract_patches(self.grid(), self.landmarks, {"mm3", "mm4"}, radius=3)
        assert vec.shape == (2 * 49,)

    def test_pruned_to_full_ratio(self):
        full = extract_patches(self.grid(), self.landmarks, set(POINT_NAMES), radius=2)
        part = extract_patches(self.grid(), self.landmarks, {"mm1", "mm2", "mm3"},
                               radius=2)
        assert part.size / full.size == 3 / 24

    def test_corner_zero_padded_fixed_length(self):
        marks = dict(self.landmarks)
        marks["mm3"] = (0.0, 0.0)
        vec = extract_patches(self.grid(), marks, {"mm3"}, radius=3)
        assert vec.shape == (49,)
        window = vec.reshape(7, 7)
        assert not window[:3, :].any() and not window[:, :3].any()

    def test_edge_map_source_binary_values(self):
        mask = np.zeros((30, 40), dtype=bool)
        mask[8, 12] = True
        vec = extract_patches(EdgeMap(40, 30, mask), {"mm3": (12.0, 8.0)},
                              {"mm3"}, radius=1)
        assert sorted(set(vec)) == [0.0, 1.0]

    def test_empty_monitored_rejected(self):
        with pytest.raises(InvalidInputError):
            extract_patches(self.grid(), self.landmarks, set(), radius=3)

    def test_canonical_ordering(self):
        grid = self.grid()
        both = extract_patches(grid, self.landmarks, {"mm4", "bl1"}, radius=1)
        bl1 = extract_patches(grid, self.landmarks, {"bl1"}, radius=1)
        mm4 = extract_patches(grid, self.landmarks, {"mm4"}, radius=1)
        assert np.array_equal(both, np.concatenate([bl1, mm4]))
