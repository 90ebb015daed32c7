import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image as PILImage

from artrestore.errors import (
    InvalidDimensionsError,
    InvalidModeError,
    OutOfBoundsError,
    UnsupportedFormatError,
)
from artrestore.image import (
    Image,
    augment,
    center_crop_square,
    crop_patch,
    load_image,
    quantize,
    resize,
    save_image,
)

from _oracles import bilinear_resize


class TestLoadSave:
    def test_load_maps_bytes_to_unit_floats(self, tmp_path):
        path = tmp_path / "one.png"
        PILImage.fromarray(np.array([[[255, 0, 128]]], dtype=np.uint8), "RGB").save(path)
        img = load_image(path)
        assert img.shape == (1, 1, 3)
        np.testing.assert_array_equal(img.data[0, 0], np.float32([1.0, 0.0, 128 / 255]))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")

    def test_not_an_image(self, tmp_path):
        path = tmp_path / "junk.png"
        path.write_bytes(b"this is not a png")
        with pytest.raises(UnsupportedFormatError):
            load_image(path)

    def test_16bit_png_rejected(self, tmp_path):
        path = tmp_path / "deep.png"
        PILImage.new("I;16", (4, 4)).save(path)
        with pytest.raises(UnsupportedFormatError):
            load_image(path)

    def test_512_rgb_dimensions(self, tmp_path):
        path = tmp_path / "big.png"
        data = np.random.default_rng(0).integers(0, 256, (512, 512, 3), dtype=np.uint8)
        PILImage.fromarray(data, "RGB").save(path)
        img = load_image(path)
        assert (img.height, img.width, img.channels) == (512, 512, 3)

    def test_quantization_rounds_half_away_from_zero(self):
        img = Image(np.float32([[[0.5], [1.0], [0.0]]]).reshape(1, 3, 1))
        assert quantize(img).ravel().tolist() == [128, 255, 0]

    def test_round_trip_on_byte_grid(self, tmp_path, rng):
        bytes_in = rng.integers(0, 256, (9, 7, 3), dtype=np.uint8)
        img = Image(bytes_in.astype(np.float32) / 255.0)
        save_image(img, tmp_path / "rt.png")
        back = load_image(tmp_path / "rt.png")
        np.testing.assert_array_equal(back.data, img.data)

    def test_load_of_save_equals_quantized_original(self, tmp_path, rng):
        img = Image(rng.random((11, 13, 3), dtype=np.float32))
        save_image(img, tmp_path / "q.png")
        back = load_image(tmp_path / "q.png")
        np.testing.assert_array_equal(back.data, quantize(img).astype(np.float32) / 255.0)

    def test_grayscale_round_trip(self, tmp_path, small_gray):
        save_image(small_gray, tmp_path / "g.png")
        back = load_image(tmp_path / "g.png")
        assert back.channels == 1
        np.testing.assert_array_equal(quantize(back), quantize(small_gray))


class TestResize:
    def test_same_size_is_exact_identity(self, small_rgb):
        out = resize(small_rgb, small_rgb.height, small_rgb.width)
        np.testing.assert_array_equal(out.data, small_rgb.data)

    def test_2x2_to_2x4_monotone_rows(self):
        img = Image(np.float32([[0, 1], [0, 1]]).reshape(2, 2, 1))
        out = resize(img, 2, 4)
        # Frozen from the half-pixel-center oracle: clamped endpoints, then
        # linear interior samples.
        expected = np.float64([0.0, 0.25, 0.75, 1.0])
        for row in range(2):
            np.testing.assert_allclose(out.data[row, :, 0], expected, atol=1e-7)
        oracle = bilinear_resize(img.data.astype(np.float64), 2, 4)
        np.testing.assert_allclose(out.data, oracle, atol=1e-7)

    def test_matches_bruteforce_oracle(self, rng, small_rgb):
        out = resize(small_rgb, 13, 31)
        oracle = bilinear_resize(small_rgb.data.astype(np.float64), 13, 31)
        np.testing.assert_allclose(out.data, oracle, atol=1e-6)

    def test_constant_stays_constant(self):
        img = Image(np.full((5, 4, 3), 0.437, dtype=np.float32))
        out = resize(img, 11, 3)
        np.testing.assert_allclose(out.data, 0.437, atol=1e-6)

    def test_bad_dimensions(self, small_rgb):
        with pytest.raises(InvalidDimensionsError):
            resize(small_rgb, 0, 5)


class TestCrop:
    def test_full_crop_is_identity(self, rng):
        img = Image(rng.random((8, 8, 1), dtype=np.float32))
        out = crop_patch(img, 0, 0, 8)
        np.testing.assert_array_equal(out.data, img.data)

    def test_interior_indices(self):
        ramp = np.arange(16, dtype=np.float32).reshape(4, 4, 1) / 15.0
        out = crop_patch(Image(ramp), 1, 1, 2)
        np.testing.assert_array_equal(out.data, ramp[1:3, 1:3])

    def test_out_of_bounds(self, rng):
        img = Image(rng.random((4, 4, 1), dtype=np.float32))
        with pytest.raises(OutOfBoundsError):
            crop_patch(img, 3, 3, 2)

    def test_source_not_modified(self, rng):
        img = Image(rng.random((6, 6, 3), dtype=np.float32))
        before = img.data.copy()
        patch = crop_patch(img, 1, 2, 3)
        patch.data[:] = 0  # mutating the copy must not touch the source
        np.testing.assert_array_equal(img.data, before)

    def test_center_crop_square(self):
        img = Image(np.arange(24, dtype=np.float32).reshape(4, 6, 1) / 23.0)
        out = center_crop_square(img)
        assert out.shape == (4, 4, 1)
        np.testing.assert_array_equal(out.data, img.data[:, 1:5])


class TestAugment:
    def test_identity_mode(self, small_rgb):
        np.testing.assert_array_equal(augment(small_rgb, 0).data, small_rgb.data)

    def test_rot180_is_involution(self, small_rgb):
        twice = augment(augment(small_rgb, 2), 2)
        np.testing.assert_array_equal(twice.data, small_rgb.data)

    def test_rot90_layout(self):
        a, b, c, d = 0.1, 0.2, 0.3, 0.4
        img = Image(np.float32([[a, b], [c, d]]).reshape(2, 2, 1))
        out = augment(img, 1)
        np.testing.assert_allclose(out.data[:, :, 0], np.float32([[b, d], [a, c]]))

    def test_invalid_mode(self, small_rgb):
        with pytest.raises(InvalidModeError):
            augment(small_rgb, 8)

    @settings(max_examples=40, deadline=None)
    @given(mode=st.integers(0, 7), seed=st.integers(0, 2**16))
    def test_multiset_preserved(self, mode, seed):
        r = np.random.default_rng(seed)
        img = Image(r.random((6, 4, 3), dtype=np.float32))
        out = augment(img, mode)
        np.testing.assert_array_equal(np.sort(out.data, axis=None), np.sort(img.data, axis=None))

    def test_composition_stays_in_group(self, rng):
        img = Image(rng.random((4, 6, 1), dtype=np.float32))
        family = [augment(img, m).data for m in range(8)]
        for m1 in range(8):
            for m2 in range(8):
                composed = augment(augment(img, m1), m2).data
                assert any(
                    f.shape == composed.shape and np.array_equal(f, composed) for f in family
                )
