"""Domain types, PNG/FMP1 round trips, deterministic RNG."""

import struct

import numpy as np
import pytest

from freespace.core import (
    FREE,
    NOT_FREE,
    VOID,
    BinaryMask,
    FeatureMap,
    FeatureMapFormatError,
    ImageDecodeError,
    ImageRGB,
    PriorConfig,
    SuperpixelMap,
    UnsupportedImageError,
    load_feature_map,
    load_image,
    load_mask,
    rng_for_image,
    rng_from_seed,
    save_image,
    save_mask,
    stable_u64,
    write_feature_map,
)


class TestImageIO:
    def test_single_pixel_round_trip(self, tmp_path):
        img = ImageRGB(np.array([[[255, 0, 0]]], dtype=np.uint8))
        path = tmp_path / "px.png"
        save_image(path, img)
        back = load_image(path)
        assert back.width == 1 and back.height == 1
        assert back.pixels.tolist() == [[[255, 0, 0]]]

    def test_round_trip_identity(self, tmp_path):
        rng = rng_from_seed(3)
        img = ImageRGB(rng.integers(0, 256, size=(17, 23, 3), dtype=np.uint8))
        path = tmp_path / "img.png"
        save_image(path, img)
        assert np.array_equal(load_image(path).pixels, img.pixels)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")

    def test_truncated_file_is_corrupt_stream(self, tmp_path):
        img = ImageRGB(np.zeros((8, 8, 3), dtype=np.uint8))
        path = tmp_path / "t.png"
        save_image(path, img)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ImageDecodeError):
            load_image(path)

    def test_garbage_bytes_are_corrupt_stream(self, tmp_path):
        path = tmp_path / "g.png"
        path.write_bytes(b"not a png at all")
        with pytest.raises(ImageDecodeError):
            load_image(path)

    def test_16bit_gray_rejected(self, tmp_path):
        from PIL import Image

        path = tmp_path / "deep.png"
        Image.fromarray(np.zeros((4, 4), dtype=np.uint16)).save(path)
        with pytest.raises(UnsupportedImageError):
            load_image(path)

    def test_invalid_pixel_arrays_rejected(self):
        with pytest.raises(ValueError):
            ImageRGB(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(ValueError):
            ImageRGB(np.zeros((4, 4, 3), dtype=np.float32))
        with pytest.raises(ValueError):
            ImageRGB(np.zeros((0, 4, 3), dtype=np.uint8))


class TestMaskIO:
    def test_round_trip(self, tmp_path):
        labels = np.array([[FREE, NOT_FREE], [VOID, FREE]], dtype=np.uint8)
        path = tmp_path / "m.png"
        save_mask(path, BinaryMask(labels))
        assert np.array_equal(load_mask(path).labels, labels)

    def test_bad_values_rejected(self):
        with pytest.raises(ValueError):
            BinaryMask(np.array([[1]], dtype=np.uint8))


class TestFMP1:
    def test_minimal_tensor(self, tmp_path):
        path = tmp_path / "f.fmp1"
        path.write_bytes(
            b"FMP1" + struct.pack("<III", 2, 1, 1) + struct.pack("<2f", 1.0, 2.0)
        )
        fm = load_feature_map(path)
        assert fm.data.shape == (2, 1, 1)
        assert fm.data[0, 0, 0] == 1.0
        assert fm.data[1, 0, 0] == 2.0

    def test_round_trip_identity(self, tmp_path):
        rng = rng_from_seed(11)
        fm = FeatureMap(rng.normal(size=(3, 5, 7)).astype(np.float32))
        path = tmp_path / "f.fmp1"
        write_feature_map(path, fm)
        back = load_feature_map(path)
        assert np.array_equal(back.data, fm.data)
        # byte-level inverse: rewriting reproduces the file exactly
        path2 = tmp_path / "f2.fmp1"
        write_feature_map(path2, back)
        assert path.read_bytes() == path2.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.fmp1"
        path.write_bytes(b"NOPE" + struct.pack("<III", 1, 1, 1) + struct.pack("<f", 0))
        with pytest.raises(FeatureMapFormatError, match="magic"):
            load_feature_map(path)

    def test_shape_payload_mismatch(self, tmp_path):
        path = tmp_path / "short.fmp1"
        path.write_bytes(b"FMP1" + struct.pack("<III", 2, 2, 2) + b"\x00" * 12)
        with pytest.raises(FeatureMapFormatError, match="payload"):
            load_feature_map(path)

    def test_nan_payload_rejected(self, tmp_path):
        path = tmp_path / "nan.fmp1"
        path.write_bytes(
            b"FMP1" + struct.pack("<III", 1, 1, 2) + struct.pack("<2f", 1.0, float("nan"))
        )
        with pytest.raises(FeatureMapFormatError, match="finite"):
            load_feature_map(path)


class TestRNG:
    def test_same_seed_same_stream(self):
        a = rng_from_seed(42).uniform(size=100)
        b = rng_from_seed(42).uniform(size=100)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        a = rng_from_seed(1).uniform(size=100)
        b = rng_from_seed(2).uniform(size=100)
        assert not np.array_equal(a, b)

    def test_uniform_bounds(self):
        draws = rng_from_seed(5).uniform(size=1_000_000)
        assert draws.min() >= 0.0
        assert draws.max() < 1.0

    def test_image_keyed_streams(self):
        a1 = rng_for_image(9, "img_a").uniform(size=10)
        a2 = rng_for_image(9, "img_a").uniform(size=10)
        b = rng_for_image(9, "img_b").uniform(size=10)
        assert np.array_equal(a1, a2)
        assert not np.array_equal(a1, b)

    def test_stable_u64_is_stable(self):
        # frozen digest so cross-platform golden tests stay valid
        assert stable_u64("img_a") == stable_u64("img_a")
        assert stable_u64(1, "x", 2) != stable_u64(1, "x", 3)
        assert stable_u64("abc") == 16919744041952114874


class TestSuperpixelMapType:
    def test_counts_and_centroids(self):
        labels = np.array([[0, 0, 1], [0, 1, 1]], dtype=np.int32)
        sp = SuperpixelMap(labels)
        assert sp.num_segments == 2
        assert sp.counts.tolist() == [3, 3]
        # centroid equals the mean of member pixels' normalized coords
        ys, xs = sp.segment_pixels(0)
        expect = np.array([np.mean(ys / 2), np.mean(xs / 3)])
        assert np.allclose(sp.centroids[0], expect)
        assert sp.counts.sum() == labels.size

    def test_non_dense_labels_rejected(self):
        with pytest.raises(ValueError):
            SuperpixelMap(np.array([[0, 2]], dtype=np.int32))
        with pytest.raises(ValueError):
            SuperpixelMap(np.array([[1, 2]], dtype=np.int32))

    def test_bboxes(self):
        labels = np.zeros((4, 5), dtype=np.int32)
        labels[2:, 3:] = 1
        sp = SuperpixelMap(labels)
        assert sp.bboxes[1].tolist() == [2, 3, 3, 4]
        assert sp.bboxes[0].tolist() == [0, 0, 3, 4]


class TestPriorConfig:
    def test_defaults_match_published_values(self):
        cfg = PriorConfig()
        assert cfg.mu == (0.75, 0.5)
        assert cfg.sigma == (0.1, 0.1)
        assert cfg.k == 4
        assert cfg.batch_size == 30
        assert cfg.samples_per_superpixel == 10

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"k": 1},
            {"sigma": (0.0, 0.1)},
            {"samples_per_superpixel": 0},
            {"batch_size": 0},
        ],
    )
    def test_invariants(self, kwargs):
        with pytest.raises(ValueError):
            PriorConfig(**kwargs)
