import struct

import numpy as np
import pytest

from denselearn import mnist
from denselearn.mnist import Dataset, batches, parse_idx, split, write_idx


def build_idx(dims, payload, type_code=0x08):
    header = struct.pack(">HBB", 0, type_code, len(dims))
    header += struct.pack(f">{len(dims)}i", *dims)
    return header + bytes(payload)


class TestParseIdx:
    def test_small_matrix(self):
        raw = build_idx((2, 3), [0, 255, 1, 2, 3, 4])
        out = parse_idx(raw)
        assert out.shape == (2, 3)
        np.testing.assert_allclose(out[0], [0.0, 1.0, 1 / 255])

    def test_truncated_payload(self):
        raw = build_idx((2, 3), [0, 255, 1])
        with pytest.raises(ValueError, match="expected 6 bytes.*got 3"):
            parse_idx(raw)

    def test_bad_magic(self):
        raw = b"\x12\x34\x08\x01" + b"\x00"
        with pytest.raises(ValueError, match="magic"):
            parse_idx(raw)

    def test_unsupported_type_byte(self):
        raw = build_idx((1,), [0], type_code=0x0D)
        with pytest.raises(ValueError, match="type byte"):
            parse_idx(raw)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        u8 = rng.integers(0, 256, size=(4, 7, 7)).astype(np.uint8)
        values = u8.astype(np.float64) / 255.0
        again = parse_idx(write_idx(values))
        np.testing.assert_array_equal(again, values)


class TestRealFiles:
    def test_train_file_shape(self, mnist_split):
        train, val, test = mnist_split
        assert len(train) + len(val) == 60000
        assert train.images.shape[1:] == (1, 28, 28)

    def test_test_label_histogram_sums(self, mnist_split):
        _, _, test = mnist_split
        hist = np.bincount(test.labels, minlength=10)
        assert hist.sum() == 10000
        assert hist.min() > 0

    def test_pixel_range(self, mnist_split):
        train, _, _ = mnist_split
        assert train.images.min() >= 0.0
        assert train.images.max() <= 1.0


class TestSplit:
    def make(self, n, offset=0):
        images = np.zeros((n, 1, 28, 28))
        images[:, 0, 0, 0] = (np.arange(n) + offset) % 2
        return Dataset(images, np.arange(n, dtype=np.int64) % 10)

    def test_sizes(self):
        train, val, test = split(self.make(60000), self.make(10000))
        assert (len(train), len(val), len(test)) == (50000, 10000, 10000)

    def test_disjoint_index_ranges(self):
        source = self.make(60000)
        train, val, _ = split(source, self.make(10000))
        np.testing.assert_array_equal(train.labels, source.labels[:50000])
        np.testing.assert_array_equal(val.labels, source.labels[50000:])

    def test_deterministic(self):
        a = split(self.make(60000), self.make(10000))
        b = split(self.make(60000), self.make(10000))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.labels, y.labels)

    def test_wrong_counts(self):
        with pytest.raises(ValueError, match="60000"):
            split(self.make(59999), self.make(10000))
        with pytest.raises(ValueError, match="10000"):
            split(self.make(60000), self.make(9999))


class TestBatches:
    def make(self, n):
        return Dataset(np.zeros((n, 1, 2, 2)), np.arange(n, dtype=np.int64))

    def test_batch_count_and_final_size(self):
        data = self.make(50000)
        sizes = [len(lab) for _, lab in batches(data, 128, epoch_seed=0)]
        assert len(sizes) == 391
        assert sizes[-1] == 80
        assert all(s == 128 for s in sizes[:-1])

    def test_same_seed_same_sequence(self):
        data = self.make(1000)
        a = [lab for _, lab in batches(data, 128, epoch_seed=5)]
        b = [lab for _, lab in batches(data, 128, epoch_seed=5)]
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)
        c = [lab for _, lab in batches(data, 128, epoch_seed=6)]
        assert not np.array_equal(a[0], c[0])

    def test_permutation_covers_everything_once(self):
        data = self.make(1000)
        seen = np.concatenate([lab for _, lab in batches(data, 128, epoch_seed=1)])
        assert sorted(seen) == list(range(1000))

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            next(batches(self.make(0), 128, epoch_seed=0))

    def test_bad_batch_size(self):
        with pytest.raises(ValueError, match="batch_size"):
            next(batches(self.make(10), 0, epoch_seed=0))


def test_dataset_invariants():
    with pytest.raises(ValueError, match="images vs"):
        Dataset(np.zeros((3, 1, 2, 2)), np.zeros(2, dtype=np.int64))
    with pytest.raises(ValueError, match="pixel"):
        Dataset(np.full((1, 1, 2, 2), 1.5), np.zeros(1, dtype=np.int64))
