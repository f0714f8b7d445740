"""MNIST IDX parsing, the 50k/10k/10k split, and seeded batch iteration.

IDX format (big endian):
  u8[2]  | zeros
  u8     | type code (0x08 = unsigned byte; the only type accepted here)
  u8     | number of dimensions n
  i32[n] | dimension sizes
  u8[]   | payload, row-major
"""

import gzip
import os
import struct
from dataclasses import dataclass

import numpy as np

from .rng import RngStream

IDX_UBYTE = 0x08

DEFAULT_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def _parse_idx_u8(raw: bytes) -> np.ndarray:
    if len(raw) < 4:
        raise ValueError(f"IDX header truncated: {len(raw)} bytes")
    zeros, type_code, ndim = struct.unpack(">HBB", raw[:4])
    if zeros != 0:
        raise ValueError(f"bad IDX magic: first bytes {raw[:4].hex()}")
    if type_code != IDX_UBYTE:
        raise ValueError(f"unsupported IDX type byte 0x{type_code:02x} (only 0x08 ubyte)")
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise ValueError(f"IDX header truncated: {len(raw)} bytes for {ndim} dims")
    dims = struct.unpack(f">{ndim}i", raw[4:header_len])
    expected = int(np.prod(dims)) if dims else 1
    payload = raw[header_len:]
    if len(payload) != expected:
        raise ValueError(f"IDX payload truncated: expected {expected} bytes "
                         f"for dims {dims}, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def parse_idx(raw: bytes) -> np.ndarray:
    """Parse an IDX byte string into a float64 tensor normalized by 255."""
    return _parse_idx_u8(raw).astype(np.float64) / 255.0


def write_idx(values: np.ndarray) -> bytes:
    """Inverse of parse_idx: scale by 255, round to u8, emit IDX bytes."""
    u8 = np.rint(np.asarray(values) * 255.0).astype(np.uint8)
    header = struct.pack(">HBB", 0, IDX_UBYTE, u8.ndim)
    header += struct.pack(f">{u8.ndim}i", *u8.shape)
    return header + u8.tobytes()


@dataclass
class Dataset:
    """Images (n, 1, 28, 28) in [0, 1] plus integer labels (n,)."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ValueError(f"{self.images.shape[0]} images vs "
                             f"{self.labels.shape[0]} labels")
        if self.images.size and (self.images.min() < 0 or self.images.max() > 1):
            raise ValueError("pixel values must lie in [0, 1]")

    def __len__(self):
        return self.images.shape[0]

    def flat_images(self) -> np.ndarray:
        """(n, 784) view for mlp input."""
        return self.images.reshape(len(self), -1)

    def subset(self, start: int, stop: int) -> "Dataset":
        return Dataset(self.images[start:stop], self.labels[start:stop])


def _read_file(path: str) -> bytes:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def _resolve(directory: str, name: str) -> str:
    for candidate in (name, name + ".gz"):
        path = os.path.join(directory, candidate)
        if os.path.exists(path):
            return path
    raise FileNotFoundError(f"{name}[.gz] not found under {directory}")


def load_pair(images_path: str, labels_path: str) -> Dataset:
    images = parse_idx(_read_file(images_path))
    labels = _parse_idx_u8(_read_file(labels_path)).astype(np.int64)
    n, h, w = images.shape
    return Dataset(images.reshape(n, 1, h, w), labels)


def load_mnist(directory: str, files: dict = DEFAULT_FILES):
    """Load the raw train file (60k) and test file (10k) datasets."""
    train = load_pair(_resolve(directory, files["train_images"]),
                      _resolve(directory, files["train_labels"]))
    test = load_pair(_resolve(directory, files["test_images"]),
                     _resolve(directory, files["test_labels"]))
    return train, test


def split(train_file: Dataset, test_file: Dataset):
    """Fixed, unshuffled split: first 50k train, last 10k validation."""
    if len(train_file) != 60000:
        raise ValueError(f"expected 60000 examples in the train file, got {len(train_file)}")
    if len(test_file) != 10000:
        raise ValueError(f"expected 10000 examples in the test file, got {len(test_file)}")
    return train_file.subset(0, 50000), train_file.subset(50000, 60000), test_file


def batches(data: Dataset, batch_size: int, epoch_seed: int):
    """Yield (images, labels) over a seeded permutation; the final short batch
    is included, so one pass covers every example exactly once."""
    if len(data) == 0:
        raise ValueError("cannot iterate batches over an empty dataset")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = RngStream(epoch_seed).permutation(len(data))
    for start in range(0, len(data), batch_size):
        idx = order[start:start + batch_size]
        yield data.images[idx], data.labels[idx]
