"""Dataset ingestion and subset views.

IDX is the stock binary container: big-endian magic (0x00000801 label
vectors, 0x00000803 image stacks), big-endian u32 dimension sizes, raw
unsigned byte payload. Pixels are normalized to [0, 1] by dividing by 255;
round(pixel * 255) recovers the source byte exactly.
"""

from __future__ import annotations

import gzip
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

LABEL_MAGIC = 0x00000801
IMAGE_MAGIC = 0x00000803

DATA_DIR_ENV = "SUBSEVO_DATA_DIR"

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class IdxFormatError(ValueError):
    """Malformed IDX stream; `offset` is the byte where parsing failed."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"byte {offset}: {message}")
        self.offset = offset


@dataclass
class Dataset:
    """Immutable labeled image collection, pixels in [0, 1]."""

    images: np.ndarray  # (n, channels, height, width) float64
    labels: np.ndarray  # (n,) int64
    num_classes: int

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise ValueError(f"images must be (n, c, h, w), got {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise ValueError(f"{self.images.shape[0]} images but "
                             f"{self.labels.shape} labels")
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")
        if self.labels.size and (self.labels.min() < 0
                                 or self.labels.max() >= self.num_classes):
            raise ValueError(f"labels must lie in [0, {self.num_classes})")
        if self.images.size and (self.images.min() < 0 or self.images.max() > 1):
            raise ValueError("pixel values must lie in [0, 1]")
        self.images.flags.writeable = False
        self.labels.flags.writeable = False

    def __len__(self):
        return self.images.shape[0]

    @property
    def sample_shape(self):
        return self.images.shape[1:]

    def minibatch(self, positions):
        return self.images[positions], self.labels[positions]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


@dataclass
class SubsetView:
    """Read-only view of selected base samples, in the given order.

    Only the index array is stored; pixels are never copied up front.
    """

    base: Dataset
    indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if self.indices.ndim != 1:
            raise ValueError("indices must be a flat sequence")
        n = len(self.base)
        if self.indices.size and (self.indices.min() < 0
                                  or self.indices.max() >= n):
            raise ValueError(f"index out of range [0, {n})")
        if np.unique(self.indices).size != self.indices.size:
            raise ValueError("duplicate index in subset")
        self.indices.flags.writeable = False

    def __len__(self):
        return self.indices.size

    @property
    def num_classes(self):
        return self.base.num_classes

    @property
    def sample_shape(self):
        return self.base.sample_shape

    @property
    def labels(self):
        return self.base.labels[self.indices]

    def minibatch(self, positions):
        rows = self.indices[positions]
        return self.base.images[rows], self.base.labels[rows]

    def materialize(self) -> Dataset:
        return Dataset(self.base.images[self.indices].copy(),
                       self.labels.copy(), self.base.num_classes)


def subset(base: Dataset, indices) -> SubsetView:
    """View of `base` restricted to `indices` (unique, in range)."""
    return SubsetView(base, np.asarray(indices))


def parse_idx(buf: bytes) -> np.ndarray:
    """Decode one IDX stream: image stacks come back as float64 in [0, 1],
    label vectors as int64."""
    if len(buf) < 4:
        raise IdxFormatError(0, "truncated magic")
    magic = struct.unpack_from(">I", buf, 0)[0]
    if magic == LABEL_MAGIC:
        ndim = 1
    elif magic == IMAGE_MAGIC:
        ndim = 3
    else:
        raise IdxFormatError(0, f"unknown magic 0x{magic:08x}")
    header_end = 4 + 4 * ndim
    if len(buf) < header_end:
        raise IdxFormatError(len(buf), "truncated dimension header")
    dims = struct.unpack_from(f">{ndim}I", buf, 4)
    count = math.prod(dims)
    if count > len(buf) - header_end:
        raise IdxFormatError(
            len(buf), f"payload needs {count} bytes, "
            f"{len(buf) - header_end} available")
    if count < len(buf) - header_end:
        raise IdxFormatError(header_end + count,
                             "trailing bytes after payload")
    raw = np.frombuffer(buf, dtype=np.uint8, count=count, offset=header_end)
    if magic == LABEL_MAGIC:
        return raw.astype(np.int64)
    return raw.reshape(dims).astype(np.float64) / 255.0


def write_idx(array) -> bytes:
    """Encode a label vector (integers) or an image stack (floats in [0, 1],
    byte-quantized) as one IDX stream; exact inverse of parse_idx."""
    arr = np.asarray(array)
    if arr.ndim == 1 and np.issubdtype(arr.dtype, np.integer):
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("labels must fit in one byte")
        payload = arr.astype(np.uint8)
        header = struct.pack(">II", LABEL_MAGIC, arr.shape[0])
    elif arr.ndim == 3 and np.issubdtype(arr.dtype, np.floating):
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise ValueError("pixels must lie in [0, 1]")
        payload = np.rint(arr * 255.0).astype(np.uint8)
        header = struct.pack(">IIII", IMAGE_MAGIC, *arr.shape)
    else:
        raise ValueError(f"expected int labels (1-d) or float images (3-d), "
                         f"got {arr.dtype} with shape {arr.shape}")
    return header + payload.tobytes()


def dataset_to_idx(dataset: Dataset) -> tuple[bytes, bytes]:
    """(images stream, labels stream); channels are folded into the height
    axis since IDX images are single-channel."""
    n, c, h, w = dataset.images.shape
    return (write_idx(dataset.images.reshape(n, c * h, w)),
            write_idx(dataset.labels))


def dataset_from_idx(images_buf: bytes, labels_buf: bytes, num_classes: int,
                     channels: int = 1) -> Dataset:
    images = parse_idx(images_buf)
    labels = parse_idx(labels_buf)
    if images.ndim != 3:
        raise IdxFormatError(0, "images stream does not contain an image stack")
    if labels.ndim != 1:
        raise IdxFormatError(0, "labels stream does not contain a label vector")
    n, ch, w = images.shape
    if ch % channels:
        raise ValueError(f"height {ch} not divisible into {channels} channels")
    return Dataset(images.reshape(n, channels, ch // channels, w),
                   labels, num_classes)


def _read_file(directory, name):
    plain = os.path.join(directory, name)
    if os.path.exists(plain):
        with open(plain, "rb") as fh:
            return fh.read()
    gz = plain + ".gz"
    if os.path.exists(gz):
        with gzip.open(gz, "rb") as fh:
            return fh.read()
    raise FileNotFoundError(f"{plain}[.gz] not found")


def resolve_data_dir(flag_value=None):
    """--data-dir flag, else the SUBSEVO_DATA_DIR environment variable."""
    directory = flag_value or os.environ.get(DATA_DIR_ENV)
    if not directory:
        raise FileNotFoundError(
            f"no data directory given (--data-dir or {DATA_DIR_ENV})")
    return directory


def load_mnist_split(directory, split) -> Dataset:
    images_name, labels_name = MNIST_FILES[split]
    images = parse_idx(_read_file(directory, images_name))
    labels = parse_idx(_read_file(directory, labels_name))
    n, h, w = images.shape
    return Dataset(images.reshape(n, 1, h, w), labels, num_classes=10)


def load_mnist(directory) -> tuple[Dataset, Dataset]:
    """(train, test) splits from the four standard files (optionally .gz)."""
    return (load_mnist_split(directory, "train"),
            load_mnist_split(directory, "test"))


def make_synthetic(num_classes: int, per_class: int, image_side: int,
                   noise: float, seed: int) -> Dataset:
    """Template dataset: each class is a bright block at a class-specific
    grid position plus uniform noise of the given amplitude, clipped to
    [0, 1] and quantized to the 0..255 pixel grid. Deterministic per seed;
    at noise 0 a nearest-template classifier is perfect by construction."""
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    grid = math.isqrt(num_classes - 1) + 1
    cell = image_side // grid
    if cell < 1:
        raise ValueError(f"image_side {image_side} too small for "
                         f"{num_classes} block positions")
    rng = np.random.default_rng(seed)
    n = num_classes * per_class
    images = np.zeros((n, 1, image_side, image_side))
    labels = np.repeat(np.arange(num_classes), per_class)
    for cls in range(num_classes):
        r = (cls // grid) * cell
        c = (cls % grid) * cell
        images[labels == cls, 0, r:r + cell, c:c + cell] = 1.0
    if noise > 0:
        images += rng.uniform(-noise, noise, size=images.shape)
        np.clip(images, 0.0, 1.0, out=images)
    images = np.rint(images * 255.0) / 255.0
    order = rng.permutation(n)
    return Dataset(images[order], labels[order], num_classes)
