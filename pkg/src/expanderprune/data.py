"""Sequence classification datasets.

Sources: IDX image/label pairs turned into scanline sequences (one image
row per time step), synthetic desk-scale tasks, and a generic CSV
layout.  Datasets are immutable after construction; every generator is
deterministic for a fixed seed.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FormatError, ShapeError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

SYNTH_KINDS = ("running-parity", "mean-threshold")


@dataclass(frozen=True)
class SequenceDataset:
    """n sequences of shape (k, input_size) with integer class labels."""

    sequences: np.ndarray  # (n, k, input_size) float64
    labels: np.ndarray     # (n,) int64
    class_count: int

    def __post_init__(self):
        seqs = np.asarray(self.sequences, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if seqs.ndim != 3:
            raise ShapeError(f"sequences must be (n, k, input_size), got {seqs.shape}")
        if labels.shape != (seqs.shape[0],):
            raise ShapeError("labels length does not match sequence count")
        if not np.all(np.isfinite(seqs)):
            raise DomainError("sequence values must be finite")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise DomainError("labels must lie in [0, class_count)")
        object.__setattr__(self, "sequences", seqs)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.sequences.shape[0]

    @property
    def k(self) -> int:
        return self.sequences.shape[1]

    @property
    def input_size(self) -> int:
        return self.sequences.shape[2]

    def subset(self, indices) -> "SequenceDataset":
        idx = np.asarray(indices)
        return SequenceDataset(self.sequences[idx], self.labels[idx], self.class_count)


@dataclass(frozen=True)
class NoiseSpec:
    """Perturb a fraction p of each sequence's scalar positions with
    zero-mean Gaussian draws of standard deviation sigma."""

    p: float = 0.20
    sigma: float = 0.30
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError("noise fraction p must lie in [0, 1]")
        if self.sigma < 0.0:
            raise DomainError("sigma must be >= 0")


def _read_exact(f, count, path, what):
    data = f.read(count)
    if len(data) != count:
        raise FormatError(
            f"{path}: truncated while reading {what} at byte offset {f.tell() - len(data)}"
        )
    return data


def load_idx_images(images_path, labels_path) -> SequenceDataset:
    """Parse big-endian IDX image/label files into scanline sequences.

    Image row i becomes time step i; pixel values are scaled to [0, 1].
    Magic numbers and lengths are validated; errors carry the byte
    offset of the problem.
    """
    with open(images_path, "rb") as f:
        magic = struct.unpack(">I", _read_exact(f, 4, images_path, "magic"))[0]
        if magic != IDX_IMAGES_MAGIC:
            raise FormatError(
                f"{images_path}: bad magic 0x{magic:08x} at byte offset 0, expected 0x{IDX_IMAGES_MAGIC:08x}"
            )
        count, rows, cols = struct.unpack(">III", _read_exact(f, 12, images_path, "dimensions"))
        pixels = np.frombuffer(
            _read_exact(f, count * rows * cols, images_path, "pixel data"), dtype=np.uint8
        )
    with open(labels_path, "rb") as f:
        magic = struct.unpack(">I", _read_exact(f, 4, labels_path, "magic"))[0]
        if magic != IDX_LABELS_MAGIC:
            raise FormatError(
                f"{labels_path}: bad magic 0x{magic:08x} at byte offset 0, expected 0x{IDX_LABELS_MAGIC:08x}"
            )
        (label_count,) = struct.unpack(">I", _read_exact(f, 4, labels_path, "count"))
        labels = np.frombuffer(_read_exact(f, label_count, labels_path, "labels"), dtype=np.uint8)
    if label_count != count:
        raise FormatError(
            f"{labels_path}: {label_count} labels for {count} images"
        )
    sequences = pixels.reshape(count, rows, cols).astype(np.float64) / 255.0
    class_count = int(labels.max()) + 1 if labels.size else 1
    return SequenceDataset(sequences, labels.astype(np.int64), class_count)


def add_noise(ds: SequenceDataset, spec: NoiseSpec) -> SequenceDataset:
    """Perturb exactly ceil(p * k * input_size) positions per sequence.

    Positions are chosen without replacement, independently per sequence;
    untouched positions keep their exact bit pattern.  The input dataset
    is left unmodified.
    """
    flat_size = ds.k * ds.input_size
    n_hit = math.ceil(spec.p * flat_size)
    if n_hit == 0:
        return SequenceDataset(ds.sequences.copy(), ds.labels.copy(), ds.class_count)
    out = ds.sequences.copy()
    flat = out.reshape(ds.n, flat_size)
    for i in range(ds.n):
        rng = np.random.default_rng((spec.seed, i))
        positions = rng.choice(flat_size, size=n_hit, replace=False)
        flat[i, positions] += rng.normal(0.0, spec.sigma, size=n_hit)
    return SequenceDataset(out, ds.labels.copy(), ds.class_count)


def running_parity_label(sequence: np.ndarray) -> int:
    """Parity of the count of steps whose first feature exceeds 0.5."""
    return int(np.count_nonzero(sequence[:, 0] > 0.5) % 2)


def mean_threshold_label(sequence: np.ndarray) -> int:
    """1 iff the mean over all features of all steps exceeds 0.5."""
    return int(sequence.mean() > 0.5)


def synth_task(kind: str, n_samples: int, k: int, input_size: int, seed: int = 0) -> SequenceDataset:
    """Balanced two-class synthetic sequence tasks.

    running-parity: feature 0 is a 0/1 event indicator and the label is
    the parity of the event count.  The remaining features are noisy
    echoes of the event (event times U(0.8, 1.2), zero on non-event
    steps) so every input column carries signal and stays populated
    under magnitude pruning.  Samples whose parity misses the exactly
    balanced target get the event at one random step flipped.

    mean-threshold: all features are U(0,1); the label says whether the
    global mean exceeds 0.5.  Mismatched samples are reflected
    (x -> 1 - x), which flips the label and preserves the distribution.
    """
    if kind not in SYNTH_KINDS:
        raise DomainError(f"unknown synthetic task {kind!r}")
    if n_samples < 1 or k < 1 or input_size < 1:
        raise DomainError("n_samples, k and input_size must be >= 1")
    rng = np.random.default_rng((seed, 0xDA7A))
    targets = rng.permutation(np.arange(n_samples) % 2).astype(np.int64)
    X = rng.uniform(0.0, 1.0, size=(n_samples, k, input_size))
    if kind == "running-parity":
        X[:, :, 0] = (X[:, :, 0] > 0.5).astype(np.float64)

        def echo(events, shape):
            return events * rng.uniform(0.8, 1.2, size=shape)

        X[:, :, 1:] = echo(X[:, :, [0]], (n_samples, k, input_size - 1))
        for i in range(n_samples):
            if running_parity_label(X[i]) != targets[i]:
                j = int(rng.integers(k))
                X[i, j, 0] = 1.0 - X[i, j, 0]
                X[i, j, 1:] = echo(X[i, j, 0], input_size - 1)
    else:
        for i in range(n_samples):
            if mean_threshold_label(X[i]) != targets[i]:
                X[i] = 1.0 - X[i]
    return SequenceDataset(X, targets, 2)


def train_test_split(ds: SequenceDataset, test_fraction: float = 0.20, seed: int = 0):
    """Deterministic shuffled partition into (train, test)."""
    if not 0.0 < test_fraction < 1.0:
        raise DomainError("test_fraction must lie strictly between 0 and 1")
    order = np.random.default_rng((seed, 0x5417)).permutation(ds.n)
    n_test = int(round(ds.n * test_fraction))
    return ds.subset(order[n_test:]), ds.subset(order[:n_test])


def load_csv_sequences(path) -> SequenceDataset:
    """Read the documented CSV sequence layout.

    Line 1 is the header ``k,input_size,class_count``; every following
    line is one sequence: the integer label, then k*input_size values in
    step-major order.  Ragged or malformed rows raise FormatError with
    their line number.
    """
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected header line") from None
        try:
            k, input_size, class_count = (int(v) for v in header)
        except ValueError:
            raise FormatError(
                f"{path}: line 1: header must be 'k,input_size,class_count'"
            ) from None
        if k < 1 or input_size < 1 or class_count < 1:
            raise FormatError(f"{path}: line 1: header values must be >= 1")
        width = k * input_size
        sequences, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width + 1:
                raise FormatError(
                    f"{path}: line {line_no}: expected {width + 1} fields, got {len(row)}"
                )
            try:
                labels.append(int(row[0]))
                sequences.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise FormatError(f"{path}: line {line_no}: {exc}") from None
    if not sequences:
        raise FormatError(f"{path}: no sequences after the header")
    X = np.array(sequences).reshape(len(sequences), k, input_size)
    try:
        return SequenceDataset(X, np.array(labels), class_count)
    except (DomainError, ShapeError) as exc:
        raise FormatError(f"{path}: {exc}") from None


def save_csv_sequences(ds: SequenceDataset, path) -> None:
    """Write a dataset in the layout load_csv_sequences reads."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([ds.k, ds.input_size, ds.class_count])
        flat = ds.sequences.reshape(ds.n, ds.k * ds.input_size)
        for label, row in zip(ds.labels, flat):
            writer.writerow([int(label)] + [repr(float(v)) for v in row])
