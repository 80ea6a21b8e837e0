"""Labelled feature tables and the synthetic two-class stand-in dataset.

The classifier heads consume fixed-width feature vectors (512 by default,
the width a frozen convolutional backbone would emit).  Since no image
pipeline is in scope, :func:`synthetic_cars` fabricates a desk-scale
substitute: two Gaussian clusters in a small latent space, pushed through a
seeded random linear "backbone" into feature space.  Cluster overlap is
controllable, and the default split sizes (89 train / 88 test) mirror the
original experiment's table sizes.

Datasets round-trip through plain CSV (`f0..f{D-1},label` header) with
exact float reproduction, so a re-exported file is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DatasetInvalid(ValueError):
    """A feature table failed validation (shape, finiteness, labels)."""


@dataclass(frozen=True)
class Dataset:
    """An immutable table of feature rows with integer class labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DatasetInvalid(f"features must be 2-D, got ndim={features.ndim}")
        if labels.ndim != 1:
            raise DatasetInvalid(f"labels must be 1-D, got ndim={labels.ndim}")
        if features.shape[0] != labels.shape[0]:
            raise DatasetInvalid(
                f"row mismatch: {features.shape[0]} feature rows, "
                f"{labels.shape[0]} labels"
            )
        if features.shape[0] == 0:
            raise DatasetInvalid("dataset must contain at least one row")
        if not np.all(np.isfinite(features)):
            raise DatasetInvalid("features contain non-finite values")
        if labels.min() < 0:
            raise DatasetInvalid("labels must be non-negative integers")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def rows(self) -> int:
        return self.features.shape[0]

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        """Occurrences of each label value, indexed by label."""
        return np.bincount(self.labels)


def _balanced_labels(rows: int) -> np.ndarray:
    # Split as evenly as two classes allow; odd row counts give class 0
    # the extra row.
    ones = rows // 2
    return np.array([0] * (rows - ones) + [1] * ones, dtype=np.int64)


def _emit_split(
    rng: np.random.Generator,
    rows: int,
    backbone: np.ndarray,
    centers: np.ndarray,
    noise: float,
) -> Dataset:
    latent_dim = backbone.shape[1]
    labels = _balanced_labels(rows)
    latent = centers[labels] + rng.normal(size=(rows, latent_dim))
    features = latent @ backbone.T
    if noise > 0.0:
        features = features + noise * rng.normal(size=features.shape)
    order = rng.permutation(rows)
    return Dataset(features[order], labels[order])


def synthetic_cars(
    seed: int = 0,
    train_rows: int = 89,
    test_rows: int = 88,
    input_dim: int = 512,
    latent_dim: int = 8,
    separation: float = 6.0,
    noise: float = 0.05,
) -> tuple[Dataset, Dataset]:
    """Two seeded Gaussian clusters mapped through a random linear backbone.

    ``separation`` is the distance between the two cluster centers in
    units of the within-cluster standard deviation; ~6 gives a cleanly
    learnable problem, ~1 a heavily overlapped one.  The centers sit on
    two orthogonal latent directions, both away from the origin — clusters
    in general position, neither a mirror pair (which an angle encoding's
    nearly-even readouts would collapse) nor origin-hugging (which starves
    a squashing first layer of logit signal).  Both splits share the same
    backbone map, as a frozen feature extractor would.
    """
    if separation < 0 or noise < 0:
        raise DatasetInvalid("separation and noise must be non-negative")
    if train_rows < 2 or test_rows < 2:
        raise DatasetInvalid("each split needs at least 2 rows")
    rng = np.random.default_rng(seed)
    # The 0.4 keeps first-layer pre-activations in the range where both a
    # sigmoidal activation and a rotation-angle encoding stay responsive.
    backbone = rng.normal(
        scale=0.4 / np.sqrt(latent_dim), size=(input_dim, latent_dim)
    )
    u0 = rng.normal(size=latent_dim)
    u0 /= np.linalg.norm(u0)
    u1 = rng.normal(size=latent_dim)
    u1 -= (u1 @ u0) * u0
    u1 /= np.linalg.norm(u1)
    radius = separation / np.sqrt(2.0)
    centers = np.stack([radius * u0, radius * u1])
    train = _emit_split(rng, train_rows, backbone, centers, noise)
    test = _emit_split(rng, test_rows, backbone, centers, noise)
    return train, test


# ---------------------------------------------------------------- CSV I/O


def _header(input_dim: int) -> str:
    return ",".join([f"f{i}" for i in range(input_dim)] + ["label"])


def save_csv(dataset: Dataset, path: str) -> None:
    """Write ``f0..f{D-1},label`` rows; floats keep full precision."""
    lines = [_header(dataset.input_dim)]
    for row, label in zip(dataset.features, dataset.labels):
        cells = [repr(float(v)) for v in row]
        cells.append(str(int(label)))
        lines.append(",".join(cells))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path: str) -> Dataset:
    """Read a file produced by :func:`save_csv` (or matching its schema)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in (line.strip() for line in fh) if ln]
    if not lines:
        raise DatasetInvalid(f"{path}: empty file")
    columns = lines[0].split(",")
    if columns[-1] != "label" or len(columns) < 2:
        raise DatasetInvalid(f"{path}: header must end with a 'label' column")
    width = len(columns) - 1
    if columns[:-1] != [f"f{i}" for i in range(width)]:
        raise DatasetInvalid(f"{path}: feature columns must be f0..f{width - 1}")
    features = np.empty((len(lines) - 1, width), dtype=np.float64)
    labels = np.empty(len(lines) - 1, dtype=np.int64)
    for r, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != width + 1:
            raise DatasetInvalid(
                f"{path}: row {r} has {len(cells)} cells, expected {width + 1}"
            )
        features[r] = [float(c) for c in cells[:-1]]
        raw = cells[-1]
        try:
            labels[r] = int(raw)
        except ValueError:
            raise DatasetInvalid(f"{path}: row {r} label {raw!r} is not an integer")
    return Dataset(features, labels)
