"""Datasets: synthetic blobs, CSV I/O, standardization, and splitting."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError, ParseError, ShapeError


@dataclass
class Dataset:
    """A feature table with optional regression target and integer labels."""

    features: np.ndarray
    feature_names: list[str]
    target: np.ndarray | None = None
    labels: np.ndarray | None = None
    target_name: str = "target"
    label_name: str = "label"

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise ShapeError(
                f"features must be a 2-D array, got shape {self.features.shape}"
            )
        if self.features.shape[0] < 1 or self.features.shape[1] < 1:
            raise ShapeError("dataset needs at least one sample and one feature")
        if len(self.feature_names) != self.features.shape[1]:
            raise ShapeError(
                f"{len(self.feature_names)} feature names for "
                f"{self.features.shape[1]} features"
            )
        if not np.all(np.isfinite(self.features)):
            bad = int(np.argwhere(~np.isfinite(self.features))[0][0])
            raise ParameterError(f"non-finite feature value in sample row {bad}")
        if self.target is not None:
            self.target = np.asarray(self.target, dtype=float)
            if self.target.shape != (self.features.shape[0],):
                raise ShapeError("target length must match the number of samples")
            if not np.all(np.isfinite(self.target)):
                raise ParameterError("non-finite target value")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.features.shape[0],):
                raise ShapeError("label length must match the number of samples")
            if np.any(self.labels < 0):
                raise ParameterError("labels must be nonnegative integers")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, idx: np.ndarray) -> "Dataset":
        """Row subset in the order given by ``idx``."""
        return Dataset(
            self.features[idx],
            list(self.feature_names),
            None if self.target is None else self.target[idx],
            None if self.labels is None else self.labels[idx],
            self.target_name,
            self.label_name,
        )


@dataclass(frozen=True)
class BlobSpec:
    """Parameters for the Gaussian-blob generator."""

    n_samples: int
    n_features: int
    n_centers: int = 3
    cluster_std: float = 1.0
    center_box: tuple[float, float] = (-10.0, 10.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ParameterError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.n_features < 1:
            raise ParameterError(f"n_features must be >= 1, got {self.n_features}")
        if self.n_centers < 1:
            raise ParameterError(f"n_centers must be >= 1, got {self.n_centers}")
        if self.cluster_std <= 0:
            raise ParameterError(f"cluster_std must be > 0, got {self.cluster_std}")
        low, high = self.center_box
        if not low < high:
            raise ParameterError(f"center_box must be a nonempty interval, got {self.center_box}")


def make_blobs(spec: BlobSpec) -> Dataset:
    """Draw isotropic Gaussian blobs; labels record each sample's center.

    Centers are uniform in the center box; each sample picks its center
    uniformly at random, so per-center counts are multinomial, not equal.
    """
    rng = np.random.default_rng(spec.seed)
    low, high = spec.center_box
    centers = rng.uniform(low, high, size=(spec.n_centers, spec.n_features))
    labels = rng.integers(0, spec.n_centers, size=spec.n_samples)
    noise = rng.normal(0.0, spec.cluster_std, size=(spec.n_samples, spec.n_features))
    features = centers[labels] + noise
    names = [f"f{j}" for j in range(spec.n_features)]
    return Dataset(features, names, labels=labels)


@dataclass
class Scaler:
    """Per-feature affine transform fitted by :func:`standardize`."""

    mean: np.ndarray
    scale: np.ndarray  # 1.0 where the feature was constant
    constant_features: list[int] = field(default_factory=list)

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.mean.shape[0]:
            raise ShapeError(
                f"scaler fitted on {self.mean.shape[0]} features, got {x.shape[-1]}"
            )
        return (x - self.mean) / self.scale

    def inverse(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.mean.shape[0]:
            raise ShapeError(
                f"scaler fitted on {self.mean.shape[0]} features, got {x.shape[-1]}"
            )
        return x * self.scale + self.mean

    def transform_dataset(self, ds: Dataset) -> Dataset:
        out = replace(ds, features=self.transform(ds.features))
        return out


def standardize(ds: Dataset) -> tuple[Dataset, Scaler]:
    """Z-score each feature (population std); constant features map to 0."""
    mean = ds.features.mean(axis=0)
    std = ds.features.std(axis=0)
    constant = np.flatnonzero(std == 0.0)
    scale = np.where(std == 0.0, 1.0, std)
    scaler = Scaler(mean, scale, [int(j) for j in constant])
    return scaler.transform_dataset(ds), scaler


def split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle split; the test side gets round(N * fraction), clamped
    so both sides keep at least one sample."""
    if not 0.0 < test_fraction < 1.0:
        raise ParameterError(f"test fraction must be in (0, 1), got {test_fraction}")
    n = ds.n_samples
    if n < 2:
        raise ParameterError("need at least two samples to split")
    n_test = int(round(n * test_fraction))
    n_test = min(max(n_test, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return ds.take(perm[n_test:]), ds.take(perm[:n_test])


def load_csv(
    path: str,
    target: str | None = None,
    labels: str | None = None,
) -> Dataset:
    """Read a headered CSV; all columns except ``target``/``labels`` are features.

    Parse failures cite 1-based data row and column numbers.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise ParseError(f"{path}: duplicate column names in header")
        for name in (target, labels):
            if name is not None and name not in header:
                raise ParseError(f"{path}: no column named {name!r} in header")
        feature_cols = [
            i for i, h in enumerate(header) if h != target and h != labels
        ]
        if not feature_cols:
            raise ParseError(f"{path}: no feature columns left after {target!r}/{labels!r}")
        t_col = header.index(target) if target is not None else None
        l_col = header.index(labels) if labels is not None else None

        feats: list[list[float]] = []
        targ: list[float] = []
        labs: list[int] = []
        for rownum, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: row {rownum} has {len(row)} cells, header has {len(header)}"
                )
            vals = []
            for i in feature_cols:
                try:
                    vals.append(float(row[i]))
                except ValueError:
                    raise ParseError(
                        f"{path}: cell {row[i]!r} at row {rownum} column {i + 1} "
                        f"({header[i]!r}) is not numeric"
                    ) from None
            feats.append(vals)
            if t_col is not None:
                try:
                    targ.append(float(row[t_col]))
                except ValueError:
                    raise ParseError(
                        f"{path}: cell {row[t_col]!r} at row {rownum} column "
                        f"{t_col + 1} ({target!r}) is not numeric"
                    ) from None
            if l_col is not None:
                try:
                    labs.append(int(row[l_col]))
                except ValueError:
                    raise ParseError(
                        f"{path}: cell {row[l_col]!r} at row {rownum} column "
                        f"{l_col + 1} ({labels!r}) is not an integer label"
                    ) from None
    if not feats:
        raise ParseError(f"{path}: no data rows")
    return Dataset(
        np.array(feats, dtype=float),
        [header[i] for i in feature_cols],
        target=np.array(targ) if t_col is not None else None,
        labels=np.array(labs) if l_col is not None else None,
        target_name=target or "target",
        label_name=labels or "label",
    )


def save_csv(ds: Dataset, path: str) -> None:
    """Write the dataset with full-precision floats; round-trips exactly."""
    header = list(ds.feature_names)
    if ds.target is not None:
        header.append(ds.target_name)
    if ds.labels is not None:
        header.append(ds.label_name)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n_samples):
            row = [repr(float(v)) for v in ds.features[i]]
            if ds.target is not None:
                row.append(repr(float(ds.target[i])))
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            writer.writerow(row)
