import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    label_map: tuple = ()  # class index -> original label value
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataError(f"features {X.shape} and labels {y.shape} do not line up")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if not self.label_map:
            n = int(y.max()) + 1 if y.size else 0
            object.__setattr__(self, "label_map", tuple(range(n)))
        else:
            object.__setattr__(self, "label_map", tuple(self.label_map))
        if y.size and (y.min() < 0 or y.max() >= len(self.label_map)):
            raise DataError("label index outside label_map")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_classes(self):
        return len(self.label_map)

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, idx):
        return Dataset(self.features[idx], self.labels[idx], self.label_map, self.name)


@dataclass(frozen=True)
class DatasetSplits:
    train: Dataset
    ordering: Dataset
    test: Dataset
    seed: int
    indices: tuple = ()  # (train_idx, ordering_idx, test_idx) into the source dataset


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def load_csv(path, label_column=-1, header=None, name=None):
    """Read a comma-separated classification table.

    ``label_column`` is a column name (needs a header) or an integer index,
    negative indices counting from the end.  ``header=None`` sniffs: the first
    row is a header when any of its feature cells is not numeric.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path} is empty")
    width = len(rows[0])
    if width < 2:
        raise DataError("need at least one feature column and a label column")

    names = None
    if isinstance(label_column, str):
        names = [c.strip() for c in rows[0]]
        if label_column not in names:
            raise DataError(f"label column {label_column!r} not in header")
        lab = names.index(label_column)
        rows = rows[1:]
    else:
        lab = int(label_column)
        if not -width <= lab < width:
            raise DataError(f"label column {label_column} out of range")
        lab %= width
        first_feats = [c for j, c in enumerate(rows[0]) if j != lab]
        if header or (header is None and not all(_is_number(c) for c in first_feats)):
            names = rows[0]
            rows = rows[1:]
    if not rows:
        raise DataError(f"{path} has no data rows")

    X = np.empty((len(rows), width - 1))
    raw_labels = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"row {r + 1} has {len(row)} cells, expected {width}")
        feats = [c for j, c in enumerate(row) if j != lab]
        for j, cell in enumerate(feats):
            cell = cell.strip()
            try:
                X[r, j] = float(cell)
            except ValueError:
                raise DataError(f"non-numeric feature {cell!r} in row {r + 1}") from None
            if not np.isfinite(X[r, j]):
                raise DataError(f"missing or non-finite feature in row {r + 1}")
        raw_labels.append(row[lab].strip())

    label_map = list(dict.fromkeys(raw_labels))
    index = {v: k for k, v in enumerate(label_map)}
    y = np.array([index[v] for v in raw_labels], dtype=np.int64)
    return Dataset(X, y, tuple(label_map), name or path.stem)


def split_sizes(n):
    """``(train, ordering, test)`` sizes for ``n`` samples.

    Ordering and test get ``(n + 1) // 4`` each, the remainder goes to train.
    This is floor division except for ``n % 4 == 3``, where the extra sample
    keeps every part within one sample of its 50/25/25 share.
    """
    q = (n + 1) // 4
    return n - 2 * q, q, q


def split(dataset, seed):
    n = len(dataset)
    if n < 4:
        raise DataError(f"need at least 4 samples to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train, n_ord, _ = split_sizes(n)
    tr, od, te = perm[:n_train], perm[n_train:n_train + n_ord], perm[n_train + n_ord:]
    return DatasetSplits(dataset.subset(tr), dataset.subset(od), dataset.subset(te), int(seed), (tr, od, te))


def synthetic_dataset(n_samples, n_features=4, n_classes=2, seed=0, spread=1.0):
    """Gaussian class blobs; only the first half of the features carry signal."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, n_classes, size=n_samples)
    centers = rng.normal(0.0, 1.5, size=(n_classes, n_features))
    centers[:, (n_features + 1) // 2:] = 0.0
    X = centers[y] + rng.normal(0.0, spread, size=(n_samples, n_features))
    return Dataset(X, y, tuple(range(n_classes)), f"synthetic-{seed}")
