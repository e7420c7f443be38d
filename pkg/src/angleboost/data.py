"""Datasets: the two synthetic benchmarks and a small CSV preprocessing pipeline.

Random draws use numpy's PCG64 ``Generator``.  Replication ``r`` of an
experiment seeded with ``s`` draws from ``SeedSequence(s, spawn_key=(r,))``,
so replications are independent and can run in any order or in parallel.
"""

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

log = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "NA"})
MAX_CLASSES = 50


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``X`` (n, d) with labels ``y`` in 1..K.

    ``continuous`` marks the columns that came from numeric inputs (as opposed
    to one-hot indicators); only those are touched by :func:`standardize`.
    ``classes`` maps label ``k`` back to its original value ``classes[k-1]``.
    """

    X: np.ndarray
    y: np.ndarray
    K: int
    feature_names: tuple = ()
    continuous: Optional[np.ndarray] = None
    classes: tuple = ()
    encoder: Optional["TableEncoder"] = field(default=None, repr=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y).astype(np.intp)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("a dataset needs a 2-d feature matrix with at least one row")
        if y.shape != (X.shape[0],):
            raise ValueError(f"{X.shape[0]} rows but {y.shape} labels")
        if y.min() < 1 or y.max() > self.K:
            raise ValueError(f"labels must lie in 1..{self.K}")
        if np.isnan(X).any():
            raise ValueError("dataset contains missing values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError(f"{len(names)} feature names for {X.shape[1]} columns")
        object.__setattr__(self, "feature_names", names)
        cont = (np.ones(X.shape[1], dtype=bool) if self.continuous is None
                else np.asarray(self.continuous, dtype=bool))
        object.__setattr__(self, "continuous", cont)
        if not self.classes:
            object.__setattr__(self, "classes", tuple(range(1, self.K + 1)))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def subset(self, idx):
        return replace(self, X=self.X[idx], y=self.y[idx])

    def to_csv(self, path, label_name="label"):
        """Write features then the original label value, one row per example."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*self.feature_names, label_name])
            for row, lab in zip(self.X, self.y):
                w.writerow([*(repr(float(v)) for v in row), self.classes[lab - 1]])


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n_train: int = 300
    n_test: int = 4700
    seed: int = 0

    def __post_init__(self):
        if self.kind not in GENERATORS:
            raise ValueError(f"unknown generator {self.kind!r}; expected one of {sorted(GENERATORS)}")
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be >= 1")


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def waveform_basis(j):
    """The three shifted triangular waves v1, v2, v3 at positions ``j`` (1-based)."""
    j = np.asarray(j, dtype=np.float64)
    v1 = lambda t: np.maximum(6.0 - np.abs(t - 11.0), 0.0)  # noqa: E731
    return np.stack([v1(j), v1(j - 4.0), v1(j + 4.0)])


_WAVE_PAIRS = np.array([[0, 1], [0, 2], [1, 2]])  # (v_a, v_b) per class


def gen_waveform(n, seed=None) -> Dataset:
    """Three-class waveform data with 21 features.

    Class 1 mixes (v1, v2), class 2 (v1, v3), class 3 (v2, v3):
    ``x_j = u v_a(j) + (1 - u) v_b(j) + N(0, 1)`` with ``u ~ U(0, 1)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    y = rng.integers(1, 4, size=n)
    u = rng.uniform(size=n)[:, None]
    V = waveform_basis(np.arange(1, 22))
    a, b = _WAVE_PAIRS[y - 1].T
    X = u * V[a] + (1.0 - u) * V[b] + rng.standard_normal((n, 21))
    return Dataset(X, y, K=3)


def gen_four_class(n, seed=None) -> Dataset:
    """Four Gaussian classes in 10 dimensions; only the first two features are informative.

    Means on (x1, x2): class 1 (3, 0), class 2 (0, 3), class 3 (-3, -3), class 4 (0, 0).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    y = rng.integers(1, 5, size=n)
    X = rng.standard_normal((n, 10))
    X[:, 0] += 3.0 * ((y == 1).astype(float) - (y == 3))
    X[:, 1] += 3.0 * ((y == 2).astype(float) - (y == 3))
    return Dataset(X, y, K=4)


GENERATORS = {"waveform": gen_waveform, "four_class": gen_four_class}


def generate(spec: GeneratorSpec, replication=0):
    """Draw the train/test pair for one replication of ``spec``."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(replication,)))
    full = GENERATORS[spec.kind](spec.n_train + spec.n_test, rng)
    idx = np.arange(full.n)
    return full.subset(idx[:spec.n_train]), full.subset(idx[spec.n_train:])


# --------------------------------------------------------------------------
# CSV ingestion
# --------------------------------------------------------------------------

class SchemaError(ValueError):
    """Input columns do not match what the encoder expects."""


def _is_missing(cell):
    return cell.strip() in MISSING_TOKENS


def _parse_float(cell):
    try:
        return float(cell)
    except ValueError:
        return None


def read_table(path):
    """Read a headed UTF-8 CSV into ``(header, rows)`` of raw strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: line {lineno} has {len(row)} cells, "
                                 f"header has {len(header)}")
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return header, rows


@dataclass
class ColumnCoding:
    name: str
    kind: str  # "numeric" or "categorical"
    fill: object = None  # mean (numeric) or mode (categorical)
    levels: tuple = ()


def _label_order(values):
    distinct = sorted(set(values))
    nums = [_parse_float(v) for v in distinct]
    if all(v is not None for v in nums):
        distinct = [v for _, v in sorted(zip(nums, distinct))]
    return tuple(distinct)


@dataclass
class TableEncoder:
    """Imputation and one-hot encoding learned from one table, replayable on others.

    Numeric columns are mean-imputed.  Categorical columns are mode-imputed
    and expanded into one indicator column per level seen at fit time.
    """

    label_column: str
    columns: list
    classes: tuple

    @property
    def feature_names(self):
        names = []
        for col in self.columns:
            if col.kind == "numeric":
                names.append(col.name)
            else:
                names.extend(f"{col.name}={lev}" for lev in col.levels)
        return tuple(names)

    @property
    def continuous(self):
        flags = []
        for col in self.columns:
            flags.extend([True] if col.kind == "numeric" else [False] * len(col.levels))
        return np.array(flags, dtype=bool)

    @classmethod
    def fit(cls, header, rows, label_column, schema=None, path="<table>"):
        if label_column not in header:
            raise SchemaError(f"{path}: label column {label_column!r} not found")
        schema = dict(schema or {})
        unknown = set(schema) - set(header)
        if unknown:
            raise SchemaError(f"{path}: schema names unknown column(s) {sorted(unknown)}")
        li = header.index(label_column)
        labels = [r[li].strip() for r in rows]
        if any(_is_missing(v) for v in labels):
            bad = next(i for i, v in enumerate(labels, start=2) if _is_missing(v))
            raise ValueError(f"{path}: line {bad}: missing label")
        classes = _label_order(labels)
        if len(classes) > MAX_CLASSES:
            raise ValueError(f"{path}: label column has {len(classes)} distinct values "
                             f"(limit {MAX_CLASSES})")
        if len(classes) < 2:
            raise ValueError(f"{path}: label column has a single class")
        columns = []
        for j, name in enumerate(header):
            if j == li:
                continue
            cells = [r[j].strip() for r in rows]
            present = [c for c in cells if not _is_missing(c)]
            kind = schema.get(name)
            if kind is None:
                kind = ("numeric" if all(_parse_float(c) is not None for c in present)
                        else "categorical")
            if kind not in ("numeric", "categorical"):
                raise SchemaError(f"{path}: column {name!r} has unknown kind {kind!r}")
            if kind == "numeric":
                vals = []
                for lineno, c in enumerate(cells, start=2):
                    if _is_missing(c):
                        continue
                    v = _parse_float(c)
                    if v is None:
                        raise ValueError(f"{path}: line {lineno}, column {name!r}: "
                                         f"cannot parse {c!r} as a number")
                    vals.append(v)
                fill = float(np.mean(vals)) if vals else 0.0
                columns.append(ColumnCoding(name, "numeric", fill))
            else:
                levels = sorted(set(present))
                if present:
                    counts = {lev: present.count(lev) for lev in levels}
                    fill = max(levels, key=lambda lev: (counts[lev], -levels.index(lev)))
                else:
                    fill, levels = "", [""]
                columns.append(ColumnCoding(name, "categorical", fill, tuple(levels)))
        return cls(label_column, columns, classes)

    def transform(self, header, rows, path="<table>", require_label=True):
        """Encode raw rows into ``(X, y)``.

        With ``require_label=False`` the label column is optional and ignored,
        and ``y`` is None.
        """
        pos = {h: j for j, h in enumerate(header)}
        for col in self.columns:
            if col.name not in pos:
                raise SchemaError(f"{path}: column {col.name!r} expected by the model is missing")
        blocks = []
        for col in self.columns:
            j = pos[col.name]
            cells = [r[j].strip() for r in rows]
            if col.kind == "numeric":
                out = np.empty(len(cells))
                for i, c in enumerate(cells):
                    if _is_missing(c):
                        out[i] = col.fill
                        continue
                    v = _parse_float(c)
                    if v is None:
                        raise SchemaError(f"{path}: line {i + 2}, column {col.name!r}: "
                                          f"cannot parse {c!r} as a number")
                    out[i] = v
                blocks.append(out[:, None])
            else:
                lev_index = {lev: k for k, lev in enumerate(col.levels)}
                out = np.zeros((len(cells), len(col.levels)))
                for i, c in enumerate(cells):
                    c = col.fill if _is_missing(c) else c
                    k = lev_index.get(c)
                    if k is not None:  # unseen levels encode as all zeros
                        out[i, k] = 1.0
                blocks.append(out)
        X = np.hstack(blocks) if blocks else np.empty((len(rows), 0))
        y = None
        if not require_label:
            pass
        elif self.label_column in pos:
            cls_index = {c: k + 1 for k, c in enumerate(self.classes)}
            j = pos[self.label_column]
            y = np.empty(len(rows), dtype=np.intp)
            for i, r in enumerate(rows):
                v = r[j].strip()
                if v not in cls_index:
                    raise SchemaError(f"{path}: line {i + 2}, column {self.label_column!r}: "
                                      f"unknown class {v!r}")
                y[i] = cls_index[v]
        else:
            raise SchemaError(f"{path}: label column {self.label_column!r} is missing")
        return X, y

    def to_dict(self):
        return {"label_column": self.label_column, "classes": list(self.classes),
                "columns": [{"name": c.name, "kind": c.kind, "fill": c.fill,
                             "levels": list(c.levels)} for c in self.columns]}

    @classmethod
    def from_dict(cls, d):
        cols = [ColumnCoding(c["name"], c["kind"], c["fill"], tuple(c["levels"]))
                for c in d["columns"]]
        return cls(d["label_column"], cols, tuple(d["classes"]))


def load_csv(path, label_column, schema=None) -> Dataset:
    """Load a headed CSV, impute, one-hot encode and map labels to 1..K.

    ``schema`` maps column names to ``'numeric'`` or ``'categorical'``; columns
    it omits are numeric when every present cell parses as a number.  Empty
    cells and the token ``NA`` are missing.  Labels are numbered in sorted
    order of their distinct values (numerically when they are all numbers);
    the mapping is kept in ``Dataset.classes``.
    """
    header, rows = read_table(path)
    enc = TableEncoder.fit(header, rows, label_column, schema, path=str(path))
    X, y = enc.transform(header, rows, path=str(path))
    log.info("loaded %s: %d rows, %d features, classes %s", path, X.shape[0], X.shape[1],
             dict(enumerate(enc.classes, start=1)))
    return Dataset(X, y, K=len(enc.classes), feature_names=enc.feature_names,
                   continuous=enc.continuous, classes=enc.classes, encoder=enc)


class Standardized(NamedTuple):
    train: Dataset
    others: list
    means: np.ndarray
    sds: np.ndarray

    @property
    def constant(self):
        """Continuous columns left unscaled because their training sd is zero."""
        return (self.sds == 0) & self.train.continuous


def apply_standardization(ds, means, sds):
    """Apply stored training statistics to a Dataset or a bare feature matrix."""
    scale = np.where(sds > 0, sds, 1.0)
    shift = np.where(sds > 0, means, 0.0)
    if isinstance(ds, np.ndarray):
        return (ds - shift) / scale
    return replace(ds, X=(ds.X - shift) / scale)


def standardize(train: Dataset, others=()) -> Standardized:
    """Scale continuous columns to mean 0 and population sd 1 using training statistics.

    Indicator columns keep mean 0 / sd 1 entries (no-op).  Constant columns
    are left as they are and reported via ``Standardized.constant``.
    """
    cont = train.continuous
    means = np.where(cont, train.X.mean(axis=0), 0.0)
    sds = np.where(cont, train.X.std(axis=0), 1.0)
    const = cont & (sds == 0)
    if const.any():
        names = [train.feature_names[j] for j in np.flatnonzero(const)]
        log.warning("constant column(s) left unscaled: %s", ", ".join(names))
    return Standardized(apply_standardization(train, means, sds),
                        [apply_standardization(o, means, sds) for o in others], means, sds)


def stratified_split(y, train_fraction, rng):
    """Indices of a per-class random split; every class keeps at least one training row."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    train = []
    for k in np.unique(y):
        idx = np.flatnonzero(y == k)
        idx = rng.permutation(idx)
        n_k = max(1, int(round(train_fraction * len(idx))))
        train.append(idx[:n_k])
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(len(y)), train)
    return train, test


def random_split(n, train_fraction, rng):
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    perm = rng.permutation(n)
    n_train = max(1, int(round(train_fraction * n)))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])
