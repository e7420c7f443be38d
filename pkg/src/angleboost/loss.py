"""Margin losses and the angle-based cost-sensitive composite loss.

For a decision vector ``f`` and true class ``y`` the composite loss is

    l_c(f, y) = sum_t C[y, t] * l(-<f, w_t>)

where ``l`` is a convex, strictly decreasing margin loss.  Because the
diagonal of ``C`` is zero, only the wrong classes are penalised, and each one
is penalised in proportion to its misclassification cost.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .simplex import SimplexCode

LOSS_KINDS = ("exponential", "logit", "lmum")


@dataclass(frozen=True)
class MarginLoss:
    """A margin loss ``l(z)``: exponential, logit, or large-margin unified.

    Parameters
    ----------
    kind : {'exponential', 'logit', 'lmum'}
    a, c : float
        Shape parameters, used only by the ``lmum`` family (a > 0, 0 <= c < inf).
        ``c = 0`` gives a soft classifier; the hinge limit ``c -> inf`` is not
        differentiable and is rejected.
    """

    kind: str = "exponential"
    a: float = 1.0
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.kind == "lmum":
            if not (np.isfinite(self.a) and self.a > 0):
                raise ValueError(f"lmum requires a > 0, got a={self.a}")
            if not (np.isfinite(self.c) and self.c >= 0):
                raise ValueError(f"lmum requires 0 <= c < inf, got c={self.c}")

    @property
    def knot(self):
        """Boundary between the linear and rational branches of lmum."""
        return self.c / (1.0 + self.c)

    def _rational_base(self, z):
        # a / ((1+c) z - c + a), evaluated with z clipped into the rational branch
        zr = np.maximum(z, self.knot)
        return self.a / ((1.0 + self.c) * zr - self.c + self.a)

    def value(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "exponential":
            out = np.exp(-z)
        elif self.kind == "logit":
            out = np.logaddexp(0.0, -z)
        else:
            rational = self._rational_base(z) ** self.a / (1.0 + self.c)
            out = np.where(z < self.knot, 1.0 - z, rational)
        return out[()] if out.ndim == 0 else out

    def derivative(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "exponential":
            out = -np.exp(-z)
        elif self.kind == "logit":
            out = -expit(-z)
        else:
            out = np.where(z < self.knot, -1.0, -self._rational_base(z) ** (self.a + 1.0))
        return out[()] if out.ndim == 0 else out

    def second_derivative(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "exponential":
            out = np.exp(-z)
        elif self.kind == "logit":
            out = expit(z) * expit(-z)
        else:
            a, c = self.a, self.c
            curved = (a + 1.0) * (1.0 + c) / a * self._rational_base(z) ** (a + 2.0)
            out = np.where(z < self.knot, 0.0, curved)
        return out[()] if out.ndim == 0 else out


def loss_value(loss: MarginLoss, z):
    return loss.value(z)


def loss_derivative(loss: MarginLoss, z):
    return loss.derivative(z)


@dataclass(frozen=True)
class CostMatrix:
    """Misclassification costs; ``C[j-1, k-1]`` is the cost of predicting k for truth j.

    Entries must be finite and non-negative with a zero diagonal.  The matrix
    need not be symmetric.
    """

    C: np.ndarray = field(repr=False)
    name: str = ""

    def __post_init__(self):
        C = np.array(self.C, dtype=np.float64)
        if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] < 2:
            raise ValueError(f"cost matrix must be square with K >= 2, got shape {C.shape}")
        bad = np.argwhere(~np.isfinite(C) | (C < 0))
        if bad.size:
            j, k = bad[0]
            raise ValueError(f"cost entry at row {j + 1}, column {k + 1} is {C[j, k]}; "
                             "costs must be finite and non-negative")
        nz = np.flatnonzero(np.diag(C))
        if nz.size:
            raise ValueError(f"cost matrix diagonal must be zero (row {nz[0] + 1} has "
                             f"{C[nz[0], nz[0]]})")
        C.setflags(write=False)
        object.__setattr__(self, "C", C)

    @property
    def K(self):
        return self.C.shape[0]

    def __getitem__(self, idx):
        return self.C[idx]

    def __eq__(self, other):
        return isinstance(other, CostMatrix) and np.array_equal(self.C, other.C)

    def __hash__(self):
        return hash(self.C.tobytes())

    def is_zero_one(self):
        return np.array_equal(self.C, 1.0 - np.eye(self.K))

    @classmethod
    def from_csv(cls, path):
        """Read a K x K matrix of decimals (no header) from a CSV file."""
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            for i, row in enumerate(csv.reader(fh), start=1):
                if not row or all(not cell.strip() for cell in row):
                    continue
                vals = []
                for j, cell in enumerate(row, start=1):
                    try:
                        vals.append(float(cell))
                    except ValueError:
                        raise ValueError(f"{path}: row {i}, column {j}: cannot parse {cell!r} "
                                         "as a number") from None
                rows.append(vals)
        if not rows:
            raise ValueError(f"{path}: empty cost matrix file")
        K = len(rows)
        for i, r in enumerate(rows, start=1):
            if len(r) != K:
                raise ValueError(f"{path}: row {i} has {len(r)} columns, expected {K}")
        return cls(np.array(rows), name=str(path))

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows([[repr(float(v)) for v in row] for row in self.C])


def as_cost_matrix(C):
    return C if isinstance(C, CostMatrix) else CostMatrix(C)


def _check_labels(y, K):
    y = np.asarray(y)
    if y.size and (y.min() < 1 or y.max() > K):
        raise ValueError(f"class labels must lie in 1..{K}")
    return y.astype(np.intp)


def cs_loss(code: SimplexCode, C, loss: MarginLoss, f, y) -> float:
    """Cost-sensitive angle-based loss of a single decision vector ``f`` with label ``y``."""
    C = as_cost_matrix(C)
    if C.K != code.K:
        raise ValueError(f"cost matrix is {C.K}x{C.K} but the code has K={code.K}")
    (y,) = _check_labels([y], code.K)
    s = code.scores(f)
    if s.ndim != 1:
        raise ValueError("cs_loss takes a single decision vector")
    return float(np.dot(C[y - 1], loss.value(-s)))


def empirical_risk(code: SimplexCode, C, loss: MarginLoss, F, y) -> float:
    """Mean composite loss over ``n`` decision vectors ``F`` (n, K-1) and labels ``y``."""
    C = as_cost_matrix(C)
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    y = _check_labels(y, code.K)
    if F.shape[0] == 0:
        raise ValueError("empirical risk of an empty dataset is undefined")
    if F.shape[0] != y.shape[0]:
        raise ValueError(f"{F.shape[0]} decision vectors but {y.shape[0]} labels")
    S = code.scores(F)
    W = C[y - 1]
    # zero-cost terms contribute nothing even if the loss overflows
    terms = np.where(W > 0, W * loss.value(-S), 0.0)
    return float(np.mean(np.sum(terms, axis=1)))
