"""Simplex class coding and the least-angle prediction rule.

Class ``j`` (1-based) is represented by the vertex ``w_j`` of a regular
simplex centred at the origin of R^(K-1).  A decision vector ``f`` is mapped
to the class whose vertex has the largest inner product with it.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class SimplexCode:
    """The K unit vertices of the regular simplex in R^(K-1).

    ``vertices`` has shape ``(K, K-1)``; row ``j-1`` is the code of class ``j``.
    Instances are immutable and cached per ``K`` by :func:`build_simplex`.
    """

    K: int
    vertices: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.K - 1

    @property
    def cos_theta(self):
        """Cosine of the angle between any two distinct vertices."""
        return 1.0 / (1.0 - self.K)

    def vertex(self, label):
        """Vertex of the 1-based class ``label``."""
        if not 1 <= label <= self.K:
            raise ValueError(f"class label {label} outside 1..{self.K}")
        return self.vertices[label - 1]

    def scores(self, f):
        return scores(self, f)

    def predict(self, f):
        return predict(self, f)


@lru_cache(maxsize=None)
def build_simplex(K: int) -> SimplexCode:
    """Build the simplex code for ``K`` classes.

    w_1 = (K-1)^(-1/2) * 1 and, for 2 <= j <= K,
    w_j = -(1 + sqrt(K)) / (K-1)^(3/2) * 1 + sqrt(K / (K-1)) * e_(j-1).
    """
    if isinstance(K, bool) or int(K) != K or K < 2:
        raise ValueError(f"K must be an integer >= 2, got {K!r}")
    K = int(K)
    d = K - 1
    W = np.empty((K, d), dtype=np.float64)
    W[0] = d ** -0.5
    W[1:] = -(1.0 + np.sqrt(K)) / d**1.5
    W[1:] += np.sqrt(K / d) * np.eye(d)
    W.setflags(write=False)
    return SimplexCode(K=K, vertices=W)


def _check_dim(code, f):
    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1:] != (code.dim,):
        raise ValueError(f"expected vectors of dimension {code.dim}, got shape {f.shape}")
    return f


def scores(code: SimplexCode, f) -> np.ndarray:
    """Inner products ``<f, w_k>`` for every class.

    ``f`` may be a single vector of length K-1 or a stack of shape
    ``(n, K-1)``; the result has a trailing axis of length K that sums to zero.
    """
    f = _check_dim(code, f)
    return f @ code.vertices.T


def predict(code: SimplexCode, f):
    """Least-angle class (1-based) of ``f``; ties go to the smallest index.

    Returns an int for a single vector, an int array for a stack.
    """
    s = scores(code, f)
    # np.argmax returns the first maximum, which is the tie-break we want
    label = np.argmax(s, axis=-1) + 1
    if np.ndim(label) == 0:
        return int(label)
    return label
