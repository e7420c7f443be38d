"""Simplex class coding and the least-angle prediction rule."""

import numpy as np

from angleboost import build_simplex, predict, scores

# K classes live on the vertices of a regular simplex in K-1 dimensions
code = build_simplex(4)
print("vertices (one row per class):")
print(np.round(code.vertices, 4))

W = code.vertices
print("norms:", np.round(np.linalg.norm(W, axis=1), 12))
print("vertex sum:", np.round(W.sum(axis=0), 12))   # centred at the origin
print("pairwise inner products:", np.round(W @ W.T, 4)[0, 1:], "= 1/(1-K) =", code.cos_theta)

# a decision vector f scores each class by <f, w_k>; the scores always sum to zero
f = np.array([0.2, -1.0, 0.5])
s = scores(code, f)
print("scores:", np.round(s, 4), "sum:", round(s.sum(), 12))
print("predicted class:", predict(code, f))

# scaling f by a positive number never changes the prediction
print("prediction of 10 f:", predict(code, 10 * f))

# f = 0 ties every class; ties go to the smallest index
print("prediction of 0:", predict(code, np.zeros(3)))

# K = 2 reduces to the usual +1 / -1 coding
print("K=2 vertices:", build_simplex(2).vertices.ravel())
