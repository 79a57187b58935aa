"""Dense-matrix primitives and the quadratic-assignment objective.

Matrices are plain float64 ``numpy`` arrays. Permutations are integer
arrays ``image`` with ``image[i] = j`` meaning row ``i`` of the first graph
is matched to row ``j`` of the second; as a matrix that is ``P[i, j] = 1``.
"""

import numpy as np

from .errors import DomainError, ShapeError, ValidationError

DS_TOL = 1e-6


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite, 2-D, C-contiguous float64 array."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValidationError(f"{name} contains NaN or Inf")
    return m


def as_square(a, name="matrix"):
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}")
    return m


def _check_trio(gx, gy, p):
    gx = as_square(gx, "gx")
    gy = as_square(gy, "gy")
    p = as_square(p, "p")
    if not gx.shape == gy.shape == p.shape:
        raise ShapeError(f"size mismatch: gx {gx.shape}, gy {gy.shape}, p {p.shape}")
    return gx, gy, p


def check_permutation(image, n=None):
    """Validate a permutation image and return it as an int64 array."""
    img = np.asarray(image)
    if img.ndim != 1 or (img.size and not np.issubdtype(img.dtype, np.integer)):
        raise ValidationError("permutation must be a 1-D integer sequence")
    img = img.astype(np.int64)
    if n is not None and img.size != n:
        raise ValidationError(f"permutation has length {img.size}, expected {n}")
    if img.size and (img.min() < 0 or img.max() >= img.size
                     or np.bincount(img, minlength=img.size).max() != 1):
        raise ValidationError("permutation image is not a bijection on 0..n-1")
    return img


def check_doubly_stochastic(m, tol=DS_TOL, name="matrix"):
    """Validate ``m`` as doubly stochastic within ``tol`` and return it."""
    m = as_square(m, name)
    if m.size and m.min() < 0:
        raise ValidationError(f"{name} has negative entries")
    viol = marginal_violation(m)
    if viol > tol:
        raise ValidationError(f"{name} is not doubly stochastic (violation {viol:.3g} > {tol:g})")
    return m


def marginal_violation(m, r=None, c=None):
    """L-inf distance of the row/column sums of ``m`` from ``r``/``c`` (default ones)."""
    if m.size == 0:
        return 0.0
    r = 1.0 if r is None else r
    c = 1.0 if c is None else c
    return float(max(np.abs(m.sum(axis=1) - r).max(), np.abs(m.sum(axis=0) - c).max()))


def qap_objective(gx, gy, p):
    """Graph-matching objective ``trace(gx.T @ p @ gy @ p.T)``.

    Computed as the Frobenius product of ``gx.T @ p`` and ``p @ gy.T`` so
    only two matrix products are formed.
    """
    gx, gy, p = _check_trio(gx, gy, p)
    return _qap(gx, gy, p)


def _qap(gx, gy, p):
    return float(np.vdot(gx.T @ p, p @ gy.T))


def edge_disagreement(gx, gy, image):
    """Squared Frobenius norm ``||gx - P gy P^T||^2`` for a permutation ``image``."""
    gx = as_square(gx, "gx")
    gy = as_square(gy, "gy")
    if gx.shape != gy.shape:
        raise ShapeError(f"size mismatch: gx {gx.shape}, gy {gy.shape}")
    img = check_permutation(image, gx.shape[0])
    diff = gx - gy[np.ix_(img, img)]
    return float(np.vdot(diff, diff))


def barycenter(n):
    """Flat doubly stochastic matrix with every entry ``1/n``."""
    if n < 1:
        raise DomainError("barycenter needs n >= 1")
    return np.full((n, n), 1.0 / n)


def permutation_to_matrix(image):
    img = check_permutation(image)
    n = img.size
    m = np.zeros((n, n))
    m[np.arange(n), img] = 1.0
    return m


def matrix_to_permutation_strict(m, tol=1e-9):
    """Inverse of :func:`permutation_to_matrix`; rejects anything that is not a 0/1 permutation matrix."""
    m = as_square(m)
    ones = np.abs(m - 1.0) <= tol
    zeros = np.abs(m) <= tol
    if not (ones | zeros).all():
        raise ValidationError("entries must be 0 or 1")
    if not ((ones.sum(axis=1) == 1).all() and (ones.sum(axis=0) == 1).all()):
        raise ValidationError("need exactly one 1 per row and column")
    return np.argmax(ones, axis=1).astype(np.int64)


def permute_graph(g, image):
    """``P g P^T`` for the permutation matrix of ``image``."""
    img = check_permutation(image, len(g))
    return np.asarray(g)[np.ix_(img, img)]
