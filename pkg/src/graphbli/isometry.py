"""How isometric are two embedding spaces?

Two diagnostics, lower meaning more isometric:

* eigenvector similarity (EVS): squared difference of the leading Laplacian
  eigenvalues of the two k-nearest-neighbour cosine graphs;
* a Gromov-Hausdorff style distance: the bottleneck matching distance
  between the two point clouds after the best orthogonal alignment.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial.distance import cdist

from .errors import DomainError, ShapeError
from .procrustes import fit_orthogonal

log = logging.getLogger(__name__)

SPECTRAL_MASS = 0.9
MIN_SAMPLE = 10
_MNN_ROUNDS = 5


@dataclass(frozen=True)
class IsometryReport:
    evs: float
    gh: float
    knn: int
    sample: int
    seed: int
    laplacian: str
    n_words: int

    def as_dict(self):
        return asdict(self)


def _vectors(space, words):
    x = space.vectors if words is None else space.rows(words)
    return np.asarray(x, dtype=np.float64)


def knn_graph(x, knn):
    """Symmetrised binary k-nearest-neighbour graph under cosine similarity."""
    n = x.shape[0]
    if not 1 <= knn < n:
        raise DomainError(f"knn must satisfy 1 <= knn < {n}, got {knn}")
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    xs = np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)
    sim = xs @ xs.T
    np.fill_diagonal(sim, -np.inf)
    nbrs = np.argsort(-sim, axis=1, kind="stable")[:, :knn]
    adj = np.zeros((n, n))
    adj[np.repeat(np.arange(n), knn), nbrs.ravel()] = 1.0
    return np.maximum(adj, adj.T)


def laplacian_spectrum(adj, normalized=False):
    """Laplacian eigenvalues, largest first."""
    deg = adj.sum(axis=1)
    if normalized:
        inv = np.divide(1.0, np.sqrt(deg), out=np.zeros_like(deg), where=deg > 0)
        lap = np.eye(len(deg)) - inv[:, None] * adj * inv[None, :]
    else:
        lap = np.diag(deg) - adj
    return np.linalg.eigvalsh(lap)[::-1]


def _mass_cutoff(eig, mass):
    total = eig.sum()
    if total <= 0:
        return 1
    return int(np.searchsorted(np.cumsum(eig), mass * total) + 1)


def evs_from_vectors(xa, xb, knn=10, normalized=False, mass=SPECTRAL_MASS):
    if xa.shape[0] != xb.shape[0]:
        raise DomainError(f"subset sizes differ: {xa.shape[0]} vs {xb.shape[0]}")
    ea = laplacian_spectrum(knn_graph(xa, knn), normalized)
    eb = laplacian_spectrum(knn_graph(xb, knn), normalized)
    # the cut-off must reach the spectral mass on both sides
    k = min(max(_mass_cutoff(ea, mass), _mass_cutoff(eb, mass)), len(ea))
    return float(np.sum((ea[:k] - eb[:k]) ** 2))


def eigenvector_similarity(a, b, subset_a=None, subset_b=None, knn=10, normalized=False):
    """EVS between two spaces restricted to equally sized word subsets."""
    return evs_from_vectors(_vectors(a, subset_a), _vectors(b, subset_b), knn, normalized)


def bottleneck_distance(xa, xb):
    """``min over bijections pi of max_i ||xa[i] - xb[pi(i)]||``.

    Binary search over the candidate thresholds; feasibility is a perfect
    bipartite matching on the edges no longer than the threshold.
    """
    n = xa.shape[0]
    dist = cdist(xa, xb)
    # some perfect matching exists below the largest row/column minimum
    lo_bound = max(dist.min(axis=1).max(), dist.min(axis=0).max())
    cand = np.unique(dist[dist >= lo_bound])
    lo, hi = 0, len(cand) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        graph = csr_matrix(dist <= cand[mid])
        match = maximum_bipartite_matching(graph, perm_type="column")
        if (match >= 0).sum() == n:
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])


def _mutual_nn(xa, xb):
    sim = xa @ xb.T
    fwd = sim.argmax(axis=1)
    back = sim.argmax(axis=0)
    src = np.flatnonzero(back[fwd] == np.arange(len(fwd)))
    return src, fwd[src]


def align(xa, xb):
    """Orthogonal map of ``xa`` onto ``xb``: Procrustes on the given pairing,
    then refits on mutual nearest neighbours until the pairing is stable."""
    w = fit_orthogonal(xa, xb).w
    prev = None
    for _ in range(_MNN_ROUNDS):
        src, tgt = _mutual_nn(xa @ w, xb)
        key = (src.tobytes(), tgt.tobytes())
        if len(src) == 0 or key == prev:
            break
        prev = key
        w = fit_orthogonal(xa[src], xb[tgt]).w
    return w


def gh_from_vectors(xa, xb, sample=2000, seed=0):
    if xa.shape[0] != xb.shape[0]:
        raise DomainError(f"subset sizes differ: {xa.shape[0]} vs {xb.shape[0]}")
    if xa.shape[1] != xb.shape[1]:
        raise ShapeError("spaces differ in dimension")
    if sample < MIN_SAMPLE or xa.shape[0] < MIN_SAMPLE:
        raise DomainError(f"GH needs a sample of at least {MIN_SAMPLE} points")
    n = xa.shape[0]
    if sample >= n:
        idx = np.arange(n)
    else:
        idx = np.sort(np.random.default_rng(seed).choice(n, size=sample, replace=False))
    sa, sb = xa[idx], xb[idx]
    return bottleneck_distance(sa @ align(sa, sb), sb)


def gromov_hausdorff(a, b, subset_a=None, subset_b=None, sample=2000, seed=0):
    """Sampled Gromov-Hausdorff estimate between two spaces.

    The subsets are paired position by position (e.g. the two sides of a
    dictionary). The same positions are sampled on both sides; a sample
    larger than the subsets uses every point.
    """
    return gh_from_vectors(_vectors(a, subset_a), _vectors(b, subset_b), sample, seed)


def isometry_report(a, b, subset_a=None, subset_b=None, knn=10, sample=2000, seed=0,
                    normalized=False):
    xa, xb = _vectors(a, subset_a), _vectors(b, subset_b)
    evs = evs_from_vectors(xa, xb, knn, normalized)
    gh = gh_from_vectors(xa, xb, sample, seed)
    return IsometryReport(evs, gh, knn, min(sample, xa.shape[0]), seed,
                          "normalized" if normalized else "unnormalized", xa.shape[0])
