import numpy as np
import pytest

from graphbli.embeddings import EmbeddingSpace
from graphbli.errors import DomainError, ShapeError
from graphbli.isometry import (bottleneck_distance, eigenvector_similarity, evs_from_vectors,
                               gh_from_vectors, gromov_hausdorff, isometry_report, knn_graph,
                               laplacian_spectrum)

from .helpers import random_orthogonal


def _space(x, prefix="w"):
    return EmbeddingSpace([f"{prefix}{i}" for i in range(len(x))], x)


def _clustered(rng, n=300, d=20, k=10):
    x = (3.0 * rng.normal(size=(k, d)))[rng.integers(0, k, n)] + rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1).mean()


@pytest.fixture
def cloud(rng):
    return rng.normal(size=(120, 8))


class TestGraph:
    def test_knn_graph(self, rng):
        x = rng.normal(size=(30, 5))
        adj = knn_graph(x, 3)
        assert np.array_equal(adj, adj.T) and set(np.unique(adj)) <= {0.0, 1.0}
        assert (np.diag(adj) == 0).all() and (adj.sum(axis=1) >= 3).all()

    def test_knn_bounds(self, rng):
        with pytest.raises(DomainError):
            knn_graph(rng.normal(size=(5, 2)), 5)

    def test_spectrum_of_path(self):
        # path on 3 vertices: Laplacian eigenvalues 3, 1, 0
        adj = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
        assert laplacian_spectrum(adj) == pytest.approx([3, 1, 0], abs=1e-12)
        assert laplacian_spectrum(adj, normalized=True) == pytest.approx([2, 1, 0], abs=1e-12)


class TestEVS:
    def test_identical(self, cloud):
        a = _space(cloud)
        assert eigenvector_similarity(a, a, knn=5) == 0.0

    def test_rotation(self, cloud, rng):
        q = random_orthogonal(cloud.shape[1], rng)
        assert eigenvector_similarity(_space(cloud), _space(cloud @ q), knn=5) <= 1e-6

    def test_symmetry_and_sign(self, cloud, rng):
        other = cloud + 0.5 * rng.normal(size=cloud.shape)
        ab = evs_from_vectors(cloud, other, knn=5)
        ba = evs_from_vectors(other, cloud, knn=5)
        assert ab > 0 and abs(ab - ba) <= 1e-6

    def test_subsets(self, cloud):
        a, b = _space(cloud, "a"), _space(cloud[::-1].copy(), "b")
        sub_a = [f"a{i}" for i in range(50)]
        sub_b = [f"b{len(cloud) - 1 - i}" for i in range(50)]
        assert eigenvector_similarity(a, b, sub_a, sub_b, knn=5) <= 1e-9

    def test_size_mismatch(self, cloud):
        with pytest.raises(DomainError):
            evs_from_vectors(cloud, cloud[:-1])

    def test_monotone_in_noise(self, rng):
        x = _clustered(rng)
        d = x.shape[1]
        medians = []
        for sigma in [0.0, 0.1, 0.2, 1.6, 3.2]:
            vals = [evs_from_vectors(x, x + sigma / np.sqrt(d) *
                                     np.random.default_rng(s).normal(size=x.shape))
                    for s in range(5)]
            medians.append(np.median(vals))
        assert all(b >= a for a, b in zip(medians, medians[1:])), medians


class TestBottleneck:
    def test_brute_force(self, rng):
        from itertools import permutations
        for _ in range(10):
            a, b = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))
            dist = np.linalg.norm(a[:, None] - b[None], axis=2)
            best = min(max(dist[i, p[i]] for i in range(5)) for p in permutations(range(5)))
            assert bottleneck_distance(a, b) == best

    def test_relabelled_copy(self, rng):
        a = rng.normal(size=(40, 3))
        assert bottleneck_distance(a, a[rng.permutation(40)]) == 0.0


class TestGH:
    def test_identical(self, cloud):
        a = _space(cloud)
        assert gromov_hausdorff(a, a, sample=50) <= 1e-6

    def test_rotation(self, cloud, rng):
        q = random_orthogonal(cloud.shape[1], rng)
        assert gh_from_vectors(cloud, cloud @ q, sample=100) <= 1e-3

    def test_scaled_coordinate_is_worse(self, cloud, rng):
        q = random_orthogonal(cloud.shape[1], rng)
        scaled = cloud.copy()
        scaled[:, 0] *= 3.0
        rotated = gh_from_vectors(cloud, cloud @ q, sample=100)
        assert gh_from_vectors(cloud, scaled, sample=100) > rotated

    def test_symmetric_and_deterministic(self, cloud, rng):
        other = cloud @ random_orthogonal(8, rng) + 0.1 * rng.normal(size=cloud.shape)
        ab = gh_from_vectors(cloud, other, sample=60, seed=3)
        assert ab == gh_from_vectors(cloud, other, sample=60, seed=3)
        ba = gh_from_vectors(other, cloud, sample=60, seed=3)
        assert ab > 0 and abs(ab - ba) <= 0.5 * max(ab, ba)

    def test_sample_too_small(self, cloud):
        with pytest.raises(DomainError):
            gh_from_vectors(cloud, cloud, sample=9)

    def test_shape_errors(self, cloud):
        with pytest.raises(DomainError):
            gh_from_vectors(cloud, cloud[:-1])
        with pytest.raises(ShapeError):
            gh_from_vectors(cloud, cloud[:, :-1])


def test_report(cloud):
    a = _space(cloud)
    rep = isometry_report(a, a, knn=5, sample=5000, seed=1)
    d = rep.as_dict()
    assert d["evs"] == 0.0 and d["gh"] <= 1e-6
    assert d["sample"] == len(cloud) and d["knn"] == 5 and d["laplacian"] == "unnormalized"
