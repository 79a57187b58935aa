"""Independent oracles and synthetic fixtures for the test-suite."""

import itertools

import numpy as np

from graphbli.embeddings import EmbeddingSpace, Lexicon, write_vec


def brute_force_lap(profit, maximize=True):
    """Best assignment value by enumerating all permutations."""
    n = profit.shape[0]
    rows = np.arange(n)
    vals = [profit[rows, list(p)].sum() for p in itertools.permutations(range(n))]
    return max(vals) if maximize else min(vals)


def all_permutation_objectives(gx, gy):
    n = gx.shape[0]
    out = []
    for p in itertools.permutations(range(n)):
        m = np.zeros((n, n))
        m[np.arange(n), list(p)] = 1.0
        out.append(np.trace(gx.T @ m @ gy @ m.T))
    return np.array(out)


def random_orthogonal(d, rng):
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


def planted_pair(n, rng, sigma=0.0):
    """Symmetric U(0,1) graph and a relabelled (optionally noisy) copy.

    Returns ``(gx, gy, pi)`` with ``gy[pi[i], pi[j]] = gx[i, j] (+ noise)``.
    """
    g = rng.uniform(size=(n, n))
    g = (g + g.T) / 2.0
    noisy = g
    if sigma:
        e = rng.normal(scale=sigma * g.std(), size=(n, n))
        noisy = g + (e + e.T) / np.sqrt(2.0)
    pi = rng.permutation(n)
    gy = np.empty_like(g)
    gy[np.ix_(pi, pi)] = noisy
    return g, gy, pi


def seeded_recovery(result, problem, pi, num_seeds):
    """Fraction of non-seed vertices mapped to their planted partner."""
    mapping = result.original_mapping(problem)
    src = problem.src_order[num_seeds:]
    return float(np.mean(mapping[src] == pi[src]))


def twin_spaces(n=500, d=50, sigma=0.0, seed=0):
    """Source space, a rotated + relabelled (+ noisy) target copy, and the gold lexicon.

    Source word ``s<i>`` translates to ``t<i>``; the target file order is a
    random permutation so frequency ranks do not line up.
    """
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    q = random_orthogonal(d, rng)
    perm = rng.permutation(n)
    y = (x @ q)[perm] + sigma * rng.normal(size=(n, d))
    src = EmbeddingSpace([f"s{i}" for i in range(n)], x.astype(np.float32))
    tgt = EmbeddingSpace([f"t{perm[j]}" for j in range(n)], y.astype(np.float32))
    lex = Lexicon([(f"s{i}", f"t{i}") for i in range(n)])
    return src, tgt, lex


def write_twin_files(directory, **kw):
    src, tgt, lex = twin_spaces(**kw)
    paths = {k: str(directory / name) for k, name in
             (("src", "src.vec"), ("tgt", "tgt.vec"), ("dict", "dict.txt"))}
    write_vec(src, paths["src"])
    write_vec(tgt, paths["tgt"])
    with open(paths["dict"], "w", encoding="utf-8") as fh:
        fh.writelines(f"{a} {b}\n" for a, b in lex)
    return paths
