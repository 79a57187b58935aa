"""End-to-end bilingual lexicon induction runs.

A run takes two embedding spaces and a one-to-one dictionary split into
gold seeds (the most frequent source words) and a test set. Graph methods
(SGM, GOAT) match the cosine graphs built over all dictionary words with
the seeds fixed; Procrustes fits an orthogonal map on the seeds and
retrieves with CSLS. Test targets are never read except for scoring.

The iterative variants feed hypotheses on which the forward and reverse
runs agree back in as extra seeds, and :func:`combine` chains GOAT and
iterative Procrustes stages.
"""

import csv
import dataclasses
import hashlib
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import stats

from .embeddings import (Lexicon, build_graph, filter_one_to_one,
                         load_dictionary, load_vec, preprocess, restrict_to_vocab,
                         split_seeds)
from .errors import DomainError, ValidationError
from .graphmatch import HUNGARIAN, seeded_align, solve
from .procrustes import OrthogonalMap, fit_orthogonal, translate
from .sinkhorn import LotParams

log = logging.getLogger(__name__)

BASE_METHODS = ("procrustes", "sgm", "goat")
ITER_METHODS = {"iterproc": "procrustes", "itersgm": "sgm", "itergoat": "goat"}
METHODS = BASE_METHODS + tuple(ITER_METHODS) + ("combine",)
DIRECTIONS = ("forward", "reverse", "both")
ENDINGS = ("proc", "goat", "both")
ENDING_TAGS = {"proc": "combine-ep", "goat": "combine-eg"}
# excluded from the config hash: they do not change results
_VOLATILE = ("out", "jobs", "timing")


@dataclass(frozen=True)
class ExperimentConfig:
    src_emb: str | None = None
    tgt_emb: str | None = None
    dict_path: str | None = None
    dict_rev: str | None = None
    pair: str | None = None
    seeds: int = 0
    method: str = "goat"
    direction: str = "forward"
    H: int = 100
    I: int = 5
    cycles: int = 1
    ending: str = "proc"
    reg: float = 500.0
    lot_tol: float = 1e-6
    lot_max_iter: int = 1000
    init: str = "barycenter"
    rng_seed: int = 0
    max_vocab: int = 200000
    max_iter: int = 30
    tol: float = 1e-3
    gradient_mode: str = "clamped"
    csls_k: int = 10
    retrieval: str = "dict"
    pass_all: bool = False
    strict: bool = False
    jobs: int = 1
    timing: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"unknown direction {self.direction!r}")
        if self.ending not in ENDINGS:
            raise ValidationError(f"unknown ending {self.ending!r}")
        if self.seeds < 0:
            raise ValidationError("seeds must be >= 0")
        if self.H < 1 or self.I < 1 or self.cycles < 1:
            raise ValidationError("H, I and cycles must be >= 1")
        if self.retrieval not in ("dict", "full"):
            raise ValidationError("retrieval must be 'dict' or 'full'")
        if self.init not in ("barycenter", "random"):
            raise ValidationError("init must be 'barycenter' or 'random'")
        try:
            LotParams(self.reg, self.lot_tol, self.lot_max_iter)
        except DomainError as exc:
            raise ValidationError(str(exc)) from None

    def as_dict(self):
        return dataclasses.asdict(self)

    def hash(self):
        doc = {k: v for k, v in self.as_dict().items() if k not in _VOLATILE}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:12]

    @property
    def lot_params(self):
        return LotParams(self.reg, self.lot_tol, self.lot_max_iter)


class Hypothesis(NamedTuple):
    target: str
    score: float
    tag: str


class HypothesisSet:
    """At most one proposed target per source word, in insertion order."""

    def __init__(self, items=()):
        self._map = {}
        for src, hyp in items:
            if src in self._map:
                raise ValidationError(f"two hypotheses for source {src!r}")
            self._map[src] = hyp if isinstance(hyp, Hypothesis) else Hypothesis(hyp, 0.0, "")

    @classmethod
    def from_pairs(cls, pairs, tag=""):
        return cls((a, Hypothesis(b, 0.0, tag)) for a, b in pairs)

    def __len__(self):
        return len(self._map)

    def __contains__(self, src):
        return src in self._map

    def __iter__(self):
        return iter(self._map)

    def get(self, src):
        return self._map.get(src)

    def items(self):
        return self._map.items()

    def pairs(self):
        return [(a, h.target) for a, h in self._map.items()]


def evaluate_p_at_1(predictions, test):
    """Percentage (one decimal) of test pairs whose source is predicted as the gold target."""
    if len(test) == 0:
        raise DomainError("empty test set")
    hit = 0
    for src, tgt in test:
        hyp = predictions.get(src)
        hit += hyp is not None and (hyp.target if isinstance(hyp, Hypothesis) else hyp) == tgt
    return round(100.0 * hit / len(test), 1)


def intersect_hypotheses(fwd, rev, tag="intersect"):
    """Keep ``x -> y`` when ``fwd`` proposes it and ``rev`` proposes ``y -> x``."""
    out = []
    for src, hyp in fwd.items():
        back = rev.get(hyp.target)
        if back is not None and back.target == src:
            out.append((src, Hypothesis(hyp.target, hyp.score, tag)))
    return HypothesisSet(out)


class _Side:
    """One language: its preprocessed space and the dictionary vocabulary in
    frequency order, with the word graph built on first use."""

    def __init__(self, space, words):
        self.space = space
        self.vocab = sorted(set(words), key=space.index)
        self.pos = {w: i for i, w in enumerate(self.vocab)}
        self._graph = None

    @property
    def graph(self):
        if self._graph is None:
            self._graph = build_graph(self.space, self.vocab)
        return self._graph


@dataclass
class _View:
    src: _Side
    tgt: _Side
    gold: list
    test: Lexicon

    def reversed(self):
        return _View(self.tgt, self.src, [(b, a) for a, b in self.gold], self.test.reversed())


class BLIData:
    """Preprocessed spaces plus the seed/test split of a one-to-one dictionary.

    ``lexicon`` is filtered to one-to-one (if not already) and restricted to
    words present in both spaces before splitting.
    """

    def __init__(self, src, tgt, lexicon, num_seeds, pair="src-tgt"):
        src = src if src.preprocessed else preprocess(src)
        tgt = tgt if tgt.preprocessed else preprocess(tgt)
        lex = lexicon if lexicon.one_to_one else filter_one_to_one(lexicon)
        lex = restrict_to_vocab(lex, src, tgt)
        self.lexicon = lex
        self.seeds, self.test = split_seeds(lex, num_seeds, src, tgt)
        self.pair = pair
        self.view = _View(_Side(src, lex.sources), _Side(tgt, lex.targets),
                          list(self.seeds.pairs), self.test)

    def reversed(self):
        """Same split with the languages swapped (shares cached graphs)."""
        other = object.__new__(BLIData)
        other.lexicon = self.lexicon.reversed()
        other.seeds, other.test = self.seeds.reversed(), self.test.reversed()
        other.pair = "-".join(reversed(self.pair.split("-", 1)))
        other.view = self.view.reversed()
        return other


def _predict_graph(view, seeds, method, cfg):
    pairs = [(view.src.pos[a], view.tgt.pos[b]) for a, b in seeds]
    solver = HUNGARIAN if method == "sgm" else cfg.lot_params
    problem = seeded_align(view.src.graph, view.tgt.graph, pairs, step_solver=solver,
                           init=cfg.init, init_seed=cfg.rng_seed, max_iter=cfg.max_iter,
                           tol=cfg.tol, gradient_mode=cfg.gradient_mode)
    result = solve(problem, strict=cfg.strict)
    if result.lot_unconverged:
        log.warning("%d LOT steps missed tolerance", result.lot_unconverged)
    mapping = result.original_mapping(problem)
    # relaxed mass on the chosen entry, in aligned coordinates
    aligned = np.argsort(problem.src_order[problem.src_order >= 0])
    conf = result.final_relaxed[np.arange(problem.n), result.permutation]
    gold_src = {a for a, _ in view.gold}
    out = []
    for i, word in enumerate(view.src.vocab):
        j = mapping[i]
        if word in gold_src or j < 0:
            continue
        out.append((word, Hypothesis(view.tgt.vocab[j], float(conf[aligned[i]]), method)))
    return HypothesisSet(out)


def _predict_procrustes(view, seeds, cfg):
    src_space, tgt_space = view.src.space, view.tgt.space
    if seeds:
        omap = fit_orthogonal(src_space.rows([a for a, _ in seeds]),
                              tgt_space.rows([b for _, b in seeds]))
    else:
        omap = OrthogonalMap.identity(src_space.dim)
    gold_src = {a for a, _ in view.gold}
    queries = [w for w in view.src.vocab if w not in gold_src]
    if not queries:
        return HypothesisSet()
    if cfg.retrieval == "dict":
        cand = tgt_space.indices(view.tgt.vocab)
    else:
        cand = np.arange(len(tgt_space))
    x = src_space.rows(view.src.vocab)
    k = min(cfg.csls_k, x.shape[0] - 1, len(cand) - 1)
    method = "csls" if k >= 1 else "cosine"
    res = translate(x, omap, tgt_space.vectors, method=method, k=max(k, 1),
                    candidates=cand, top=1)
    out = []
    for i, word in enumerate(view.src.vocab):
        if word in gold_src:
            continue
        out.append((word, Hypothesis(tgt_space.words[res.indices[i, 0]],
                                     float(res.scores[i, 0]), "procrustes")))
    return HypothesisSet(out)


def _predict(view, seeds, method, cfg):
    if method == "procrustes":
        return _predict_procrustes(view, seeds, cfg)
    return _predict_graph(view, seeds, method, cfg)


def _both_directions(view, seeds, method, cfg):
    rev_seeds = [(b, a) for a, b in seeds]
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            f = pool.submit(_predict, view, seeds, method, cfg)
            r = pool.submit(_predict, view.reversed(), rev_seeds, method, cfg)
            return f.result(), r.result()
    return _predict(view, seeds, method, cfg), _predict(view.reversed(), rev_seeds, method, cfg)


def _pool(fwd, rev, fixed):
    """Mutual hypotheses not touching any word of the ``fixed`` seed pairs."""
    used_src = {a for a, _ in fixed}
    used_tgt = {b for _, b in fixed}
    return [(a, b) for a, b in intersect_hypotheses(fwd, rev).pairs()
            if a not in used_src and b not in used_tgt]


def _sample(pool, budget, rng):
    """Uniform sample without replacement; the whole pool when it fits the budget."""
    if budget >= len(pool):
        return list(pool), True
    idx = np.sort(rng.choice(len(pool), size=budget, replace=False))
    return [pool[i] for i in idx], False


def _stage(history, view, stage, seeds, preds, n_hyp):
    history.append({
        "stage": stage,
        "n_gold": len(view.gold),
        "n_hyp": n_hyp,
        "n_seeds": len(seeds),
        "n_test": len(view.test),
        "n_vertices": len(view.src.vocab),
        "p_at_1": evaluate_p_at_1(preds, view.test) if len(view.test) else None,
    })


def _iterate(view, base, cfg, rng, history, carried=(), label=None):
    """Stochastic-add loop; returns the last forward predictions and their seeds."""
    label = label or f"iter-{base}"
    fixed = list(view.gold) + list(carried)
    seeds = fixed
    done = False
    for i in range(1, cfg.I + 1):
        fwd = _predict(view, seeds, base, cfg)
        _stage(history, view, f"{label}:{i}", seeds, fwd, len(seeds) - len(view.gold))
        if i == cfg.I or done:
            break
        rev = _predict(view.reversed(), [(b, a) for a, b in seeds], base, cfg)
        pool = _pool(fwd, rev, fixed)
        if not pool:
            break
        sample, done = _sample(pool, i * cfg.H, rng)
        seeds = fixed + sample
    return fwd, seeds


@dataclass
class RunReport:
    pair: str
    method: str
    direction: str
    seeds: int
    p_at_1: float
    n_test: int
    cycles: int | None
    ending: str | None
    rng_seed: int
    config_hash: str
    wall_ms: float | None = None
    config: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    predictions: list = field(default_factory=list)

    def record(self):
        doc = dataclasses.asdict(self)
        doc.pop("predictions")
        return doc

    def to_json(self):
        return json.dumps(self.record(), sort_keys=True)

    def write_predictions(self, path):
        with open(path, "w", encoding="utf-8", errors="surrogateescape") as fh:
            for src, tgt, score in self.predictions:
                fh.write(f"{src}\t{tgt}\t{score!r}\n")


def _report(data, cfg, method, preds, history, started, cycles=None, ending=None,
            direction="forward"):
    test = data.test
    p1 = evaluate_p_at_1(preds, test)
    predictions = []
    for src, _ in test:
        hyp = preds.get(src)
        if hyp is not None:
            predictions.append((src, hyp.target, hyp.score))
    wall = round((time.perf_counter() - started) * 1000.0, 1) if cfg.timing else None
    return RunReport(data.pair, method, direction, len(data.seeds), p1, len(test), cycles,
                     ending, cfg.rng_seed, cfg.hash(), wall, cfg.as_dict(), history,
                     predictions)


def run_single(data, cfg, method=None, direction="forward"):
    """Procrustes, SGM or GOAT with the gold seeds."""
    method = method or cfg.method
    if method not in BASE_METHODS:
        raise ValidationError(f"run_single needs one of {BASE_METHODS}, got {method!r}")
    started = time.perf_counter()
    view = data.view
    preds = _predict(view, view.gold, method, cfg)
    history = []
    _stage(history, view, method, view.gold, preds, 0)
    return _report(data, cfg, method, preds, history, started, direction=direction)


def iterative_stochastic_add(data, cfg, base_method, direction="forward"):
    """Iterative Procrustes / SGM / GOAT with stochastic-add.

    Round ``i`` runs the base method forward (and, unless it is the last
    round, in reverse), intersects the two, samples ``i * H`` of the mutual
    hypotheses with the seeded generator and uses them with the gold seeds
    in round ``i + 1``. Stops after ``I`` rounds or once the whole pool has
    been taken.
    """
    if base_method not in BASE_METHODS:
        raise ValidationError(f"base method must be one of {BASE_METHODS}")
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.rng_seed)
    history = []
    preds, _ = _iterate(data.view, base_method, cfg, rng, history)
    tag = {v: k for k, v in ITER_METHODS.items()}[base_method]
    return _report(data, cfg, tag, preds, history, started, direction=direction)


def combine(data, cfg, ending=None, direction="forward"):
    """GOAT / iterative Procrustes system combination.

    ``ending="proc"`` runs GOAT then IterProc in every cycle and reports
    the final IterProc forward run; ``"goat"`` runs IterProc then GOAT.
    Hypotheses handed between stages are the mutual forward/reverse ones,
    sampled down to ``I * H`` unless ``pass_all`` is set.
    """
    ending = ending or cfg.ending
    if ending not in ("proc", "goat"):
        raise ValidationError("ending must be 'proc' or 'goat'")
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.rng_seed)
    view = data.view
    stages = ("goat", "iterproc") if ending == "proc" else ("iterproc", "goat")
    carried, history = [], []
    for cycle in range(1, cfg.cycles + 1):
        for j, stage in enumerate(stages):
            last = cycle == cfg.cycles and j == 1
            label = f"c{cycle}:{stage}"
            if stage == "goat":
                seeds = list(view.gold) + carried
                fwd = _predict(view, seeds, "goat", cfg)
                _stage(history, view, label, seeds, fwd, len(carried))
            else:
                fwd, seeds = _iterate(view, "procrustes", cfg, rng, history, carried, label)
            if last:
                break
            rev = _predict(view.reversed(), [(b, a) for a, b in seeds],
                           "goat" if stage == "goat" else "procrustes", cfg)
            pool = _pool(fwd, rev, view.gold)
            carried = pool if cfg.pass_all else _sample(pool, cfg.I * cfg.H, rng)[0]
    return _report(data, cfg, ENDING_TAGS[ending], fwd, history, started, cfg.cycles,
                   ending, direction)


def correlation_report(metrics, precision):
    """Spearman and Pearson correlation of two paired series."""
    x = np.asarray(metrics, dtype=np.float64)
    y = np.asarray(precision, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("series must be 1-D and paired")
    if x.size < 3:
        raise DomainError("need at least 3 paired observations")
    return float(stats.spearmanr(x, y)[0]), float(stats.pearsonr(x, y)[0])


def _pair_name(cfg):
    if cfg.pair:
        return cfg.pair
    return f"{Path(cfg.src_emb).stem}-{Path(cfg.tgt_emb).stem}"


def load_data(cfg):
    """Read and preprocess both spaces and the dictionary named in ``cfg``."""
    src = load_vec(cfg.src_emb, cfg.max_vocab)
    tgt = load_vec(cfg.tgt_emb, cfg.max_vocab)
    lex = load_dictionary(cfg.dict_path)
    log.info("loaded %d / %d words, %d dictionary pairs", len(src), len(tgt), len(lex))
    return src, tgt, lex


def run_experiment(cfg, data=None):
    """Run ``cfg`` and return one report per requested direction / ending.

    ``data`` may be a preloaded ``(src, tgt, lexicon)`` triple; otherwise the
    files named in the config are read.
    """
    src, tgt, lex = data if data is not None else load_data(cfg)
    pair = cfg.pair or (_pair_name(cfg) if cfg.src_emb and cfg.tgt_emb else "src-tgt")
    fwd = BLIData(src, tgt, lex, cfg.seeds, pair)
    directions = ("forward", "reverse") if cfg.direction == "both" else (cfg.direction,)
    reports = []
    for d in directions:
        if d == "forward":
            bd = fwd
        elif cfg.dict_rev and data is None:
            bd = BLIData(fwd.view.tgt.space, fwd.view.src.space, load_dictionary(cfg.dict_rev),
                         cfg.seeds, "-".join(reversed(pair.split("-", 1))))
        else:
            bd = fwd.reversed()
        if cfg.method in BASE_METHODS:
            reports.append(run_single(bd, cfg, direction=d))
        elif cfg.method in ITER_METHODS:
            reports.append(iterative_stochastic_add(bd, cfg, ITER_METHODS[cfg.method], d))
        else:
            endings = ("proc", "goat") if cfg.ending == "both" else (cfg.ending,)
            reports.extend(combine(bd, cfg, e, d) for e in endings)
    return reports


def results_table(records):
    """CSV with one row per (pair, seeds): P, S, G and the GOAT gain over SGM."""
    cols = {"procrustes": "P", "sgm": "S", "goat": "G"}
    rows = {}
    for rec in records:
        col = cols.get(rec["method"])
        if col is None:
            continue
        rows.setdefault((rec["pair"], rec["seeds"]), {})[col] = rec["p_at_1"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pair", "seeds", "P", "S", "G", "delta"])
    for (pair, seeds), vals in sorted(rows.items()):
        delta = ""
        if "G" in vals and "S" in vals:
            delta = f"{vals['G'] - vals['S']:.1f}"
        writer.writerow([pair, seeds, *(vals.get(c, "") for c in "PSG"), delta])
    return buf.getvalue()


__all__ = [
    "BLIData", "ExperimentConfig", "Hypothesis", "HypothesisSet", "RunReport",
    "combine", "correlation_report", "evaluate_p_at_1",
    "intersect_hypotheses", "iterative_stochastic_add", "load_data", "results_table",
    "run_experiment", "run_single",
]
