import json

import numpy as np
import pytest

from graphbli import pipelines
from graphbli.embeddings import Lexicon
from graphbli.errors import DomainError, ValidationError
from graphbli.pipelines import (BLIData, ExperimentConfig, Hypothesis, HypothesisSet, combine,
                                correlation_report, evaluate_p_at_1, intersect_hypotheses,
                                iterative_stochastic_add, results_table, run_experiment,
                                run_single)

from .helpers import twin_spaces


@pytest.fixture(scope="module")
def twins():
    return twin_spaces(n=200, d=30, sigma=0.0, seed=4)


@pytest.fixture(scope="module")
def noisy_twins():
    return twin_spaces(n=200, d=30, sigma=0.3, seed=4)


def _data(spaces, seeds):
    src, tgt, lex = spaces
    return BLIData(src, tgt, lex, seeds)


class TestPrecision:
    test = Lexicon([("a", "x"), ("b", "y"), ("c", "z"), ("d", "u"), ("e", "v")])

    def test_all_correct(self):
        preds = HypothesisSet.from_pairs(self.test.pairs)
        assert evaluate_p_at_1(preds, self.test) == 100.0

    def test_no_predictions(self):
        assert evaluate_p_at_1(HypothesisSet(), self.test) == 0.0

    def test_two_of_five(self):
        preds = HypothesisSet.from_pairs([("a", "x"), ("b", "q"), ("c", "z"), ("d", "v")])
        assert evaluate_p_at_1(preds, self.test) == 40.0

    def test_plain_dict(self):
        assert evaluate_p_at_1({"a": "x", "b": "y"}, self.test) == 40.0

    def test_empty_test(self):
        with pytest.raises(DomainError):
            evaluate_p_at_1(HypothesisSet(), Lexicon([]))


class TestIntersect:
    def test_example(self):
        fwd = HypothesisSet.from_pairs([("a", "x"), ("b", "y")])
        rev = HypothesisSet.from_pairs([("x", "a"), ("y", "c")])
        assert intersect_hypotheses(fwd, rev).pairs() == [("a", "x")]

    def test_identical(self):
        pairs = [("a", "x"), ("b", "y"), ("c", "z")]
        fwd = HypothesisSet.from_pairs(pairs)
        rev = HypothesisSet.from_pairs([(b, a) for a, b in pairs])
        assert intersect_hypotheses(fwd, rev).pairs() == pairs

    def test_disjoint(self):
        fwd = HypothesisSet.from_pairs([("a", "x")])
        rev = HypothesisSet.from_pairs([("y", "b")])
        assert len(intersect_hypotheses(fwd, rev)) == 0

    def test_one_hypothesis_per_source(self):
        with pytest.raises(ValidationError):
            HypothesisSet([("a", Hypothesis("x", 0, "")), ("a", Hypothesis("y", 0, ""))])


class TestCorrelation:
    def test_monotone(self):
        rho, r = correlation_report([1, 2, 3, 4], [1, 4, 9, 16])
        assert rho == pytest.approx(1.0) and 0 < r <= 1

    def test_reversed(self):
        rho, _ = correlation_report([1, 2, 3, 4], [9, 7, 3, 1])
        assert rho == pytest.approx(-1.0)

    def test_hand_ranks(self):
        x, y = [1, 2, 3, 4], [2, 1, 4, 3]
        # no ties: rho = 1 - 6 sum d^2 / (n (n^2 - 1)), rank differences (1, 1, 1, 1)
        expected = 1 - 6 * 4 / (4 * 15)
        rho, r = correlation_report(x, y)
        assert rho == pytest.approx(expected) and rho == pytest.approx(0.6)
        xc, yc = np.array(x) - 2.5, np.array(y) - 2.5
        assert r == pytest.approx(xc @ yc / np.sqrt((xc @ xc) * (yc @ yc)))

    def test_too_few(self):
        with pytest.raises(DomainError):
            correlation_report([1, 2], [1, 2])


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(method="nope")
        with pytest.raises(ValidationError):
            ExperimentConfig(H=0)
        with pytest.raises(ValidationError):
            ExperimentConfig(reg=-1.0)

    def test_hash_ignores_volatile_fields(self):
        a = ExperimentConfig(seeds=5)
        assert a.hash() == ExperimentConfig(seeds=5, out="x", jobs=4, timing=True).hash()
        assert a.hash() != ExperimentConfig(seeds=6).hash()


class TestSingle:
    @pytest.mark.parametrize("method", ["goat", "sgm"])
    def test_graph_methods_recover_twins(self, twins, method):
        rep = run_single(_data(twins, 20), ExperimentConfig(seeds=20), method)
        assert rep.p_at_1 == 100.0 and rep.n_test == 180

    def test_procrustes_twins(self, twins):
        rep = run_single(_data(twins, 40), ExperimentConfig(seeds=40), "procrustes")
        assert rep.p_at_1 == 100.0

    def test_goat_beats_procrustes_with_noise(self, noisy_twins):
        data = _data(noisy_twins, 20)
        cfg = ExperimentConfig(seeds=20)
        goat = run_single(data, cfg, "goat").p_at_1
        assert goat >= run_single(data, cfg, "procrustes").p_at_1

    def test_heavy_noise_does_not_crash(self):
        data = _data(twin_spaces(n=120, d=20, sigma=1.0, seed=2), 10)
        for method in pipelines.BASE_METHODS:
            rep = run_single(data, ExperimentConfig(seeds=10), method)
            assert 0.0 <= rep.p_at_1 <= 100.0

    def test_zero_seeds(self, twins):
        for method in pipelines.BASE_METHODS:
            rep = run_single(_data(twins, 0), ExperimentConfig(), method)
            assert 0.0 <= rep.p_at_1 <= 100.0 and rep.n_test == 200

    def test_reverse_view(self, twins):
        data = _data(twins, 20)
        rev = data.reversed()
        assert rev.test.pairs[0] == data.test.pairs[0][::-1]
        assert run_single(rev, ExperimentConfig(seeds=20), "goat").p_at_1 == 100.0

    def test_no_wall_time_by_default(self, twins):
        data = _data(twins, 20)
        assert run_single(data, ExperimentConfig(seeds=20), "procrustes").wall_ms is None
        timed = run_single(data, ExperimentConfig(seeds=20, timing=True), "procrustes")
        assert timed.wall_ms >= 0

    def test_predictions_exclude_seeds(self, twins):
        data = _data(twins, 20)
        rep = run_single(data, ExperimentConfig(seeds=20), "goat")
        seed_src = set(data.seeds.sources)
        assert not seed_src & {s for s, _, _ in rep.predictions}


class _SeedSpy:
    """Records the seed list handed to every prediction call."""

    def __init__(self, monkeypatch):
        self.calls = []
        real = pipelines._predict

        def spy(view, seeds, method, cfg):
            self.calls.append((view, list(seeds)))
            return real(view, seeds, method, cfg)

        monkeypatch.setattr(pipelines, "_predict", spy)


def _check_conservation(rep, data, spy):
    total = len(data.seeds) + len(data.test)
    for h in rep.history:
        assert h["n_gold"] + h["n_test"] == total
        assert h["n_seeds"] == h["n_gold"] + h["n_hyp"]
        assert 0.0 <= h["p_at_1"] <= 100.0
    test_words = set(data.test.sources) | set(data.test.targets)
    for view, seeds in spy.calls:
        gold = set(view.gold)
        assert gold <= set(seeds)
        srcs = [a for a, _ in seeds]
        tgts = [b for _, b in seeds]
        assert len(set(srcs)) == len(srcs) and len(set(tgts)) == len(tgts)
        # gold test pairs are only reachable as hypotheses, never as gold seeds
        assert not gold & set(data.test.pairs) and not gold & set(data.test.reversed().pairs)
        assert not {w for p in gold for w in p} & test_words


class TestIterative:
    def test_itergoat_not_worse_than_goat(self, noisy_twins, monkeypatch):
        data = _data(noisy_twins, 10)
        cfg = ExperimentConfig(seeds=10, H=20, I=3, rng_seed=1)
        goat = run_single(data, cfg, "goat").p_at_1
        spy = _SeedSpy(monkeypatch)
        rep = iterative_stochastic_add(data, cfg, "goat")
        assert rep.method == "itergoat" and rep.p_at_1 >= goat
        _check_conservation(rep, data, spy)
        hyp = [h["n_hyp"] for h in rep.history]
        assert hyp[0] == 0 and all(n <= (i) * cfg.H for i, n in enumerate(hyp[1:], 1))

    def test_budget_larger_than_pool(self, twins):
        data = _data(twins, 20)
        rep = iterative_stochastic_add(data, ExperimentConfig(seeds=20, H=10000, I=4), "procrustes")
        # the whole pool is taken in round one, so the loop stops after round two
        assert len(rep.history) == 2 and 0 < rep.history[1]["n_hyp"] <= 180

    def test_deterministic(self, noisy_twins):
        data = _data(noisy_twins, 10)
        cfg = ExperimentConfig(seeds=10, H=15, I=3, rng_seed=5)
        a = iterative_stochastic_add(data, cfg, "procrustes")
        b = iterative_stochastic_add(data, cfg, "procrustes")
        assert a.to_json() == b.to_json() and a.predictions == b.predictions

    def test_bad_base(self, twins):
        with pytest.raises(ValidationError):
            iterative_stochastic_add(_data(twins, 5), ExperimentConfig(), "combine")


class TestCombine:
    def test_endproc_not_worse_than_goat(self, noisy_twins, monkeypatch):
        data = _data(noisy_twins, 10)
        cfg = ExperimentConfig(seeds=10, H=20, I=2, cycles=1, rng_seed=3)
        goat = run_single(data, cfg, "goat").p_at_1
        spy = _SeedSpy(monkeypatch)
        rep = combine(data, cfg, "proc")
        assert rep.method == "combine-ep" and rep.p_at_1 >= goat
        _check_conservation(rep, data, spy)

    def test_both_endings_are_runnable(self, twins):
        cfg = ExperimentConfig(seeds=10, method="combine", ending="both", H=20, I=2)
        reports = run_experiment(cfg, data=twins)
        assert [r.method for r in reports] == ["combine-ep", "combine-eg"]
        assert [r.ending for r in reports] == ["proc", "goat"]

    def test_handover_cap(self, twins, monkeypatch):
        data = _data(twins, 10)
        cfg = ExperimentConfig(seeds=10, H=5, I=2, cycles=2, rng_seed=0)
        rep = combine(data, cfg, "proc")
        goat_stages = [h for h in rep.history if h["stage"].endswith(":goat")]
        assert goat_stages[1]["n_hyp"] == cfg.I * cfg.H
        full = combine(data, dataclass_replace(cfg, pass_all=True), "proc")
        goat_stages = [h for h in full.history if h["stage"].endswith(":goat")]
        assert goat_stages[1]["n_hyp"] > cfg.I * cfg.H

    def test_deterministic(self, noisy_twins):
        data = _data(noisy_twins, 10)
        cfg = ExperimentConfig(seeds=10, H=10, I=2, cycles=2, rng_seed=9)
        a, b = combine(data, cfg, "goat"), combine(data, cfg, "goat")
        assert a.to_json() == b.to_json() and a.predictions == b.predictions


def dataclass_replace(cfg, **kw):
    import dataclasses
    return dataclasses.replace(cfg, **kw)


class TestExperiment:
    def test_both_directions(self, twins):
        reports = run_experiment(ExperimentConfig(seeds=20, direction="both"), data=twins)
        assert [r.direction for r in reports] == ["forward", "reverse"]
        assert all(r.p_at_1 == 100.0 for r in reports)

    def test_jobs_do_not_change_results(self, noisy_twins):
        cfg = ExperimentConfig(seeds=10, method="itersgm", H=10, I=2)
        one = run_experiment(cfg, data=noisy_twins)[0]
        two = run_experiment(dataclass_replace(cfg, jobs=2), data=noisy_twins)[0]
        a, b = one.record(), two.record()
        assert a.pop("config")["jobs"] == 1 and b.pop("config")["jobs"] == 2
        assert a == b and one.predictions == two.predictions

    def test_report_record(self, twins):
        rep = run_experiment(ExperimentConfig(seeds=20, method="procrustes", pair="aa-bb"),
                             data=twins)[0]
        doc = json.loads(rep.to_json())
        assert doc["pair"] == "aa-bb" and doc["seeds"] == 20 and "predictions" not in doc
        assert doc["config_hash"] == ExperimentConfig(seeds=20, method="procrustes",
                                                      pair="aa-bb").hash()


def test_results_table():
    recs = [
        {"pair": "en-de", "seeds": 25, "method": "procrustes", "p_at_1": 1.5},
        {"pair": "en-de", "seeds": 25, "method": "sgm", "p_at_1": 40.0},
        {"pair": "en-de", "seeds": 25, "method": "goat", "p_at_1": 45.5},
        {"pair": "en-de", "seeds": 100, "method": "goat", "p_at_1": 50.0},
        {"pair": "en-de", "seeds": 25, "method": "itergoat", "p_at_1": 99.0},
    ]
    assert results_table(recs).splitlines() == [
        "pair,seeds,P,S,G,delta",
        "en-de,25,1.5,40.0,45.5,5.5",
        "en-de,100,,,50.0,",
    ]
