import math

import numpy as np
import pytest

from catsynth.baseline import (
    PrivacyBudget,
    StructureOptions,
    fit_correlated,
    fit_independent,
    learn_structure,
    noisy_counts,
    parent_set_score,
)
from catsynth.bn_synth import FitOptions, SampleRequest, ancestral_sample, fit_cpts
from catsynth.core import DataTable, Dag
from catsynth.errors import InputError
from helpers import make_net, make_schema


def _binary(counts):
    values = np.repeat(np.arange(len(counts)), counts)[:, None]
    return DataTable(make_schema([len(counts)]), values)


class TestBudget:
    def test_scale(self):
        assert PrivacyBudget(10).laplace_scale(4) == pytest.approx(0.4)
        assert PrivacyBudget.off().laplace_scale(4) == 0.0
        assert not PrivacyBudget(math.inf).enabled

    @pytest.mark.parametrize("eps", [0, -1.0])
    def test_non_positive_rejected(self, eps):
        with pytest.raises(InputError):
            PrivacyBudget(eps)


class TestIndependent:
    def test_noise_off_is_frequency(self):
        net = fit_independent(_binary([50, 50]))
        assert net.cpts["X0"].table[0].tolist() == [0.5, 0.5]
        assert net.dag.edges == ()

    def test_infinite_epsilon_is_noise_free(self):
        net = fit_independent(_binary([30, 70]), PrivacyBudget(math.inf), rng=1)
        assert net.cpts["X0"].table[0].tolist() == pytest.approx([0.3, 0.7], abs=1e-15)

    def test_laplace_unit_scale(self):
        rng = np.random.default_rng(3)
        reps = 1000
        noise = np.concatenate([noisy_counts(np.full(2, 1e6), 1.0, rng) - 1e6 for _ in range(reps)])
        # |Laplace(0, 1)| has mean 1 and standard deviation 1
        assert abs(np.abs(noise).mean() - 1.0) <= 3 / math.sqrt(noise.size)

    def test_clamped_at_zero(self):
        out = noisy_counts(np.zeros(1000), 5.0, np.random.default_rng(0))
        assert (out >= 0).all() and (out == 0).any()

    def test_seeded_reproducible(self):
        data = _binary([400, 100, 500])
        a = fit_independent(data, PrivacyBudget(1.0), rng=8)
        b = fit_independent(data, PrivacyBudget(1.0), rng=8)
        assert np.array_equal(a.cpts["X0"].table, b.cpts["X0"].table)


class TestStructure:
    def test_zero_parents_is_empty_graph(self):
        data = DataTable(make_schema([2, 2]), [[0, 0], [1, 1]] * 10)
        assert learn_structure(data, StructureOptions(0)).edges == ()

    def test_links_dependent_pair_only(self):
        net = make_net(
            [3, 3, 2],
            {"X1": ["X0"]},
            {
                "X0": [[0.3, 0.3, 0.4]],
                "X1": [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]],
                "X2": [[0.5, 0.5]],
            },
        )
        data = ancestral_sample(net, SampleRequest(50_000, 5))
        dag = learn_structure(data, StructureOptions(1))
        xy = {frozenset(e) for e in dag.edges}
        assert frozenset(("X0", "X1")) in xy
        # the coin's attachment carries no more information than a shuffled copy
        coin_parent = dag.parents["X2"]
        score = parent_set_score(data, "X2", coin_parent)
        rng = np.random.default_rng(0)
        floor = []
        for _ in range(50):
            shuffled = data.values.copy()
            shuffled[:, 2] = rng.permutation(shuffled[:, 2])
            floor.append(parent_set_score(DataTable(data.schema, shuffled), "X2", coin_parent))
        assert score <= np.quantile(floor, 0.99) + 1e-4

    def test_duplicated_columns_get_linked(self):
        schema = make_schema([4, 4, 3])
        rng = np.random.default_rng(2)
        a = rng.integers(0, 4, 2000)
        data = DataTable(schema, np.column_stack([a, a, rng.integers(0, 3, 2000)]))
        dag = learn_structure(data, StructureOptions(2))
        assert ("X0", "X1") in dag.edges or ("X1", "X0") in dag.edges

    def test_deterministic_and_respects_k(self):
        net = make_net(
            [2, 2, 2, 2],
            {"X1": ["X0"], "X2": ["X0", "X1"], "X3": ["X2"]},
            {
                "X0": [[0.5, 0.5]],
                "X1": [[0.9, 0.1], [0.2, 0.8]],
                "X2": [[0.9, 0.1], [0.6, 0.4], [0.3, 0.7], [0.05, 0.95]],
                "X3": [[0.7, 0.3], [0.1, 0.9]],
            },
        )
        data = ancestral_sample(net, SampleRequest(5000, 1))
        for k in (1, 2, 3):
            d1 = learn_structure(data, StructureOptions(k))
            assert d1 == learn_structure(data, StructureOptions(k))
            assert max(len(p) for p in d1.parents.values()) <= k

    def test_tie_break_validation(self):
        with pytest.raises(InputError):
            StructureOptions(2, "random")
        with pytest.raises(InputError):
            learn_structure(_binary([3, 3]))


class TestCorrelated:
    def test_noise_off_matches_smoothed_fit(self, chain_ab):
        data = ancestral_sample(chain_ab, SampleRequest(2000, 3))
        got = fit_correlated(data, chain_ab.dag)
        ref = fit_cpts(data, chain_ab.dag, FitOptions(1.0))
        for n in chain_ab.dag.nodes:
            assert np.array_equal(got.cpts[n].table, ref[n].table)

    def test_concentrated_counts_under_noise(self):
        data = _binary([100, 0])
        dag = Dag.empty(["X0"])
        eps = 10.0
        scale = 1 / eps
        rng = np.random.default_rng(11)
        hits = 0
        for _ in range(1000):
            p = fit_correlated(data, dag, PrivacyBudget(eps), rng).cpts["X0"].table[0]
            hits += abs(p[0] - 1.0) <= 3 * scale / 100
        assert hits >= 950

    def test_empty_row_becomes_uniform(self, monkeypatch):
        import catsynth.baseline as baseline

        # force every unseen cell to clamp: noise of -1 on each count
        monkeypatch.setattr(baseline, "noisy_counts", lambda c, scale, rng: np.maximum(c - 1.0, 0.0))
        schema = make_schema([2, 3])
        data = DataTable(schema, [[0, 1]] * 5)
        dag = Dag.from_edges(schema.names, [("X0", "X1")])
        net = fit_correlated(data, dag, PrivacyBudget(1.0), rng=0)
        assert net.cpts["X1"].table[1].tolist() == pytest.approx([1 / 3] * 3)
        assert net.cpts["X1"].table[0].tolist() == [0.0, 1.0, 0.0]

    def test_l1_error_shrinks_with_epsilon(self, chain_ab):
        data = ancestral_sample(chain_ab, SampleRequest(1000, 6))
        clean = fit_correlated(data, chain_ab.dag)
        rng = np.random.default_rng(4)
        means = []
        for eps in (1.0, 5.0, 10.0):
            errs = []
            for _ in range(500):
                net = fit_correlated(data, chain_ab.dag, PrivacyBudget(eps), rng)
                errs.append(sum(np.abs(net.cpts[n].table - clean.cpts[n].table).sum() for n in ("A", "B")))
            means.append(np.mean(errs))
        assert means[0] > means[1] > means[2]
