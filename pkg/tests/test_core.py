import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catsynth.core import (
    BayesNet,
    CategoricalSchema,
    Cpt,
    Dag,
    DataTable,
    Distribution,
    VariableSpec,
    joint_probability,
    parent_config_index,
    topological_order,
)
from catsynth.errors import InputError, ModelError, StructuralError
from helpers import brute_joint, make_net, make_schema, random_network


class TestSchema:
    def test_rejects_single_category(self):
        with pytest.raises(InputError):
            VariableSpec("x", ("only",))

    def test_rejects_duplicate_labels_and_names(self):
        with pytest.raises(InputError):
            VariableSpec("x", ("a", "a"))
        with pytest.raises(InputError):
            CategoricalSchema((VariableSpec("x", ("a", "b")), VariableSpec("x", ("a", "b"))))

    def test_ordinal_keeps_declared_order(self):
        v = VariableSpec("freq", ("Never", "Rarely", "Sometimes", "Often", "Always"), "ordinal")
        assert v.index_of("Often") == 3
        with pytest.raises(InputError, match="valid labels"):
            v.index_of("Daily")

    def test_dict_round_trip(self):
        s = make_schema([2, 3])
        assert CategoricalSchema.from_dict(s.to_dict()) == s


class TestDataTable:
    def test_range_checked(self):
        s = make_schema([2, 3])
        with pytest.raises(InputError, match="outside"):
            DataTable(s, [[0, 3]])
        with pytest.raises(InputError):
            DataTable(s, [[0, 1, 1]])

    def test_immutable(self):
        t = DataTable(make_schema([2, 2]), [[0, 1]])
        with pytest.raises(ValueError):
            t.values[0, 0] = 1


class TestTopologicalOrder:
    def test_empty_graph_keeps_declaration_order(self):
        assert Dag.empty(["A", "B"]).topo_order == ("A", "B")

    def test_chain(self):
        dag = Dag.from_edges(["Disability", "Age", "Gender"], [("Gender", "Age"), ("Age", "Disability")])
        assert dag.topo_order == ("Gender", "Age", "Disability")

    def test_two_cycle(self):
        with pytest.raises(StructuralError, match="cycle through '(A|B)'"):
            Dag.from_edges(["A", "B"], [("A", "B"), ("B", "A")])

    def test_cycle_member_named_in_longer_graph(self):
        with pytest.raises(StructuralError) as info:
            topological_order(["R", "A", "B", "C"], {"A": ["C"], "B": ["A"], "C": ["B"]})
        assert any(f"'{n}'" in str(info.value) for n in "ABC")

    def test_self_loop_and_duplicates(self):
        with pytest.raises(StructuralError):
            Dag(("A",), {"A": ("A",)})
        with pytest.raises(StructuralError):
            Dag(("A", "B"), {"B": ("A", "A")})

    def test_idempotent_and_stable(self):
        dag = Dag.from_edges(list("ABCDE"), [("E", "A"), ("C", "B"), ("A", "B")])
        first = dag.topo_order
        assert first == ("C", "D", "E", "A", "B")
        assert topological_order(first, dag.parents) == first
        assert Dag.from_dict(dag.to_dict()).topo_order == first


class TestParentConfigIndex:
    def _cpt(self, pcards):
        n = int(np.prod(pcards)) if pcards else 1
        return Cpt("X", [f"P{i}" for i in range(len(pcards))], pcards, np.full((n, 2), 0.5))

    def test_no_parents(self):
        assert parent_config_index(self._cpt([]), []) == 0

    def test_examples(self):
        cpt = self._cpt([2, 3])
        assert parent_config_index(cpt, [1, 2]) == 5
        assert parent_config_index(cpt, [0, 0]) == 0

    def test_bijection_first_parent_slowest(self):
        cpt = self._cpt([2, 3])
        seen = [parent_config_index(cpt, v) for v in itertools.product(range(2), range(3))]
        # itertools.product varies the last position fastest, matching the layout
        assert seen == list(range(6))

    @given(st.lists(st.integers(2, 5), min_size=0, max_size=4))
    def test_bijection_property(self, pcards):
        cpt = self._cpt(pcards)
        indices = {parent_config_index(cpt, v) for v in itertools.product(*(range(c) for c in pcards))}
        assert indices == set(range(int(np.prod(pcards)) if pcards else 1))

    def test_arity_and_range_errors(self):
        cpt = self._cpt([2, 3])
        with pytest.raises(InputError):
            parent_config_index(cpt, [1])
        with pytest.raises(InputError):
            parent_config_index(cpt, [0, 3])


class TestDistribution:
    def test_small_drift_renormalized(self):
        d = Distribution([0.5, 0.5 + 5e-7])
        assert abs(sum(d.tolist()) - 1) < 1e-12

    def test_large_drift_rejected(self):
        with pytest.raises(ModelError):
            Distribution([0.5, 0.6])
        with pytest.raises(ModelError):
            Distribution([1.1, -0.1])


class TestJointProbability:
    def test_chain(self, chain_ab):
        p = joint_probability(chain_ab.dag, chain_ab.cpts, {"A": 1, "B": 1})
        assert p == pytest.approx(0.24, abs=1e-15)
        total = sum(chain_ab.joint_probability(r) for r in itertools.product(range(2), range(2)))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_network(self):
        net = make_net([2, 3], {"B": ["A"]}, {"A": [[0, 1]], "B": [[1, 0, 0], [0, 0, 1]]}, ["A", "B"])
        for rec in itertools.product(range(2), range(3)):
            assert net.joint_probability(rec) == (1.0 if rec == (1, 2) else 0.0)

    def test_absorbing_zero(self, chain_ab):
        net = make_net([2, 2], {"B": ["A"]}, {"A": [[0.7, 0.3]], "B": [[1.0, 0.0], [0.2, 0.8]]}, ["A", "B"])
        assert net.joint_probability({"A": 0, "B": 1}) == 0.0

    def test_errors(self, chain_ab):
        with pytest.raises(InputError):
            joint_probability(chain_ab.dag, chain_ab.cpts, {"A": 1})
        with pytest.raises(InputError):
            joint_probability(chain_ab.dag, {"A": chain_ab.cpts["A"]}, {"A": 1, "B": 0})

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_joint_sums_to_one(self, seed):
        net = random_network(np.random.default_rng(seed), max_states=20_000)
        joint = brute_joint(net)
        assert abs(joint.sum() - 1.0) <= 1e-9
        _, vec = net.enumerate_joint()
        assert np.allclose(vec, joint.ravel(), atol=1e-15)


class TestModelJson:
    def test_round_trip_preserves_probabilities(self):
        net = random_network(np.random.default_rng(3))
        text = json.dumps(net.to_dict())
        back = BayesNet.from_dict(json.loads(text))
        for n in net.schema.names:
            assert np.array_equal(back.cpts[n].table, net.cpts[n].table)
        assert back.dag == net.dag

    def test_version_checked(self, chain_ab):
        doc = chain_ab.to_dict()
        doc["format_version"] = 99
        with pytest.raises(InputError, match="format_version"):
            BayesNet.from_dict(doc)

    def test_cpt_shape_must_match_schema(self):
        with pytest.raises(InputError):
            make_net([2, 3], {}, {"X0": [[0.5, 0.5]], "X1": [[0.5, 0.5]]})
