"""Network builders and brute-force oracles shared by the tests."""

import itertools
import math

import numpy as np

from catsynth.core import BayesNet, CategoricalSchema, Cpt, Dag, VariableSpec


def make_schema(cards, names=None):
    names = names or [f"X{i}" for i in range(len(cards))]
    return CategoricalSchema(
        tuple(VariableSpec(n, tuple(f"c{j}" for j in range(c))) for n, c in zip(names, cards))
    )


def make_net(cards, parents, tables, names=None):
    """Build a BayesNet from per-node parent lists and row tables (node order = names)."""
    schema = make_schema(cards, names)
    names = schema.names
    dag = Dag(names, {n: tuple(parents.get(n, ())) for n in names})
    cpts = {
        n: Cpt(n, dag.parents[n], [schema.cardinality(p) for p in dag.parents[n]], tables[n]) for n in names
    }
    return BayesNet(schema, dag, cpts)


def random_network(rng, max_nodes=6, max_card=10, max_states=100_000, max_parents=3, zero_prob=0.0):
    """Random DAG with Dirichlet CPT rows; optional exact zeros in the rows."""
    while True:
        n = int(rng.integers(2, max_nodes + 1))
        cards = [int(rng.integers(2, max_card + 1)) for _ in range(n)]
        if math.prod(cards) <= max_states:
            break
    names = [f"V{i}" for i in range(n)]
    # Random topological order that differs from declaration order.
    order = list(rng.permutation(n))
    parents = {}
    for pos, i in enumerate(order):
        earlier = order[:pos]
        k = int(rng.integers(0, min(max_parents, len(earlier)) + 1))
        chosen = sorted(rng.choice(earlier, size=k, replace=False).tolist()) if k else []
        parents[names[i]] = [names[j] for j in chosen]
    tables = {}
    for i, name in enumerate(names):
        n_cfg = math.prod(cards[names.index(p)] for p in parents[name])
        rows = rng.dirichlet(np.ones(cards[i]), size=n_cfg)
        if zero_prob:
            mask = rng.random(rows.shape) < zero_prob
            mask[np.arange(n_cfg), rng.integers(0, cards[i], size=n_cfg)] = False
            rows[mask] = 0.0
            rows /= rows.sum(axis=1, keepdims=True)
        tables[name] = rows
    return make_net(cards, parents, tables, names)


def brute_joint(model):
    """Full joint by explicit per-assignment products (independent of vectorized helpers)."""
    schema = model.schema
    shape = schema.cardinalities
    joint = np.zeros(shape)
    for assignment in itertools.product(*(range(c) for c in shape)):
        rec = dict(zip(schema.names, assignment))
        p = 1.0
        for node in schema.names:
            cpt = model.cpts[node]
            idx = 0
            for par, card in zip(cpt.parents, cpt.parent_cardinalities):
                idx = idx * card + rec[par]
            p *= float(cpt.table[idx][rec[node]])
        joint[assignment] = p
    return joint


def brute_posterior(joint, names, target, evidence):
    """P(target | evidence) by slicing and summing the full joint array."""
    idx = tuple(evidence.get(n, slice(None)) for n in names)
    sub = joint[idx]
    kept = [n for n in names if n not in evidence]
    axes = tuple(i for i, n in enumerate(kept) if n != target)
    m = sub.sum(axis=axes)
    return m / m.sum() if m.sum() > 0 else m
