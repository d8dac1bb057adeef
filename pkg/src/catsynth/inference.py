"""Exact posterior marginals by variable elimination."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from catsynth.core import BayesNet, Distribution
from catsynth.errors import InconsistentEvidenceError, InputError

PREDICTIVE = "predictive"
DIAGNOSTIC = "diagnostic"


@dataclass(frozen=True)
class Factor:
    """Non-negative table over ``scope``; axis i of ``values`` is ``scope[i]``."""

    scope: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.ndim != len(self.scope):
            raise InputError(f"factor over {self.scope} has {self.values.ndim} axes")

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(self.values.shape)

    def reduce(self, evidence: Mapping[str, int]) -> "Factor":
        idx = tuple(evidence[v] if v in evidence else slice(None) for v in self.scope)
        return Factor(tuple(v for v in self.scope if v not in evidence), self.values[idx])

    def expand(self, scope: tuple[str, ...], cards: Mapping[str, int]) -> np.ndarray:
        """View of the values broadcastable over ``scope`` (a superset of this scope)."""
        order = sorted(range(len(self.scope)), key=lambda i: scope.index(self.scope[i]))
        arr = self.values.transpose(order)
        present = set(self.scope)
        shape = [cards[v] if v in present else 1 for v in scope]
        return arr.reshape(shape)

    def __mul__(self, other: "Factor") -> "Factor":
        scope = self.scope + tuple(v for v in other.scope if v not in self.scope)
        cards = dict(zip(self.scope, self.cardinalities)) | dict(zip(other.scope, other.cardinalities))
        return Factor(scope, self.expand(scope, cards) * other.expand(scope, cards))

    def sum_out(self, var: str) -> "Factor":
        axis = self.scope.index(var)
        return Factor(self.scope[:axis] + self.scope[axis + 1 :], self.values.sum(axis=axis))


def cpt_factors(model: BayesNet) -> list[Factor]:
    factors = []
    for node in model.dag.nodes:
        cpt = model.cpts[node]
        shape = cpt.parent_cardinalities + (cpt.cardinality,)
        factors.append(Factor(cpt.parents + (node,), cpt.table.reshape(shape)))
    return factors


@dataclass(frozen=True)
class Query:
    target: str
    evidence: Mapping[str, int] = field(default_factory=dict)
    direction: str = PREDICTIVE

    def __post_init__(self) -> None:
        object.__setattr__(self, "evidence", dict(self.evidence))
        if self.target in self.evidence:
            raise InputError(f"target {self.target!r} also appears in the evidence")
        if self.direction not in (PREDICTIVE, DIAGNOSTIC):
            raise InputError(f"direction must be predictive or diagnostic, got {self.direction!r}")


def check_evidence(model: BayesNet, evidence: Mapping[str, int]) -> dict[str, int]:
    out = {}
    for var, value in evidence.items():
        card = model.schema.cardinality(var)
        if not 0 <= int(value) < card:
            raise InputError(f"evidence {var}={value} outside [0, {card})")
        out[var] = int(value)
    return out


def min_degree_order(factors: Sequence[Factor], variables: Sequence[str], declared: Sequence[str]) -> list[str]:
    """Greedy min-degree elimination order; ties go to the earliest declared variable."""
    rank = {v: i for i, v in enumerate(declared)}
    graph: dict[str, set[str]] = {v: set() for v in variables}
    for f in factors:
        for v in f.scope:
            graph.setdefault(v, set()).update(u for u in f.scope if u != v)
    order = []
    remaining = set(variables)
    while remaining:
        var = min(remaining, key=lambda v: (len(graph[v]), rank[v]))
        nbrs = graph.pop(var)
        for u in nbrs:
            graph[u].discard(var)
            graph[u].update(nbrs - {u})
        order.append(var)
        remaining.discard(var)
    return order


def eliminate(factors: list[Factor], order: Sequence[str]) -> list[Factor]:
    for var in order:
        touching = [f for f in factors if var in f.scope]
        if not touching:
            continue
        product = touching[0]
        for f in touching[1:]:
            product = product * f
        factors = [f for f in factors if var not in f.scope] + [product.sum_out(var)]
    return factors


def posterior(model: BayesNet, query: Query, elimination_order: Sequence[str] | None = None) -> Distribution:
    """P(target | evidence): reduce by evidence, sum-product eliminate, normalize."""
    schema = model.schema
    schema.position(query.target)
    evidence = check_evidence(model, query.evidence)
    factors = [f.reduce(evidence) for f in cpt_factors(model)]
    hidden = [v for v in schema.names if v != query.target and v not in evidence]
    if elimination_order is None:
        order = min_degree_order(factors, hidden, schema.names)
    else:
        order = list(elimination_order)
        if sorted(order) != sorted(hidden):
            raise InputError(f"elimination order must cover exactly {hidden}")
    remaining = eliminate(factors, order)
    result = Factor((), np.array(1.0))
    for f in remaining:
        result = result * f
    total = float(result.values.sum())
    if not total > 0:
        shown = ", ".join(f"{v}={schema.variable(v).categories[i]}" for v, i in evidence.items())
        raise InconsistentEvidenceError(f"evidence has probability zero: {shown}")
    return Distribution(result.values / total)


def marginal(model: BayesNet, variable: str) -> Distribution:
    return posterior(model, Query(variable, {}))


@dataclass(frozen=True)
class ShiftReport:
    target: str
    labels: tuple[str, ...]
    prior: Distribution
    posterior: Distribution
    evidence: Mapping[str, str]
    direction: str = PREDICTIVE

    @property
    def delta(self) -> np.ndarray:
        return self.posterior.probabilities - self.prior.probabilities

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "evidence": dict(self.evidence),
            "direction": self.direction,
            "prior": dict(zip(self.labels, self.prior.tolist())),
            "posterior": dict(zip(self.labels, self.posterior.tolist())),
            "delta": dict(zip(self.labels, self.delta.tolist())),
        }


def evidence_shift_report(model: BayesNet, query: Query) -> ShiftReport:
    prior = marginal(model, query.target)
    post = posterior(model, query)
    labels = {v: model.schema.variable(v).categories[i] for v, i in query.evidence.items()}
    return ShiftReport(
        query.target, model.schema.variable(query.target).categories, prior, post, labels, query.direction
    )


def resolve_evidence(model: BayesNet, pairs: Mapping[str, str]) -> dict[str, int]:
    """Map ``{variable: label}`` to category indices, naming valid labels on failure."""
    return {var: model.schema.variable(var).index_of(label) for var, label in pairs.items()}
