"""Fit CPTs for an expert DAG and draw synthetic records by ancestral sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from catsynth.core import BayesNet, Cpt, DataTable, Dag, config_count, mixed_radix_index
from catsynth.errors import InputError, ModelError
from catsynth.rng import check_seed, map_row_chunks, record_uniforms


@dataclass(frozen=True)
class FitOptions:
    smoothing_alpha: float = 1.0

    def __post_init__(self) -> None:
        if not (self.smoothing_alpha >= 0 and math.isfinite(self.smoothing_alpha)):
            raise InputError(f"smoothing_alpha must be a finite value >= 0, got {self.smoothing_alpha}")


@dataclass(frozen=True)
class SampleRequest:
    n_rows: int
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.n_rows) < 1:
            raise InputError(f"n_rows must be >= 1, got {self.n_rows}")
        try:
            check_seed(self.seed)
        except ValueError as exc:
            raise InputError(str(exc)) from None


def conditional_counts(data: DataTable, node: str, parents: tuple[str, ...]) -> np.ndarray:
    """Count matrix of shape (parent configurations, node cardinality)."""
    schema = data.schema
    card = schema.cardinality(node)
    pcards = tuple(schema.cardinality(p) for p in parents)
    n_configs = config_count(pcards)
    if parents:
        cols = [schema.position(p) for p in parents]
        cfg = mixed_radix_index(data.values[:, cols], pcards)
    else:
        cfg = np.zeros(data.n_rows, dtype=np.int64)
    flat = cfg * card + data.column(node)
    return np.bincount(flat, minlength=n_configs * card).reshape(n_configs, card).astype(float)


def fit_cpts(data: DataTable, dag: Dag, opts: FitOptions = FitOptions()) -> dict[str, Cpt]:
    """row[c] = (count(c | config) + alpha) / (total(config) + alpha * cardinality)."""
    if data.n_rows == 0:
        raise InputError("cannot fit CPTs on an empty table")
    unknown = set(dag.nodes) - set(data.schema.names)
    if unknown:
        raise InputError(f"dag nodes {sorted(unknown)} are not schema variables")
    alpha = opts.smoothing_alpha
    cpts = {}
    for node in dag.nodes:
        parents = dag.parents[node]
        counts = conditional_counts(data, node, parents) + alpha
        totals = counts.sum(axis=1, keepdims=True)
        empty = np.flatnonzero(totals[:, 0] == 0)
        if empty.size:
            raise ModelError(
                f"node {node!r}: parent configuration row {int(empty[0])} has no observations; "
                "set smoothing_alpha > 0"
            )
        pcards = [data.schema.cardinality(p) for p in parents]
        cpts[node] = Cpt(node, parents, pcards, counts / totals)
    return cpts


def fit_bayesnet(data: DataTable, dag: Dag, opts: FitOptions = FitOptions()) -> BayesNet:
    return BayesNet(data.schema, dag, fit_cpts(data, dag, opts))


def categorical_from_uniform(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Smallest k with u < cum[k], row-wise; ``cum`` rows are cumulative distributions."""
    k = (u[:, None] >= cum).sum(axis=1)
    return np.minimum(k, cum.shape[1] - 1)


def _sample_block(model: BayesNet, seed: int, start: int, stop: int) -> np.ndarray:
    schema, dag = model.schema, model.dag
    u = record_uniforms(seed, start, stop, len(dag.topo_order))
    out = np.empty((stop - start, len(schema)), dtype=np.int64)
    for j, node in enumerate(dag.topo_order):
        cpt = model.cpts[node]
        cum = np.cumsum(cpt.table, axis=1)
        cum[:, -1] = 1.0
        if cpt.parents:
            cols = [schema.position(p) for p in cpt.parents]
            cfg = mixed_radix_index(out[:, cols], cpt.parent_cardinalities)
        else:
            cfg = np.zeros(stop - start, dtype=np.int64)
        out[:, schema.position(node)] = categorical_from_uniform(cum[cfg], u[:, j])
    return out


def ancestral_sample(model: BayesNet, request: SampleRequest, *, workers: int = 1) -> DataTable:
    """Draw ``request.n_rows`` records; node j in topo order uses draw j of its record's substream."""
    values = map_row_chunks(
        lambda a, b: _sample_block(model, request.seed, a, b), int(request.n_rows), workers
    )
    return DataTable(model.schema, values)


def log_likelihood(data: DataTable, model: BayesNet) -> float:
    """Sum of natural-log joint probabilities of the records."""
    if data.schema != model.schema:
        raise InputError("table schema does not match the model schema")
    probs = model.row_probabilities(data.values)
    zero = np.flatnonzero(probs <= 0)
    if zero.size:
        raise ModelError(f"records with zero probability under the model: rows {zero[:10].tolist()}")
    return float(np.log(probs).sum())
