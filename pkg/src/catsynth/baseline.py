"""Independent and correlated attribute-mode synthesizers with Laplace count noise.

Noise follows the usual convention for count queries: sensitivity 1, the
budget split evenly over the columns (independent mode) or nodes
(correlated mode), so each count receives Laplace noise of scale
``n_columns / epsilon``. Noisy counts are clamped at zero and normalized.
No composition accounting is done; this models the epsilon knob, not a proof.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from catsynth.bn_synth import FitOptions, conditional_counts, fit_cpts
from catsynth.core import BayesNet, Cpt, DataTable, Dag, entropy_bits, mixed_radix_index
from catsynth.errors import InputError, ModelError

TIE_BREAK_RULES = ("declaration", "name")
_MI_TIE_TOL = 1e-12


@dataclass(frozen=True)
class PrivacyBudget:
    """Epsilon for the Laplace mechanism; ``None`` switches noise off."""

    epsilon: float | None = None

    def __post_init__(self) -> None:
        if self.epsilon is not None and not (self.epsilon > 0):
            raise InputError(f"epsilon must be > 0 when enabled, got {self.epsilon}")

    @classmethod
    def off(cls) -> "PrivacyBudget":
        return cls(None)

    @property
    def enabled(self) -> bool:
        return self.epsilon is not None and math.isfinite(self.epsilon)

    def laplace_scale(self, n_parts: int) -> float:
        return n_parts / self.epsilon if self.enabled else 0.0

    def label(self) -> str:
        return "off" if self.epsilon is None else f"{self.epsilon:g}"


@dataclass(frozen=True)
class StructureOptions:
    max_parents: int = 2
    tie_break: str = "declaration"

    def __post_init__(self) -> None:
        if int(self.max_parents) < 0:
            raise InputError(f"max_parents must be >= 0, got {self.max_parents}")
        if self.tie_break not in TIE_BREAK_RULES:
            raise InputError(f"tie_break must be one of {TIE_BREAK_RULES}")


def _rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def noisy_counts(counts: np.ndarray, scale: float, rng: np.random.Generator) -> np.ndarray:
    if scale == 0:
        return np.asarray(counts, dtype=float)
    noisy = counts + rng.laplace(0.0, scale, size=np.shape(counts))
    return np.maximum(noisy, 0.0)


def fit_independent(
    data: DataTable, budget: PrivacyBudget = PrivacyBudget(), rng: np.random.Generator | int | None = None
) -> BayesNet:
    """Per-column marginals (optionally noised) over the empty graph."""
    if data.n_rows == 0:
        raise InputError("cannot fit on an empty table")
    gen = _rng(rng)
    schema = data.schema
    scale = budget.laplace_scale(len(schema))
    cpts = {}
    for name in schema.names:
        counts = noisy_counts(data.counts(name).astype(float), scale, gen)
        total = counts.sum()
        if total <= 0:
            raise ModelError(f"column {name!r}: every noisy count clamped to 0 (epsilon too small)")
        cpts[name] = Cpt(name, (), (), (counts / total)[None, :])
    return BayesNet(schema, Dag.empty(schema.names), cpts)


def _joint_codes(data: DataTable, names: tuple[str, ...]) -> tuple[np.ndarray, int]:
    cards = tuple(data.schema.cardinality(n) for n in names)
    cols = [data.schema.position(n) for n in names]
    return mixed_radix_index(data.values[:, cols], cards), int(np.prod(cards))


def mutual_information_codes(x: np.ndarray, nx: int, y: np.ndarray, ny: int) -> float:
    """Plug-in MI in bits between two integer-coded columns."""
    joint = np.bincount(x * ny + y, minlength=nx * ny).reshape(nx, ny).astype(float)
    joint /= joint.sum()
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return max(float((joint[nz] * np.log2(joint[nz] / (px @ py)[nz])).sum()), 0.0)


def parent_set_score(data: DataTable, node: str, parents: tuple[str, ...]) -> float:
    x, nx = _joint_codes(data, (node,))
    if not parents:
        return 0.0
    y, ny = _joint_codes(data, parents)
    return mutual_information_codes(x, nx, y, ny)


def learn_structure(
    data: DataTable,
    opts: StructureOptions = StructureOptions(),
    budget: PrivacyBudget = PrivacyBudget(),
) -> Dag:
    """Greedy k-parent network: start from the highest-entropy column, then
    repeatedly attach the unplaced column whose best parent set (up to k
    already-placed columns) has the largest mutual information with it.

    Scores use exact counts, so the result is deterministic in (data, opts);
    ``budget`` only affects how the CPTs are later fitted.
    """
    del budget
    schema = data.schema
    if len(schema) < 2:
        raise InputError("structure learning needs at least 2 columns")
    names = schema.names
    k = int(opts.max_parents)
    if k == 0:
        return Dag.empty(names)

    if opts.tie_break == "name":
        rank = {n: i for i, n in enumerate(sorted(names))}
    else:
        rank = {n: i for i, n in enumerate(names)}

    entropies = {n: entropy_bits(data.frequencies(n)) for n in names}
    first = min(names, key=lambda n: (-entropies[n], rank[n]))
    placed = [first]
    parents: dict[str, tuple[str, ...]] = {first: ()}
    while len(placed) < len(names):
        best: tuple | None = None
        for node in sorted((n for n in names if n not in parents), key=rank.__getitem__):
            for size in range(1, min(k, len(placed)) + 1):
                for combo in itertools.combinations(sorted(placed, key=rank.__getitem__), size):
                    score = parent_set_score(data, node, combo)
                    if best is None or score > best[0] + _MI_TIE_TOL:
                        best = (score, node, combo)
        _, node, combo = best
        parents[node] = combo
        placed.append(node)
    return Dag(names, parents)


def fit_correlated(
    data: DataTable,
    dag: Dag,
    budget: PrivacyBudget = PrivacyBudget(),
    rng: np.random.Generator | int | None = None,
) -> BayesNet:
    """CPTs from noisy conditional counts; rows left empty after clamping become uniform."""
    if not budget.enabled:
        return BayesNet(data.schema, dag, fit_cpts(data, dag, FitOptions(1.0)))
    if data.n_rows == 0:
        raise InputError("cannot fit on an empty table")
    gen = _rng(rng)
    scale = budget.laplace_scale(len(dag.nodes))
    cpts = {}
    for node in dag.nodes:
        ps = dag.parents[node]
        counts = noisy_counts(conditional_counts(data, node, ps), scale, gen)
        totals = counts.sum(axis=1, keepdims=True)
        empty = totals[:, 0] <= 0
        counts[empty] = 1.0
        totals[empty] = counts.shape[1]
        cpts[node] = Cpt(node, ps, [data.schema.cardinality(p) for p in ps], counts / totals)
    return BayesNet(data.schema, dag, cpts)
