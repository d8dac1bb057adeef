"""Schema, table, graph and conditional-table primitives.

Category values are dense integer indices everywhere; labels only live in the
schema. CPT rows are addressed by a mixed-radix index over the parent values
in which the first declared parent varies slowest.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from catsynth.errors import InputError, ModelError, StructuralError

FORMAT_VERSION = 1

NORMALIZATION_TOL = 1e-9
RENORMALIZE_TOL = 1e-6

NOMINAL = "nominal"
ORDINAL = "ordinal"


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class VariableSpec:
    name: str
    categories: tuple[str, ...]
    kind: str = NOMINAL

    def __post_init__(self) -> None:
        object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))
        if self.kind not in (NOMINAL, ORDINAL):
            raise InputError(f"variable {self.name!r}: kind must be nominal or ordinal, got {self.kind!r}")
        if len(self.categories) < 2:
            raise InputError(f"variable {self.name!r} needs at least 2 categories")
        if len(set(self.categories)) != len(self.categories):
            raise InputError(f"variable {self.name!r} has duplicate category labels")

    @property
    def cardinality(self) -> int:
        return len(self.categories)

    def index_of(self, label: str) -> int:
        try:
            return self.categories.index(label)
        except ValueError:
            raise InputError(
                f"unknown category {label!r} for {self.name!r}; valid labels: {list(self.categories)}"
            ) from None


@dataclass(frozen=True)
class CategoricalSchema:
    variables: tuple[VariableSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        names = [v.name for v in self.variables]
        if not names:
            raise InputError("schema has no variables")
        if len(set(names)) != len(names):
            raise InputError("schema variable names must be unique")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def __len__(self) -> int:
        return len(self.variables)

    def position(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise InputError(f"unknown variable {name!r}; known: {list(self.names)}")

    def variable(self, name: str) -> VariableSpec:
        return self.variables[self.position(name)]

    def cardinality(self, name: str) -> int:
        return self.variable(name).cardinality

    def to_dict(self) -> dict:
        return {
            "variables": [
                {"name": v.name, "kind": v.kind, "categories": list(v.categories)}
                for v in self.variables
            ]
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CategoricalSchema":
        try:
            return cls(
                tuple(
                    VariableSpec(v["name"], tuple(v["categories"]), v.get("kind", NOMINAL))
                    for v in d["variables"]
                )
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed schema document: {exc}") from None


class DataTable:
    """Records as a read-only ``(n_rows, n_vars)`` integer matrix aligned with a schema."""

    def __init__(self, schema: CategoricalSchema, values: np.ndarray | Sequence[Sequence[int]]):
        arr = np.array(values, dtype=np.int64, copy=True)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, len(schema))
        if arr.ndim != 2 or arr.shape[1] != len(schema):
            raise InputError(
                f"records must have exactly {len(schema)} values, got array of shape {arr.shape}"
            )
        if arr.size:
            cards = np.asarray(schema.cardinalities)
            bad = (arr < 0) | (arr >= cards)
            if bad.any():
                r, c = map(int, np.argwhere(bad)[0])
                raise InputError(
                    f"row {r}, column {schema.names[c]!r}: index {arr[r, c]} outside [0, {cards[c]})"
                )
        self.schema = schema
        self.values = _frozen(arr)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n_rows

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.schema.position(name)]

    def counts(self, name: str) -> np.ndarray:
        return np.bincount(self.column(name), minlength=self.schema.cardinality(name))

    def frequencies(self, name: str) -> np.ndarray:
        return self.counts(name) / self.n_rows

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DataTable):
            return NotImplemented
        return self.schema == other.schema and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"DataTable(n_rows={self.n_rows}, columns={list(self.schema.names)})"


def _find_cycle_member(nodes: Sequence[str], parents: Mapping[str, tuple[str, ...]]) -> str:
    # Walk parent links from any unresolved node until a repeat.
    node = nodes[0]
    seen: list[str] = []
    while node not in seen:
        seen.append(node)
        node = next(p for p in parents[node] if p in nodes)
    return node


def topological_order(nodes: Sequence[str], parents: Mapping[str, Sequence[str]]) -> tuple[str, ...]:
    """Kahn's algorithm; among ready nodes the earliest declared goes first."""
    remaining = list(nodes)
    placed: set[str] = set()
    order: list[str] = []
    while remaining:
        for node in remaining:
            if all(p in placed for p in parents.get(node, ())):
                order.append(node)
                placed.add(node)
                remaining.remove(node)
                break
        else:
            member = _find_cycle_member(remaining, {n: tuple(parents[n]) for n in remaining})
            raise StructuralError(f"graph contains a cycle through {member!r}")
    return tuple(order)


@dataclass(frozen=True)
class Dag:
    nodes: tuple[str, ...]
    parents: Mapping[str, tuple[str, ...]]
    topo_order: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        nodes = tuple(self.nodes)
        if len(set(nodes)) != len(nodes):
            raise StructuralError("duplicate node names")
        parents = {n: tuple(self.parents.get(n, ())) for n in nodes}
        extra = set(self.parents) - set(nodes)
        if extra:
            raise StructuralError(f"parents given for unknown nodes {sorted(extra)}")
        for n, ps in parents.items():
            if n in ps:
                raise StructuralError(f"node {n!r} lists itself as a parent")
            if len(set(ps)) != len(ps):
                raise StructuralError(f"node {n!r} has duplicate parents")
            for p in ps:
                if p not in parents:
                    raise StructuralError(f"node {n!r} has unknown parent {p!r}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "topo_order", topological_order(nodes, parents))

    @classmethod
    def from_edges(cls, nodes: Sequence[str], edges: Iterable[tuple[str, str]]) -> "Dag":
        parents: dict[str, list[str]] = {n: [] for n in nodes}
        for src, dst in edges:
            if dst not in parents:
                raise StructuralError(f"edge target {dst!r} is not a node")
            parents[dst].append(src)
        return cls(tuple(nodes), {n: tuple(ps) for n, ps in parents.items()})

    @classmethod
    def empty(cls, nodes: Sequence[str]) -> "Dag":
        return cls(tuple(nodes), {})

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        """(parent, child) pairs, children in declaration order."""
        return tuple((p, n) for n in self.nodes for p in self.parents[n])

    def children(self, node: str) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if node in self.parents[n])

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "parents": {n: list(ps) for n, ps in self.parents.items()}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Dag":
        try:
            if "edges" in d and "parents" not in d:
                return cls.from_edges(d["nodes"], [tuple(e) for e in d["edges"]])
            return cls(tuple(d["nodes"]), {k: tuple(v) for k, v in d.get("parents", {}).items()})
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed dag document: {exc}") from None


def normalized(probabilities: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate a probability vector, absorbing drift up to 1e-6 by renormalizing."""
    p = np.array(probabilities, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InputError("a distribution must be a non-empty vector")
    if not np.all(np.isfinite(p)) or (p < 0).any():
        raise ModelError(f"distribution has negative or non-finite entries: {p.tolist()}")
    total = p.sum()
    if abs(total - 1.0) > RENORMALIZE_TOL:
        raise ModelError(f"distribution sums to {total!r}, not 1")
    if abs(total - 1.0) > NORMALIZATION_TOL:
        p = p / total
    return p


class Distribution:
    """Probability vector over one variable's categories."""

    __slots__ = ("probabilities",)

    def __init__(self, probabilities: Sequence[float] | np.ndarray):
        self.probabilities = _frozen(normalized(probabilities))

    def __len__(self) -> int:
        return self.probabilities.size

    def __getitem__(self, i: int) -> float:
        return float(self.probabilities[i])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probabilities, dtype=dtype)

    def tolist(self) -> list[float]:
        return self.probabilities.tolist()

    def __repr__(self) -> str:
        return f"Distribution({np.array2string(self.probabilities, precision=6)})"


def config_count(cardinalities: Sequence[int]) -> int:
    return int(np.prod(cardinalities, dtype=np.int64)) if len(cardinalities) else 1


def mixed_radix_index(values: np.ndarray, cardinalities: Sequence[int]) -> np.ndarray | int:
    """Flat index of ``values`` (last axis) with the first position slowest."""
    values = np.asarray(values, dtype=np.int64)
    idx = np.zeros(values.shape[:-1], dtype=np.int64)
    for j, card in enumerate(cardinalities):
        idx = idx * card + values[..., j]
    return int(idx) if idx.ndim == 0 else idx


class Cpt:
    """P(node | parents) with one row per parent configuration."""

    def __init__(
        self,
        node: str,
        parents: Sequence[str],
        parent_cardinalities: Sequence[int],
        table: np.ndarray | Sequence[Sequence[float]],
    ):
        parents = tuple(parents)
        parent_cardinalities = tuple(int(c) for c in parent_cardinalities)
        if len(parents) != len(parent_cardinalities):
            raise InputError(f"CPT {node!r}: {len(parents)} parents but {len(parent_cardinalities)} cardinalities")
        tab = np.array(table, dtype=float)
        n_configs = config_count(parent_cardinalities)
        if tab.ndim != 2 or tab.shape[0] != n_configs or tab.shape[1] < 2:
            raise InputError(
                f"CPT {node!r}: table shape {tab.shape} does not match {n_configs} parent configurations"
            )
        for i in range(n_configs):
            try:
                tab[i] = normalized(tab[i])
            except ModelError as exc:
                raise ModelError(f"CPT {node!r}, row {i}: {exc}") from None
        self.node = node
        self.parents = parents
        self.parent_cardinalities = parent_cardinalities
        self.table = _frozen(tab)

    @property
    def cardinality(self) -> int:
        return self.table.shape[1]

    def parent_config_index(self, parent_values: Sequence[int]) -> int:
        values = list(parent_values)
        if len(values) != len(self.parents):
            raise InputError(f"CPT {self.node!r} expects {len(self.parents)} parent values, got {len(values)}")
        for p, v, c in zip(self.parents, values, self.parent_cardinalities):
            if not 0 <= int(v) < c:
                raise InputError(f"parent {p!r} value {v} outside [0, {c})")
        return mixed_radix_index(np.asarray(values, dtype=np.int64), self.parent_cardinalities)

    def row(self, parent_values: Sequence[int] = ()) -> np.ndarray:
        return self.table[self.parent_config_index(parent_values)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cpt):
            return NotImplemented
        return (
            self.node == other.node
            and self.parents == other.parents
            and self.parent_cardinalities == other.parent_cardinalities
            and np.array_equal(self.table, other.table)
        )

    def __repr__(self) -> str:
        return f"Cpt(node={self.node!r}, parents={self.parents}, shape={self.table.shape})"


def parent_config_index(cpt: Cpt, parent_values: Sequence[int]) -> int:
    return cpt.parent_config_index(parent_values)


def _check_cpts(dag: Dag, cpts: Mapping[str, Cpt]) -> None:
    for node in dag.nodes:
        if node not in cpts:
            raise InputError(f"no CPT for node {node!r}")
        if cpts[node].parents != dag.parents[node]:
            raise InputError(
                f"CPT {node!r} parents {cpts[node].parents} disagree with dag {dag.parents[node]}"
            )


def joint_probability(dag: Dag, cpts: Mapping[str, Cpt], record: Mapping[str, int]) -> float:
    """Product of P(X_i | parents(X_i)) for a full assignment."""
    _check_cpts(dag, cpts)
    missing = [n for n in dag.nodes if n not in record]
    if missing:
        raise InputError(f"record does not assign {missing}")
    prob = 1.0
    for node in dag.topo_order:
        cpt = cpts[node]
        row = cpt.row([record[p] for p in cpt.parents])
        value = int(record[node])
        if not 0 <= value < cpt.cardinality:
            raise InputError(f"{node!r} value {value} outside [0, {cpt.cardinality})")
        prob *= row[value]
        if prob == 0.0:
            break
    return float(prob)


class BayesNet:
    """A schema, a DAG over all of its variables and one CPT per node."""

    def __init__(self, schema: CategoricalSchema, dag: Dag, cpts: Mapping[str, Cpt]):
        if set(dag.nodes) != set(schema.names):
            raise StructuralError("dag nodes must be exactly the schema variables")
        _check_cpts(dag, cpts)
        for node in dag.nodes:
            cpt = cpts[node]
            expected = tuple(schema.cardinality(p) for p in cpt.parents)
            if cpt.parent_cardinalities != expected or cpt.cardinality != schema.cardinality(node):
                raise InputError(f"CPT {node!r} shape disagrees with the schema cardinalities")
        self.schema = schema
        self.dag = dag
        self.cpts = {n: cpts[n] for n in schema.names}

    def joint_probability(self, record: Mapping[str, int] | Sequence[int]) -> float:
        if not isinstance(record, Mapping):
            record = dict(zip(self.schema.names, record))
        return joint_probability(self.dag, self.cpts, record)

    def row_probabilities(self, values: np.ndarray) -> np.ndarray:
        """Vectorized joint probability of every row of an index matrix."""
        values = np.asarray(values, dtype=np.int64)
        prob = np.ones(values.shape[0])
        for node in self.dag.nodes:
            cpt = self.cpts[node]
            cols = [self.schema.position(p) for p in cpt.parents]
            if cols:
                cfg = mixed_radix_index(values[:, cols], cpt.parent_cardinalities)
            else:
                cfg = np.zeros(values.shape[0], dtype=np.int64)
            prob *= cpt.table[cfg, values[:, self.schema.position(node)]]
        return prob

    def enumerate_joint(self) -> tuple[np.ndarray, np.ndarray]:
        """All full assignments (schema column order) and their joint probabilities."""
        grid = np.array(
            list(itertools.product(*(range(c) for c in self.schema.cardinalities))), dtype=np.int64
        )
        return grid, self.row_probabilities(grid)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "bayesnet",
            "schema": self.schema.to_dict(),
            "dag": self.dag.to_dict(),
            "cpts": {
                n: {"parents": list(c.parents), "table": c.table.tolist()} for n, c in self.cpts.items()
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "BayesNet":
        _check_format(d, "bayesnet")
        schema = CategoricalSchema.from_dict(d["schema"])
        dag = Dag.from_dict(d["dag"])
        cpts = {}
        for node, entry in d["cpts"].items():
            parents = tuple(entry["parents"])
            cpts[node] = Cpt(node, parents, [schema.cardinality(p) for p in parents], entry["table"])
        return cls(schema, dag, cpts)

    def __repr__(self) -> str:
        return f"BayesNet(nodes={list(self.dag.nodes)}, edges={list(self.dag.edges)})"


def _check_format(d: Mapping, kind: str) -> None:
    if not isinstance(d, Mapping):
        raise InputError("model document must be a JSON object")
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise InputError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    if d.get("kind") != kind:
        raise InputError(f"expected a {kind!r} document, got {d.get('kind')!r}")


def dumps(doc: Mapping) -> str:
    # repr-based float output keeps 17 significant digits
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_json(path: str | Path, doc: Mapping) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc), encoding="utf-8")
    return path


def read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def entropy_bits(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0
