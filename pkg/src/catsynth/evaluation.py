"""Real-vs-synthetic metrics, structure comparison and method ranking.

Units: KL in nats, entropy and mutual information in bits. The TVD reported
here is the similarity score ``1 - 0.5 * sum|R - S|`` (1 = identical).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import gammaincc

from catsynth.core import NOMINAL, ORDINAL, DataTable
from catsynth.errors import InputError

DEFAULT_KL_SMOOTHING = 1e-9
DEFAULT_GATE_ALPHA = 0.05
TVD_TIE_TOL = 1e-4
MIN_EXPECTED = 5.0


def _pair(real, synth) -> tuple[np.ndarray, np.ndarray]:
    r = np.asarray(real, dtype=float)
    s = np.asarray(synth, dtype=float)
    if r.shape != s.shape or r.ndim != 1:
        raise InputError(f"category sets differ: {r.shape} vs {s.shape}")
    return r, s


def column_tvd(real_marginal, synth_marginal) -> float:
    r, s = _pair(real_marginal, synth_marginal)
    return float(min(max(1.0 - 0.5 * np.abs(r - s).sum(), 0.0), 1.0))


def column_kl(real_marginal, synth_marginal, smoothing: float = DEFAULT_KL_SMOOTHING) -> float:
    """KL(real || synth) after adding ``smoothing`` to each synthetic probability and renormalizing."""
    p, q = _pair(real_marginal, synth_marginal)
    q = (q + smoothing) / (q.sum() + smoothing * q.size)
    nz = p > 0
    return max(float((p[nz] * np.log(p[nz] / q[nz])).sum()), 0.0)


def chi2_sf(statistic: float, dof: int) -> float:
    """Upper tail of the chi-square distribution: Q(dof/2, x/2)."""
    if statistic <= 0:
        return 1.0
    return float(gammaincc(dof / 2.0, statistic / 2.0))


def _merge_buckets(expected: list[float], observed: list[float], kind: str) -> tuple[list[float], list[float]]:
    exp, obs = list(expected), list(observed)
    if kind == ORDINAL:
        # Fold the first sparse bucket into its right neighbour (left for the last one), repeat.
        while len(exp) > 1:
            small = [i for i, e in enumerate(exp) if e < MIN_EXPECTED]
            if not small:
                break
            i = small[0]
            j = i + 1 if i + 1 < len(exp) else i - 1
            exp[j] += exp[i]
            obs[j] += obs[i]
            del exp[i], obs[i]
        return exp, obs
    small = [i for i, e in enumerate(exp) if e < MIN_EXPECTED]
    if not small or len(small) == len(exp):
        if small:
            return [sum(exp)], [sum(obs)]
        return exp, obs
    target = max((i for i in range(len(exp)) if i not in small), key=lambda i: (exp[i], -i))
    for i in small:
        exp[target] += exp[i]
        obs[target] += obs[i]
    keep = [i for i in range(len(exp)) if i not in small]
    return [exp[i] for i in keep], [obs[i] for i in keep]


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float


def column_chi_square(real_counts, synth_counts, kind: str = NOMINAL) -> ChiSquareResult:
    """Goodness of fit of synthetic counts against real proportions.

    Expected counts are the real proportions scaled to the synthetic total.
    Buckets with expected count below 5 are merged: into the adjacent bucket
    for ordinal columns, into the largest bucket for nominal ones.
    """
    r, s = _pair(real_counts, synth_counts)
    if r.sum() <= 0:
        raise InputError("real counts sum to zero")
    if s.sum() <= 0:
        raise InputError("synthetic counts sum to zero")
    expected = r / r.sum() * s.sum()
    exp, obs = _merge_buckets(expected.tolist(), s.tolist(), kind)
    if len(exp) < 2:
        raise InputError("chi-square test undefined: fewer than 2 categories after merging")
    exp_a, obs_a = np.asarray(exp), np.asarray(obs)
    stat = float(((obs_a - exp_a) ** 2 / exp_a).sum())
    dof = len(exp) - 1
    return ChiSquareResult(stat, dof, chi2_sf(stat, dof))


def node_entropy(marginal) -> float:
    p = np.asarray(marginal, dtype=float)
    nz = p[p > 0]
    return max(float(-(nz * np.log2(nz)).sum()), 0.0)


def pair_mutual_information(joint_counts) -> float:
    j = np.asarray(joint_counts, dtype=float)
    total = j.sum()
    if j.ndim != 2 or total <= 0:
        raise InputError("joint counts must be a 2-D table with a positive total")
    p = j / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    return max(float((p[nz] * np.log2(p[nz] / (px * py)[nz])).sum()), 0.0)


def joint_counts(data: DataTable, a: str, b: str) -> np.ndarray:
    ca, cb = data.schema.cardinality(a), data.schema.cardinality(b)
    codes = data.column(a) * cb + data.column(b)
    return np.bincount(codes, minlength=ca * cb).reshape(ca, cb)


@dataclass(frozen=True)
class ColumnMetrics:
    chi_square: float
    p_value: float
    degrees_of_freedom: int
    kl: float
    tvd: float

    def to_dict(self) -> dict:
        return {
            "chi_square": self.chi_square,
            "p_value": self.p_value,
            "degrees_of_freedom": self.degrees_of_freedom,
            "kl": self.kl,
            "tvd": self.tvd,
        }


@dataclass(frozen=True)
class EdgeMI:
    source: str
    target: str
    real: float
    synthetic: float


@dataclass
class EvalReport:
    columns: dict[str, ColumnMetrics]
    entropy_real: dict[str, float]
    entropy_synthetic: dict[str, float]
    edges: list[EdgeMI]
    histograms: dict[str, list[tuple[str, float, float]]]

    @property
    def kl_median(self) -> float:
        return float(np.median([m.kl for m in self.columns.values()]))

    @property
    def chi_square_median(self) -> float:
        return float(np.median([m.chi_square for m in self.columns.values()]))

    @property
    def tvd_mean(self) -> float:
        return float(np.mean([m.tvd for m in self.columns.values()]))

    @property
    def min_p_value(self) -> float:
        return min(m.p_value for m in self.columns.values())

    def to_dict(self) -> dict:
        return {
            "units": {"kl": "nats", "entropy": "bits", "mutual_information": "bits", "tvd": "1 - total variation"},
            "aggregates": {
                "kl_median": self.kl_median,
                "chi_square_median": self.chi_square_median,
                "tvd_mean": self.tvd_mean,
            },
            "columns": {k: v.to_dict() for k, v in self.columns.items()},
            "entropy": {
                k: {"real": self.entropy_real[k], "synthetic": self.entropy_synthetic[k]} for k in self.entropy_real
            },
            "mutual_information": [
                {"source": e.source, "target": e.target, "real": e.real, "synthetic": e.synthetic}
                for e in self.edges
            ],
        }


def evaluate_pair(
    real: DataTable,
    synth: DataTable,
    edges: Iterable[tuple[str, str]] = (),
    *,
    kl_smoothing: float = DEFAULT_KL_SMOOTHING,
) -> EvalReport:
    if real.schema != synth.schema:
        raise InputError("real and synthetic tables have different schemas")
    schema = real.schema
    columns, ent_r, ent_s, hist = {}, {}, {}, {}
    for var in schema.variables:
        rc, sc = real.counts(var.name), synth.counts(var.name)
        rf, sf = rc / rc.sum(), sc / sc.sum()
        chi = column_chi_square(rc, sc, var.kind)
        columns[var.name] = ColumnMetrics(
            chi.statistic, chi.p_value, chi.dof, column_kl(rf, sf, kl_smoothing), column_tvd(rf, sf)
        )
        ent_r[var.name] = node_entropy(rf)
        ent_s[var.name] = node_entropy(sf)
        hist[var.name] = [(lab, float(a), float(b)) for lab, a, b in zip(var.categories, rf, sf)]
    mi = [
        EdgeMI(a, b, pair_mutual_information(joint_counts(real, a, b)), pair_mutual_information(joint_counts(synth, a, b)))
        for a, b in edges
    ]
    return EvalReport(columns, ent_r, ent_s, mi, hist)


@dataclass
class MethodScore:
    method: str
    columns: dict[str, ColumnMetrics] = field(default_factory=dict)
    kl_median: float = math.nan
    chi_square_median: float = math.nan
    tvd_mean: float = math.nan
    mode: str = ""
    parameters: str = "-"
    error: str | None = None
    gate_passed: bool = False
    rank: int | None = None

    @classmethod
    def from_report(cls, method: str, report: EvalReport, mode: str = "", parameters: str = "-") -> "MethodScore":
        return cls(
            method, dict(report.columns), report.kl_median, report.chi_square_median, report.tvd_mean, mode, parameters
        )

    @classmethod
    def failed(cls, method: str, error: str, mode: str = "", parameters: str = "-") -> "MethodScore":
        return cls(method, mode=mode, parameters=parameters, error=error)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "mode": self.mode,
            "parameters": self.parameters,
            "kl_median": None if math.isnan(self.kl_median) else self.kl_median,
            "chi_square_median": None if math.isnan(self.chi_square_median) else self.chi_square_median,
            "tvd_mean": None if math.isnan(self.tvd_mean) else self.tvd_mean,
            "gate_passed": self.gate_passed,
            "rank": self.rank,
            "error": self.error,
            "columns": {k: v.to_dict() for k, v in self.columns.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MethodScore":
        nan = lambda v: math.nan if v is None else float(v)  # noqa: E731
        return cls(
            d["method"],
            {k: ColumnMetrics(**v) for k, v in d.get("columns", {}).items()},
            nan(d.get("kl_median")),
            nan(d.get("chi_square_median")),
            nan(d.get("tvd_mean")),
            d.get("mode", ""),
            d.get("parameters", "-"),
            d.get("error"),
        )


def rank_methods(scores: Sequence[MethodScore], alpha: float = DEFAULT_GATE_ALPHA) -> list[MethodScore]:
    """Gate on every column's p-value >= alpha, then rank survivors by mean TVD.

    Mean TVDs closer than 1e-4 are treated as tied and ordered by median KL.
    Returns new MethodScore objects: ranked methods first, excluded ones after.
    """
    if not scores:
        raise InputError("no methods to rank")
    column_sets = {tuple(sorted(s.columns)) for s in scores if s.error is None}
    if len(column_sets) > 1:
        raise InputError("methods were evaluated on different columns")
    out = []
    for s in scores:
        gate = s.error is None and bool(s.columns) and all(m.p_value >= alpha for m in s.columns.values())
        out.append(MethodScore(**{**s.__dict__, "gate_passed": gate, "rank": None}))
    passing = sorted((s for s in out if s.gate_passed), key=lambda s: (-s.tvd_mean, s.kl_median, s.method))
    ordered: list[MethodScore] = []
    group: list[MethodScore] = []
    for s in passing:
        if group and group[-1].tvd_mean - s.tvd_mean >= TVD_TIE_TOL:
            ordered.extend(sorted(group, key=lambda g: (g.kl_median, -g.tvd_mean, g.method)))
            group = []
        group.append(s)
    ordered.extend(sorted(group, key=lambda g: (g.kl_median, -g.tvd_mean, g.method)))
    for i, s in enumerate(ordered, start=1):
        s.rank = i
    excluded = sorted((s for s in out if not s.gate_passed), key=lambda s: s.method)
    return ordered + excluded
