"""Gaussian copula over categorical columns.

Each column's categories partition [0, 1] into intervals sized by their
empirical frequencies, laid out in schema order. A record maps to latent
normal scores through the interval midpoints; the copula is the Pearson
correlation of those scores. Sampling draws correlated normals, pushes them
through the normal CDF and reads off the interval that contains each value.

Nominal columns get the same treatment in declaration order, which imposes an
ordering the data does not have. That is a known limitation of the method.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from catsynth.core import FORMAT_VERSION, CategoricalSchema, DataTable, _check_format, _frozen
from catsynth.errors import InputError, ModelError
from catsynth.rng import check_seed, map_row_chunks, record_uniforms

EIGEN_FLOOR = 1e-10
# Pivots below this are treated as exact zeros (rank-deficient correlation).
PIVOT_TOL = 1e-8
# Keeps latent scores of empty edge categories finite.
MID_CLIP = 1e-12


@dataclass(frozen=True)
class ColumnCdf:
    """Upper interval boundaries and midpoint normal scores for one column.

    Categories never seen in the data get zero-width intervals; they are
    never sampled.
    """

    upper: np.ndarray
    latent: np.ndarray

    @classmethod
    def from_frequencies(cls, freqs: Sequence[float]) -> "ColumnCdf":
        f = np.asarray(freqs, dtype=float)
        upper = np.cumsum(f)
        upper[-1] = 1.0
        lower = np.concatenate([[0.0], upper[:-1]])
        mid = np.clip(0.5 * (lower + upper), MID_CLIP, 1.0 - MID_CLIP)
        return cls(_frozen(upper), _frozen(ndtri(mid)))

    @property
    def lower(self) -> np.ndarray:
        return np.concatenate([[0.0], self.upper[:-1]])

    @property
    def frequencies(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.upper]))

    def to_latent(self, codes: np.ndarray) -> np.ndarray:
        return self.latent[codes]

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        k = np.searchsorted(self.upper, u, side="right")
        return np.minimum(k, self.upper.size - 1)

    def from_latent(self, z: np.ndarray) -> np.ndarray:
        return self.from_uniform(ndtr(z))


def repair_correlation(corr: np.ndarray) -> np.ndarray:
    """Symmetrize; if any eigenvalue is negative, clip to 1e-10 and rescale to unit diagonal."""
    c = 0.5 * (np.asarray(corr, dtype=float) + np.asarray(corr, dtype=float).T)
    np.fill_diagonal(c, 1.0)
    w, v = np.linalg.eigh(c)
    if w.min() < 0:
        c = (v * np.maximum(w, EIGEN_FLOOR)) @ v.T
        d = np.sqrt(np.diag(c))
        c = c / np.outer(d, d)
        c = 0.5 * (c + c.T)
        np.fill_diagonal(c, 1.0)
    return np.clip(c, -1.0, 1.0)


def cholesky_psd(a: np.ndarray, tol: float = PIVOT_TOL) -> np.ndarray:
    """Lower-triangular L with L @ L.T == a for positive semi-definite ``a``.

    Unlike ``numpy.linalg.cholesky`` this accepts singular matrices: a pivot
    at or below ``tol`` zeroes its column, so perfectly correlated columns
    come out as exact copies.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if pivot < -tol:
            raise ModelError(f"matrix is not positive semi-definite (pivot {pivot:.3e} at {j})")
        if pivot <= tol:
            continue
        L[j, j] = np.sqrt(pivot)
        L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


class CopulaModel:
    def __init__(self, schema: CategoricalSchema, cdfs: Sequence[ColumnCdf], correlation: np.ndarray):
        corr = np.array(correlation, dtype=float)
        m = len(schema)
        if len(cdfs) != m or corr.shape != (m, m):
            raise InputError("copula model does not match the schema width")
        if not np.allclose(corr, corr.T, atol=1e-12, rtol=0):
            raise ModelError("correlation matrix is not symmetric")
        for v, cdf in zip(schema.variables, cdfs):
            if cdf.upper.size != v.cardinality:
                raise InputError(f"CDF for {v.name!r} has {cdf.upper.size} categories, expected {v.cardinality}")
        self.schema = schema
        self.cdfs = tuple(cdfs)
        self.correlation = _frozen(corr)
        self.cholesky = _frozen(cholesky_psd(corr))

    def to_latent(self, data: DataTable) -> np.ndarray:
        return np.column_stack([cdf.to_latent(data.values[:, j]) for j, cdf in enumerate(self.cdfs)])

    def from_latent(self, z: np.ndarray) -> np.ndarray:
        return np.column_stack([cdf.from_latent(z[:, j]) for j, cdf in enumerate(self.cdfs)])

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "copula",
            "schema": self.schema.to_dict(),
            "cdfs": [
                {"name": v.name, "upper": cdf.upper.tolist(), "latent": cdf.latent.tolist()}
                for v, cdf in zip(self.schema.variables, self.cdfs)
            ],
            "correlation": self.correlation.tolist(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CopulaModel":
        _check_format(d, "copula")
        schema = CategoricalSchema.from_dict(d["schema"])
        cdfs = [
            ColumnCdf(_frozen(np.array(c["upper"], dtype=float)), _frozen(np.array(c["latent"], dtype=float)))
            for c in d["cdfs"]
        ]
        return cls(schema, cdfs, np.array(d["correlation"], dtype=float))


def fit_copula(data: DataTable) -> CopulaModel:
    if data.n_rows == 0:
        raise InputError("cannot fit a copula on an empty table")
    cdfs = []
    for name in data.schema.names:
        counts = data.counts(name)
        if np.count_nonzero(counts) < 2:
            raise ModelError(f"column {name!r} is constant in the data; the copula needs >= 2 observed categories")
        cdfs.append(ColumnCdf.from_frequencies(counts / counts.sum()))
    latent = np.column_stack([cdf.to_latent(data.values[:, j]) for j, cdf in enumerate(cdfs)])
    corr = np.atleast_2d(np.corrcoef(latent, rowvar=False))
    return CopulaModel(data.schema, cdfs, repair_correlation(corr))


def _sample_block(model: CopulaModel, seed: int, start: int, stop: int) -> np.ndarray:
    g = ndtri(record_uniforms(seed, start, stop, len(model.schema)))
    L = model.cholesky
    # Elementwise accumulation in fixed order, so results never depend on the BLAS block size.
    z = np.zeros_like(g)
    for i in range(L.shape[0]):
        for j in range(i + 1):
            if L[i, j] != 0.0:
                z[:, i] += L[i, j] * g[:, j]
    return model.from_latent(z)


def sample_copula(model: CopulaModel, n_rows: int, seed: int, *, workers: int = 1) -> DataTable:
    if int(n_rows) < 1:
        raise InputError(f"n_rows must be >= 1, got {n_rows}")
    check_seed(seed)
    values = map_row_chunks(lambda a, b: _sample_block(model, seed, a, b), int(n_rows), workers)
    return DataTable(model.schema, values)
