"""Multivariate Laguerre eigenbasis Phi_k^alpha(x; a) on (0, inf)^m."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .quadrature import HalfLineScheme, interval_rule
from .specfun import laguerre_fn_all

__all__ = [
    "BasisSpec",
    "CoefficientVector",
    "ConfigError",
    "ProblemConfig",
    "analyze",
    "analyze_grid",
    "basis_matrix",
    "basis_rule",
    "basis_scheme",
    "degree",
    "eigenvalue",
    "enumerate_indices",
    "phi_scaled",
    "synthesize",
]

MAX_INDEX_COUNT = 10**7
FLUSH = 1e-300

MultiIndex = tuple


class ConfigError(ValueError):
    """Invalid problem or run configuration."""


@dataclass(frozen=True)
class ProblemConfig:
    m: int
    n: int
    alpha: tuple

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        object.__setattr__(self, "alpha", alpha)
        if int(self.m) != self.m or self.m < 1:
            raise ConfigError(f"m must be a positive integer, got {self.m}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        if len(alpha) != self.m:
            raise ConfigError(f"alpha has {len(alpha)} entries but m = {self.m}")
        for j, a in enumerate(alpha):
            if not (math.isfinite(a) and a > -0.5):
                raise ConfigError(f"alpha[{j}] = {a} must exceed -1/2")

    @property
    def D(self) -> int:
        return max(self.m + self.n, 2 * self.n)

    @property
    def s_alpha(self) -> float:
        return float(sum(self.alpha))

    @property
    def theorem_range(self) -> bool:
        """True when every alpha_j >= 1/2."""
        return all(a >= 0.5 for a in self.alpha)

    def shifted(self, j: int, sign: int) -> "ProblemConfig":
        alpha = list(self.alpha)
        alpha[j] += sign
        return ProblemConfig(self.m, self.n, tuple(alpha))


def degree(k: MultiIndex) -> int:
    return int(sum(k))


def _compositions(d, m):
    if m == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _compositions(d - first, m - 1):
            yield (first,) + rest


def enumerate_indices(m: int, N: int) -> list:
    """All k in N^m with |k| <= N in graded lexicographic order."""
    if N < 0:
        raise ValueError("N must be non-negative")
    if math.comb(N + m, m) > MAX_INDEX_COUNT:
        raise ValueError(f"index count binomial({N + m},{m}) exceeds {MAX_INDEX_COUNT}")
    out = []
    for d in range(N + 1):
        out.extend(_compositions(d, m))
    return out


def eigenvalue(k: MultiIndex, config: ProblemConfig, a: float) -> float:
    return 2.0 * (2 * degree(k) + config.s_alpha + config.m) * a


@dataclass(frozen=True)
class BasisSpec:
    config: ProblemConfig
    N: int
    a: float = 1.0

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be non-negative")
        if not self.a > 0:
            raise ValueError("scale a must be positive")

    @cached_property
    def indices(self) -> tuple:
        return tuple(enumerate_indices(self.config.m, self.N))

    @cached_property
    def index_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int).reshape(-1, self.config.m)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        deg = self.index_array.sum(axis=1)
        return 2.0 * (2 * deg + self.config.s_alpha + self.config.m) * self.a

    def with_scale(self, a: float) -> "BasisSpec":
        return BasisSpec(self.config, self.N, a)


@dataclass
class CoefficientVector:
    """Coefficients c_k keyed by multi-index, tagged with the order vector alpha."""

    indices: tuple
    values: np.ndarray
    alpha: tuple
    tail: float = 0.0
    a: float = 1.0
    _pos: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.indices = tuple(tuple(int(v) for v in k) for k in self.indices)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (len(self.indices),):
            raise ValueError("values must have one entry per index")
        self.alpha = tuple(float(v) for v in self.alpha)

    @property
    def m(self) -> int:
        return len(self.alpha)

    def get(self, k, default=0.0):
        if self._pos is None:
            self._pos = {kk: i for i, kk in enumerate(self.indices)}
        i = self._pos.get(tuple(k))
        return default if i is None else self.values[i]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    @classmethod
    def zeros(cls, spec: BasisSpec):
        return cls(spec.indices, np.zeros(len(spec.indices), complex), spec.config.alpha, a=spec.a)

    @classmethod
    def unit(cls, spec: BasisSpec, k):
        c = cls.zeros(spec)
        c.values[spec.indices.index(tuple(k))] = 1.0
        return c

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"k{j + 1}" for j in range(self.m)] + ["re", "im"])
        for k, v in zip(self.indices, self.values):
            w.writerow(list(k) + [f"{v.real:.17g}", f"{v.imag:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, alpha, a=1.0):
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        m = len(header) - 2
        idx = [tuple(int(r[j]) for j in range(m)) for r in body]
        vals = [complex(float(r[m]), float(r[m + 1])) for r in body]
        return cls(tuple(idx), np.asarray(vals, complex), tuple(alpha), a=a)


def basis_scheme(kmax: int, beta_max: float, a: float = 1.0, step: float = 2.0, nodes: int = 32):
    """Half-line rule resolving phi_k^beta(sqrt(a) x) for k <= kmax.

    Graded panels toward the origin, then uniform panels of width step/sqrt(a)
    out to the Gaussian tail of the highest degree.
    """
    nu = 4 * kmax + 2 * max(beta_max, 0.0) + 2
    xmax = math.sqrt(2 * nu) + 6.0
    inner = [0.0, 1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0]
    outer = list(np.arange(1.0 + step, xmax + step, step))
    edges = np.asarray(inner + outer) / math.sqrt(a)
    return HalfLineScheme(panel_edges=tuple(edges), nodes_per_panel=nodes, tail_cut=float(edges[-1]))


def basis_rule(spec: BasisSpec, kmax: int | None = None):
    kmax = spec.N if kmax is None else kmax
    return basis_scheme(kmax, max(spec.config.alpha), spec.a).rule()


def basis_matrix(kmax: int, beta: float, a, x) -> np.ndarray:
    """a^(1/4) phi_k^beta(sqrt(a) x) for k = 0..kmax; shape (kmax+1, *broadcast(a, x).shape)."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.sqrt(a)) * laguerre_fn_all(kmax, beta, np.sqrt(a) * x)


def phi_scaled(k: MultiIndex, spec: BasisSpec, x) -> np.ndarray:
    """Phi_k^alpha(x; a) = a^(m/4) prod_j phi_{k_j}^{alpha_j}(sqrt(a) x_j).

    ``x`` has trailing dimension m (a bare array is accepted when m = 1).
    """
    x = np.asarray(x, dtype=float)
    m = spec.config.m
    if m == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    ra = math.sqrt(spec.a)
    out = np.full(x.shape[:-1], spec.a ** (m / 4.0))
    for j in range(m):
        out = out * laguerre_fn_all(k[j], spec.config.alpha[j], ra * x[..., j])[k[j]]
    return out


def _axis_contract(tensor, mats):
    """Contract axis j of ``tensor`` with mats[j] (shape (p_j, n_j)), keeping axis order."""
    out = tensor
    for j, M in enumerate(mats):
        out = np.moveaxis(np.tensordot(M, out, axes=(1, j)), 0, j)
    return out


def _gather(tensor, index_array):
    return tensor[tuple(index_array.T)]


def _scatter(values, index_array, shape):
    out = np.zeros(shape, dtype=complex)
    out[tuple(index_array.T)] = values
    return out


def analyze_grid(values, spec: BasisSpec, nodes: Sequence, weights: Sequence, alpha=None) -> CoefficientVector:
    """Coefficients from samples on a tensor grid with per-axis quadrature."""
    alpha = spec.config.alpha if alpha is None else alpha
    mats = [
        basis_matrix(spec.N, alpha[j], spec.a, nodes[j]) * np.asarray(weights[j])[None, :]
        for j in range(spec.config.m)
    ]
    full = _axis_contract(np.asarray(values, dtype=complex), mats)
    c = _gather(full, spec.index_array)
    c[np.abs(c) < FLUSH] = 0.0
    top = spec.index_array.sum(axis=1) == spec.N
    tail = float(np.max(np.abs(c[top]))) if top.any() else 0.0
    return CoefficientVector(spec.indices, c, alpha, tail=tail, a=spec.a)


def analyze(f: Callable, spec: BasisSpec, scheme: HalfLineScheme | None = None) -> CoefficientVector:
    """c_k = int Phi_k^alpha(x; a) f(x) dx by tensor Gauss quadrature.

    ``f`` receives an array of points with trailing dimension m.
    """
    if scheme is None:
        x, w = basis_rule(spec)
    else:
        x, w = scheme.rule()
    m = spec.config.m
    grids = np.meshgrid(*([x] * m), indexing="ij")
    pts = np.stack(grids, axis=-1)
    vals = np.asarray(f(pts), dtype=complex)
    if vals.shape != pts.shape[:-1]:
        vals = vals.reshape(pts.shape[:-1])
    return analyze_grid(vals, spec, [x] * m, [w] * m)


class Expansion:
    """Callable finite sum  x -> sum_k c_k Phi_k^alpha(x; a)."""

    def __init__(self, c: CoefficientVector, spec: BasisSpec):
        self.c = c
        self.spec = spec
        idx = np.asarray(c.indices, dtype=int).reshape(-1, c.m)
        self._idx = idx
        self._kmax = idx.max(axis=0) if len(idx) else np.zeros(c.m, int)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        m = self.c.m
        if m == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        shape = x.shape[:-1]
        pts = x.reshape(-1, m)
        out = np.ones((len(self._idx), pts.shape[0]), dtype=complex)
        for j in range(m):
            B = basis_matrix(int(self._kmax[j]), self.c.alpha[j], self.spec.a, pts[:, j])
            out *= B[self._idx[:, j]]
        return (self.c.values @ out).reshape(shape)

    def on_grid(self, nodes: Sequence):
        """Evaluate on a tensor grid given per-axis nodes (fast path)."""
        m = self.c.m
        mats = [
            basis_matrix(int(self._kmax[j]), self.c.alpha[j], self.spec.a, nodes[j]).T
            for j in range(m)
        ]
        shape = tuple(int(k) + 1 for k in self._kmax)
        coef = _scatter(self.c.values, self._idx, shape)
        return _axis_contract(coef, mats)


def synthesize(c: CoefficientVector, spec: BasisSpec) -> Expansion:
    """The function sum_k c_k Phi_k^{alpha_c}(.; a), alpha taken from the coefficient tag."""
    return Expansion(c, spec)
