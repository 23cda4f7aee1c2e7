"""Spectral calculus for the Bessel-Grushin operator on (0, inf)^m x R (n = 1).

A function on the product space is sampled on a tensor grid: composite Gauss
nodes in each x-axis and a uniform periodic grid in y.  Operators act by
partial Fourier transform in y followed, at every discrete frequency u, by an
expansion in the scaled Laguerre basis Phi_k^alpha(.; |u|).
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from .laguerre_basis import (
    BasisSpec,
    CoefficientVector,
    ConfigError,
    ProblemConfig,
    basis_matrix,
    enumerate_indices,
)
from .quadrature import interval_rule

__all__ = [
    "DomainError",
    "Grid",
    "GridFunction",
    "SpectralSymbol",
    "TruncationWarning",
    "apply_ladder",
    "apply_multiplier",
    "fourier2",
    "frac_power",
    "grushin_apply",
    "hermite_riesz_series",
    "multiplier_kernel",
    "riesz_norm_closed_form",
    "riesz_product_space",
    "riesz_series",
    "symbol_from_dict",
]


class DomainError(ValueError):
    """Operator requested outside its domain of definition."""


class TruncationWarning(RuntimeWarning):
    """Expansion coefficients at the truncation degree are not negligible."""


# ------------------------------------------------------------------ grids


@dataclass(frozen=True)
class Grid:
    """Tensor grid: Gauss panels on (0, X_max) per x-axis, uniform y on [-L, L)."""

    m: int = 1
    L: float = 16.0
    N_y: int = 256
    X_max: float = 12.0
    N: int = 64
    panel_width: float = 0.25
    nodes_per_panel: int = 16

    def __post_init__(self):
        if self.m not in (1, 2):
            raise ConfigError(f"grid operators support m in {{1, 2}}, got {self.m}")
        if self.N_y < 2 or self.N_y & (self.N_y - 1):
            raise ConfigError(f"N_y must be a power of two, got {self.N_y}")
        if not (self.L > 0 and self.X_max > 0 and self.panel_width > 0):
            raise ConfigError("L, X_max and panel_width must be positive")
        if self.N < 0 or self.nodes_per_panel < 2:
            raise ConfigError("N must be non-negative and nodes_per_panel at least 2")

    @classmethod
    def default(cls, m: int = 1) -> "Grid":
        if m == 1:
            return cls()
        return cls(m=2, L=8.0, N_y=32, X_max=8.0, N=16, panel_width=0.5, nodes_per_panel=16)

    def refined(self, level: int) -> "Grid":
        """Doubles the y-period (and N_y) per level and adds x nodes."""
        if level == 0:
            return self
        return replace(
            self,
            L=self.L * 2**level,
            N_y=self.N_y * 2**level,
            nodes_per_panel=self.nodes_per_panel + 4 * level,
        )

    @cached_property
    def x_rule(self):
        pw = self.panel_width
        inner = [e for e in (0.0, 1e-3, 1e-2, 0.1) if e < self.X_max]
        start = min(0.5, self.X_max)
        outer = list(np.arange(start, self.X_max, pw)) + [self.X_max]
        edges = np.unique(np.asarray(inner + outer))
        x, w = interval_rule(edges, self.nodes_per_panel)
        x.setflags(write=False)
        w.setflags(write=False)
        return x, w

    @property
    def x(self):
        return self.x_rule[0]

    @property
    def wx(self):
        return self.x_rule[1]

    @property
    def dy(self) -> float:
        return 2.0 * self.L / self.N_y

    @property
    def du(self) -> float:
        return math.pi / self.L

    @property
    def y(self):
        return -self.L + self.dy * np.arange(self.N_y)

    @property
    def freq_index(self):
        return np.arange(-self.N_y // 2, self.N_y // 2)

    @property
    def u(self):
        return self.du * self.freq_index

    @property
    def shape(self):
        return (self.x.size,) * self.m + (self.N_y,)

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "L": self.L,
            "N_y": self.N_y,
            "X_max": self.X_max,
            "N": self.N,
            "panel_width": self.panel_width,
            "nodes_per_panel": self.nodes_per_panel,
        }


@dataclass
class GridFunction:
    """Samples of f(x, y) (domain 'space') or of its partial transform in y (domain 'frequency')."""

    config: ProblemConfig
    grid: Grid
    values: np.ndarray
    domain: str = "space"
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.config.n != 1:
            raise ConfigError("grid operators are implemented for n = 1")
        if self.config.m != self.grid.m:
            raise ConfigError(f"config has m = {self.config.m} but grid has m = {self.grid.m}")
        if self.domain not in ("space", "frequency"):
            raise ConfigError(f"unknown domain {self.domain!r}")
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ConfigError(f"values have shape {self.values.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("grid values must be finite")

    @classmethod
    def from_function(cls, f: Callable, config: ProblemConfig, grid: Grid | None = None):
        """Sample f(x_1, ..., x_m, y) on the tensor grid."""
        grid = grid or Grid.default(config.m)
        axes = [grid.x] * grid.m + [grid.y]
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(config, grid, np.broadcast_to(f(*mesh), grid.shape))

    @classmethod
    def from_modes(cls, terms, config: ProblemConfig, grid: Grid | None = None):
        """Truncated-span function with F_2 f(x, u) = sum_k psi_k(u) Phi_k^alpha(x; |u|).

        ``terms`` is a sequence of (k, psi) with psi a vectorised function of u
        (its value at u = 0 is ignored).
        """
        grid = grid or Grid.default(config.m)
        u = grid.u
        nz = u != 0
        F = np.zeros(grid.shape, complex)
        for k, psi in terms:
            k = tuple(np.atleast_1d(k))
            amp = np.zeros(u.size, complex)
            amp[nz] = psi(u[nz])
            mode = np.ones((grid.x.size,) * grid.m + (u.size,))
            a = np.where(nz, np.abs(u), 1.0)
            for j in range(grid.m):
                B = basis_matrix(k[j], config.alpha[j], a[None, :], grid.x[:, None])[k[j]]
                shp = [1] * (grid.m + 1)
                shp[j], shp[-1] = grid.x.size, u.size
                mode = mode * B.reshape(shp)
            F += mode * amp
        return fourier2(cls(config, grid, F, "frequency"), "inverse")

    @classmethod
    def zeros(cls, config: ProblemConfig, grid: Grid | None = None, domain="space"):
        grid = grid or Grid.default(config.m)
        return cls(config, grid, np.zeros(grid.shape, complex), domain)

    def with_values(self, values, domain=None, config=None) -> "GridFunction":
        return GridFunction(config or self.config, self.grid, values, domain or self.domain)

    def norm(self) -> float:
        """Discrete L^2 norm (Gauss weights in x, spacing dy or du in the last axis)."""
        w = self.grid.wx
        dens = np.abs(self.values) ** 2
        for _ in range(self.grid.m):
            dens = np.tensordot(w, dens, axes=(0, 0))
        step = self.grid.dy if self.domain == "space" else self.grid.du
        return float(np.sqrt(step * dens.sum()))

    # serialization -------------------------------------------------------

    def metadata(self) -> dict:
        return {
            **self.grid.as_dict(),
            "n": self.config.n,
            "alpha": list(self.config.alpha),
            "domain": self.domain,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"ix{j + 1}" for j in range(self.grid.m)] + ["iy", "re", "im"])
        for idx in np.ndindex(self.values.shape):
            v = self.values[idx]
            w.writerow(list(idx) + [f"{v.real:.17g}", f"{v.imag:.17g}"])
        return buf.getvalue()

    def write(self, path) -> None:
        path = Path(path)
        path.write_text(self.to_csv())
        path.with_suffix(".json").write_text(json.dumps(self.metadata(), indent=2, sort_keys=True))

    @classmethod
    def from_csv(cls, text: str, meta: dict) -> "GridFunction":
        grid = Grid(**{k: meta[k] for k in ("m", "L", "N_y", "X_max", "N", "panel_width", "nodes_per_panel")})
        config = ProblemConfig(grid.m, int(meta.get("n", 1)), tuple(meta["alpha"]))
        rows = list(csv.reader(io.StringIO(text)))[1:]
        vals = np.zeros(grid.shape, complex)
        m = grid.m
        for r in rows:
            idx = tuple(int(v) for v in r[: m + 1])
            vals[idx] = complex(float(r[m + 1]), float(r[m + 2]))
        return cls(config, grid, vals, meta.get("domain", "space"))

    @classmethod
    def read(cls, path) -> "GridFunction":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        return cls.from_csv(path.read_text(), meta)


def fourier2(f: GridFunction, direction: str = "forward") -> GridFunction:
    """Discrete partial Fourier transform in y with the unitary (2 pi)^{-1/2} convention.

    Forward: F(u_l) = dy / sqrt(2 pi) sum_j exp(-i u_l y_j) f(y_j), u_l = pi l / L,
    l = -N_y/2 .. N_y/2 - 1 stored in increasing order.
    """
    g = f.grid
    sign = (-1.0) ** np.abs(g.freq_index)
    if direction == "forward":
        if f.domain != "space":
            raise ValueError("forward transform expects a space-domain function")
        F = np.fft.fftshift(np.fft.fft(f.values, axis=-1), axes=-1) * sign
        return f.with_values(F * (g.dy / math.sqrt(2 * math.pi)), "frequency")
    if direction == "inverse":
        if f.domain != "frequency":
            raise ValueError("inverse transform expects a frequency-domain function")
        v = np.fft.ifft(np.fft.ifftshift(f.values * sign, axes=-1), axis=-1)
        return f.with_values(v * (g.N_y * g.du / math.sqrt(2 * math.pi)), "space")
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


# ---------------------------------------------------------------- symbols


@dataclass(frozen=True)
class SpectralSymbol:
    """A function M on (0, inf) used as M(G_alpha); support None means unbounded."""

    func: Callable
    support: tuple | None = None
    value_at_zero: complex = 0.0
    bound: float = math.inf
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.support is not None:
            A, B = map(float, self.support)
            if not 0 <= A < B < math.inf:
                raise ConfigError(f"support must satisfy 0 <= A < B < inf, got {self.support}")
            object.__setattr__(self, "support", (A, B))

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        val = np.asarray(self.func(lam), dtype=complex)
        val = np.broadcast_to(val, lam.shape).copy()
        if self.support is not None:
            A, B = self.support
            val[(lam < A) | (lam > B)] = 0.0
        return val

    @property
    def compact(self) -> bool:
        return self.support is not None

    def check_bound(self, lam) -> bool:
        return bool(np.all(np.abs(self(lam)) <= self.bound * (1 + 1e-12)))

    def scaled(self, c: complex) -> "SpectralSymbol":
        f = self.func
        return replace(self, func=lambda lam: c * f(lam), value_at_zero=c * self.value_at_zero,
                       bound=abs(c) * self.bound, name=f"{c}*{self.name}")

    def times(self, other: "SpectralSymbol") -> "SpectralSymbol":
        f, g = self.func, other.func
        sup = None
        if self.support and other.support:
            sup = (max(self.support[0], other.support[0]), min(self.support[1], other.support[1]))
        elif self.support or other.support:
            sup = self.support or other.support
        return SpectralSymbol(lambda lam: f(lam) * g(lam), sup, self.value_at_zero * other.value_at_zero,
                              self.bound * other.bound, f"{self.name}*{other.name}")

    @classmethod
    def identity(cls):
        return cls(lambda lam: lam, None, 0.0, math.inf, "identity")

    @classmethod
    def constant(cls, c: complex = 1.0):
        return cls(lambda lam: np.full(np.shape(lam), c, complex), None, c, abs(c), "constant", {"value": c})

    @classmethod
    def power(cls, gamma: float, value_at_zero: complex = 0.0):
        return cls(lambda lam: lam**gamma, None, value_at_zero, 1.0 if gamma == 0 else math.inf, "power",
                   {"gamma": gamma})

    @classmethod
    def imaginary_power(cls, tau: float):
        return cls(lambda lam: np.exp(1j * tau * np.log(lam)), None, 0.0, 1.0, "imaginary_power", {"tau": tau})

    @classmethod
    def heat(cls, t: float, support: tuple | None = None):
        return cls(lambda lam: np.exp(-t * lam), support, 1.0, 1.0, "heat", {"t": t})

    @classmethod
    def smooth_indicator(cls, A: float, B: float, delta: float | None = None):
        """C^inf bump equal to 1 on [A + delta, B - delta] and vanishing outside (A, B)."""
        delta = (B - A) / 4.0 if delta is None else delta
        if not 0 < 2 * delta <= B - A:
            raise ConfigError("smoothing width must satisfy 0 < 2 delta <= B - A")

        def f(lam):
            return _smooth_step((lam - A) / delta) * _smooth_step((B - lam) / delta)

        return cls(f, (A, B), 0.0, 1.0, "smooth_indicator", {"A": A, "B": B, "delta": delta})


def _bump_part(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _smooth_step(x):
    """0 for x <= 0, 1 for x >= 1, C^inf in between."""
    p, q = _bump_part(x), _bump_part(1.0 - np.asarray(x, dtype=float))
    return p / (p + q)


_CATALOG = {
    "identity": lambda p: SpectralSymbol.identity(),
    "constant": lambda p: SpectralSymbol.constant(complex(p.get("value", 1.0))),
    "power": lambda p: SpectralSymbol.power(float(p["gamma"]), complex(p.get("value_at_zero", 0.0))),
    "imaginary_power": lambda p: SpectralSymbol.imaginary_power(float(p["tau"])),
    "heat": lambda p: SpectralSymbol.heat(float(p["t"]), tuple(p["support"]) if p.get("support") else None),
    "smooth_indicator": lambda p: SpectralSymbol.smooth_indicator(float(p["A"]), float(p["B"]), p.get("delta")),
}


def symbol_from_dict(spec: dict) -> SpectralSymbol:
    """Build a catalog symbol from {"name": ..., **params}."""
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in _CATALOG:
        raise ConfigError(f"unknown symbol {name!r}; choose from {sorted(_CATALOG)}")
    try:
        sym = _CATALOG[name](spec)
    except KeyError as exc:
        raise ConfigError(f"symbol {name!r} is missing parameter {exc.args[0]!r}") from None
    return replace(sym, params={**sym.params, **spec})


# ------------------------------------------------------ coefficient maps


def _eig(indices, alpha, a):
    idx = np.asarray(indices, dtype=int).reshape(-1, len(alpha))
    return 2.0 * (2 * idx.sum(axis=1) + sum(alpha) + len(alpha)) * a


def _check_tag(spec: BasisSpec, g: CoefficientVector):
    if tuple(g.alpha) != tuple(spec.config.alpha):
        raise ConfigError(f"coefficient vector is tagged alpha={g.alpha}, basis has {spec.config.alpha}")


def frac_power(gamma: float, spec: BasisSpec, g: CoefficientVector) -> CoefficientVector:
    """Coefficients of L_alpha(a)^{-gamma} g."""
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    _check_tag(spec, g)
    vals = g.values / _eig(g.indices, g.alpha, spec.a) ** gamma
    return CoefficientVector(g.indices, vals, g.alpha, a=spec.a)


def _shift_map(j, sign, g, factors, alpha_out, N_out):
    out_idx = enumerate_indices(len(alpha_out), N_out)
    pos = {k: i for i, k in enumerate(out_idx)}
    vals = np.zeros(len(out_idx), complex)
    for k, c, f in zip(g.indices, g.values, factors):
        if f == 0:
            continue
        kk = list(k)
        kk[j] += sign
        i = pos.get(tuple(kk))
        if i is not None:
            vals[i] += f * c
    return CoefficientVector(tuple(out_idx), vals, alpha_out)


def _shift_setup(j, variant, spec, g, kind):
    _check_tag(spec, g)
    m = spec.config.m
    if not 0 <= j < m:
        raise DomainError(f"axis {j} out of range for m = {m}")
    idx = np.asarray(g.indices, dtype=int).reshape(-1, m)
    deg = int(idx.sum(axis=1).max()) if len(idx) else 0
    if variant == "A":
        return idx[:, j].astype(float), -1, spec.config.shifted(j, +1).alpha, deg
    if variant in ("A*", "Astar"):
        if not spec.config.alpha[j] > 0.5:
            raise DomainError(f"{kind} with alpha[{j}] = {spec.config.alpha[j]} requires alpha_j > 1/2")
        return idx[:, j] + 1.0, +1, tuple(a - (i == j) for i, a in enumerate(spec.config.alpha)), deg + 1
    raise DomainError(f"unknown variant {variant!r}")


def apply_ladder(j: int, variant: str, spec: BasisSpec, g: CoefficientVector) -> CoefficientVector:
    """A_{alpha_j}(a) (variant 'A') or its adjoint ('A*') in coefficient form.

    A maps Phi_k^alpha to -2 sqrt(k_j a) Phi_{k-e_j}^{alpha+e_j}; A* maps it
    to -2 sqrt((k_j+1) a) Phi_{k+e_j}^{alpha-e_j}.
    """
    kj, sign, alpha_out, deg = _shift_setup(j, variant, spec, g, "A*")
    fac = -2.0 * np.sqrt(kj * spec.a)
    out = _shift_map(j, sign, g, fac, alpha_out, deg)
    out.a = spec.a
    return out


def riesz_series(j: int, variant: str, spec: BasisSpec, g: CoefficientVector) -> CoefficientVector:
    """Riesz transform R_{alpha,j}(a) (variant 'R') or its companion ('Rtilde').

    Equals the ladder operator composed with L_alpha(a)^{-1/2}; the factor is
    independent of a.
    """
    v = {"R": "A", "Rtilde": "A*", "R~": "A*"}.get(variant)
    if v is None:
        raise DomainError(f"unknown variant {variant!r}")
    kj, sign, alpha_out, deg = _shift_setup(j, v, spec, g, "Rtilde")
    fac = -2.0 * np.sqrt(kj) / np.sqrt(_eig(g.indices, g.alpha, 1.0))
    out = _shift_map(j, sign, g, fac, alpha_out, deg)
    out.a = spec.a
    return out


def riesz_norm_closed_form(j: int, g: CoefficientVector) -> float:
    """sqrt(sum_k 4 k_j / (2(2s(k) + s(alpha) + m)) |c_k|^2)."""
    idx = np.asarray(g.indices, dtype=int).reshape(-1, g.m)
    w = 4.0 * idx[:, j] / _eig(g.indices, g.alpha, 1.0)
    return float(np.sqrt(np.sum(w * np.abs(g.values) ** 2)))


def hermite_riesz_series(indices, values, m: int):
    """Coefficients of (d/dx_1 + |a| x_1) H(a)^{-1/2} in the scaled Hermite basis.

    h_k maps to sqrt(2 k_1 / (2 s(k) + m)) h_{k - e_1}; returns (indices, values)
    of the image.
    """
    idx = np.asarray(indices, dtype=int).reshape(-1, m)
    values = np.asarray(values, dtype=complex)
    fac = np.sqrt(2.0 * idx[:, 0] / (2 * idx.sum(axis=1) + m))
    keep = idx[:, 0] > 0
    out = idx[keep].copy()
    out[:, 0] -= 1
    return [tuple(k) for k in out], fac[keep] * values[keep]


# ----------------------------------------------------- grid application


def _positive_freqs(grid: Grid):
    """Map each stored frequency to its |u| class l = |index| (0 .. N_y/2)."""
    return np.abs(grid.freq_index)


def _index_tensor(m, N):
    ranges = np.meshgrid(*([np.arange(N + 1)] * m), indexing="ij")
    deg = sum(ranges)
    return ranges, deg


def _contract_batch(B, S, axis):
    """Contract x-axis ``axis`` of S (batch axis last) with B[k, batch, x]."""
    S = np.moveaxis(S, axis, -2)  # (..., x, batch)
    out = np.einsum("kbx,...xb->...kb", B, S, optimize=True)
    return np.moveaxis(out, -2, axis)


def _spectral_apply(f: GridFunction, N: int, coef_map, alpha_out, zero_value, tail_tol, chunk=32):
    """Per-frequency analysis, coefficient map, synthesis in the alpha_out basis.

    ``coef_map(C, a)`` receives coefficient tensors of shape (N+1,)*m + (batch,)
    (entries with s(k) > N already zeroed) and the batch of |u| values.
    """
    g = f.grid
    m = g.m
    F = fourier2(f)
    vals = F.values
    out = np.zeros_like(vals)
    x, w = g.x, g.wx
    lab = _positive_freqs(g)
    _, deg = _index_tensor(m, N)
    mask = (deg <= N)[..., None]
    top = (deg == N)[..., None]
    zero = np.flatnonzero(lab == 0)
    out[..., zero] = zero_value * vals[..., zero]
    cols = np.flatnonzero(lab > 0)
    tail, peak = 0.0, 0.0
    for start in range(0, cols.size, chunk):
        c = cols[start:start + chunk]
        a = g.du * lab[c]
        S = vals[..., c]
        Bin = [basis_matrix(N, f.config.alpha[j], a[:, None], x[None, :]) for j in range(m)]
        if tuple(alpha_out) == tuple(f.config.alpha):
            Bout = Bin
        else:
            Bout = [basis_matrix(N, alpha_out[j], a[:, None], x[None, :]) for j in range(m)]
        C = S
        for j in range(m):
            C = _contract_batch(Bin[j] * w, C, j)
        C = np.where(mask, C, 0.0)
        absC = np.abs(C)
        peak = max(peak, float(absC.max(initial=0.0)))
        tail = max(tail, float(np.where(top, absC, 0.0).max(initial=0.0)))
        D = np.where(mask, coef_map(C, a), 0.0)
        for j in range(m):
            D = _contract_batch(np.swapaxes(Bout[j], 0, 2), D, j)
        out[..., c] = D
    rel_tail = tail / peak if peak > 0 else 0.0
    if rel_tail > tail_tol:
        warnings.warn(f"relative tail coefficient {rel_tail:.2e} at degree {N} exceeds {tail_tol:.1e}",
                      TruncationWarning, stacklevel=3)
    cfg = ProblemConfig(m, 1, tuple(alpha_out))
    res = fourier2(GridFunction(cfg, g, out, "frequency"), "inverse")
    res.info = {"tail": tail, "relative_tail": rel_tail, "N": N}
    return res


def apply_multiplier(symbol: SpectralSymbol, f: GridFunction, N: int | None = None,
                     tail_tol: float = 1e-8) -> GridFunction:
    """M(G_alpha) f; M evaluated at 2(2 s(k) + s(alpha) + m)|u| for every active (k, u)."""
    N = f.grid.N if N is None else N
    m, s_alpha = f.config.m, f.config.s_alpha
    _, deg = _index_tensor(m, N)
    nu = 2.0 * (2 * deg + s_alpha + m)

    def coef_map(C, a):
        lam = nu[..., None] * a
        return C * symbol(lam)

    return _spectral_apply(f, N, coef_map, f.config.alpha, symbol.value_at_zero, tail_tol)


def grushin_apply(f: GridFunction, N: int | None = None, tail_tol: float = 1e-8) -> GridFunction:
    """The Bessel-Grushin operator on the truncated spectral span."""
    return apply_multiplier(SpectralSymbol.identity(), f, N, tail_tol)


def riesz_product_space(j: int, f: GridFunction, N: int | None = None, tail_tol: float = 1e-8) -> GridFunction:
    """R_{alpha,j} on the product space; the u = 0 slice is mapped to zero."""
    N = f.grid.N if N is None else N
    m = f.config.m
    if not 0 <= j < m:
        raise DomainError(f"axis {j} out of range for m = {m}")
    ranges, deg = _index_tensor(m, N)
    kj = ranges[j]
    fac = -2.0 * np.sqrt(kj) / np.sqrt(2.0 * (2 * deg + f.config.s_alpha + m))

    def coef_map(C, a):
        D = np.zeros_like(C)
        src = [slice(None)] * (m + 1)
        dst = [slice(None)] * (m + 1)
        src[j], dst[j] = slice(1, None), slice(None, -1)
        D[tuple(dst)] = (fac[..., None] * C)[tuple(src)]
        return D

    alpha_out = f.config.shifted(j, +1).alpha
    return _spectral_apply(f, N, coef_map, alpha_out, 0.0, tail_tol)


# ------------------------------------------------------ multiplier kernel


def _nu_tilde(config: ProblemConfig, N: int):
    """Distinct degrees d = 0..N and their 2(2d + s(alpha) + m)."""
    d = np.arange(N + 1)
    return d, 2.0 * (2 * d + config.s_alpha + config.m)


def kernel_u_rule(H: SpectralSymbol, config: ProblemConfig, N: int, max_width: float, nodes: int = 16):
    """Gauss rule on (0, B / nu_0] with panels aligned at A / nu_d and B / nu_d."""
    if not H.compact:
        raise DomainError("multiplier kernel requires a compactly supported H")
    A, B = H.support
    _, nu = _nu_tilde(config, N)
    bps = np.unique(np.concatenate([A / nu, B / nu]))
    bps = bps[bps > 0]
    edges = [bps[0]]
    for lo, hi in zip(bps[:-1], bps[1:]):
        k = max(1, int(math.ceil((hi - lo) / max_width)))
        edges.extend(list(lo + (hi - lo) * np.arange(1, k + 1) / k))
    return interval_rule(np.asarray(edges), nodes)


def _mode_products(config: ProblemConfig, N: int, u, pts):
    """Phi_k(pts; u) for all |k| <= N: shape (len(indices), len(u), len(pts))."""
    m = config.m
    pts = np.asarray(pts, dtype=float).reshape(-1, m)
    idx = np.asarray(enumerate_indices(m, N), dtype=int)
    out = np.ones((len(idx), u.size, pts.shape[0]))
    for j in range(m):
        B = basis_matrix(N, config.alpha[j], u[:, None], pts[None, :, j])
        out *= B[idx[:, j]]
    return idx, out


def kernel_profile(H: SpectralSymbol, config: ProblemConfig, y, x, N: int, u, chunk: int = 256):
    """P(u, x) = sum_{|k| <= N} H(nu_k u) Phi_k(x; u) Phi_k(y; u) on the u-nodes."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1, config.m)
    y = np.asarray(y, dtype=float).reshape(1, config.m)
    P = np.zeros((u.size, x.shape[0]), complex)
    for s in range(0, u.size, chunk):
        uu = u[s:s + chunk]
        idx, Px = _mode_products(config, N, uu, x)
        _, Py = _mode_products(config, N, uu, y)
        lam = 2.0 * (2 * idx.sum(axis=1)[:, None] + config.s_alpha + config.m) * uu[None, :]
        P[s:s + chunk] = np.einsum("ku,kux,ku->ux", H(lam), Px, Py[:, :, 0], optimize=True)
    return P


def multiplier_kernel(H: SpectralSymbol, config: ProblemConfig, y, z, x, t, N: int = 32,
                      nodes: int = 16, max_width: float | None = None):
    """K_H(y, z; x, t) = (1/2 pi) int sum_{|k| <= N} H(nu_k |u|) Phi_k(x;|u|) Phi_k(y;|u|) e^{-iu(z-t)} du.

    ``x`` is a point or an array of points (trailing dimension m when m > 1);
    ``t`` broadcasts against it.  The index sum is truncated at degree N.
    """
    if config.n != 1:
        raise DomainError("multiplier kernel is implemented for n = 1")
    if not H.compact:
        raise DomainError("multiplier kernel requires a compactly supported H")
    x = np.asarray(x, dtype=float)
    shape = x.shape if config.m == 1 else x.shape[:-1]
    tau = np.broadcast_to(np.asarray(t, dtype=float) - float(z), shape).ravel()
    if max_width is None:
        A, B = H.support
        nu_max = _nu_tilde(config, N)[1][-1]
        max_width = min(0.05, (B - A) / (8.0 * nu_max), 1.0 / (1.0 + float(np.max(np.abs(tau), initial=0.0))))
    u, w = kernel_u_rule(H, config, N, max_width, nodes)
    P = kernel_profile(H, config, y, x, N, u)
    val = np.sum(w[:, None] * P * np.cos(np.outer(u, tau)), axis=0) / math.pi
    return val.reshape(shape)
