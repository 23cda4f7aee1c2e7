"""Composite Gauss-Legendre quadrature on the half line and for dt/sqrt(t) integrals."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .specfun import NumericError

__all__ = [
    "HalfLineScheme",
    "TailWarning",
    "gauss_legendre",
    "integrate_halfline",
    "integrate_time_subordination",
    "interval_rule",
    "subordination_scheme",
]

DEFAULT_EDGES = (0.0, 1e-4, 1e-2, 0.1, 1.0, 4.0, 16.0, 64.0)


class TailWarning(RuntimeWarning):
    """The neglected tail of an integral may exceed the requested tolerance."""


@lru_cache(maxsize=64)
def _gl(npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(npts: int):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    if not 1 <= npts <= 512:
        raise ValueError("npts must lie in [1, 512]")
    if npts == 1:
        return np.zeros(1), np.full(1, 2.0)
    return _gl(int(npts))


def interval_rule(edges, npts):
    """Composite Gauss rule on consecutive panels [edges[i], edges[i+1]]."""
    edges = np.asarray(edges, dtype=float)
    g, w = gauss_legendre(npts)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (g + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


@dataclass(frozen=True)
class HalfLineScheme:
    """Panelled Gauss rule on (0, tail_cut].

    With ``sqrt_first_panel`` the first panel [0, e1] is mapped through
    t = s^2, which turns an integrable t^(-1/2) endpoint singularity into a
    smooth integrand.
    """

    panel_edges: tuple = DEFAULT_EDGES
    nodes_per_panel: int = 32
    tail_cut: float = 64.0
    sqrt_first_panel: bool = False

    def __post_init__(self):
        e = np.asarray(self.panel_edges, dtype=float)
        if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0) or e[0] < 0:
            raise ValueError("panel_edges must be increasing, non-negative, with at least two entries")
        if self.nodes_per_panel < 2:
            raise ValueError("nodes_per_panel must be at least 2")
        if self.tail_cut < e[-1]:
            raise ValueError("tail_cut must not precede the last panel edge")

    def edges(self):
        e = list(map(float, self.panel_edges))
        if self.tail_cut > e[-1]:
            e.append(float(self.tail_cut))
        return np.asarray(e)

    def refined(self, factor=2):
        return replace(self, nodes_per_panel=self.nodes_per_panel * factor)

    def rule(self, npts=None):
        """Nodes and weights for integrals of f(x) dx."""
        npts = npts or self.nodes_per_panel
        e = self.edges()
        if not self.sqrt_first_panel:
            return interval_rule(e, npts)
        s, ws = interval_rule([0.0, np.sqrt(e[1])], npts)
        x, w = interval_rule(e[1:], npts)
        return np.concatenate([s * s, x]), np.concatenate([2.0 * s * ws, w])

    def rule_inv_sqrt(self, npts=None):
        """Nodes and weights for integrals of g(t) dt / sqrt(t)."""
        npts = npts or self.nodes_per_panel
        e = self.edges()
        if self.sqrt_first_panel:
            s, ws = interval_rule([0.0, np.sqrt(e[1])], npts)
            t, w = interval_rule(e[1:], npts)
            return np.concatenate([s * s, t]), np.concatenate([2.0 * ws, w / np.sqrt(t)])
        t, w = interval_rule(e, npts)
        return t, w / np.sqrt(t)


def _checked(vals, nodes):
    vals = np.asarray(vals)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.flatnonzero(bad.reshape(bad.shape[0], -1).any(axis=1))[0]
        raise NumericError(f"non-finite integrand at node {nodes[idx]!r}")
    return vals


def _apply(f, nodes, weights):
    vals = _checked(f(nodes), nodes)
    return np.tensordot(weights, vals, axes=(0, 0))


def integrate_halfline(f, scheme: HalfLineScheme = HalfLineScheme()):
    """Integrate a vectorised f over (0, tail_cut].

    Returns (value, error_estimate); the value uses the doubled node count and
    the error estimate is its distance to the base resolution.
    """
    x1, w1 = scheme.rule()
    x2, w2 = scheme.rule(2 * scheme.nodes_per_panel)
    coarse = _apply(f, x1, w1)
    fine = _apply(f, x2, w2)
    return fine, np.abs(fine - coarse)


def subordination_scheme(t_min=1e-9, t_max=64.0, ratio=2.0, nodes_per_panel=16):
    """Geometric time panels with a sqrt-substituted first panel [0, t_min]."""
    npan = int(np.ceil(np.log(t_max / t_min) / np.log(ratio)))
    edges = t_min * ratio ** np.arange(npan + 1)
    edges[-1] = max(edges[-1], t_max)
    return HalfLineScheme(
        panel_edges=tuple(np.concatenate([[0.0], edges])),
        nodes_per_panel=nodes_per_panel,
        tail_cut=float(edges[-1]),
        sqrt_first_panel=True,
    )


def integrate_time_subordination(g, scheme: HalfLineScheme | None = None, tail_tol=1e-10):
    """Integrate g(t) dt / sqrt(t) over (0, inf); returns (value, error_estimate).

    The neglected tail beyond the last edge T is estimated by |g(T)| sqrt(T);
    a TailWarning is issued when it exceeds ``tail_tol`` relative to the value.
    """
    scheme = scheme or subordination_scheme()
    t1, w1 = scheme.rule_inv_sqrt()
    t2, w2 = scheme.rule_inv_sqrt(2 * scheme.nodes_per_panel)
    coarse = _apply(g, t1, w1)
    fine = _apply(g, t2, w2)
    T = scheme.edges()[-1]
    tail = np.abs(np.asarray(g(np.array([T]))))[0] * np.sqrt(T)
    if np.any(tail > tail_tol * np.maximum(np.abs(fine), 1e-300)):
        warnings.warn(f"subordination tail beyond t={T} may be significant", TailWarning, stacklevel=2)
    return fine, np.abs(fine - coarse) + tail
