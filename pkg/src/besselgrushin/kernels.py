"""Mehler heat kernels, ladder kernels G_t, G_t^beta and subordinated Riesz kernels.

Notation: a(t) = 2 e^{-2t} / (1 - e^{-4t}) = 1 / sinh(2t) and
b(t) = coth(2t) / 2.  The Hermite kernel is

    W_t(u, v) = sqrt(a / 2 pi) exp(-[(u - v)^2 coth t + (u + v)^2 tanh t] / 4),

and the Laguerre kernel is W_t^beta = W_t * rho_beta(a u v) with
rho_nu(z) = sqrt(2 pi z) e^{-z} I_nu(z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .laguerre_basis import ProblemConfig
from .quadrature import integrate_time_subordination, subordination_scheme
from .reports import BoundReport, log_ratio_sup
from .specfun import bessel_i_scaled

__all__ = [
    "DiagonalError",
    "KernelCheckConfig",
    "TimeFactors",
    "g_kernel_hermite",
    "g_kernel_laguerre",
    "hermite_heat_kernel",
    "laguerre_heat_kernel",
    "lemma_g_reports",
    "lemma_w_reports",
    "multi_heat_kernel_scaled",
    "regime",
    "rho",
    "riesz_kernel_hermite",
    "riesz_kernel_laguerre",
    "time_factors",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)


class DiagonalError(ValueError):
    """Kernel requested too close to the diagonal."""


@dataclass(frozen=True)
class TimeFactors:
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def one_minus_2b(self):
        return -2.0 / np.expm1(4.0 * self.t)


def time_factors(t) -> TimeFactors:
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    with np.errstate(over="ignore"):
        a = 1.0 / np.sinh(2.0 * t)
    b = 0.5 / np.tanh(2.0 * t)
    return TimeFactors(t, a, b)


def regime(t, u, v):
    """True where t lies in A_1(u, v), i.e. a(t) u v <= 1."""
    return time_factors(t).a * u * v <= 1.0


def _log_hermite(t, u, v):
    th = np.tanh(t)
    with np.errstate(over="ignore", divide="ignore"):
        a = 1.0 / np.sinh(2.0 * t)
        return 0.5 * np.log(a / (2.0 * np.pi)) - 0.25 * ((u - v) ** 2 / th + (u + v) ** 2 * th)


def hermite_heat_kernel(t, u, v):
    """Mehler kernel of exp(-t(-d^2/du^2 + u^2)) on the line."""
    t, u, v = np.broadcast_arrays(*(np.asarray(q, dtype=float) for q in (t, u, v)))
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    with np.errstate(under="ignore"):
        return np.exp(_log_hermite(t, u, v))


def rho(nu: float, z):
    """sqrt(2 pi z) e^{-z} I_nu(z), extended by 0 at z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.zeros(z.shape)
    pos = z > 0
    if pos.any():
        zp = z[pos]
        out[pos] = np.sqrt(2.0 * np.pi * zp) * bessel_i_scaled(nu, zp)
    return out


def _rho_minus_one(nu, z):
    return rho(nu, z) - 1.0


def laguerre_heat_kernel(t, beta: float, u, v):
    """Mehler kernel of exp(-t L_beta) on (0, inf), in factored scaled-Bessel form."""
    t, u, v = np.broadcast_arrays(*(np.asarray(q, dtype=float) for q in (t, u, v)))
    tf = time_factors(t)
    return hermite_heat_kernel(t, u, v) * rho(beta, tf.a * u * v)


def multi_heat_kernel_scaled(t, config: ProblemConfig, a: float, x, y):
    """a^{m/2} prod_j W_{ta}^{alpha_j}(sqrt(a) x_j, sqrt(a) y_j); points carry a trailing axis m."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ra = math.sqrt(a)
    out = a ** (config.m / 2.0)
    for j, aj in enumerate(config.alpha):
        out = out * laguerre_heat_kernel(np.asarray(t) * a, aj, ra * x[..., j], ra * y[..., j])
    return out


def _g_factor(t, u, v):
    # a v + (1 - 2b) u written without cancellation
    tf = time_factors(t)
    return tf.a * (v - u) + (1.0 - np.tanh(t)) * u


def g_kernel_hermite(t, u, v):
    """G_t = (a v + (1 - 2b) u) W_t = (d/du + u) W_t."""
    t, u, v = np.broadcast_arrays(*(np.asarray(q, dtype=float) for q in (t, u, v)))
    return _g_factor(t, u, v) * hermite_heat_kernel(t, u, v)


def g_kernel_laguerre(t, beta: float, u, v):
    """G_t^beta = (d/du + u - (beta + 1/2)/u) W_t^beta in closed form.

    Equals W_t [(1 - 2b) u rho_beta + a v rho_{beta+1}] evaluated at z = a u v.
    """
    t, u, v = np.broadcast_arrays(*(np.asarray(q, dtype=float) for q in (t, u, v)))
    tf = time_factors(t)
    z = tf.a * u * v
    w = hermite_heat_kernel(t, u, v)
    return w * (tf.one_minus_2b * u * rho(beta, z) + tf.a * v * rho(beta + 1.0, z))


def g_difference(t, beta, u, v):
    """G_t^beta - G_t without forming the two terms separately."""
    t, u, v = np.broadcast_arrays(*(np.asarray(q, dtype=float) for q in (t, u, v)))
    tf = time_factors(t)
    z = tf.a * u * v
    w = hermite_heat_kernel(t, u, v)
    return w * (tf.one_minus_2b * u * _rho_minus_one(beta, z) + tf.a * v * _rho_minus_one(beta + 1.0, z))


# ---------------------------------------------------------------- Riesz kernels


def _pairs(x, y, m):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if m == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
        y = y[..., None]
    x, y = np.broadcast_arrays(x, y)
    return x.reshape(-1, m), y.reshape(-1, m), x.shape[:-1]


def _check_floor(x, y, floor):
    d = np.linalg.norm(x - y, axis=-1)
    lim = floor * (1.0 + np.linalg.norm(x, axis=-1))
    if np.any(d < lim):
        raise DiagonalError(f"|x - y| = {d.min():.3g} is below the diagonal floor")
    return d


def _time_scheme(dist_scaled, decay_rate, nodes=16):
    t_min = min(1e-4, float(np.min(dist_scaled)) ** 2 / 400.0)
    t_max = 45.0 / decay_rate + 1.0
    return subordination_scheme(t_min=t_min, t_max=t_max, ratio=2.0, nodes_per_panel=nodes)


def riesz_kernel_laguerre(config: ProblemConfig, a: float, x, y, j: int = 0, floor: float = 1e-6, nodes: int = 16,
                          return_error: bool = False):
    """Kernel of A_{alpha_j}(a) L_alpha(a)^{-1/2}:

        (1/sqrt(pi)) int_0^inf A_{alpha_j}(a) W_t^alpha(x, y; a) dt / sqrt(t).

    The integrand is a^{(m+1)/2} G_{ta}^{alpha_j} prod_{i != j} W_{ta}^{alpha_i}
    at (sqrt(a) x, sqrt(a) y).  The time panels are laid out in the variable
    t a, so the a-dependence is carried exactly by the scaling law.
    """
    m = config.m
    xs, ys, shape = _pairs(x, y, m)
    _check_floor(xs, ys, floor)
    ra = math.sqrt(a)
    X, Y = ra * xs, ra * ys
    rate = 2.0 * (config.s_alpha + m + 1.0)
    sch = _time_scheme(np.linalg.norm(X - Y, axis=-1), rate, nodes)
    sch = type(sch)(
        panel_edges=tuple(np.asarray(sch.panel_edges) / a),
        nodes_per_panel=sch.nodes_per_panel,
        tail_cut=sch.tail_cut / a,
        sqrt_first_panel=True,
    )

    def integrand(t):
        s = (np.asarray(t) * a)[:, None]
        val = g_kernel_laguerre(s, config.alpha[j], X[None, :, j], Y[None, :, j])
        for i in range(m):
            if i != j:
                val = val * laguerre_heat_kernel(s, config.alpha[i], X[None, :, i], Y[None, :, i])
        return a ** ((m + 1) / 2.0) * val

    val, err = integrate_time_subordination(integrand, sch)
    val = val / math.sqrt(math.pi)
    if return_error:
        return val.reshape(shape), (err / math.sqrt(math.pi)).reshape(shape)
    return val.reshape(shape)


def riesz_kernel_hermite(m: int, a: float, x, y, floor: float = 1e-6, nodes: int = 16):
    """Kernel of (d/dx_1 + |a| x_1) H(a)^{-1/2}, H(a) = -Laplacian + a^2 |x|^2 on R^m."""
    if a == 0:
        raise ValueError("a must be non-zero")
    aa = abs(a)
    xs, ys, shape = _pairs(x, y, m)
    _check_floor(xs, ys, floor)
    ra = math.sqrt(aa)
    X, Y = ra * xs, ra * ys
    sch = _time_scheme(np.linalg.norm(X - Y, axis=-1), float(m + 2), nodes)
    sch = type(sch)(
        panel_edges=tuple(np.asarray(sch.panel_edges) / aa),
        nodes_per_panel=sch.nodes_per_panel,
        tail_cut=sch.tail_cut / aa,
        sqrt_first_panel=True,
    )

    def integrand(t):
        s = (np.asarray(t) * aa)[:, None]
        val = g_kernel_hermite(s, X[None, :, 0], Y[None, :, 0])
        for i in range(1, m):
            val = val * hermite_heat_kernel(s, X[None, :, i], Y[None, :, i])
        return aa ** ((m + 1) / 2.0) * val

    val, _ = integrate_time_subordination(integrand, sch)
    return (val / math.sqrt(math.pi)).reshape(shape)


# ------------------------------------------------------- Lemma W / G harness


@dataclass(frozen=True)
class KernelCheckConfig:
    epsilon: float = 0.25
    c: float = 1.0 / 16.0
    beta: float = 1.0
    n_base: int = 50
    t_range: tuple = (1e-3, 10.0)
    uv_range: tuple = (1e-2, 20.0)
    fd_scale: float = 1e-5


def sample_grid(cfg: KernelCheckConfig, level: int):
    """Nested log grids: level l has (n_base - 1) 2^l + 1 points per axis."""
    n = (cfg.n_base - 1) * 2**level + 1
    t = np.geomspace(*cfg.t_range, n)
    u = np.geomspace(*cfg.uv_range, n)
    return t[:, None, None], u[None, :, None], u[None, None, :]


def _fd_step(u, scale):
    return scale * np.maximum(1.0, np.abs(u))


def _euler(f, u, v, h):
    """(u d/du + v d/dv) f by a central difference along the ray lambda (u, v)."""
    return (f((1 + h) * u, (1 + h) * v) - f((1 - h) * u, (1 - h) * v)) / (2 * h)


def _near(u, v):
    return (u / 2 < v) & (v < 2 * u)


def _w_parts(cfg: KernelCheckConfig, level: int):
    t, u, v = sample_grid(cfg, level)
    eps, c, beta = cfg.epsilon, cfg.c, cfg.beta
    tf = time_factors(t)
    z = tf.a * u * v
    A1 = z <= 1.0
    w = hermite_heat_kernel(t, u, v)
    rb = rho(beta, z)
    rb1 = rho(beta + 1.0, z)
    gauss = -c * (u - v) ** 2 / t - 0.5 * np.log(t)
    euler_log_w = -2.0 * tf.b * (u - v) ** 2 - 2.0 * u * v * np.tanh(t)
    two_z_rho_prime = 2.0 * ((beta + 0.5) * rb + z * (rb1 - rb))
    with np.errstate(divide="ignore"):
        logz = np.log(z)
    out = {}
    out[("a", "W^beta<=C W")] = (rb, np.zeros_like(z), None)
    out[("a", "W<=C gauss")] = (w, gauss, None)
    diff = w * (rb - 1.0)
    out[("b", "A1")] = (diff, -(1 - eps) * t + gauss, A1)
    out[("b", "B1")] = (diff, -(1 - eps) * t + gauss - logz, ~A1)
    out[("c", "l=1")] = (w * (tf.a * v - 2 * tf.b * u), -c * (u - v) ** 2 / t - np.log(t), None)
    out[("c", "l=2")] = (w * ((tf.a * v - 2 * tf.b * u) ** 2 - 2 * tf.b), -c * (u - v) ** 2 / t - 1.5 * np.log(t), None)
    out[("d", "all")] = (w * euler_log_w, gauss, None)
    e_lhs = w * (rb * euler_log_w + two_z_rho_prime)
    e_rhs = gauss + np.log1p(np.exp((1 + eps) * t) * _near(u, v))
    out[("e", "all")] = (e_lhs, e_rhs, None)
    f_lhs = (rb - 1.0) * w * euler_log_w + w * two_z_rho_prime
    f_rhs = -(1 - eps) * t - 0.25 * logz + gauss
    out[("f", "A1")] = (f_lhs, f_rhs, A1)
    out[("f", "B1")] = (f_lhs, f_rhs, ~A1)
    return out


def _g_parts(cfg: KernelCheckConfig, level: int):
    t, u, v = sample_grid(cfg, level)
    eps, c, beta = cfg.epsilon, cfg.c, cfg.beta
    tf = time_factors(t)
    A1 = tf.a * u * v <= 1.0
    near = _near(u, v)
    lt = np.log(t)
    q = -c * (u - v) ** 2 / t
    g = g_kernel_hermite(t, u, v)
    dg = g_difference(t, beta, u, v)

    def dfun(uu, vv):
        return g_difference(t, beta, uu, vv)

    h = cfg.fd_scale
    hu = _fd_step(u, h) * np.ones_like(v)
    du = (dfun(u + hu, v) - dfun(u - hu, v)) / (2 * hu)
    h2 = 10 * hu
    d2u = (dfun(u + h2, v) - 2 * dg + dfun(u - h2, v)) / h2**2
    eul = _euler(dfun, u, v, h)
    out = {}
    out[("a", "all")] = (g, -(3 - eps) * t + q - lt, None)
    out[("b", "near")] = (dg, -(1.5 - eps) * t - 0.5 * np.log(u) + q - 0.75 * lt, near)
    out[("b", "far")] = (dg, -(3 - eps) * t + np.log(np.maximum(u, v)) + q - 1.5 * lt, ~near)
    euler_log_w = -2.0 * tf.b * (u - v) ** 2 - 2.0 * u * v * np.tanh(t)
    out[("c", "all")] = (g * (1.0 + euler_log_w), q - lt, None)
    out[("d", "A1")] = (du, -c * (u**2 + v**2) / t - 1.5 * lt, A1)
    weight = u**0.25 / v**0.75 + v**0.25 / u**0.75
    out[("e", "B1")] = (eul, np.log(weight) + q - 0.75 * lt, ~A1)
    out[("f", "far")] = (eul, -c * np.maximum(u, v) ** 2 / t - lt, ~near)
    out[("g", "A1")] = (u * d2u, -c * (u**2 + v**2) / t - 1.5 * lt, A1)
    out[("g", "B1")] = (u * d2u, q - 1.5 * lt, ~A1)
    return out


W_PARTS = ("a", "b", "c", "d", "e", "f")
G_PARTS = ("a", "b", "c", "d", "e", "f", "g")


def _reports(kind, builder, parts, cfg, levels):
    sups = {}
    for level in levels:
        for key, (lhs, log_rhs, mask) in builder(cfg, level).items():
            if key[0] in parts:
                sups.setdefault(key, []).append(log_ratio_sup(lhs, log_rhs, mask))
    reports = []
    for (part, reg), vals in sups.items():
        reports.append(
            BoundReport(
                name=f"lemma_{kind}({part}) [{reg}]",
                params={
                    "part": part,
                    "regime": reg,
                    "epsilon": cfg.epsilon,
                    "c": cfg.c,
                    "beta": cfg.beta,
                    "grid_level": levels[-1],
                },
                sample=f"log grids t in {cfg.t_range}, u,v in {cfg.uv_range}, {cfg.n_base}^3 base points",
                values=tuple(vals),
            )
        )
    return reports


def lemma_w_reports(cfg: KernelCheckConfig = KernelCheckConfig(), parts=W_PARTS, levels=(0, 1)):
    """Empirical constants for the Laguerre heat-kernel bounds (closed-form derivatives)."""
    return _reports("W", _w_parts, parts, cfg, levels)


def lemma_g_reports(cfg: KernelCheckConfig = KernelCheckConfig(), parts=G_PARTS, levels=(0, 1)):
    """Empirical constants for the ladder-kernel bounds (finite-difference derivatives)."""
    return _reports("G", _g_parts, parts, cfg, levels)
