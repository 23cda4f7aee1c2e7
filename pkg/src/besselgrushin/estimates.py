"""Numerical checks of Plancherel identities, weighted kernel bounds and auxiliary operators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .kernels import laguerre_heat_kernel, multi_heat_kernel_scaled, riesz_kernel_laguerre
from .laguerre_basis import ConfigError, ProblemConfig, basis_matrix, basis_scheme, enumerate_indices
from .operators import (
    DomainError,
    Grid,
    GridFunction,
    SpectralSymbol,
    _spectral_apply,
    _index_tensor,
    fourier2,
    kernel_profile,
    kernel_u_rule,
)
from .quadrature import HalfLineScheme, interval_rule
from .reports import BoundReport
from .specfun import NumericError, laguerre_fn_all

__all__ = [
    "SobolevSpec",
    "WeightSpec",
    "ball_volume",
    "basis_bound_report",
    "cz_bound_report",
    "hardy_apply",
    "heat_box_mass",
    "heat_l2_gaussian_report",
    "heat_offball_report",
    "heat_l2_norm_sq",
    "kernel_l2_direct",
    "kernel_l2_spectral",
    "lemma_p5_ratio",
    "local_sobolev_norm",
    "plancherel_check",
    "weighted_kernel_norm_sq",
    "weighted_plancherel_report",
    "weighted_rhs",
]


@dataclass(frozen=True)
class WeightSpec:
    gamma: float
    R: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not 0 <= self.gamma < self.n / 2:
            raise DomainError(f"gamma = {self.gamma} must lie in [0, n/2) = [0, {self.n / 2})")
        if not self.R > 0:
            raise DomainError("R must be positive")

    def weight(self, x, y):
        """w_R((x, t), (y, z)) = min{R, 1/|y|} |x|."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        ny = np.linalg.norm(y, axis=-1) if y.ndim > 1 else np.abs(y)
        nx = np.linalg.norm(x, axis=-1) if x.ndim > 1 else np.abs(x)
        return np.minimum(self.R, 1.0 / ny) * nx


def ball_volume(x, R: float, config: ProblemConfig):
    """Volume surrogate R^{m+n} max{|x|, R}^n of a metric ball of radius R at (x, t)."""
    if not R > 0:
        raise ValueError("R must be positive")
    nx = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    return R ** (config.m + config.n) * max(nx, R) ** config.n


# ---------------------------------------------------------- Plancherel


def _require_n1(config):
    if config.n != 1:
        raise DomainError("this check is implemented for n = 1")


def kernel_l2_spectral(H: SpectralSymbol, config: ProblemConfig, y, N: int, nodes: int = 32, panels: int = 32):
    """(1/pi) sum_{|k| <= N} int_0^inf |H(nu_k u)|^2 Phi_k(y; u)^2 du, integrated in omega = nu_k u."""
    _require_n1(config)
    if not H.compact:
        raise DomainError("H must have compact support")
    A, B = H.support
    om, w = interval_rule(np.linspace(A, B, panels + 1), nodes)
    h2 = np.abs(H(om)) ** 2
    y = np.atleast_1d(np.asarray(y, dtype=float))
    total = 0.0
    for k in enumerate_indices(config.m, N):
        nu = 2.0 * (2 * sum(k) + config.s_alpha + config.m)
        u = om / nu
        phi = u ** (config.m / 4.0)
        for j in range(config.m):
            phi = phi * laguerre_fn_all(k[j], config.alpha[j], np.sqrt(u) * y[j])[k[j]]
        total += np.sum(w * h2 * phi**2) / nu
    return float(total / math.pi)


def _kernel_x_rule(config, N, u_min, nodes):
    X = (math.sqrt(4 * N + 2 * max(config.alpha) + 2) + 5.0) / math.sqrt(u_min)
    edges = np.concatenate([[0.0, 1e-2, 0.1, 0.5], np.arange(1.0, X + 1.0, 1.0)])
    return interval_rule(edges, nodes)


def kernel_l2_direct(H: SpectralSymbol, config: ProblemConfig, y, N: int, T: float, nodes: int = 16,
                     weight: Callable | None = None, mask: Callable | None = None):
    """int_0^inf dx int_R dtau |K_H(y, 0; x, tau)|^2 by direct quadrature (m = 1).

    The kernel is evaluated on Gauss nodes in x and on a uniform tau-grid on
    [0, T] (even in tau) with spacing below the band limit; the u-integral
    defining it uses panels of width at most 20/T.  ``weight(x)`` multiplies
    |K|^2 and ``mask(x, tau)`` selects a sub-region.
    """
    _require_n1(config)
    if config.m != 1:
        raise DomainError("direct (x, t) quadrature is implemented for m = 1")
    A, B = H.support
    nu = 2.0 * (2 * np.arange(N + 1) + config.s_alpha + 1)
    u_min, u_max = A / nu[-1], B / nu[0]
    x, wx = _kernel_x_rule(config, N, u_min, nodes)
    if weight is not None:
        wx = wx * weight(x)
    u, wu = kernel_u_rule(H, config, N, min(0.05, 20.0 / T), nodes)
    P = kernel_profile(H, config, y, x, N, u)
    if not np.any(P.imag):
        P = P.real
    dt = math.pi / (2.0 * u_max)
    tau = np.arange(0.0, T, dt)
    tw = np.full(tau.size, 2.0 * dt)
    tw[0] = dt
    WP = (wu[:, None] * P).T / math.pi
    total = 0.0
    for s in range(0, tau.size, 512):
        tt = tau[s:s + 512]
        K = WP @ np.cos(np.outer(u, tt))
        dens = np.abs(K) ** 2 * tw[None, s:s + 512]
        if mask is not None:
            dens = dens * mask(x[:, None], tt[None, :])
        total += float(np.sum(wx @ dens))
    return total


def _base_T(H, config, N):
    A, B = H.support
    nu_max = 2.0 * (2 * N + config.s_alpha + config.m)
    return 11.0 * nu_max / (B - A)


def plancherel_check(H: SpectralSymbol, y, config: ProblemConfig, N: int = 16, levels=(0, 1, 2),
                     tol: float = 1e-3) -> BoundReport:
    """Relative gap between the two sides of the kernel L^2 identity at each refinement level."""
    _require_n1(config)
    if not H.compact:
        raise DomainError("H must have compact support")
    rhs = kernel_l2_spectral(H, config, y, N)
    T0 = _base_T(H, config, N)
    gaps, lhs_vals = [], []
    for lv in levels:
        lhs = kernel_l2_direct(H, config, y, N, T0 * 2**lv, nodes=16 + 2 * lv)
        lhs_vals.append(lhs)
        gaps.append(0.0 if lhs == rhs else abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    return BoundReport(
        name="plancherel_identity",
        params={"part": H.name, "regime": f"y={float(np.atleast_1d(y)[0]):g}", "symbol": H.name, **H.params,
                "y": float(np.atleast_1d(y)[0]), "N": N, "m": config.m,
                "alpha": list(config.alpha), "grid_level": levels[-1]},
        sample=f"tau-cutoffs {[T0 * 2**lv for lv in levels]}",
        values=tuple(gaps),
        passed=bool(gaps[-1] < tol),
        extra={"lhs": lhs_vals, "rhs": rhs},
    )


# ---------------------------------------------------- weighted Plancherel


def _weight_matrix(config: ProblemConfig, N: int, gamma: float, nodes: int = 32):
    """M_{kk'} = int |s|^{2 gamma} Phi_k(s) Phi_k'(s) ds over |k|, |k'| <= N (unit scale)."""
    idx = np.asarray(enumerate_indices(config.m, N), dtype=int)
    s, w = basis_scheme(N, max(config.alpha), 1.0, nodes=nodes).rule()
    mats = [laguerre_fn_all(N, config.alpha[j], s) for j in range(config.m)]
    if config.m == 1:
        Bm = mats[0][idx[:, 0]]
        return (Bm * (w * s ** (2 * gamma))) @ Bm.T
    s1, s2 = np.meshgrid(s, s, indexing="ij")
    ww = np.outer(w, w) * (s1**2 + s2**2) ** gamma
    out = np.zeros((len(idx), len(idx)))
    for p, k in enumerate(idx):
        fk = np.outer(mats[0][k[0]], mats[1][k[1]]) * ww
        left = mats[0][idx[:, 0]] @ fk  # (K, n)
        out[p] = np.einsum("kn,kn->k", left, mats[1][idx[:, 1]])
    return out


def weighted_kernel_norm_sq(H: SpectralSymbol, gamma: float, y, config: ProblemConfig, N: int,
                            nodes: int = 16, M=None):
    """int int |x|^{2 gamma} |K_H(y, z; x, t)|^2 dx dt via Plancherel in t and the scaling of Phi_k.

    Equals (1/pi) int_0^inf u^{-gamma} v(u)^T M v(u)^* du with
    v_k(u) = H(nu_k u) Phi_k(y; u) and M the unit-scale weighted Gram matrix.
    """
    _require_n1(config)
    M = _weight_matrix(config, N, gamma) if M is None else M
    u_max = H.support[1] / (2.0 * (config.s_alpha + config.m))
    u, wu = kernel_u_rule(H, config, N, u_max / 64.0, nodes)
    idx = np.asarray(enumerate_indices(config.m, N), dtype=int)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    V = np.ones((len(idx), u.size))
    for j in range(config.m):
        V = V * basis_matrix(N, config.alpha[j], u, y[j])[idx[:, j]]
    lam = 2.0 * (2 * idx.sum(axis=1)[:, None] + config.s_alpha + config.m) * u[None, :]
    V = H(lam) * V
    quad = np.real(np.einsum("ku,kl,lu->u", V, M, np.conj(V)))
    return float(np.sum(wu * u ** (-gamma) * quad) / math.pi)


def weighted_rhs(H: SpectralSymbol, gamma: float, y, config: ProblemConfig, nodes: int = 32, panels: int = 32):
    """int |H(w)|^2 w^{(n+m)/2} min{w^{n/2 - gamma}, |y|^{2 gamma - n}} dw / w."""
    A, B = H.support
    n, m = config.n, config.m
    om, w = interval_rule(np.linspace(A, B, panels + 1), nodes)
    ny = float(np.linalg.norm(np.atleast_1d(y)))
    mn = np.minimum(om ** (n / 2 - gamma), ny ** (2 * gamma - n))
    return float(np.sum(w * np.abs(H(om)) ** 2 * om ** ((n + m) / 2) * mn / om))


def weighted_plancherel_report(H: SpectralSymbol, gamma: float, y_samples, config: ProblemConfig,
                               N_levels=(24, 48), R: float | None = None):
    """sup over y of LHS/RHS for the weighted kernel bound; refinement doubles the index cutoff.

    Returns a list with the main report and, when R is given (supp H in
    [R^2, 4R^2]), the scale-normalised form built from ball_volume and w_R.
    """
    _require_n1(config)
    WeightSpec(gamma, 1.0, config.n)
    if not H.compact:
        raise DomainError("H must have compact support")
    ys = [np.atleast_1d(np.asarray(y, dtype=float)) for y in y_samples]
    sups, sups81, per_y = [], [], []
    for N in N_levels:
        M = _weight_matrix(config, N, gamma)
        lhs = np.array([weighted_kernel_norm_sq(H, gamma, y, config, N, M=M) for y in ys])
        rhs = np.array([weighted_rhs(H, gamma, y, config) for y in ys])
        ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), 0.0)
        sups.append(float(ratio.max()))
        per_y = ratio.tolist()
        if R is not None:
            ws = WeightSpec(gamma, R, config.n)
            om, w = interval_rule(np.linspace(*H.support, 33), 32)
            dil = float(np.sum(w * np.abs(H(om)) ** 2)) / R**2  # ||H(R^2 .)||_2^2
            # |B(y, 1/R)| ||w_R^gamma K||^2 / ||H(R^2 .)||^2 with w_R = min{R, 1/|y|} |x|
            vals = [
                ball_volume(y, 1.0 / R, config) * float(ws.weight(1.0, y[None, :])[0]) ** (2 * gamma) * l / dil
                for y, l in zip(ys, lhs)
            ]
            sups81.append(float(max(vals)) if dil > 0 else 0.0)
    params = {"part": f"gamma={gamma:g}", "regime": "" if R is None else f"R={R:g}", "symbol": H.name,
              **H.params, "gamma": gamma, "m": config.m, "alpha": list(config.alpha),
              "N_levels": list(N_levels)}
    if R is not None:
        params["R"] = R
    out = [BoundReport("weighted_plancherel", params, f"{len(ys)} y-samples", tuple(sups),
                       extra={"ratio_per_y": per_y})]
    if R is not None:
        out.append(BoundReport("weighted_plancherel_scaled", params, f"{len(ys)} y-samples", tuple(sups81)))
    return out


# ----------------------------------------------------------- heat bounds


def heat_l2_norm_sq(t: float, x, config: ProblemConfig, nodes: int = 16):
    """||W_t((x, y), .)||^2 = (1/pi) int_0^inf W_{2t}(x, x; u) du (Mehler closed form, all modes)."""
    _require_n1(config)
    lo, hi = 1e-7 / t, 60.0 / t
    npan = int(math.ceil(math.log2(hi / lo)))
    edges = np.concatenate([[0.0], lo * 2.0 ** np.arange(npan + 1)])
    u, w = HalfLineScheme(tuple(edges), nodes, float(edges[-1])).rule()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    vals = np.array([multi_heat_kernel_scaled(2 * t, config, float(a), x, x) for a in u]).ravel()
    return float(np.sum(w * vals) / math.pi)


def heat_l2_gaussian_report(t_samples, x_samples, config: ProblemConfig, levels=(0, 1)) -> BoundReport:
    """sup over (t, x) of ||W_t((x, y), .)||^2 |B((x, y), sqrt t)| (full-norm case r = 0)."""
    _require_n1(config)
    if config.m != 1:
        raise DomainError("heat report is implemented for m = 1")
    sups, table = [], []
    for lv in levels:
        table = [[heat_l2_norm_sq(t, x, config, 16 + 8 * lv) * ball_volume(x, math.sqrt(t), config)
                  for x in x_samples] for t in t_samples]
        sups.append(float(np.max(table)))
    return BoundReport(
        "heat_l2_gaussian[r=0]",
        {"m": config.m, "alpha": list(config.alpha), "t": list(map(float, t_samples)),
         "x": list(map(float, x_samples))},
        f"{len(t_samples)}x{len(x_samples)} (t, x) samples",
        tuple(sups),
        extra={"ratio": table},
    )


def heat_box_mass(t: float, x1: float, r: float, config: ProblemConfig, level: int = 0) -> float:
    """Mass of |W_t((x1, 0), .)|^2 over {|x - x1| <= r} x {|tau| <= r max(x1, r)} (m = n = 1).

    The kernel is K_H with H(w) = e^{-t w}; its index sum is taken in closed
    form, so each u-fibre is u^{1/2} W_{tu}^alpha(sqrt(u) x1, sqrt(u) x).
    """
    _require_n1(config)
    if config.m != 1:
        raise DomainError("heat box mass is implemented for m = 1")
    T = r * max(x1, r)
    if r <= 0:
        return 0.0
    nodes = 16 + 4 * level
    x, wx = interval_rule(np.linspace(max(0.0, x1 - r), x1 + r, 9 + 8 * level), nodes)
    tau, wt = interval_rule(np.linspace(0.0, T, 9 + 8 * level), nodes)
    U = 40.0 / (t + x1 * x1)  # the fibre decays at least like e^{-(t + x1^2) u}
    width = min(2.0 / (1.0 + T), U / 64.0)
    u, wu = interval_rule(np.linspace(0.0, U, int(math.ceil(U / width)) + 1), nodes)
    beta = config.alpha[0]
    ru = np.sqrt(u)[:, None]
    g = ru * laguerre_heat_kernel(t * u[:, None], beta, ru * x1, ru * x[None, :])
    K = (np.cos(np.outer(tau, u)) * wu) @ g / math.pi  # (tau, x)
    return float(2.0 * wt @ (K**2) @ wx)


def heat_offball_report(t: float, r_samples, x1: float, config: ProblemConfig, c: float = 0.125,
                        levels=(0, 1)) -> BoundReport:
    """Off-region heat mass against e^{-c r^2/t}/|B(x1, sqrt t)|.

    The excluded region is the product surrogate
    {|x - x1| <= r} x {|tau| <= r max(x1, r)} of the metric ball; the
    off-region mass is the closed-form total minus the box mass.
    """
    _require_n1(config)
    vol = ball_volume(x1, math.sqrt(t), config)
    sups = []
    for lv in levels:
        total = heat_l2_norm_sq(t, x1, config, 16 + 8 * lv)
        vals = [max(total - heat_box_mass(t, x1, r, config, lv), 0.0) * vol * math.exp(c * r * r / t)
                for r in r_samples]
        sups.append(float(max(vals)))
    return BoundReport(f"heat_l2_gaussian[off-region surrogate,c={c}]",
                       {"part": "off-region", "regime": f"t={t:g}", "t": t, "x1": x1, "c": c,
                        "r": list(map(float, r_samples))},
                       f"{len(r_samples)} radii", tuple(sups))


# ------------------------------------------------------- basis envelopes


def basis_bound_report(config: ProblemConfig, K: int = 200, x_grid=None, lam: float = 1.0, xi: float = 0.125,
                       eps_values=(0.5, 1.0)) -> list:
    """Envelope checks for single Laguerre functions and the products Phi_k.

    (i)  |phi_k^beta(x)| (nu^{1/3} + |x^2 - nu|)^{1/4} and, beyond
         x^2 >= (1 + lam) nu, |phi_k^beta(x)| e^{xi x^2}; sup over k <= K then 2K.
    (ii) |Phi_k(x)| / nu_k^{m/2 - 1}; sup over |k| <= K then 2K.
    (iii) S(K) = sup_x sum_{|k|<=K} max{1,|x|}^eps nu'^{-eps-m/2} |Phi_k(x / sqrt(2 nu'))|^2
         with nu' = 2 s(k) + s(alpha) + m; values S(K), S(2K).
    """
    if config.m > 2:
        raise DomainError("basis bounds are implemented for m <= 2")
    reports = []
    beta = config.alpha[0]
    levels = (K // 2, K) if K >= 2 else (K, K)

    def grid_for(kk):
        if x_grid is not None:
            return np.asarray(x_grid, dtype=float)
        top = math.sqrt(2 * (4 * kk + 2 * beta + 2)) + 6
        return np.linspace(1e-3, top, 8000)

    env, gau = [], []
    for kk in levels:
        x = grid_for(kk)
        F = laguerre_fn_all(kk, beta, x)
        nu = 4.0 * np.arange(kk + 1)[:, None] + 2 * beta + 2
        env.append(float(np.max(np.abs(F) * (nu ** (1 / 3) + np.abs(x * x - nu)) ** 0.25)))
        far = x[None, :] ** 2 >= (1 + lam) * nu
        with np.errstate(over="ignore"):
            g = np.where(far, np.abs(F) * np.exp(xi * x * x), 0.0)
        gau.append(float(np.max(g)))
    reports.append(BoundReport("basis_envelope[oscillatory]", {"beta": beta, "K": K}, "k <= K/2, K", tuple(env)))
    reports.append(BoundReport("basis_envelope[gaussian]", {"beta": beta, "K": K, "lam": lam, "xi": xi},
                               "k <= K/2, K", tuple(gau)))

    # (ii) product functions against nu^{m/2-1}
    m = config.m
    prod = []
    for kk in levels:
        kmax = kk if m == 1 else min(kk, 60)
        x = grid_for(kmax)
        if m == 1:
            F = laguerre_fn_all(kmax, beta, x)
            nu = 2.0 * (2 * np.arange(kmax + 1) + config.s_alpha + 1)
            prod.append(float(np.max(np.max(np.abs(F), axis=1) / nu ** (m / 2 - 1))))
        else:
            xs = x[:: max(1, x.size // 1500)]
            F1 = np.max(np.abs(laguerre_fn_all(kmax, config.alpha[0], xs)), axis=1)
            F2 = np.max(np.abs(laguerre_fn_all(kmax, config.alpha[1], xs)), axis=1)
            idx = np.asarray(enumerate_indices(2, kmax))
            prod.append(float(np.max(F1[idx[:, 0]] * F2[idx[:, 1]])))
    reports.append(BoundReport("basis_envelope[product]", {"m": m, "alpha": list(config.alpha), "K": K},
                               "sup |Phi_k| nu^{1-m/2}", tuple(prod)))

    # (iii) weighted mode sums
    for eps in eps_values:
        sums = [_b8_sum(config, kk, eps) for kk in (K, 2 * K)]
        reports.append(BoundReport(f"basis_mode_sum[eps={eps}]", {"m": m, "alpha": list(config.alpha),
                                                                  "K": K, "epsilon": eps},
                                   "sup_x partial sums at K, 2K", tuple(sums), threshold=0.05))
    return reports


def _b8_sum(config, K, eps, npts=600):
    """sup over a radial x-grid of the weighted mode sum (m = 1: direct; m = 2: diagonal rays)."""
    m = config.m
    r = np.concatenate([np.linspace(1e-3, 4, 200), np.geomspace(4, 4e3, npts)])
    best = 0.0
    dirs = [(1.0,)] if m == 1 else [(math.cos(th), math.sin(th)) for th in np.linspace(0.05, math.pi / 2 - 0.05, 7)]
    for d in dirs:
        pts = r[:, None] * np.asarray(d)[None, :]
        idx = np.asarray(enumerate_indices(m, K), dtype=int)
        deg = idx.sum(axis=1)
        total = np.zeros(r.size)
        for dd in range(K + 1):
            scale = 1.0 / math.sqrt(2 * (2 * dd + config.s_alpha + m))
            sel = idx[deg == dd]
            vals = np.ones((len(sel), r.size))
            for j in range(m):
                F = laguerre_fn_all(dd, config.alpha[j], pts[:, j] * scale)
                vals *= F[sel[:, j]]
            total += np.sum(vals**2, axis=0) * (2 * dd + config.s_alpha + m) ** (-eps - m / 2)
        total *= np.maximum(1.0, r) ** eps
        best = max(best, float(total.max()))
    return best


# -------------------------------------------------------------- Lemma p5


def _freq_values(f: GridFunction):
    return fourier2(f) if f.domain == "space" else f


def lemma_p5_parts(gamma: float, f: GridFunction, N: int | None = None, u_cut: float = 0.5):
    """(|| |x|^gamma f ||, || G^{gamma/2} |D|^{-gamma} f ||) on the grid."""
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    F = _freq_values(f)
    g = f.grid
    near = np.abs(g.u) < u_cut
    peak = np.max(np.abs(F.values))
    if peak > 0 and np.max(np.abs(F.values[..., near])) > 1e-10 * peak:
        raise DomainError(f"partial transform does not vanish for |u| < {u_cut}")
    m = g.m
    mesh = np.meshgrid(*([g.x] * m), indexing="ij")
    r = np.sqrt(sum(c * c for c in mesh))
    lhs = f.with_values(F.values * (r ** gamma)[..., None], "frequency").norm()
    N = g.N if N is None else N
    _, deg = _index_tensor(m, N)
    nu = 2.0 * (2 * deg + f.config.s_alpha + m)

    def cmap(C, a):
        return C * (nu[..., None] * a) ** (gamma / 2) * a ** (-gamma)

    space = f if f.domain == "space" else fourier2(f, "inverse")
    out = _spectral_apply(space, N, cmap, f.config.alpha, 0.0, 1e-8)
    return lhs, out.norm()


def lemma_p5_ratio(gamma: float, tests: Sequence[Callable], config: ProblemConfig, grid=None,
                   levels=(0, 1), u_cut: float = 0.5) -> BoundReport:
    """max over the test set of || |x|^gamma f || / || G^{gamma/2} |D|^{-gamma} f ||.

    Each test is a callable ``build(config, grid) -> GridFunction``; grids are
    refined per level.
    """
    base = grid or Grid.default(config.m)
    sups, per = [], []
    for lv in levels:
        g = base.refined(lv)
        per = []
        for build in tests:
            f = build(config, g)
            lhs, rhs = lemma_p5_parts(gamma, f, u_cut=u_cut)
            per.append(lhs / rhs)
        sups.append(float(max(per)))
    return BoundReport("lemma_p5_ratio", {"part": f"gamma={gamma:g}", "gamma": gamma, "m": config.m, "alpha": list(config.alpha),
                                          "grid_level": levels[-1]},
                       f"{len(tests)} test functions", tuple(sups), extra={"ratios": per})


# -------------------------------------------------------------- CZ bounds


def cz_pairs(m: int, level: int = 0, x_range=(0.05, 20.0), rel_range=(2e-3, 2.0)):
    """Deterministic off-diagonal pairs: log grid in |x| and in the relative offset."""
    nx = (12 if m == 1 else 8) * 2**level
    nr = (10 if m == 1 else 6) * 2**level
    xs = np.geomspace(*x_range, nx)
    rel = np.geomspace(*rel_range, nr)
    P, Q = [], []
    if m == 1:
        for x in xs:
            for d in rel:
                for sgn in (1.0, -1.0):
                    y = x * (1 + sgn * d)
                    if y > 0:
                        P.append([x])
                        Q.append([y])
    else:
        angles = np.linspace(0.2, math.pi / 2 - 0.2, 2)
        dirs = np.linspace(0.3, 2 * math.pi + 0.3, 4, endpoint=False)
        for x in xs:
            for th in angles:
                p = x * np.array([math.cos(th), math.sin(th)])
                for d in rel:
                    for ph in dirs:
                        q = p + x * d * np.array([math.cos(ph), math.sin(ph)])
                        if np.all(q > 0):
                            P.append(p)
                            Q.append(q)
    return np.asarray(P), np.asarray(Q)


def _cz_values(config, a, P, Q, h_rel=1e-4):
    m = config.m
    d = np.linalg.norm(P - Q, axis=1)
    R = riesz_kernel_laguerre(config, a, P, Q)
    size = d**m * np.abs(R)
    grad = np.zeros(len(P))
    for j in range(m):
        for which in (0, 1):
            h = h_rel * d
            E = np.zeros_like(P)
            E[:, j] = h
            if which == 0:
                Rp = riesz_kernel_laguerre(config, a, P + E, Q)
                Rm = riesz_kernel_laguerre(config, a, P - E, Q)
            else:
                Rp = riesz_kernel_laguerre(config, a, P, Q + E)
                Rm = riesz_kernel_laguerre(config, a, P, Q - E)
            grad += ((Rp - Rm) / (2 * h)) ** 2
    return size, d ** (m + 1) * np.sqrt(grad)


def cz_bound_report(config: ProblemConfig, a_samples=(0.5, 1.0, 2.0, 4.0), levels=(0, 1)) -> list:
    """Size and gradient constants of the Riesz kernel for each a, plus their spread across a."""
    size_by_a, grad_by_a = {}, {}
    for a in a_samples:
        s_lv, g_lv = [], []
        for lv in levels:
            P, Q = cz_pairs(config.m, lv)
            s, g = _cz_values(config, a, P, Q)
            s_lv.append(float(s.max()))
            g_lv.append(float(g.max()))
        size_by_a[a], grad_by_a[a] = s_lv, g_lv
    out = []
    for name, tab in (("size", size_by_a), ("gradient", grad_by_a)):
        for a in a_samples:
            out.append(BoundReport(f"cz_{name}[a={a}]", {"part": name, "regime": f"a={a:g}", "a": a, "m": config.m, "alpha": list(config.alpha)},
                                   "log-spaced off-diagonal pairs", tuple(tab[a])))
        fin = [tab[a][-1] for a in a_samples]
        spread = (max(fin) - min(fin)) / max(fin)
        out.append(BoundReport(f"cz_{name}[a-uniformity]", {"a": list(a_samples), "m": config.m},
                               "relative spread of the finest constants over a", (spread,),
                               passed=bool(spread < 0.10)))
    return out


# -------------------------------------------------------- Sobolev norms


def default_bump(lam):
    """exp(1 - 1/(1 - (lam - 2)^2)) on (1, 3), zero elsewhere."""
    lam = np.asarray(lam, dtype=float)
    z = (lam - 2.0) ** 2
    out = np.zeros_like(lam)
    inside = z < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside]))
    return out


@dataclass(frozen=True)
class SobolevSpec:
    s: float = 1.0
    q: float = 2
    eta: Callable = default_bump
    eta_support: tuple = (1.0, 3.0)
    t_grid: tuple = tuple(np.geomspace(1e-3, 1e3, 121))
    npts: int = 4096
    window: float = 16.0

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError("s must be positive")
        if self.q != 2:
            raise DomainError("only q = 2 is implemented")
        lo, hi = self.eta_support
        if not 0 < lo < hi:
            raise DomainError("the cutoff must be supported in (0, inf)")


def sobolev_norm_w2(values, step: float, s: float) -> float:
    """(int (1 + xi^2)^s |g^(xi)|^2 dxi)^{1/2} for samples of g (unitary transform)."""
    n = len(values)
    G = np.fft.fft(values) * step / math.sqrt(2 * math.pi)
    xi = 2 * math.pi * np.fft.fftfreq(n, d=step)
    dxi = 2 * math.pi / (n * step)
    return float(math.sqrt(np.sum((1 + xi**2) ** s * np.abs(G) ** 2) * dxi))


def local_sobolev_norm(symbol, spec: SobolevSpec = SobolevSpec()) -> float:
    """max over the t-grid of || eta(.) M(t .) ||_{W_2^s}."""
    lam = np.linspace(0.0, spec.window, spec.npts, endpoint=False)
    step = lam[1] - lam[0]
    eta = np.asarray(spec.eta(lam), dtype=float)
    lo, hi = spec.eta_support
    inside = (lam > lo) & (lam < hi)
    if not np.any(eta != 0):
        raise DomainError("cutoff vanishes identically")
    best = 0.0
    for t in spec.t_grid:
        vals = np.zeros(lam.size, complex)
        mv = np.asarray(symbol(t * lam[inside]), dtype=complex)
        if not np.all(np.isfinite(mv)):
            raise NumericError(f"symbol is not finite on the support at t = {t}")
        vals[inside] = eta[inside] * mv
        best = max(best, sobolev_norm_w2(vals, step, spec.s))
    return best


# ---------------------------------------------------------- Hardy-type


def _graded_rule(lo, hi, breaks=(), nodes=20, grade=1e-14):
    pts = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    edges = []
    for a, b in zip(pts[:-1], pts[1:]):
        if a == 0.0:
            g = np.geomspace(max(grade, b * 1e-14), b, 40)
            edges.extend([0.0] + list(g[:-1]))
        else:
            edges.append(a)
    edges.append(hi)
    return interval_rule(np.asarray(edges), nodes)


def hardy_apply(variant: str, F: Callable, x, weights=None, p: float = 2.0, breaks=(), y_max: float = 1e3,
                c: float = 1.0, a: float = 1.0, nodes: int = 20):
    """Hardy-type operators evaluated on the grid x; returns (values, ||out||_p / ||F||_p).

    H0: (1/x) int_0^x F;  Hinf: int_x^inf F(y) dy / y (truncated at y_max);
    N: (1/x) int_{x/2}^{2x} (1 + sqrt(x/|x - y|)) F(y) dy;
    Wstar: sup_t |int_0^inf e^{-c a |x - y|^2 / t} F(y) dy| (m = 1) over a log t-grid.
    ``weights`` are quadrature weights on x for the L^p norms.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    if variant == "H0":
        for i, xi in enumerate(x):
            s, w = _graded_rule(0.0, xi, breaks, nodes)
            out[i] = np.sum(w * F(s)) / xi
    elif variant == "Hinf":
        for i, xi in enumerate(x):
            if xi >= y_max:
                out[i] = 0.0
                continue
            s, w = _graded_rule(xi, y_max, list(breaks) + [min(2 * xi, y_max)], nodes)
            out[i] = np.sum(w * F(s) / s)
    elif variant == "N":
        for i, xi in enumerate(x):
            r = math.sqrt(xi)
            # y = x - s^2 on [x/2, x] and y = x + s^2 on [x, 2x]
            s1, w1 = interval_rule(np.linspace(0.0, math.sqrt(xi / 2), 5), nodes)
            s2, w2 = interval_rule(np.linspace(0.0, r, 5), nodes)
            lo = np.sum(w1 * (2 * s1 + 2 * r) * F(xi - s1**2))
            hi = np.sum(w2 * (2 * s2 + 2 * r) * F(xi + s2**2))
            out[i] = (lo + hi) / xi
    elif variant == "Wstar":
        ys, wy = _graded_rule(0.0, y_max, breaks, nodes)
        fy = F(ys)
        ts = np.geomspace(1e-6, 1e6, 241)
        for i, xi in enumerate(x):
            best = 0.0
            d2 = (xi - ys) ** 2
            for t in ts:
                best = max(best, abs(np.sum(wy * np.exp(-c * a * d2 / t) * fy)))
            out[i] = best
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if weights is None:
        weights = np.gradient(x)
    num = np.sum(weights * np.abs(out) ** p) ** (1 / p)
    den = np.sum(weights * np.abs(F(x)) ** p) ** (1 / p)
    return out, float(num / den) if den > 0 else float("nan")


def separable_test(phi: Callable, psi: Callable, sigma: float = 1.0):
    """Builder for f with F_2 f(x, u) = sigma phi(x / sqrt(sigma)) psi(sigma u).

    sigma != 1 realises the dilation f(x / sqrt(sigma), y / sigma) of the
    sigma = 1 function, under which the Lemma p5 ratio is invariant.
    """
    def build(config: ProblemConfig, grid):
        mesh = np.meshgrid(*([grid.x] * config.m), indexing="ij")
        px = phi(*[c / math.sqrt(sigma) for c in mesh])
        F = sigma * px[..., None] * psi(sigma * grid.u)
        return fourier2(GridFunction(config, grid, F, "frequency"), "inverse")

    return build


def _window(lo, hi):
    def psi(u):
        au = np.abs(u)
        z = (2 * au - lo - hi) / (hi - lo)
        out = np.zeros_like(au)
        inside = np.abs(z) < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
        return out

    return psi


def p5_test_set(config: ProblemConfig):
    """Five deterministic separable test functions with transforms supported in 1 <= |u| <= 4."""
    w = _window(1.0, 4.0)

    def r2(*xs):
        return sum(c * c for c in xs)

    def prod_pow(*xs):
        out = 1.0
        for c, a in zip(xs, config.alpha):
            out = out * c ** (a + 0.5)
        return out

    phis = [
        lambda *xs: prod_pow(*xs) * np.exp(-r2(*xs) / 2),
        lambda *xs: prod_pow(*xs) * np.exp(-r2(*xs) / 8),
        lambda *xs: prod_pow(*xs) * np.exp(-sum((c - 2.0) ** 2 for c in xs)),
        lambda *xs: prod_pow(*xs) * (1 + r2(*xs)) * np.exp(-r2(*xs) / 2),
        lambda *xs: prod_pow(*xs) * np.exp(-np.sqrt(1 + r2(*xs))),
    ]
    psis = [
        w,
        lambda u: w(u) * np.sign(u),
        lambda u: w(u) * (1 + 0.5j * u),
        _window(1.0, 2.5),
        lambda u: _window(1.5, 4.0)(u) * np.exp(1j * u),
    ]
    return [separable_test(p, q) for p, q in zip(phis, psis)]
