"""Special functions: scaled modified Bessel I, Laguerre and Hermite functions.

Everything here is vectorised over the spatial argument.  Orthonormal
function families are produced by three-term recurrences acting directly on
the normalised functions, with a running logarithmic scale so that orders in
the thousands never overflow or underflow prematurely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "BesselRegimeConfig",
    "EnvelopeConstants",
    "NumericError",
    "bessel_i_scaled",
    "bessel_recurrence_check",
    "hankel_coeff",
    "hermite_fn",
    "hermite_fn_all",
    "laguerre_fn",
    "laguerre_fn_all",
    "log_gamma",
    "mw_envelope",
]

HANKEL_MAX_ORDER = 60
MAX_DEGREE = 5000
_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)


class NumericError(ArithmeticError):
    """Raised when an evaluation produces a non-finite intermediate."""


@dataclass(frozen=True)
class BesselRegimeConfig:
    series_cutoff_z: float = 15.0
    series_terms: int = 60
    asymptotic_terms: int = 8

    def __post_init__(self):
        if not self.series_cutoff_z > 0:
            raise ValueError("series_cutoff_z must be positive")
        for name in ("series_terms", "asymptotic_terms"):
            val = getattr(self, name)
            if not 1 <= val <= 200:
                raise ValueError(f"{name} must lie in [1, 200], got {val}")


DEFAULT_BESSEL = BesselRegimeConfig()


def log_gamma(x):
    """log Gamma(x) for positive arguments (array or scalar)."""
    return gammaln(x)


def hankel_coeff(nu: float, r: int) -> float:
    """Coefficient [nu, r] of the large-argument expansion of I_nu.

    [nu, 0] = 1 and [nu, r] = prod_{i<=r} (4 nu^2 - (2i-1)^2) / (4^r r!).
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    if r > HANKEL_MAX_ORDER:
        raise OverflowError(f"order r={r} exceeds the supported range r <= {HANKEL_MAX_ORDER}")
    mu = 4.0 * nu * nu
    c = 1.0
    for i in range(1, r + 1):
        c *= (mu - (2 * i - 1) ** 2) / (4.0 * i)
    return c


def _series_scaled(nu, z, terms, adaptive=False):
    """exp(-z) I_nu(z) from the ascending series; all terms are positive."""
    q = 0.25 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    k = 0
    while True:
        k += 1
        if not adaptive and k >= terms:
            break
        term = term * q / (k * (k + nu))
        total = total + term
        if adaptive and (k >= terms or np.all(term <= 1e-17 * total)):
            break
    logpre = nu * np.log(0.5 * z) - gammaln(nu + 1.0) - z
    return np.exp(logpre) * total


def _asymptotic_scaled(nu, z, terms):
    """exp(-z) I_nu(z) from the large-z expansion; also returns the first omitted term."""
    inv = 1.0 / (2.0 * z)
    total = np.ones_like(z)
    term = np.ones_like(z)
    mu = 4.0 * nu * nu
    for r in range(1, terms + 2):
        term = -term * (mu - (2 * r - 1) ** 2) / (4.0 * r) * inv
        if r <= terms:
            total = total + term
    return total / np.sqrt(2.0 * np.pi * z), term / np.sqrt(2.0 * np.pi * z)


def bessel_i_scaled(nu: float, z, config: BesselRegimeConfig = DEFAULT_BESSEL):
    """Exponentially scaled modified Bessel function exp(-z) I_nu(z), z > 0.

    Below ``config.series_cutoff_z`` the ascending series is summed; above it
    the asymptotic expansion is used whenever its first omitted term is below
    double-precision resolution, and otherwise the (positive) series is summed
    with as many terms as needed.
    """
    if nu <= -1.0:
        raise ValueError("order must exceed -1")
    za = np.asarray(z, dtype=float)
    scalar = za.ndim == 0
    za = np.atleast_1d(za)
    if np.any(za <= 0) or not np.all(np.isfinite(za)):
        raise ValueError("argument must be positive and finite")
    out = np.empty_like(za)
    small = za < config.series_cutoff_z
    if small.any():
        out[small] = _series_scaled(nu, za[small], config.series_terms)
    big = ~small
    if big.any():
        zb = za[big]
        val, nxt = _asymptotic_scaled(nu, zb, config.asymptotic_terms)
        poor = np.abs(nxt) > 2e-16 * np.abs(val)
        if poor.any():
            zp = zb[poor]
            if zp.max() > 600.0:
                raise NumericError(f"order {nu} too large for argument {zp.max()}")
            nterm = int(zp.max() + 12.0 * math.sqrt(zp.max()) + 60)
            val[poor] = _series_scaled(nu, zp, nterm, adaptive=True)
        out[big] = val
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite value in scaled Bessel evaluation")
    return out[0] if scalar else out


def bessel_recurrence_check(nu: float, z, config: BesselRegimeConfig = DEFAULT_BESSEL):
    """Relative residual of I_{nu+1} = I_{nu-1} - (2 nu / z) I_nu from scaled values."""
    if nu < 0.5:
        raise ValueError("nu must be at least 1/2")
    z = np.asarray(z, dtype=float)
    ip = bessel_i_scaled(nu + 1.0, z, config)
    im = bessel_i_scaled(nu - 1.0, z, config)
    i0 = bessel_i_scaled(nu, z, config)
    return np.abs(ip - im + (2.0 * nu / z) * i0) / ip


def _recur(kmax, x, log_start, step, keep_all):
    """Run a normalised three-term recurrence with per-point log scaling.

    ``step(k, cur, prev)`` returns the (unscaled) value of order k+1.
    """
    shape = x.shape
    scale = np.array(log_start, dtype=float, copy=True)
    with np.errstate(under="ignore"):
        ex = np.exp(scale)
    prev = np.zeros(shape)
    cur = np.ones(shape)
    out = np.empty((kmax + 1,) + shape) if keep_all else None
    if keep_all:
        out[0] = cur * ex
    for k in range(kmax):
        nxt = step(k, cur, prev)
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            f = np.where(big, 1.0 / _RESCALE, 1.0)
            cur = cur * f
            prev = prev * f
            scale = scale + np.where(big, _LOG_RESCALE, 0.0)
            with np.errstate(under="ignore", over="ignore"):
                ex = np.exp(scale)
        if keep_all:
            with np.errstate(under="ignore"):
                out[k + 1] = cur * ex
    if keep_all:
        return out
    with np.errstate(under="ignore"):
        return cur * ex


def _laguerre(kmax, beta, x, keep_all):
    if beta <= -0.5:
        raise ValueError("beta must exceed -1/2")
    if kmax < 0 or kmax > MAX_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_DEGREE}]")
    x = np.asarray(x, dtype=float)
    y = x * x
    with np.errstate(divide="ignore"):
        log0 = 0.5 * (math.log(2.0) - gammaln(beta + 1.0)) - 0.5 * y + (beta + 0.5) * np.log(x)

    def step(k, cur, prev):
        return ((2 * k + 1 + beta - y) * cur - math.sqrt(k * (k + beta)) * prev) / math.sqrt(
            (k + 1) * (k + 1 + beta)
        )

    return _recur(kmax, x, log0, step, keep_all)


def laguerre_fn(k: int, beta: float, x):
    """Orthonormal Laguerre function phi_k^beta(x) on (0, inf)."""
    return _laguerre(int(k), beta, x, keep_all=False)


def laguerre_fn_all(kmax: int, beta: float, x):
    """Array of shape (kmax+1, *x.shape) holding phi_0^beta .. phi_kmax^beta at x."""
    return _laguerre(int(kmax), beta, x, keep_all=True)


def _hermite(kmax, x, keep_all):
    if kmax < 0 or kmax > MAX_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_DEGREE}]")
    x = np.asarray(x, dtype=float)
    log0 = -0.25 * math.log(math.pi) - 0.5 * x * x

    def step(k, cur, prev):
        return math.sqrt(2.0 / (k + 1)) * x * cur - math.sqrt(k / (k + 1.0)) * prev

    return _recur(kmax, x, log0, step, keep_all)


def hermite_fn(k: int, x):
    """Normalised Hermite function h_k(x) = (sqrt(pi) 2^k k!)^(-1/2) exp(-x^2/2) H_k(x)."""
    return _hermite(int(k), x, keep_all=False)


def hermite_fn_all(kmax: int, x):
    return _hermite(int(kmax), x, keep_all=True)


@dataclass(frozen=True)
class EnvelopeConstants:
    """Constants of the three-branch envelope; only their existence is known."""

    eta: float = 0.125
    lam: float = 1.0
    xi: float = 0.125


def mw_envelope(k: int, beta: float, x, const: EnvelopeConstants = EnvelopeConstants()):
    """Uniform envelope M_k^beta(x) dominating |phi_k^beta(x)| up to a constant.

    The oscillatory branch is used for x^2 <= nu_k (closed at the turning
    point), the Airy-type branch for nu_k < x^2 <= (1 + lam) nu_k and the
    Gaussian branch beyond.
    """
    x = np.asarray(x, dtype=float)
    nu = 4.0 * k + 2.0 * beta + 2.0
    y = x * x
    base = (
        x ** (beta + 0.5)
        * (1.0 / nu + y) ** (-0.25 - 0.5 * beta)
        * (nu ** (1.0 / 3.0) + np.abs(y - nu)) ** -0.25
    )
    airy = np.exp(-const.eta * np.abs(nu - y) ** 1.5 / math.sqrt(nu))
    gauss = np.exp(-const.xi * y)
    psi = np.where(y <= nu, 1.0, np.where(y <= (1.0 + const.lam) * nu, airy, gauss))
    return base * psi
