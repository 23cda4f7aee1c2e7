"""Acceptance suite: one test per criterion, each with its wall-clock budget.

Run with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per criterion
is printed in the terminal summary.
"""

import json
import math
import time
import warnings
from contextlib import contextmanager

import numpy as np
import pytest

from besselgrushin import cli
from besselgrushin import estimates as E
from besselgrushin.kernels import (
    KernelCheckConfig,
    hermite_heat_kernel,
    laguerre_heat_kernel,
    lemma_g_reports,
    lemma_w_reports,
    multi_heat_kernel_scaled,
    riesz_kernel_laguerre,
)
from besselgrushin.laguerre_basis import (
    BasisSpec,
    CoefficientVector,
    ProblemConfig,
    analyze,
    basis_matrix,
    basis_rule,
    synthesize,
)
from besselgrushin.operators import (
    Grid,
    GridFunction,
    SpectralSymbol,
    apply_ladder,
    apply_multiplier,
    grushin_apply,
    riesz_norm_closed_form,
    riesz_series,
    symbol_from_dict,
)
from besselgrushin.quadrature import HalfLineScheme, interval_rule
from besselgrushin.specfun import bessel_i_scaled, hankel_coeff, hermite_fn_all, laguerre_fn, laguerre_fn_all

acceptance = pytest.mark.acceptance


@contextmanager
def budget(seconds):
    t0 = time.perf_counter()
    yield
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"took {elapsed:.1f} s, budget {seconds} s"


@acceptance(1, "Orthonormality, Gram matrix k, j <= 40")
def test_01_orthonormality():
    with budget(5):
        for beta in (0.5, 1.0, 2.7):
            spec = BasisSpec(ProblemConfig(1, 1, (beta,)), 40)
            x, w = basis_rule(spec)
            B = basis_matrix(40, beta, 1.0, x)
            assert np.max(np.abs((B * w) @ B.T - np.eye(41))) < 1e-8


@acceptance(2, "Half-integer Bessel closed form")
def test_02_half_integer_bessel():
    with budget(1):
        z = np.geomspace(1e-3, 50, 500)
        ref = np.exp(-z) * np.sqrt(2 / (np.pi * z)) * np.sinh(z)
        assert np.max(np.abs(bessel_i_scaled(0.5, z) / ref - 1)) < 1e-10


@acceptance(3, "Hankel coefficient identity")
def test_03_coefficient_identity():
    with budget(1):
        for beta in (0.5, 1.0, 2.5):
            for r in range(1, 21):
                lhs = (-(2 * beta + 1) * hankel_coeff(beta, r - 1) + hankel_coeff(beta + 1, r)
                       - hankel_coeff(beta, r))
                rhs = 2 * (r - 1) * hankel_coeff(beta, r - 1)
                assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1e-300)


@acceptance(4, "Mehler consistency against the eigenfunction series")
def test_04_mehler():
    with budget(30):
        u = np.linspace(0.1, 4.0, 20)
        uh = np.linspace(-4.0, 4.0, 20)
        K = 200
        H = hermite_fn_all(K, uh)
        for t in (0.1, 0.5, 2.0):
            for beta in (0.5, 1.0, 2.7):
                P = laguerre_fn_all(K, beta, u)
                lam = np.exp(-2 * t * (2 * np.arange(K + 1) + beta + 1))
                W = laguerre_heat_kernel(t, beta, u[:, None], u[None, :])
                assert np.max(np.abs(W - (P * lam[:, None]).T @ P)) < 1e-8
            lam = np.exp(-t * (2 * np.arange(K + 1) + 1))
            W = hermite_heat_kernel(t, uh[:, None], uh[None, :])
            assert np.max(np.abs(W - (H * lam[:, None]).T @ H)) < 1e-8


@acceptance(5, "Semigroup law by quadrature")
def test_05_semigroup():
    with budget(10):
        u = np.array([0.2, 0.9, 2.5])
        zh, wh = interval_rule(np.linspace(-12, 12, 49), 20)
        zl, wl = interval_rule(np.concatenate([[0, 1e-3, 0.1], np.linspace(0.5, 12, 24)]), 20)
        for t, s in ((0.3, 0.45), (0.05, 1.2)):
            comp = (hermite_heat_kernel(t, u[:, None], zh) * wh) @ hermite_heat_kernel(s, zh[:, None], u)
            assert np.max(np.abs(comp - hermite_heat_kernel(t + s, u[:, None], u))) < 1e-6
            for beta in (0.5, 1.3):
                comp = (laguerre_heat_kernel(t, beta, u[:, None], zl) * wl) @ laguerre_heat_kernel(s, beta,
                                                                                                   zl[:, None], u)
                assert np.max(np.abs(comp - laguerre_heat_kernel(t + s, beta, u[:, None], u))) < 1e-6


@acceptance(6, "Ladder exactness for k <= 20")
def test_06_ladder():
    with budget(10):
        x = np.linspace(0.2, 6, 40)
        h = 1e-6
        for beta in (0.5, 1.0, 2.7):
            spec = BasisSpec(ProblemConfig(1, 1, (beta,)), 20)
            up = BasisSpec(ProblemConfig(1, 1, (beta + 1,)), 20)
            for k in range(1, 21):
                val = synthesize(apply_ladder(0, "A", spec, CoefficientVector.unit(spec, (k,))), up)(x).real
                fd = (laguerre_fn(k, beta, x + h) - laguerre_fn(k, beta, x - h)) / (2 * h)
                ref = fd + (x - (beta + 0.5) / x) * laguerre_fn(k, beta, x)
                assert np.max(np.abs(val - ref)) < 1e-5 * np.max(np.abs(ref))
                assert np.max(np.abs(val + 2 * math.sqrt(k) * laguerre_fn(k - 1, beta + 1, x))) < 1e-8


@acceptance(7, "Riesz L2 contraction and closed-form norm")
def test_07_riesz_contraction():
    rng = np.random.default_rng(7)
    with budget(5):
        for m, alpha in ((1, (0.5,)), (2, (0.5, 1.5))):
            spec = BasisSpec(ProblemConfig(m, 1, alpha), 20, 1.7)
            n = len(spec.indices)
            for _ in range(100):
                g = CoefficientVector(spec.indices, rng.standard_normal(n) + 1j * rng.standard_normal(n), alpha,
                                      a=spec.a)
                for j in range(m):
                    Rg = riesz_series(j, "R", spec, g)
                    assert Rg.norm() <= g.norm()
                    assert abs(Rg.norm() - riesz_norm_closed_form(j, g)) < 1e-12 * g.norm()


@acceptance(8, "Multiplier identity and single-mode action")
def test_08_multiplier():
    with budget(10):
        win = lambda u: np.exp(-(np.abs(u) - 3) ** 2) * (np.abs(u) > 0.8)
        for m, alpha in ((1, (0.5,)), (1, (2.7,)), (2, (0.5, 1.5))):
            cfg = ProblemConfig(m, 1, alpha)
            terms = [((0,) * m, win), ((2,) + (1,) * (m - 1), lambda u: 0.5j * win(u) * np.sign(u)),
                     ((5,) + (0,) * (m - 1), lambda u: np.exp(-(u - 2) ** 2) * (np.abs(u) > 1))]
            f = GridFunction.from_modes(terms, cfg, Grid.default(m))
            out = apply_multiplier(SpectralSymbol.constant(1.0), f)
            assert np.max(np.abs(out.values - f.values)) < 1e-8 * np.max(np.abs(f.values))
        cfg = ProblemConfig(1, 1, (0.5,))
        g = Grid()
        u0, k = 10 * g.du, 3
        f = GridFunction.from_function(lambda x, y: basis_matrix(k, 0.5, u0, x)[k] * np.exp(1j * u0 * y), cfg, g)
        lam = 2 * (2 * k + 1.5) * u0
        scale = np.max(np.abs(f.values))
        for sym in (SpectralSymbol.power(0.5), SpectralSymbol.heat(0.3), SpectralSymbol.smooth_indicator(1, 40)):
            out = apply_multiplier(sym, f)
            assert np.max(np.abs(out.values - sym(lam) * f.values)) < 1e-12 * scale
        assert np.max(np.abs(grushin_apply(f).values - lam * f.values)) < 1e-12 * lam * scale


def _poly_bump(x):
    z = 2 * np.asarray(x) - 3
    return np.where(np.abs(z) < 1, (1 - z * z) ** 8, 0.0)


@acceptance(9, "Riesz series against kernel quadrature")
def test_09_riesz_crossvalidation():
    with budget(60):
        xs = np.array([0.3, 0.5, 2.5, 2.75])  # distance >= 0.5 from supp g = [1, 2]
        yq, wq = interval_rule(np.linspace(1, 2, 9), 32)
        scheme = HalfLineScheme(tuple(np.linspace(1, 2, 81)), 32, 2.0)
        for alpha in (0.5, 1.5):
            cfg = ProblemConfig(1, 1, (alpha,))
            for a in (1.0, 3.0):
                quad = np.array([np.sum(wq * riesz_kernel_laguerre(cfg, a, np.full(yq.size, x), yq) * _poly_bump(yq))
                                 for x in xs])
                spec = BasisSpec(cfg, 1200, a)
                c = analyze(lambda p: _poly_bump(p[..., 0]), spec, scheme)
                series = synthesize(riesz_series(0, "R", spec, c), BasisSpec(cfg.shifted(0, 1), 1200, a))(xs).real
                assert np.max(np.abs(series - quad) / np.abs(quad)) < 1e-3


@acceptance(10, "Scaling laws for Riesz and heat kernels")
def test_10_scaling():
    rng = np.random.default_rng(10)
    with budget(5):
        for m, alpha in ((1, (0.5,)), (2, (1.0, 1.5))):
            cfg = ProblemConfig(m, 1, alpha)
            x = rng.uniform(0.1, 3, (50, m))
            y = rng.uniform(0.1, 3, (50, m))
            a = rng.uniform(0.25, 4, 50)
            t = rng.uniform(0.05, 3, 50)
            for i in range(50):
                ra = math.sqrt(a[i])
                lhs = riesz_kernel_laguerre(cfg, a[i], x[i], y[i])
                rhs = a[i] ** (m / 2) * riesz_kernel_laguerre(cfg, 1.0, ra * x[i], ra * y[i])
                assert abs(lhs - rhs) <= 1e-8 * abs(rhs)
                hl = multi_heat_kernel_scaled(t[i], cfg, a[i], x[i], y[i])
                hr = a[i] ** (m / 2)
                for j in range(m):
                    hr = hr * laguerre_heat_kernel(t[i] * a[i], alpha[j], ra * x[i, j], ra * y[i, j])
                assert abs(hl - hr) <= 1e-8 * abs(hr)


@acceptance(11, "Plancherel identity for the multiplier kernel")
def test_11_plancherel():
    with budget(60):
        cfg = ProblemConfig(1, 1, (0.5,))
        for sym in cli.DEFAULT_SYMBOLS:
            H = symbol_from_dict(sym)
            for y in (0.5, 1.0, 2.0):
                rep = E.plancherel_check(H, y, cfg, N=16)
                assert rep.ok, rep.line()


@acceptance(12, "Weighted Plancherel across scales")
def test_12_weighted():
    with budget(120):
        cfg = ProblemConfig(1, 1, (0.5,))
        ys = np.geomspace(1e-2, 1e2, 41)
        for gamma in (0.0, 0.25, 0.45):
            sups = []
            for R in (1.0, 2.0, 4.0, 8.0):
                H = SpectralSymbol.smooth_indicator(R**2, 4 * R**2)
                main, scaled = E.weighted_plancherel_report(H, gamma, ys, cfg, N_levels=(24, 48), R=R)
                for rep in (main, scaled):
                    assert math.isfinite(rep.empirical_C) and rep.refinement_delta < 0.10, rep.line()
                sups.append(main.empirical_C)
            assert max(sups) / min(sups) < 3


@acceptance(13, "Heat and ladder kernel bound suites at eps = 1/4, c = 1/16")
def test_13_kernel_bounds():
    with budget(120):
        kc = KernelCheckConfig(epsilon=0.25, c=1 / 16)
        reps = lemma_w_reports(kc, parts=("a", "b", "d", "e", "f")) + lemma_g_reports(kc)
        failed = [r.line() for r in reps if not r.ok]
        assert not failed, failed


@acceptance(14, "Calderon-Zygmund constants uniform in a")
def test_14_cz():
    with budget(60):
        reps = E.cz_bound_report(ProblemConfig(1, 1, (1.0,)), (0.5, 1.0, 2.0, 4.0))
        uni = [r for r in reps if "a-uniformity" in r.name]
        assert len(uni) == 2 and all(r.ok for r in uni), [r.line() for r in uni]
        assert all(math.isfinite(r.empirical_C) for r in reps)


@acceptance(15, "Lemma p5 ratio on the five-function test set")
def test_15_lemma_p5():
    with budget(60):
        cfg = ProblemConfig(1, 1, (0.5,))
        tests = E.p5_test_set(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for gamma in (0.25, 0.5, 1.0):
                rep = E.lemma_p5_ratio(gamma, tests, cfg)
                assert rep.ok and rep.empirical_C < 10, rep.line()


@acceptance(16, "Hardy operator closed form and sharp constant")
def test_16_hardy():
    with budget(10):
        x = np.concatenate([np.geomspace(1e-6, 1, 50), np.geomspace(1, 1e3, 50)[1:]])
        out, _ = E.hardy_apply("H0", lambda s: (s <= 1).astype(float), x, breaks=(1.0,))
        assert np.max(np.abs(out - np.where(x <= 1, 1.0, 1.0 / x))) < 1e-10
        edges = np.unique(np.concatenate([np.geomspace(1e-12, 1e6, 121), [1.0]]))
        xs, w = interval_rule(edges, 12)
        family = [lambda s, d=d: np.where(s <= 1, s ** (d - 0.5), 0.0) for d in (0.2, 0.1, 0.05, 0.02)]
        family += [lambda s: np.exp(-s), lambda s: 1 / (1 + s), lambda s: np.where(s <= 1, 1.0, 0.0)]
        assert max(E.hardy_apply("H0", F, xs, weights=w, breaks=(1.0,))[1] for F in family) <= 2.05


@acceptance(17, "CLI determinism of verify plancherel")
def test_17_cli_determinism(tmp_path):
    with budget(120):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"m": 1, "n": 1, "alpha": [0.5]}))
        outs = []
        for name in ("run1", "run2"):
            code = cli.run(["verify", "plancherel", "--config", str(cfgfile), "--out", str(tmp_path / name),
                            "--quiet"])
            assert code == cli.EXIT_OK
            outs.append((tmp_path / name / "report.csv").read_bytes())
        assert outs[0] == outs[1]
