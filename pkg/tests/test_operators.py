import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from besselgrushin.laguerre_basis import (
    BasisSpec,
    CoefficientVector,
    ConfigError,
    ProblemConfig,
    basis_matrix,
    enumerate_indices,
    synthesize,
)
from besselgrushin.operators import (
    DomainError,
    Grid,
    GridFunction,
    SpectralSymbol,
    TruncationWarning,
    apply_ladder,
    apply_multiplier,
    fourier2,
    frac_power,
    grushin_apply,
    hermite_riesz_series,
    kernel_profile,
    multiplier_kernel,
    riesz_norm_closed_form,
    riesz_product_space,
    riesz_series,
    symbol_from_dict,
)
from besselgrushin.specfun import hermite_fn, hermite_fn_all, laguerre_fn


def random_coeffs(spec, rng):
    n = len(spec.indices)
    return CoefficientVector(spec.indices, rng.standard_normal(n) + 1j * rng.standard_normal(n),
                             spec.config.alpha, a=spec.a)


def window(u):
    return np.exp(-(np.abs(u) - 3) ** 2) * (np.abs(u) > 0.8)


def mode_fixture(m, alpha):
    cfg = ProblemConfig(m, 1, alpha)
    terms = [
        ((0,) * m, window),
        ((2,) + (1,) * (m - 1), lambda u: 0.5j * window(u) * np.sign(u)),
        ((5,) + (0,) * (m - 1), lambda u: np.exp(-(u - 2) ** 2) * (np.abs(u) > 1)),
    ]
    return GridFunction.from_modes(terms, cfg, Grid.default(m))


class TestGrid:
    def test_defaults(self):
        g = Grid.default(1)
        assert (g.L, g.N_y, g.X_max, g.N) == (16.0, 256, 12.0, 64)
        assert Grid.default(2).m == 2

    @pytest.mark.parametrize("kw", [{"m": 3}, {"N_y": 100}, {"L": -1.0}, {"nodes_per_panel": 1}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            Grid(**kw)

    def test_refined(self):
        g = Grid().refined(1)
        assert (g.L, g.N_y, g.nodes_per_panel) == (32.0, 512, 20)
        assert g.du == pytest.approx(Grid().du / 2)

    def test_x_rule_integrates(self):
        g = Grid()
        assert np.sum(g.wx * np.exp(-g.x)) == pytest.approx(1 - math.exp(-12), rel=1e-13)

    def test_frequency_grid(self):
        g = Grid()
        assert g.u[g.N_y // 2] == 0 and g.u[0] == pytest.approx(-math.pi / g.dy)


class TestFourier:
    def test_gaussian_self_dual(self):
        cfg = ProblemConfig(1, 1, (0.5,))
        g = Grid(L=20, N_y=512)
        f = GridFunction.from_function(lambda x, y: np.exp(-y**2 / 2) + 0 * x, cfg, g)
        F = fourier2(f)
        assert np.max(np.abs(F.values[0] - np.exp(-g.u**2 / 2))) < 1e-14

    def test_shift_theorem(self):
        cfg = ProblemConfig(1, 1, (0.5,))
        g = Grid(L=20, N_y=512)
        f = GridFunction.from_function(lambda x, y: np.exp(-(y - 1.5) ** 2 / 2) + 0 * x, cfg, g)
        ref = np.exp(-g.u**2 / 2 - 1.5j * g.u)
        assert np.max(np.abs(fourier2(f).values[0] - ref)) < 1e-13

    def test_roundtrip_and_parseval(self, rng):
        cfg = ProblemConfig(1, 1, (0.5,))
        g = Grid(N_y=64)
        f = GridFunction(cfg, g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
        F = fourier2(f)
        assert np.max(np.abs(fourier2(F, "inverse").values - f.values)) < 1e-13
        assert F.norm() == pytest.approx(f.norm(), rel=1e-13)

    def test_domain_checks(self):
        f = GridFunction.zeros(ProblemConfig(1, 1, (0.5,)))
        with pytest.raises(ValueError):
            fourier2(f, "inverse")
        with pytest.raises(ValueError):
            fourier2(f, "sideways")


class TestGridFunction:
    def test_requires_n1(self):
        with pytest.raises(ConfigError):
            GridFunction.zeros(ProblemConfig(1, 2, (0.5,)))

    def test_shape_and_finiteness(self):
        cfg = ProblemConfig(1, 1, (0.5,))
        g = Grid(N_y=8)
        with pytest.raises(ConfigError):
            GridFunction(cfg, g, np.zeros((3, 8)))
        bad = np.zeros(g.shape)
        bad[0, 0] = np.nan
        with pytest.raises(ConfigError):
            GridFunction(cfg, g, bad)

    def test_csv_roundtrip(self, tmp_path, rng):
        cfg = ProblemConfig(1, 1, (1.5,))
        g = Grid(N_y=8, X_max=2.0, nodes_per_panel=4)
        f = GridFunction(cfg, g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
        f.write(tmp_path / "f.csv")
        back = GridFunction.read(tmp_path / "f.csv")
        assert back.config == cfg and back.grid == g
        assert np.array_equal(back.values, f.values)


class TestSymbols:
    def test_support_zeroing(self):
        s = SpectralSymbol.heat(1.0, (1.0, 2.0))
        assert s(0.5) == 0 and s(3.0) == 0 and s(1.5) == pytest.approx(math.exp(-1.5))

    def test_smooth_indicator(self):
        s = SpectralSymbol.smooth_indicator(1.0, 5.0)
        lam = np.linspace(0, 6, 601)
        v = s(lam).real
        assert np.all((v >= 0) & (v <= 1))
        assert np.all(v[(lam >= 2) & (lam <= 4)] == 1)
        assert np.all(v[(lam <= 1) | (lam >= 5)] == 0)
        assert s.check_bound(lam)

    def test_smooth_indicator_width(self):
        with pytest.raises(ConfigError):
            SpectralSymbol.smooth_indicator(1.0, 2.0, 0.6)

    def test_bad_support(self):
        with pytest.raises(ConfigError):
            SpectralSymbol(lambda x: x, (2.0, 1.0))

    def test_catalog(self):
        s = symbol_from_dict({"name": "smooth_indicator", "A": 1, "B": 4})
        assert s.support == (1.0, 4.0) and s.params["A"] == 1
        assert symbol_from_dict({"name": "power", "gamma": 0.5})(4.0) == pytest.approx(2.0)
        with pytest.raises(ConfigError):
            symbol_from_dict({"name": "nope"})
        with pytest.raises(ConfigError):
            symbol_from_dict({"name": "heat"})

    def test_algebra(self):
        s = SpectralSymbol.heat(1.0).times(SpectralSymbol.smooth_indicator(1, 4)).scaled(2.0)
        assert s.support == (1.0, 4.0) and s.bound == 2.0
        assert s(2.5) == pytest.approx(2 * math.exp(-2.5))

    @given(tau=st.floats(-10, 10), lam=st.floats(1e-3, 1e3))
    def test_imaginary_power_unimodular(self, tau, lam):
        assert abs(abs(SpectralSymbol.imaginary_power(tau)(lam)) - 1) < 1e-12


class TestCoefficientOperators:
    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.7])
    def test_ladder_exact(self, beta):
        spec = BasisSpec(ProblemConfig(1, 1, (beta,)), 20)
        x = np.linspace(0.2, 6, 40)
        h = 1e-6
        for k in range(1, 21):
            out = apply_ladder(0, "A", spec, CoefficientVector.unit(spec, (k,)))
            assert out.alpha == (beta + 1,)
            val = synthesize(out, BasisSpec(ProblemConfig(1, 1, (beta + 1,)), 20)).__call__(x).real
            fd = (laguerre_fn(k, beta, x + h) - laguerre_fn(k, beta, x - h)) / (2 * h)
            ref = fd + (x - (beta + 0.5) / x) * laguerre_fn(k, beta, x)
            scale = np.max(np.abs(ref))
            assert np.max(np.abs(val - ref)) < 1e-5 * scale
            assert np.max(np.abs(val + 2 * math.sqrt(k) * laguerre_fn(k - 1, beta + 1, x))) < 1e-8

    def test_ladder_kills_ground_state(self):
        spec = BasisSpec(ProblemConfig(1, 1, (1.0,)), 3)
        out = apply_ladder(0, "A", spec, CoefficientVector.unit(spec, (0,)))
        assert out.norm() == 0

    def test_adjoint_ladder(self, rng):
        # <A g, h> = <g, A* h> across the order shift
        cfg = ProblemConfig(2, 1, (1.0, 1.5))
        spec = BasisSpec(cfg, 6, 2.0)
        g = random_coeffs(spec, rng)
        up = BasisSpec(cfg.shifted(1, +1), 6, 2.0)
        hvec = random_coeffs(up, rng)
        Ag = apply_ladder(1, "A", spec, g)
        Ash = apply_ladder(1, "A*", up, hvec)
        lhs = sum(Ag.get(k) * np.conj(hvec.get(k)) for k in hvec.indices)
        rhs = sum(g.get(k) * np.conj(Ash.get(k)) for k in g.indices)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_adjoint_domain(self):
        spec = BasisSpec(ProblemConfig(1, 1, (0.5,)), 3)
        with pytest.raises(DomainError):
            apply_ladder(0, "A*", spec, CoefficientVector.unit(spec, (0,)))
        with pytest.raises(DomainError):
            riesz_series(0, "Rtilde", spec, CoefficientVector.unit(spec, (0,)))

    def test_tag_mismatch(self):
        spec = BasisSpec(ProblemConfig(1, 1, (0.5,)), 3)
        other = BasisSpec(ProblemConfig(1, 1, (1.5,)), 3)
        with pytest.raises(ConfigError):
            apply_ladder(0, "A", spec, CoefficientVector.unit(other, (1,)))

    def test_factorization(self, rng):
        # A* A + 2 a (2 beta + 2) ... checked as L = A* A + 2a(beta + 1) on coefficients
        beta, a = 1.5, 0.7
        cfg = ProblemConfig(1, 1, (beta,))
        spec = BasisSpec(cfg, 10, a)
        g = random_coeffs(spec, rng)
        AsA = apply_ladder(0, "A*", BasisSpec(cfg.shifted(0, +1), 10, a), apply_ladder(0, "A", spec, g))
        lam = spec.eigenvalues
        for k, c in zip(g.indices, g.values):
            assert AsA.get(k) + 2 * a * (beta + 1) * c == pytest.approx(lam[k[0]] * c, rel=1e-12)

    @given(gamma=st.floats(0.1, 2.0))
    def test_frac_power(self, gamma):
        spec = BasisSpec(ProblemConfig(2, 1, (0.5, 1.0)), 4, 3.0)
        g = CoefficientVector(spec.indices, np.ones(len(spec.indices)), spec.config.alpha, a=3.0)
        out = frac_power(gamma, spec, g)
        assert np.allclose(out.values, spec.eigenvalues ** (-gamma), rtol=1e-13)

    def test_frac_power_domain(self):
        spec = BasisSpec(ProblemConfig(1, 1, (0.5,)), 2)
        with pytest.raises(DomainError):
            frac_power(0.0, spec, CoefficientVector.unit(spec, (0,)))

    @pytest.mark.parametrize("m", [1, 2])
    def test_riesz_contraction(self, m, rng):
        cfg = ProblemConfig(m, 1, (0.5, 1.5)[:m])
        for a in (0.5, 3.0):
            spec = BasisSpec(cfg, 20, a)
            for _ in range(50):
                g = random_coeffs(spec, rng)
                for j in range(m):
                    Rg = riesz_series(j, "R", spec, g)
                    assert Rg.norm() <= g.norm()
                    assert abs(Rg.norm() - riesz_norm_closed_form(j, g)) < 1e-12 * g.norm()

    def test_riesz_is_ladder_after_power(self, rng):
        spec = BasisSpec(ProblemConfig(2, 1, (1.0, 0.5)), 8, 2.5)
        g = random_coeffs(spec, rng)
        lhs = riesz_series(0, "R", spec, g)
        rhs = apply_ladder(0, "A", spec, frac_power(0.5, spec, g))
        assert np.allclose(lhs.values, rhs.values, atol=1e-14)

    def test_rtilde_is_adjoint_ladder_after_power(self, rng):
        spec = BasisSpec(ProblemConfig(1, 1, (1.5,)), 8, 2.5)
        g = random_coeffs(spec, rng)
        lhs = riesz_series(0, "Rtilde", spec, g)
        rhs = apply_ladder(0, "A*", spec, frac_power(0.5, spec, g))
        assert np.allclose(lhs.values, rhs.values, atol=1e-14)


class TestHermiteRiesz:
    def test_single_mode_fd(self):
        x = np.linspace(-3, 3, 31)
        h = 1e-6
        for k in range(1, 12):
            idx, vals = hermite_riesz_series([(k,)], [1.0], 1)
            assert idx == [(k - 1,)]
            fd = (hermite_fn(k, x + h) - hermite_fn(k, x - h)) / (2 * h) + x * hermite_fn(k, x)
            assert np.allclose(vals[0] * hermite_fn(k - 1, x), fd / math.sqrt(2 * k + 1), atol=1e-8)

    def test_two_dimensional(self):
        idx, vals = hermite_riesz_series([(0, 3), (2, 1), (1, 0)], [1.0, 1.0, 2.0], 2)
        assert idx == [(1, 1), (0, 0)]
        assert np.allclose(vals, [math.sqrt(4 / 8), 2 * math.sqrt(2 / 4)])

    def test_contraction(self, rng):
        ind = enumerate_indices(2, 15)
        v = rng.standard_normal(len(ind))
        _, out = hermite_riesz_series(ind, v, 2)
        assert np.linalg.norm(out) <= np.linalg.norm(v)


class TestGridOperators:
    @pytest.mark.parametrize("m,alpha", [(1, (0.5,)), (1, (2.7,)), (2, (0.5, 1.5))])
    def test_identity_on_modes(self, m, alpha):
        f = mode_fixture(m, alpha)
        out = apply_multiplier(SpectralSymbol.constant(1.0), f)
        assert np.max(np.abs(out.values - f.values)) < 1e-8 * np.max(np.abs(f.values))

    def test_single_mode_diagonal(self):
        cfg = ProblemConfig(1, 1, (0.5,))
        g = Grid()
        u0, k = g.du * 10, 3
        f = GridFunction.from_function(lambda x, y: basis_matrix(k, 0.5, u0, x)[k] * np.exp(1j * u0 * y), cfg, g)
        lam = 2 * (2 * k + 0.5 + 1) * u0
        for sym in (SpectralSymbol.power(0.5), SpectralSymbol.heat(0.3), SpectralSymbol.imaginary_power(2.0)):
            out = apply_multiplier(sym, f)
            assert np.max(np.abs(out.values - sym(lam) * f.values)) < 1e-12 * np.max(np.abs(f.values))
        out = grushin_apply(f)
        assert np.max(np.abs(out.values - lam * f.values)) < 1e-12 * lam

    def test_riesz_single_mode(self):
        cfg = ProblemConfig(1, 1, (0.5,))
        g = Grid()
        u0, k = g.du * 10, 3
        f = GridFunction.from_function(lambda x, y: basis_matrix(k, 0.5, u0, x)[k] * np.exp(1j * u0 * y), cfg, g)
        out = riesz_product_space(0, f)
        lam = 2 * (2 * k + 1.5)
        ref = -2 * math.sqrt(k / lam) * basis_matrix(k - 1, 1.5, u0, g.x)[k - 1][:, None] * np.exp(1j * u0 * g.y)
        assert out.config.alpha == (1.5,)
        assert np.max(np.abs(out.values - ref)) < 1e-12

    @pytest.mark.parametrize("m", [1, 2])
    def test_riesz_contraction_on_grid(self, m, rng):
        cfg = ProblemConfig(m, 1, (0.5, 1.5)[:m])
        g = Grid.default(m)
        f = GridFunction(cfg, g, rng.standard_normal(g.shape))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            out = riesz_product_space(0, f)
        assert out.norm() <= f.norm()

    def test_truncation_warning(self, rng):
        cfg = ProblemConfig(1, 1, (0.5,))
        g = Grid(N_y=32)
        f = GridFunction(cfg, g, rng.standard_normal(g.shape))
        with pytest.warns(TruncationWarning):
            apply_multiplier(SpectralSymbol.constant(1.0), f, N=4)

    def test_zero_frequency_uses_value_at_zero(self):
        cfg = ProblemConfig(1, 1, (0.5,))
        g = Grid(N_y=32)
        f = GridFunction.from_function(lambda x, y: x * np.exp(-x**2) + 0 * y, cfg, g)
        F = fourier2(apply_multiplier(SpectralSymbol.power(1.0, value_at_zero=3.0), f, N=8,
                                      tail_tol=1.0))
        z = g.N_y // 2
        assert np.allclose(F.values[:, z], 3.0 * fourier2(f).values[:, z])


class TestMultiplierKernel:
    def test_profile_is_mode_sum(self):
        cfg = ProblemConfig(1, 1, (1.0,))
        H = SpectralSymbol.smooth_indicator(1.0, 4.0)
        u = np.array([0.1, 0.3])
        x = np.array([0.5, 1.7])
        P = kernel_profile(H, cfg, 1.0, x, 6, u)
        for iu, uu in enumerate(u):
            ref = sum(H(2 * (2 * k + 2) * uu) * math.sqrt(uu) * laguerre_fn(k, 1.0, math.sqrt(uu) * x)
                      * laguerre_fn(k, 1.0, math.sqrt(uu) * 1.0) for k in range(7))
            assert np.allclose(P[iu], ref, rtol=1e-12)

    def test_against_adaptive_quadrature(self):
        cfg = ProblemConfig(1, 1, (1.0,))
        H = SpectralSymbol.smooth_indicator(1.0, 4.0)
        N, y, x, tau = 4, 1.0, 0.8, 0.6
        got = multiplier_kernel(H, cfg, y, 0.0, x, tau, N=N)

        def integrand(u):
            return kernel_profile(H, cfg, y, x, N, np.array([u]))[0, 0].real * math.cos(u * tau) / math.pi

        nu = 2 * (2 * np.arange(N + 1) + 2)
        pts = sorted(set(np.concatenate([1 / nu, 4 / nu])))
        ref, _ = integrate.quad(integrand, 0, 4 / nu[0], points=pts, limit=400, epsabs=1e-13, epsrel=1e-12)
        assert got == pytest.approx(ref, rel=1e-8)

    def test_symmetry(self):
        cfg = ProblemConfig(1, 1, (0.5,))
        H = SpectralSymbol.smooth_indicator(1.0, 4.0)
        a = multiplier_kernel(H, cfg, 1.2, 0.3, 0.7, -0.4, N=8)
        b = multiplier_kernel(H, cfg, 0.7, -0.4, 1.2, 0.3, N=8)
        assert a == pytest.approx(b, rel=1e-12)

    def test_requires_compact_symbol(self):
        with pytest.raises(DomainError):
            multiplier_kernel(SpectralSymbol.heat(1.0), ProblemConfig(1, 1, (0.5,)), 1.0, 0.0, 1.0, 0.0)
