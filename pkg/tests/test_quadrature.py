import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from besselgrushin.quadrature import (
    HalfLineScheme,
    TailWarning,
    gauss_legendre,
    integrate_halfline,
    integrate_time_subordination,
    interval_rule,
    subordination_scheme,
)
from besselgrushin.specfun import NumericError


@given(deg=st.integers(0, 31))
def test_gauss_exact_for_polynomials(deg):
    x, w = gauss_legendre(16)
    exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
    assert abs(np.sum(w * x**deg) - exact) < 1e-13


def test_midpoint_rule():
    x, w = gauss_legendre(1)
    assert x.tolist() == [0.0] and w.tolist() == [2.0]


def test_gauss_bounds():
    with pytest.raises(ValueError):
        gauss_legendre(0)
    with pytest.raises(ValueError):
        gauss_legendre(513)


def test_interval_rule_length():
    x, w = interval_rule([0, 1, 3, 7], 8)
    assert x.size == 24
    assert np.sum(w) == pytest.approx(7.0, rel=1e-14)


def test_halfline_exponential():
    val, err = integrate_halfline(lambda x: np.exp(-x))
    assert val == pytest.approx(1 - math.exp(-64), rel=1e-13)
    assert err < 1e-10


def test_halfline_vector_valued():
    val, _ = integrate_halfline(lambda x: np.stack([np.exp(-x), x * np.exp(-x)], axis=1))
    assert np.allclose(val, [1.0, 1.0], rtol=1e-12)


def test_sqrt_first_panel_handles_endpoint_singularity():
    sch = HalfLineScheme(panel_edges=(0.0, 1.0, 4.0), nodes_per_panel=16, tail_cut=4.0, sqrt_first_panel=True)
    x, w = sch.rule()
    assert np.sum(w / np.sqrt(x)) == pytest.approx(4.0, rel=1e-13)


def test_scheme_validation():
    with pytest.raises(ValueError):
        HalfLineScheme(panel_edges=(0.0, 2.0, 1.0))
    with pytest.raises(ValueError):
        HalfLineScheme(panel_edges=(0.0, 1.0), tail_cut=0.5)
    with pytest.raises(ValueError):
        HalfLineScheme(nodes_per_panel=1)


def test_refined_doubles_nodes():
    assert HalfLineScheme().refined().nodes_per_panel == 64


def test_subordination_gamma_half():
    # int_0^inf e^{-t} dt / sqrt(t) = sqrt(pi)
    val, err = integrate_time_subordination(lambda t: np.exp(-t))
    assert val == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert err < 1e-8


@given(lam=st.floats(0.05, 50.0))
def test_subordination_inverse_sqrt(lam):
    val, _ = integrate_time_subordination(lambda t: np.exp(-lam * t), subordination_scheme(t_max=2000 / lam))
    assert val == pytest.approx(math.sqrt(math.pi / lam), rel=1e-10)


def test_tail_warning():
    with pytest.warns(TailWarning):
        integrate_time_subordination(lambda t: np.exp(-1e-3 * t))


def test_no_warning_when_tail_small():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        integrate_time_subordination(lambda t: np.exp(-t))


def test_nonfinite_integrand_names_node():
    with pytest.raises(NumericError, match="node"):
        integrate_halfline(lambda x: np.where(x > 5, np.nan, 1.0))
