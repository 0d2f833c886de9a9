import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from bicycle_tracks.jets import Jet, polyval

ORDER = 8
reals = st.floats(-2.0, 2.0)


def test_exp_series_at_zero():
    e = Jet.variable(0.0, ORDER).exp()
    want = [1 / math.factorial(k) for k in range(ORDER + 1)]
    assert np.allclose(e.c, want, rtol=1e-14)


def test_geometric_series_from_reciprocal():
    x = Jet.variable(0.0, ORDER)
    assert np.allclose((1.0 - x).reciprocal().c, np.ones(ORDER + 1))


def test_sqrt_binomial_series():
    x = Jet.variable(0.0, 5)
    got = (1.0 + x).sqrt().c
    want = [1, 1 / 2, -1 / 8, 1 / 16, -5 / 128, 7 / 256]
    assert np.allclose(got, want, rtol=1e-14)


def test_sincos_derivatives_of_scaled_argument():
    u = 0.3
    s, c = (Jet.variable(u, 6) * 2.0).sincos()
    ds = s.derivatives()
    for k in range(7):
        want = 2.0**k * math.sin(2 * u + k * math.pi / 2)
        assert math.isclose(ds[k], want, rel_tol=1e-12, abs_tol=1e-12)


def test_polyval_matches_numpy_derivatives():
    coeffs = [0.5, -1.0, 2.0, 0.25, 3.0]
    u = 0.7
    d = polyval(coeffs, Jet.variable(u, 4)).derivatives()
    p = np.polynomial.Polynomial(coeffs)
    for k in range(5):
        assert math.isclose(d[k], p.deriv(k)(u), rel_tol=1e-13)


def test_deriv_shifts_coefficients():
    x = Jet.variable(0.4, 5)
    f = (x * x * x).sin()
    df = f.deriv()
    assert np.allclose(df.derivatives()[:4], f.derivatives()[1:5], rtol=1e-12)


def test_batched_broadcast_with_constants():
    u = np.linspace(0, 1, 5)
    x = Jet.variable(u, 3)
    pts = Jet.stack([x, x * x], axis=-1)
    shifted = pts + np.array([1.0, 0.0])
    assert shifted.c.shape == (4, 5, 2)
    assert np.allclose(shifted.value[:, 0], u + 1)
    assert np.allclose(shifted.c[1, :, 1], 2 * u)


@given(reals, reals)
def test_product_quotient_roundtrip(a, b):
    x = Jet.variable(a, ORDER)
    f = x.sin() + 2.5
    g = (x * b).exp()
    back = (f * g) / g
    assert np.allclose(back.c, f.c, rtol=1e-10, atol=1e-10)


@given(reals)
def test_pythagorean_identity(a):
    s, c = (Jet.variable(a, ORDER) * 1.7).sincos()
    one = s * s + c * c
    assert np.allclose(one.c, [1.0] + [0.0] * ORDER, atol=1e-11)


@given(st.floats(0.1, 3.0))
def test_sqrt_squares_back(a):
    x = Jet.variable(a, ORDER) + 0.5
    r = x.sqrt()
    assert np.allclose((r * r).c, x.c, rtol=1e-12, atol=1e-12)


@given(st.integers(0, 6), reals)
def test_integer_power(n, a):
    x = Jet.variable(a, 5)
    p = x**n
    direct = Jet.constant(1.0, 5)
    for _ in range(n):
        direct = direct * x
    assert np.allclose(p.c, direct.c, rtol=1e-12, atol=1e-12)
