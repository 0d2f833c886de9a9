import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bicycle_tracks.errors import MonodromyError
from bicycle_tracks.mobius import (
    MobiusKind,
    MobiusMap,
    alpha_to_pair,
    apply,
    classify,
    cross_ratio,
    fit_three,
    fixed_points,
    lorentz_defect,
    lorentz_exp,
    lorentz_generator,
    minkowski_form,
    multiplier_at,
    pair_to_alpha,
    relorentz,
    sphere_action,
)

E = math.e


def test_classify_examples():
    assert classify(MobiusMap.identity()).kind is MobiusKind.IDENTITY
    assert classify(MobiusMap(-np.eye(2))).kind is MobiusKind.IDENTITY
    h = classify(MobiusMap(np.diag([E, 1 / E])))
    assert h.kind is MobiusKind.HYPERBOLIC and math.isclose(h.abs_trace, E + 1 / E)
    r = classify(MobiusMap.rotation(math.pi / 4))
    assert r.kind is MobiusKind.ELLIPTIC and math.isclose(r.abs_trace, math.sqrt(2))
    assert classify(MobiusMap([[1, 1], [0, 1]])).kind is MobiusKind.PARABOLIC
    assert classify(MobiusMap([[-1, 1], [0, -1]])).kind is MobiusKind.PARABOLIC


def test_construction_renormalizes_determinant():
    m = MobiusMap([[2.0, 1.0], [0.0, 3.0]])
    assert abs(m.det - 1) < 1e-14
    with pytest.raises(ValueError):
        MobiusMap([[1.0, 0.0], [0.0, -1.0]])


def test_fixed_points_of_diagonal_map():
    # u -> e^2 u: u = 0 repels (derivative e^2), u = infinity attracts (e^-2)
    fps = fixed_points(MobiusMap(np.diag([E, 1 / E])))
    assert len(fps) == 2
    attracting, repelling = fps
    assert np.allclose(np.abs(attracting.direction), [1, 0])
    assert math.isclose(attracting.multiplier, E**-2, rel_tol=1e-12)
    assert np.allclose(np.abs(repelling.direction), [0, 1])
    assert math.isclose(repelling.multiplier, E**2, rel_tol=1e-12)


def test_fixed_points_parabolic_and_elliptic():
    (fp,) = fixed_points(MobiusMap([[1, 1], [0, 1]]))
    assert np.allclose(np.abs(fp.direction), [1, 0])
    assert fp.multiplier == 1.0
    assert fixed_points(MobiusMap.rotation(0.3)) == []
    with pytest.raises(MonodromyError):
        fixed_points(MobiusMap.identity())


def test_apply_examples():
    assert np.allclose(apply(MobiusMap.identity(), [0.6, 0.8]), [0.6, 0.8])
    assert np.allclose(apply(MobiusMap([[1, 1], [0, 1]]), [1, 0]), [1, 0])
    assert np.allclose(apply(MobiusMap(np.diag([2, 0.5])), [1, 1]), np.array([4, 1]) / math.sqrt(17))
    with pytest.raises(ValueError):
        apply(MobiusMap.identity(), [0, 0])


@given(st.floats(-3.1, 3.1))
def test_chart_roundtrip(alpha):
    assert abs(pair_to_alpha(alpha_to_pair(alpha)) - alpha) < 1e-12
    assert abs(pair_to_alpha(-alpha_to_pair(alpha)) - alpha) < 1e-12


def _random_sl2(rng, scale=1.0):
    m = np.eye(2) + scale * rng.normal(size=(2, 2))
    if np.linalg.det(m) < 0:
        m[:, 0] *= -1
    return MobiusMap(m)


@given(st.integers(0, 10_000))
def test_hyperbolic_multipliers_reciprocal(seed):
    rng = np.random.default_rng(seed)
    m = MobiusMap(np.diag([math.exp(rng.uniform(0.1, 3)), 1.0]))
    conj = _random_sl2(rng)
    m = conj @ m @ conj.inverse()
    a, b = fixed_points(m)
    assert abs(a.multiplier * b.multiplier - 1) < 1e-9
    for fp in (a, b):
        assert np.allclose(np.abs(apply(m, fp.direction)), np.abs(fp.direction), atol=1e-9)
        assert math.isclose(multiplier_at(m, fp.direction), fp.multiplier, rel_tol=1e-8)


def test_determinant_drift_under_many_compositions(rng):
    steps = [MobiusMap.rotation(a) @ MobiusMap([[1.0, 1e-3], [0.0, 1.0]]) for a in rng.uniform(0, 1, 16)]
    m = MobiusMap.identity()
    for i in range(200_000):
        m = MobiusMap(m.matrix @ steps[i % 16].matrix)
    assert abs(m.det - 1) < 1e-8


def test_fit_three_recovers_map(rng):
    m = _random_sl2(rng)
    alphas = rng.uniform(-3, 3, 7)
    ins = [alpha_to_pair(a) for a in alphas]
    outs = [apply(m, w) for w in ins]
    fit = fit_three(ins[:3], outs[:3])
    for w, o in zip(ins[3:], outs[3:]):
        assert abs(math.sin(pair_to_alpha(apply(fit, w)) - pair_to_alpha(o))) < 1e-9


def test_lorentz_generator_structure():
    assert np.all(lorentz_generator(np.zeros(3)) == 0)
    c = lorentz_generator([1.0, 0.0])
    assert np.array_equal(c, [[0, 0, 1], [0, 0, 0], [1, 0, 0]])
    q = minkowski_form(2)
    v = np.array([0.3, -1.2])
    c = lorentz_generator(v)
    assert np.array_equal(c.T @ q + q @ c, np.zeros((3, 3)))


def test_exp_generator_keeps_null_cone():
    y = lorentz_exp([1.0, 0.0]) @ np.array([0.0, 1.0, 1.0])
    assert abs(y[0] ** 2 + y[1] ** 2 - y[2] ** 2) < 1e-12


def test_sphere_action_identity_and_first_order():
    r = np.array([0.0, 1.0, 0.0])
    assert np.allclose(sphere_action(np.eye(4), r), r)
    v = np.array([1.0, 0.0, 0.0])
    for s in (1e-2, 1e-3):
        got = sphere_action(lorentz_exp(v, s), r)
        assert np.linalg.norm(got - (r + s * v)) < 2 * s * s
        assert abs(np.linalg.norm(got) - 1) < 1e-12


def _random_lorentz(rng, n, k=4, s=0.5):
    m = np.eye(n + 1)
    for _ in range(k):
        m = lorentz_exp(rng.normal(size=n), s) @ m
    return m


def test_composition_stays_lorentz(rng):
    m = np.eye(4)
    for _ in range(200):
        m = relorentz(m @ _random_lorentz(rng, 3, k=1, s=0.05))
    assert lorentz_defect(m) < 1e-7


@given(st.integers(0, 10_000))
def test_sphere_action_preserves_cross_ratio(seed):
    rng = np.random.default_rng(seed)
    m = _random_lorentz(rng, 2)
    angles = np.sort(rng.uniform(0, 2 * np.pi, 4))
    if np.min(np.diff(angles)) < 0.05:
        return
    pts = [np.array([math.cos(a), math.sin(a)]) for a in angles]
    images = [sphere_action(m, p) for p in pts]
    out = [math.atan2(p[1], p[0]) for p in images]
    assert abs(cross_ratio(*angles) - cross_ratio(*out)) < 1e-7 * max(1.0, abs(cross_ratio(*angles)))
