import math

import numpy as np
import pytest

from bicycle_tracks import mobius
from bicycle_tracks.bikeflow import BikeConfig, closed_rear_tracks, integrate_alpha, monodromy_2d, rear_track
from bicycle_tracks.errors import UnsupportedFrontError
from bicycle_tracks.experiments import bisect_parabolic
from bicycle_tracks.frontstats import (
    area_bookkeeping,
    cusp_signs,
    inflection_check,
    rotation_relation_check,
    signed_area,
    wavefront_from_path,
    wavefront_support,
)
from bicycle_tracks.geom import Ellipse, Polyline, build_curve, build_from_parametrization, support_length_area
from bicycle_tracks.jets import Jet
from bicycle_tracks.mobius import MobiusKind, classify

CFG = BikeConfig()


class Hedgehog:
    """Front track whose rear is the hedgehog with support ``a cos 3 phi``."""

    closed = True
    domain = (0.0, 2 * math.pi)

    def __init__(self, a, ell=1.0):
        self.a, self.ell = a, ell

    def jets(self, u, order):
        phi = Jet.variable(u, order)
        s, c = phi.sincos()
        s3, c3 = (phi * 3.0).sincos()
        p, dp = c3 * self.a, s3 * (-3 * self.a)
        x = p * s + dp * c + c * self.ell
        y = dp * s - p * c + s * self.ell
        return Jet.stack([x, y])


def test_circle_rear_area_and_bookkeeping(circle2):
    for r in closed_rear_tracks(circle2, CFG):
        wf = r.wavefront
        assert math.isclose(signed_area(wf), 3 * math.pi, rel_tol=1e-10)
        book = area_bookkeeping(wf, circle2)
        assert abs(book.residual) < 1e-9
        assert math.isclose(book.turning_sum, 2 * math.pi, rel_tol=1e-10)


def test_shamrock_rears(shamrock_curve):
    rears = closed_rear_tracks(shamrock_curve, CFG)
    assert len(rears) == 2
    lengths = sorted(r.wavefront.signed_length for r in rears)
    assert np.allclose(lengths, [-1.83048, 1.83048], atol=5e-5)
    for r in rears:
        wf = r.wavefront
        assert wf.cusp_count == 6 and wf.maslov == 0
        signs = cusp_signs(wf)
        assert all(a == -b for a, b in zip(signs, signs[1:]))
        assert inflection_check(wf)
        assert abs(area_bookkeeping(wf, shamrock_curve).residual) < 1e-6


@pytest.mark.parametrize("which", [0, 1])
def test_rotation_relation(shamrock_curve, circle2, which):
    for front in (circle2, shamrock_curve):
        wf = closed_rear_tracks(front, CFG)[which].wavefront
        rc = rotation_relation_check(wf, front)
        assert abs(rc.residual) < 1e-9
        assert rc.rho_front == 1


def test_support_function_of_rear_front(shamrock_curve):
    for r in closed_rear_tracks(shamrock_curve, CFG):
        wf = r.wavefront
        length, area = support_length_area(wavefront_support(wf, 2048))
        assert abs(length - wf.signed_length) < 1e-6
        assert abs(area - wf.signed_area) < 1e-6


def test_parabolic_ellipse_neutral_front():
    rep = bisect_parabolic(Ellipse(2, 1), (0.5, 1.0), CFG)
    assert abs(rep.signed_length) < 1e-6
    assert rep.cusp_count == 4 and rep.maslov == 0
    assert rep.wavefront.closed
    length, area = support_length_area(wavefront_support(rep.wavefront, 2048))
    assert abs(length) < 1e-6
    assert abs(area - rep.signed_area) < 1e-6


def test_hedgehog_front_is_parabolic():
    front = build_from_parametrization(Hedgehog(0.3), 256, True)
    m = monodromy_2d(front, CFG)
    assert classify(m).kind is MobiusKind.PARABOLIC
    a0 = mobius.pair_to_alpha(mobius.neutral_direction(m))
    wf = rear_track(front, a0, CFG)
    assert wf.closed
    assert abs(wf.signed_length) < 1e-7
    assert wf.cusp_count == 6 and wf.maslov == 0
    # rear is the hedgehog itself: support a cos 3 phi about the origin
    phi = np.linspace(0, 2 * np.pi, 40001)
    p, dp = 0.3 * np.cos(3 * phi), -0.9 * np.sin(3 * phi)
    hedgehog = np.column_stack([p * np.sin(phi) + dp * np.cos(phi), dp * np.sin(phi) - p * np.cos(phi)])
    pts = wf.points[::8]
    gap = np.min(np.linalg.norm(pts[:, None] - hedgehog[None], axis=2), axis=1)
    assert np.max(gap) < 2e-4


def test_open_front_has_no_signed_area():
    line = build_curve(Polyline(((0.0, 0.0), (4.0, 0.0))))
    wf = wavefront_from_path(integrate_alpha(line, 2.0, CFG))
    assert wf.cusp_count == 1
    assert not wf.closed
    with pytest.raises(UnsupportedFrontError):
        signed_area(wf)
    with pytest.raises(UnsupportedFrontError):
        wavefront_support(wf)


def test_cusp_positions_on_straight_front():
    # tan(alpha/2) = tan(alpha0/2) e^{-x}: the cusp sits where alpha = pi/2
    line = build_curve(Polyline(((0.0, 0.0), (4.0, 0.0))))
    a0 = 2.5
    wf = wavefront_from_path(integrate_alpha(line, a0, CFG))
    (c,) = wf.cusps
    assert abs(c.x - math.log(math.tan(a0 / 2))) < 1e-9
