"""Curve specifications and arclength-sampled curves.

Every analytic spec exposes ``jets(u, order)``: Taylor coefficients of the
parametrization at the parameter values ``u``, shape ``(order + 1, len(u), dim)``.
:func:`build_curve` turns any such parametrization into a :class:`SampledCurve`
sampled uniformly in arclength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.interpolate import CubicSpline

from .errors import CurveSpecError, UnderResolvedError, UnsupportedFrontError
from .jets import Jet, polyval

TAU_UNIT = 1e-9
TAU_WIND = 0.1
MIN_DENSITY = 64

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# Curve specifications
# ---------------------------------------------------------------------------


def _planar(x: Jet, y: Jet) -> Jet:
    return Jet.stack([x, y])


@dataclass(frozen=True)
class Circle:
    radius: float
    laps: int = 1

    closed = True

    def validate(self):
        if not self.radius > 0:
            raise CurveSpecError(f"radius must be positive, got {self.radius}")
        _check_laps(self.laps)

    @property
    def domain(self):
        return 0.0, 2 * math.pi * self.laps

    def jets(self, u, order):
        s, c = Jet.variable(u, order).sincos()
        return _planar(c * self.radius, s * self.radius)


@dataclass(frozen=True)
class Ellipse:
    a: float
    b: float
    laps: int = 1

    closed = True

    def validate(self):
        if not (self.a > 0 and self.b > 0):
            raise CurveSpecError(f"semi-axes must be positive, got {self.a}, {self.b}")
        _check_laps(self.laps)

    @property
    def domain(self):
        return 0.0, 2 * math.pi * self.laps

    def jets(self, u, order):
        s, c = Jet.variable(u, order).sincos()
        return _planar(c * self.a, s * self.b)


@dataclass(frozen=True)
class PolarOval:
    """``r(t) = scale * c0 * (1 + sum_k sin_coeffs[k-1] sin kt + cos_coeffs[k-1] cos kt)``."""

    c0: float
    sin_coeffs: tuple = ()
    cos_coeffs: tuple = ()
    scale: float = 1.0
    laps: int = 1

    closed = True

    def radius(self, t):
        t = np.asarray(t, dtype=float)
        r = np.ones_like(t)
        for k, a in enumerate(self.sin_coeffs, start=1):
            r = r + a * np.sin(k * t)
        for k, b in enumerate(self.cos_coeffs, start=1):
            r = r + b * np.cos(k * t)
        return self.scale * self.c0 * r

    def validate(self):
        if not self.scale > 0:
            raise CurveSpecError("scale must be positive")
        _check_laps(self.laps)
        t = np.linspace(0, 2 * math.pi, 8193)
        if np.min(self.radius(t)) <= 0:
            raise CurveSpecError("polar radius r(t) must stay positive on [0, 2pi]")

    @property
    def domain(self):
        return 0.0, 2 * math.pi * self.laps

    def jets(self, u, order):
        t = Jet.variable(u, order)
        r = Jet.constant(np.ones(np.shape(u)), order)
        for k, a in enumerate(self.sin_coeffs, start=1):
            r = r + (t * k).sin() * a
        for k, b in enumerate(self.cos_coeffs, start=1):
            r = r + (t * k).cos() * b
        r = r * (self.scale * self.c0)
        s, c = t.sincos()
        return _planar(r * c, r * s)


def shamrock() -> PolarOval:
    """The three-lobed oval ``r = 0.94 (1 - 0.5 sin 3t)``."""
    return PolarOval(0.94, sin_coeffs=(0.0, 0.0, -0.5))


@dataclass(frozen=True)
class SupportOval:
    """Convex oval with support function ``p = c0 + sum_k cos_coeffs[k] cos k th + sin_coeffs[k] sin k th``.

    Coefficient tuples start at harmonic ``k = 2``. The parameter is the angle
    of the outward normal.
    """

    c0: float
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()
    laps: int = 1

    closed = True

    def radius_of_curvature(self, th):
        th = np.asarray(th, dtype=float)
        rho = np.full_like(th, self.c0)
        for k, a in enumerate(self.cos_coeffs, start=2):
            rho = rho + (1 - k * k) * a * np.cos(k * th)
        for k, b in enumerate(self.sin_coeffs, start=2):
            rho = rho + (1 - k * k) * b * np.sin(k * th)
        return rho

    def validate(self):
        _check_laps(self.laps)
        th = np.linspace(0, 2 * math.pi, 8193)
        if np.min(self.radius_of_curvature(th)) <= 0:
            raise CurveSpecError("support function must satisfy p + p'' > 0")

    def area(self) -> float:
        quad = sum((1 - k * k) * a * a for k, a in enumerate(self.cos_coeffs, start=2))
        quad += sum((1 - k * k) * b * b for k, b in enumerate(self.sin_coeffs, start=2))
        return math.pi * self.c0**2 + 0.5 * math.pi * quad

    @property
    def domain(self):
        return 0.0, 2 * math.pi * self.laps

    def jets(self, u, order):
        th = Jet.variable(u, order + 1)
        p = Jet.constant(np.full(np.shape(u), float(self.c0)), order + 1)
        for k, a in enumerate(self.cos_coeffs, start=2):
            p = p + (th * k).cos() * a
        for k, b in enumerate(self.sin_coeffs, start=2):
            p = p + (th * k).sin() * b
        dp = p.deriv()
        th = th.truncate(order)
        p = p.truncate(order)
        s, c = th.sincos()
        return _planar(p * c - dp * s, p * s + dp * c)


def rounded_square(c0: float = 1.0, depth: float = 0.06) -> SupportOval:
    """Squarish oval: fourth support harmonic pulls the sides in."""
    return SupportOval(c0, cos_coeffs=(0.0, 0.0, -depth))


@dataclass(frozen=True)
class PolyGraph:
    """Graph of ``y = sum coeffs[i] x**i`` over ``x in [0, 1]``."""

    coeffs: tuple

    closed = False
    domain = (0.0, 1.0)

    def validate(self):
        if len(self.coeffs) == 0:
            raise CurveSpecError("empty polynomial")
        ends = npoly.polyval([0.0, 1.0], self.coeffs)
        if np.max(np.abs(ends)) > 1e-12:
            raise CurveSpecError("polynomial graph must vanish at x = 0 and x = 1")

    def jets(self, u, order):
        # Horner in t = x - 1/2: far better conditioned on [0, 1] than the monomial form
        centered = npoly.Polynomial(self.coeffs)(npoly.Polynomial([0.5, 1.0])).coef
        x = Jet.variable(u, order)
        return _planar(x, polyval(list(centered), x - 0.5))


def finn_seed(power: int = 6) -> PolyGraph:
    """``y = 4**p x**p (1 - x)**p``: unit height, contact of order ``p`` at both ends."""
    coeffs = npoly.polypow([0.0, 1.0, -1.0], power) * 4.0**power
    return PolyGraph(tuple(float(c) for c in coeffs))


@dataclass(frozen=True)
class BumpGraph:
    """``y = amplitude * exp(-width / (x (1 - x)))`` on ``(0, 1)``, zero at the ends.

    Flat to all orders at both endpoints.
    """

    amplitude: float
    width: float = 1.0

    closed = False
    domain = (0.0, 1.0)

    def validate(self):
        if not self.width > 0:
            raise CurveSpecError("bump width must be positive")

    def jets(self, u, order):
        u = np.asarray(u, dtype=float)
        x = Jet.variable(u, order)
        inside = (u > 0) & (u < 1)
        safe = np.where(inside, u, 0.5)
        xs = Jet.variable(safe, order)
        g = (xs * (1.0 - xs)).reciprocal() * (-self.width)
        y = g.exp() * self.amplitude
        y = Jet(np.where(inside, y.c, 0.0))
        return _planar(x, y)


@dataclass(frozen=True)
class TorusKnot:
    """``((R + r cos qt) cos pt, (R + r cos qt) sin pt, r sin qt)``."""

    p: int = 2
    q: int = 3
    R: float = 1.0
    r: float = 0.4

    closed = True
    domain = (0.0, 2 * math.pi)

    def validate(self):
        if not (self.R > self.r > 0):
            raise CurveSpecError("torus knot needs R > r > 0")

    def jets(self, u, order):
        t = Jet.variable(u, order)
        sp, cp = (t * self.p).sincos()
        sq, cq = (t * self.q).sincos()
        rad = cq * self.r + self.R
        return Jet.stack([rad * cp, rad * sp, sq * self.r])


class _SplineParam:
    """Chord-length cubic-spline parametrization through given points."""

    def __init__(self, points: np.ndarray, closed: bool, linear: bool = False):
        pts = np.asarray(points, dtype=float)
        if closed and np.linalg.norm(pts[0] - pts[-1]) > 0:
            pts = np.vstack([pts, pts[:1]])
        chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(chords == 0):
            raise CurveSpecError("repeated consecutive points")
        knots = np.concatenate([[0.0], np.cumsum(chords)])
        self.closed = closed
        self.linear = linear
        self.domain = (0.0, float(knots[-1]))
        self._knots = knots
        self._pts = pts
        if not linear:
            self._spline = CubicSpline(knots, pts, bc_type="periodic" if closed else "not-a-knot")

    def jets(self, u, order):
        u = np.asarray(u, dtype=float)
        c = np.zeros((order + 1,) + u.shape + (self._pts.shape[1],))
        if self.linear:
            idx = np.clip(np.searchsorted(self._knots, u, side="right") - 1, 0, len(self._knots) - 2)
            seg = self._pts[idx + 1] - self._pts[idx]
            h = (self._knots[idx + 1] - self._knots[idx])[:, None]
            c[0] = self._pts[idx] + seg * ((u - self._knots[idx])[:, None] / h)
            if order >= 1:
                c[1] = seg / h
            return Jet(c)
        for k in range(min(order, 3) + 1):
            c[k] = self._spline(u, k) / math.factorial(k)
        return Jet(c)


@dataclass(frozen=True)
class Polyline:
    """Piecewise-linear open curve through the vertices (meant for straight runs)."""

    vertices: tuple

    closed = False

    def validate(self):
        if len(self.vertices) < 2:
            raise CurveSpecError("polyline needs at least two vertices")

    def parametrization(self):
        return _SplineParam(np.asarray(self.vertices, dtype=float), False, linear=True)


@dataclass(frozen=True)
class Samples:
    """Dense point samples of a smooth curve (any dimension)."""

    points: tuple
    closed: bool = True

    def validate(self):
        if len(self.points) < 4:
            raise CurveSpecError("need at least 4 sample points")

    def parametrization(self):
        return _SplineParam(np.asarray(self.points, dtype=float), self.closed)


def _check_laps(laps):
    if not (isinstance(laps, (int, np.integer)) and laps >= 1):
        raise CurveSpecError(f"laps must be a positive integer, got {laps!r}")


# ---------------------------------------------------------------------------
# Sampled curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """Curve sampled uniformly in arclength.

    Closed curves repeat the first sample at the end, so ``points[-1] == points[0]``.
    ``source`` keeps the parametrization the samples came from (if any) and ``u``
    the parameter value of each sample; both are optional.
    """

    points: np.ndarray
    tangents: np.ndarray
    curvature: Optional[np.ndarray]
    cum_arclength: np.ndarray
    closed: bool
    source: object = field(default=None, repr=False)
    u: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def total_length(self) -> float:
        return float(self.cum_arclength[-1])

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def planar(self) -> bool:
        return self.dim == 2

    def __len__(self):
        return len(self.points)

    def scaled(self, s: float) -> "SampledCurve":
        return SampledCurve(
            self.points * s,
            self.tangents,
            None if self.curvature is None else self.curvature / s,
            self.cum_arclength * s,
            self.closed,
            None if self.source is None else _ScaledParam(self.source, s),
            self.u,
        )

    def reversed(self) -> "SampledCurve":
        return SampledCurve(
            self.points[::-1].copy(),
            -self.tangents[::-1],
            None if self.curvature is None else -self.curvature[::-1],
            self.total_length - self.cum_arclength[::-1],
            self.closed,
        )

    def embedded(self, dim: int) -> "SampledCurve":
        """Pad coordinates with zeros, e.g. a planar curve placed in R^3."""
        pad = dim - self.dim
        return SampledCurve(
            np.pad(self.points, ((0, 0), (0, pad))),
            np.pad(self.tangents, ((0, 0), (0, pad))),
            None,
            self.cum_arclength,
            self.closed,
        )

    def _spline(self, values):
        bc = "periodic" if self.closed else "not-a-knot"
        return CubicSpline(self.cum_arclength, values, bc_type=bc)

    @cached_property
    def _point_spline(self):
        return self._spline(self.points)

    @cached_property
    def _tangent_spline(self):
        return self._spline(self.tangents)

    @cached_property
    def _curvature_spline(self):
        if self.curvature is None:
            raise UnsupportedFrontError("curvature is only defined for planar curves")
        return self._spline(self.curvature)

    def _wrap(self, x):
        x = np.asarray(x, dtype=float)
        if self.closed:
            return np.mod(x, self.total_length)
        return x

    def point_at(self, x):
        return self._point_spline(self._wrap(x))

    def tangent_at(self, x):
        t = self._tangent_spline(self._wrap(x))
        return t / np.linalg.norm(t, axis=-1, keepdims=True)

    def curvature_at(self, x):
        return self._curvature_spline(self._wrap(x))


class _ScaledParam:
    def __init__(self, base, s):
        self.base = base
        self.s = s
        self.closed = base.closed
        self.domain = base.domain

    def jets(self, u, order):
        return self.base.jets(u, order) * self.s


def _parametrization(spec):
    if hasattr(spec, "parametrization"):
        return spec.parametrization()
    return spec


def _speed(param, u):
    return np.linalg.norm(param.jets(u, 1).c[1], axis=-1)


def _gl_integral(param, a, b):
    """Gauss-Legendre integral of the speed over each ``[a_i, b_i]``."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    sp = _speed(param, nodes.ravel()).reshape(nodes.shape)
    return half * (sp @ _GL_WEIGHTS)


def arclength_table(param, panels: int):
    u0, u1 = param.domain
    edges = np.linspace(u0, u1, panels + 1)
    cum = np.concatenate([[0.0], np.cumsum(_gl_integral(param, edges[:-1], edges[1:]))])
    return edges, cum


def build_from_parametrization(param, density: int, closed: Optional[bool] = None) -> SampledCurve:
    """Sample ``param`` uniformly in arclength with roughly ``density`` points per unit length."""
    if closed is None:
        closed = param.closed
    u0, u1 = param.domain
    probe = param.jets(np.linspace(u0, u1, 2049), 0).c[0]
    rough = float(np.sum(np.linalg.norm(np.diff(probe, axis=0), axis=1)))
    panels = max(256, int(math.ceil(density * rough)))
    edges, cum = arclength_table(param, panels)
    length = float(cum[-1])
    if not length > 0:
        raise CurveSpecError("curve has zero length")
    n = max(int(math.ceil(density * length)), 4)
    targets = np.linspace(0.0, length, n + 1)

    j = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, panels - 1)
    lo, hi = edges[j], edges[j + 1]
    frac = (targets - cum[j]) / (cum[j + 1] - cum[j])
    u = lo + frac * (hi - lo)
    for _ in range(30):
        resid = cum[j] + _gl_integral(param, lo, u) - targets
        step = resid / _speed(param, u)
        u = np.clip(u - step, lo, hi)
        if np.max(np.abs(step)) < 1e-15 * max(1.0, abs(u1 - u0)):
            break
    u[0], u[-1] = u0, u1

    d = param.jets(u, 2).derivatives()
    pts, d1, d2 = d[0], d[1], d[2]
    speed = np.linalg.norm(d1, axis=-1)
    tangents = d1 / speed[:, None]
    curvature = None
    if pts.shape[1] == 2:
        curvature = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    if closed:
        pts[-1] = pts[0]
        tangents[-1] = tangents[0]
        if curvature is not None:
            curvature[-1] = curvature[0]
    return SampledCurve(pts, tangents, curvature, targets, closed, param, u)


def _finite_difference_geometry(points: np.ndarray, h: float, closed: bool):
    """Five-point stencils for the first and second arclength derivatives."""
    if closed:
        p = points[:-1]
        pm2, pm1, pp1, pp2 = (np.roll(p, s, axis=0) for s in (2, 1, -1, -2))
        d1 = (-pp2 + 8 * pp1 - 8 * pm1 + pm2) / (12 * h)
        d2 = (-pp2 + 16 * pp1 - 30 * p + 16 * pm1 - pm2) / (12 * h * h)
        d1 = np.vstack([d1, d1[:1]])
        d2 = np.vstack([d2, d2[:1]])
    else:
        d1 = np.gradient(points, h, axis=0, edge_order=2)
        d2 = np.gradient(d1, h, axis=0, edge_order=2)
        p = points
        inner = slice(2, len(p) - 2)
        d1[inner] = (-p[4:] + 8 * p[3:-1] - 8 * p[1:-3] + p[:-4]) / (12 * h)
        d2[inner] = (-p[4:] + 16 * p[3:-1] - 30 * p[2:-2] + 16 * p[1:-3] - p[:-4]) / (12 * h * h)
    return d1, d2


def build_curve(spec, samples_per_unit_length: int = 256) -> SampledCurve:
    """Arclength-sampled curve for a spec (analytic derivatives where available)."""
    if samples_per_unit_length < MIN_DENSITY:
        raise CurveSpecError(f"sampling density must be >= {MIN_DENSITY}")
    spec.validate()
    param = _parametrization(spec)
    curve = build_from_parametrization(param, samples_per_unit_length, spec.closed)
    if isinstance(spec, (Samples, Polyline)):
        h = curve.cum_arclength[1] - curve.cum_arclength[0]
        d1, d2 = _finite_difference_geometry(curve.points, h, curve.closed)
        speed = np.linalg.norm(d1, axis=1)
        tangents = d1 / speed[:, None]
        curvature = None
        if curve.planar:
            curvature = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
        curve = SampledCurve(curve.points, tangents, curvature, curve.cum_arclength, curve.closed)
    return curve


# ---------------------------------------------------------------------------
# Winding, area, support functions
# ---------------------------------------------------------------------------


def tangent_angles(curve: SampledCurve) -> np.ndarray:
    """Unwrapped tangent direction angle at each sample."""
    if not curve.planar:
        raise UnsupportedFrontError("tangent angles need a planar curve")
    t = curve.tangents
    steps = np.arctan2(t[:-1, 0] * t[1:, 1] - t[:-1, 1] * t[1:, 0], np.sum(t[:-1] * t[1:], axis=1))
    start = math.atan2(t[0, 1], t[0, 0])
    return start + np.concatenate([[0.0], np.cumsum(steps)])


def total_turning(curve: SampledCurve) -> float:
    ang = tangent_angles(curve)
    return float(ang[-1] - ang[0])


def rotation_number(curve: SampledCurve) -> int:
    """Number of turns of the tangent of a closed planar curve."""
    if not curve.closed:
        raise UnsupportedFrontError("rotation number needs a closed curve")
    turns = total_turning(curve) / (2 * math.pi)
    rho = round(turns)
    if abs(turns - rho) >= TAU_WIND:
        raise UnderResolvedError(f"turning {turns:.3f} turns is not near an integer; refine sampling")
    return int(rho)


def enclosed_area(curve: SampledCurve) -> float:
    """Signed area ``1/2 \\oint P x T ds`` (periodic trapezoid, uniform arclength)."""
    if not (curve.closed and curve.planar):
        raise UnsupportedFrontError("area needs a closed planar curve")
    p = curve.points[:-1]
    t = curve.tangents[:-1]
    h = curve.total_length / len(p)
    return 0.5 * h * float(np.sum(p[:, 0] * t[:, 1] - p[:, 1] * t[:, 0]))


def centroid(curve: SampledCurve) -> np.ndarray:
    pts = curve.points[:-1] if curve.closed else curve.points
    return pts.mean(axis=0)


@dataclass(frozen=True)
class SupportFunction:
    """``p`` and ``p'`` on the uniform grid ``phi`` over ``[0, 2 pi)``.

    ``phi`` is the direction angle of the oriented tangent line; the outward
    normal is ``(sin phi, -cos phi)``.
    """

    phi: np.ndarray
    p: np.ndarray
    dp: np.ndarray

    @classmethod
    def from_function(cls, p, dp, n: int = 1024) -> "SupportFunction":
        phi = 2 * math.pi * np.arange(n) / n
        return cls(phi, np.asarray(p(phi), dtype=float), np.asarray(dp(phi), dtype=float))

    def reconstruct(self) -> np.ndarray:
        """Curve point for each grid direction: ``p n(phi) + p' t(phi)``."""
        s, c = np.sin(self.phi), np.cos(self.phi)
        return np.column_stack([self.p * s + self.dp * c, -self.p * c + self.dp * s])


def support_from_points(points: np.ndarray, phi: np.ndarray, origin, n: int = 1024) -> SupportFunction:
    """Support function of a front from samples and its unwrapped tangent-line angles.

    ``phi`` must increase strictly through exactly one turn, with the last
    sample closing the curve.
    """
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.diff(phi) > 0):
        raise UnsupportedFrontError("tangent direction is not monotone (front has inflections)")
    if abs(phi[-1] - phi[0] - 2 * math.pi) > 1e-6:
        raise UnsupportedFrontError("front must make exactly one positive turn")
    rel = np.asarray(points, dtype=float) - np.asarray(origin, dtype=float)
    s, c = np.sin(phi), np.cos(phi)
    p = rel[:, 0] * s - rel[:, 1] * c
    dp = rel[:, 0] * c + rel[:, 1] * s
    p[-1], dp[-1] = p[0], dp[0]
    grid = 2 * math.pi * np.arange(n) / n
    where = phi[0] + np.mod(grid - phi[0], 2 * math.pi)
    p_grid = CubicSpline(phi, p, bc_type="periodic")(where)
    dp_grid = CubicSpline(phi, dp, bc_type="periodic")(where)
    return SupportFunction(grid, p_grid, dp_grid)


def support_function(curve: SampledCurve, n: int = 1024) -> SupportFunction:
    """Support function of a closed convex planar curve about its centroid."""
    if not (curve.closed and curve.planar):
        raise UnsupportedFrontError("support function needs a closed planar curve")
    k = curve.curvature
    if k is not None and np.min(k) < 0 < np.max(k):
        raise UnsupportedFrontError("curvature changes sign: inflections present")
    if rotation_number(curve) != 1:
        raise UnsupportedFrontError("support function needs rotation number 1")
    return support_from_points(curve.points, tangent_angles(curve), centroid(curve), n)


def support_length_area(sf: SupportFunction) -> tuple[float, float]:
    """Length ``int p`` and area ``1/2 int (p^2 - p'^2)`` by the periodic trapezoid rule."""
    h = 2 * math.pi / len(sf.phi)
    length = h * float(np.sum(sf.p))
    area = 0.5 * h * float(np.sum(sf.p**2 - sf.dp**2))
    return length, area
