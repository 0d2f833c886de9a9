"""Unicycle tracks by iterating the forward bicycle map, and the linkage picture.

A seed graph on ``[0, 1]`` with flat contact at both ends is pushed forward by
``T(g) = g + g'/|g'|`` (unit bike). Segment ``k`` is ``T^k`` of the seed,
parametrized by the seed abscissa ``u``; consecutive segments meet at
``(k + 1, 0)``. Vertex ``i`` of the associated linkage at seed parameter ``u``
is segment ``i`` evaluated at ``u``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .bikeflow import _ForwardParam
from .errors import CurveSpecError, LinkageError, UnderResolvedError
from .geom import BumpGraph, PolyGraph, SampledCurve, build_from_parametrization
from .jets import Jet, polyval

log = logging.getLogger(__name__)

TAU_JOIN = 1e-6
TAU_LINK = 1e-9
C_MIN = 1e-3
T_MAX = 1e6
ZERO_REL = 1e-9


# ---------------------------------------------------------------------------
# Sign-change counting
# ---------------------------------------------------------------------------


class Count(int):
    """Integer count carrying a ``degenerate`` flag."""

    degenerate: bool

    def __new__(cls, value: int, degenerate: bool = False):
        obj = super().__new__(cls, value)
        obj.degenerate = degenerate
        return obj


def _significant_signs(values: np.ndarray, rel: float = ZERO_REL):
    """Signs of samples above ``rel * max|values|`` with their indices."""
    scale = float(np.max(np.abs(values))) if len(values) else 0.0
    if scale == 0.0:
        return None, None
    keep = np.abs(values) >= rel * scale
    idx = np.flatnonzero(keep)
    return idx, np.sign(values[idx])


def _sign_changes(values: np.ndarray, rel: float = ZERO_REL):
    """Index pairs ``(i, j)`` bracketing each sign change; small samples are skipped."""
    idx, s = _significant_signs(values, rel)
    if idx is None:
        return None
    flips = np.flatnonzero(s[1:] != s[:-1])
    return [(int(idx[f]), int(idx[f + 1])) for f in flips]


def count_zeros(segment: SampledCurve) -> Count:
    """Transversal crossings of the x-axis in the open interior of a segment."""
    y = segment.points[1:-1, 1]
    changes = _sign_changes(y)
    if changes is None:
        return Count(0, True)
    return Count(len(changes))


def count_extrema(segment: SampledCurve) -> Count:
    """Interior local extrema of the height (sign changes of ``dy/ds``).

    A flat run of ``dy/ds`` between two signs counts once, and only when the sign flips.
    """
    dy = segment.tangents[1:-1, 1]
    changes = _sign_changes(dy)
    if changes is None:
        return Count(0, True)
    return Count(len(changes))


def backward_obstruction(zeros: int) -> int:
    """Bound ``n + 1`` on backward iterations for a segment with ``n`` axis crossings."""
    if zeros < 0:
        raise ValueError("zero count must be nonnegative")
    return int(zeros) + 1


def _segment_splines(segment: SampledCurve):
    s = segment.cum_arclength
    from scipy.interpolate import CubicSpline

    return CubicSpline(s, segment.points[:, 1]), CubicSpline(s, segment.tangents[:, 1])


def axis_crossings(segment: SampledCurve) -> list[float]:
    """Arclength positions of the interior axis crossings (root-polished)."""
    y_sp, _ = _segment_splines(segment)
    s = segment.cum_arclength
    y = segment.points[:, 1]
    out = []
    for i, j in _sign_changes(y[1:-1]) or []:
        out.append(float(brentq(y_sp, s[i + 1], s[j + 1], xtol=1e-14)))
    return out


@dataclass(frozen=True)
class RolleResult:
    witnesses: list
    crossings: list
    degenerate: bool = False
    missing: list = field(default_factory=list)
    residual: float = 0.0  # max |height of T(segment)| at the witnesses, relative to max|y|

    @property
    def complete(self) -> bool:
        return not self.degenerate and not self.missing


def rolle_witness(segment: SampledCurve, ell: float = 1.0) -> RolleResult:
    """Points between consecutive axis crossings where ``(e^{s/ell} y)' = 0``.

    There the front wheel ``y + ell y'`` sits on the axis, which is the mechanism
    forcing at least one new crossing per iteration.
    """
    y = segment.points[:, 1]
    scale = float(np.max(np.abs(y)))
    if scale == 0.0:
        return RolleResult([], [], degenerate=True)
    s = segment.cum_arclength
    ends = [float(s[0])] + axis_crossings(segment) + [float(s[-1])]
    g = y + ell * segment.tangents[:, 1]
    y_sp, dy_sp = _segment_splines(segment)

    def g_at(t):
        return y_sp(t) + ell * dy_sp(t)

    witnesses, missing = [], []
    for a, b in zip(ends[:-1], ends[1:]):
        inside = np.flatnonzero((s > a) & (s < b))
        found = None
        if inside.size:
            changes = _sign_changes(g[inside], ZERO_REL) or []
            # the witness where e^s y peaks: largest jump in g across the flip
            best = -1.0
            for i, j in changes:
                lo, hi = s[inside[i]], s[inside[j]]
                jump = abs(g[inside[i]]) + abs(g[inside[j]])
                if jump > best:
                    best = jump
                    found = float(brentq(g_at, lo, hi, xtol=1e-14))
        if found is None:
            missing.append((a, b))
        else:
            witnesses.append(found)
    resid = max((abs(float(g_at(t))) for t in witnesses), default=0.0) / scale
    if missing:
        log.warning("Rolle witness not resolved in %d interval(s)", len(missing))
    return RolleResult(witnesses, ends, False, missing, resid)


# ---------------------------------------------------------------------------
# Iterated tracks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SegmentMetrics:
    k: int
    length: float
    zeros: int
    extrema: int
    max_abs_y: float
    max_abs_kappa: float
    min_y: float
    max_y: float
    graph: bool  # x increases along the segment
    next_length: float = math.nan  # integral of sqrt(1 + (ell kappa)^2) ds, filled once the next segment exists


@dataclass
class UnicycleTrack:
    segments: list
    metrics: list
    ell: float
    requested: int
    join_residuals: list = field(default_factory=list)
    diagnostic: Optional[str] = None

    @property
    def achieved(self) -> int:
        """Number of iterations actually computed."""
        return len(self.segments) - 1

    @property
    def truncated(self) -> bool:
        return self.achieved < self.requested

    def zeros(self) -> list[int]:
        return [m.zeros for m in self.metrics]

    def extrema(self) -> list[int]:
        return [m.extrema for m in self.metrics]

    def length_residuals(self) -> list[float]:
        """Relative mismatch between each segment's length and the prediction from its predecessor."""
        out = []
        for prev, cur in zip(self.metrics, self.metrics[1:]):
            out.append(abs(cur.length - prev.next_length) / cur.length)
        return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def adaptive_integral(f, a: float, b: float, rtol: float = 1e-10, max_depth: int = 40, panels: int = 64) -> float:
    """Vectorized adaptive Gauss-Legendre quadrature of ``f`` over ``[a, b]``.

    A panel is accepted once its 10-point value agrees with the sum over its halves.
    """

    def rule(lo, hi):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        return half * (f(nodes.ravel()).reshape(nodes.shape) @ _GL_W)

    if a == b:
        return 0.0
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1], edges[1:]
    whole = rule(lo, hi)
    total = 0.0
    scale = abs(float(np.sum(whole)))
    for _ in range(max_depth):
        mid = 0.5 * (lo + hi)
        left, right = rule(lo, mid), rule(mid, hi)
        split = left + right
        tol = np.maximum(rtol * scale * (hi - lo) / (b - a), 1e-11 * np.abs(split))
        bad = np.abs(split - whole) > tol
        total += float(np.sum(split[~bad]))
        if not np.any(bad):
            return total
        if np.count_nonzero(bad) > 200_000:
            break
        lo = np.concatenate([lo[bad], mid[bad]])
        hi = np.concatenate([mid[bad], hi[bad]])
        whole = np.concatenate([left[bad], right[bad]])
    raise UnderResolvedError("adaptive quadrature did not converge")


def _speed_and_curvature(param, u):
    d = param.jets(u, 2).derivatives()
    d1, d2 = d[1], d[2]
    speed = np.linalg.norm(d1, axis=-1)
    kappa = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    return speed, kappa


def exact_length(param) -> float:
    u0, u1 = param.domain
    return adaptive_integral(lambda u: _speed_and_curvature(param, u)[0], u0, u1)


def forward_length(param, ell: float = 1.0) -> float:
    """``int sqrt(1 + (ell kappa)^2) ds`` over a segment: the length of its forward image."""
    u0, u1 = param.domain

    def f(u):
        sp, k = _speed_and_curvature(param, u)
        return sp * np.sqrt(1.0 + (ell * k) ** 2)

    return adaptive_integral(f, u0, u1)


def segment_metrics(k: int, seg: SampledCurve, ell: float = 1.0) -> SegmentMetrics:
    y = seg.points[:, 1]
    kap = seg.curvature
    length = seg.total_length
    return SegmentMetrics(
        k=k,
        length=length,
        zeros=int(count_zeros(seg)),
        extrema=int(count_extrema(seg)),
        max_abs_y=float(np.max(np.abs(y))),
        max_abs_kappa=float(np.max(np.abs(kap))),
        min_y=float(np.min(y)),
        max_y=float(np.max(y)),
        graph=bool(np.all(seg.tangents[1:-1, 0] > 0)),
    )


def _predicted_length(seg: SampledCurve, ell: float) -> float:
    if seg.source is not None:
        try:
            return forward_length(seg.source, ell)
        except UnderResolvedError:
            log.warning("length integral under-resolved; falling back to samples")
    return float(simpson(np.sqrt(1.0 + (ell * seg.curvature) ** 2), x=seg.cum_arclength))


def _join_residual(a: SampledCurve, b: SampledCurve) -> float:
    dp = np.linalg.norm(a.points[-1] - b.points[0])
    dt = np.linalg.norm(a.tangents[-1] - b.tangents[0])
    return float(max(dp, dt))


def _endpoint_residual(seg: SampledCurve, k: int, ell: float) -> float:
    want = np.array([[k * ell, 0.0], [(k + 1) * ell, 0.0]])
    return float(np.max(np.abs(seg.points[[0, -1]] - want)))


def iterate_track(seed, k_max: int, ell: float = 1.0, density: int = 256) -> UnicycleTrack:
    """Segments ``T^0(seed), ..., T^k(seed)`` with per-segment metrics.

    Iteration stops early (with a diagnostic) once consecutive segments stop
    joining to first order, which happens for seeds with finite-order contact.
    """
    if not isinstance(seed, (PolyGraph, BumpGraph)):
        raise CurveSpecError("Finn seeds are PolyGraph or BumpGraph specs")
    if k_max < 1:
        raise ValueError("k_max must be a positive integer")
    seed.validate()
    if ell != 1.0:
        raise CurveSpecError("seed graphs span [0, 1]; use ell = 1")
    param = seed
    segments, metrics, joins = [], [], []
    diagnostic = None
    for k in range(k_max + 1):
        seg = build_from_parametrization(param, density, closed=False)
        end_err = _endpoint_residual(seg, k, ell)
        join = _join_residual(segments[-1], seg) if segments else 0.0
        if max(end_err, join) > TAU_JOIN or not np.all(np.isfinite(seg.points)):
            diagnostic = (
                f"iteration {k} breaks the C1 join (join residual {join:.3g}, "
                f"endpoint residual {end_err:.3g}); stopped after {k - 1} iterations"
            )
            log.info(diagnostic)
            break
        if metrics:
            metrics[-1] = replace(metrics[-1], next_length=_predicted_length(segments[-1], ell))
        segments.append(seg)
        joins.append(join)
        m = segment_metrics(k, seg, ell)
        metrics.append(m)
        log.debug("segment %d: length %.6g Z=%d E=%d max|y|=%.3g max|k|=%.3g", k, m.length, m.zeros, m.extrema, m.max_abs_y, m.max_abs_kappa)
        if not m.graph:
            log.info("segment %d is no longer a graph over the x-axis", k)
        param = _ForwardParam(param, ell)
    return UnicycleTrack(segments, metrics, ell, k_max, joins, diagnostic)


def _parameter_at(seg: SampledCurve, u: float) -> np.ndarray:
    """Point of a segment at seed parameter ``u`` (exact, through its parametrization)."""
    return seg.source.jets(np.array([u]), 0).c[0, 0]


def track_vertices(track: UnicycleTrack, u: float, n: Optional[int] = None) -> np.ndarray:
    """Points ``T^i(seed)(u)`` for ``i = 0..n``."""
    n = track.achieved if n is None else n
    if n > track.achieved:
        raise LinkageError(f"track has only {track.achieved + 1} segments")
    return np.array([_parameter_at(track.segments[i], u) for i in range(n + 1)])


# ---------------------------------------------------------------------------
# Linkages
# ---------------------------------------------------------------------------


def _unit_links(x: np.ndarray) -> np.ndarray:
    d = np.diff(x, axis=0)
    return d / np.linalg.norm(d, axis=1)[:, None]


@dataclass(frozen=True, eq=False)
class Linkage:
    """Chain of unit links ``x_0 ... x_N``; ``x_0`` is the last rear wheel.

    ``angles[0]`` is the heading of link 0 and ``angles[i]`` (``i >= 1``) the
    turn from link ``i-1`` to link ``i``. ``cosines[0]`` is 1 by convention so that
    ``speeds = 1 / cumprod(cosines)``.
    """

    vertices: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.vertices, dtype=float)
        if x.ndim != 2 or x.shape[1] != 2 or x.shape[0] < 2:
            raise LinkageError("linkage needs at least two planar vertices")
        object.__setattr__(self, "vertices", x)

    @classmethod
    def from_angles(cls, angles, base=(0.0, 0.0)) -> "Linkage":
        heading = np.cumsum(np.asarray(angles, dtype=float))
        steps = np.column_stack([np.cos(heading), np.sin(heading)])
        return cls(np.vstack([base, np.asarray(base, dtype=float) + np.cumsum(steps, axis=0)]))

    @classmethod
    def aligned(cls, n: int, base=(0.0, 0.0)) -> "Linkage":
        return cls.from_angles(np.zeros(n), base)

    @property
    def n_links(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def links(self) -> np.ndarray:
        return _unit_links(self.vertices)

    @property
    def link_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)

    @property
    def angles(self) -> np.ndarray:
        v = self.links
        head = np.arctan2(v[:, 1], v[:, 0])
        turn = np.arctan2(v[:-1, 0] * v[1:, 1] - v[:-1, 1] * v[1:, 0], np.sum(v[:-1] * v[1:], axis=1))
        return np.concatenate([head[:1], turn])

    @property
    def cosines(self) -> np.ndarray:
        v = self.links
        return np.concatenate([[1.0], np.sum(v[:-1] * v[1:], axis=1)])

    @property
    def speeds(self) -> np.ndarray:
        """Speed cascade ``t_0 = 1``, ``t_i = t_{i-1} / C_i``."""
        return 1.0 / np.cumprod(self.cosines)

    def cascade_residual(self) -> float:
        t, c = self.speeds, self.cosines
        return float(np.max(np.abs(t[:-1] - t[1:] * c[1:]) / t[:-1])) if t.size > 1 else 0.0

    def validate(self, c_min: float = C_MIN, tol: float = TAU_LINK) -> "Linkage":
        drift = float(np.max(np.abs(self.link_lengths - 1.0)))
        if drift > tol:
            raise LinkageError(f"links are not unit: drift {drift:.3g}")
        c = self.cosines
        if np.min(np.abs(c)) <= c_min:
            i = int(np.argmin(np.abs(c)))
            raise LinkageError(f"linkage left M0: |C_{i}| = {abs(c[i]):.3g}")
        return self


def linkage_from_track(track: UnicycleTrack, base_x: float, n: Optional[int] = None, c_min: float = C_MIN) -> Linkage:
    """Linkage whose vertex ``i`` is segment ``i`` at seed parameter ``base_x``."""
    if not 0.0 <= base_x <= 1.0:
        raise LinkageError("base_x is a seed abscissa in [0, 1]")
    if track.ell != 1.0:
        raise LinkageError("linkages have unit links")
    return Linkage(track_vertices(track, base_x, n)).validate(c_min)


def _velocity(x: np.ndarray, t_max: float, c_min: float) -> np.ndarray:
    d = np.diff(x, axis=0)
    v = d / np.linalg.norm(d, axis=1)[:, None]
    c = np.sum(v[:-1] * v[1:], axis=1)
    if c.size and np.min(np.abs(c)) <= c_min:
        raise LinkageError("linkage left M0")
    t = 1.0 / np.concatenate([[1.0], np.cumprod(c)])
    if np.max(np.abs(t)) > t_max:
        raise LinkageError(f"speed cascade overflow: max t = {np.max(np.abs(t)):.3g}")
    vel = np.empty_like(x)
    vel[:-1] = t[:, None] * v
    # far end: phantom link aligned with the last one
    vel[-1] = t[-1] * v[-1]
    return vel


def _project(x: np.ndarray) -> np.ndarray:
    """Restore unit links, walking outward from the base vertex."""
    out = x.copy()
    for i in range(len(x) - 1):
        d = out[i + 1] - out[i]
        out[i + 1] = out[i] + d / np.linalg.norm(d)
    return out


@dataclass(frozen=True, eq=False)
class LinkageTrajectory:
    times: np.ndarray
    vertices: np.ndarray  # (n_times, N + 1, 2)

    def linkage(self, i: int) -> Linkage:
        return Linkage(self.vertices[i])

    def max_link_drift(self) -> float:
        lengths = np.linalg.norm(np.diff(self.vertices, axis=1), axis=2)
        return float(np.max(np.abs(lengths - 1.0)))


def simulate_linkage(
    link: Linkage,
    duration: float,
    step: float = 1e-3,
    c_min: float = C_MIN,
    t_max: float = T_MAX,
    project: bool = True,
) -> LinkageTrajectory:
    """RK4 for ``x_i' = t_i v_i`` with unit-link re-projection after every step.

    A negative ``duration`` runs the flow backward in time.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    link.validate(c_min)
    n = max(1, int(math.ceil(abs(duration) / step - 1e-12)))
    h = duration / n
    x = link.vertices.copy()
    out = [x.copy()]
    for _ in range(n):
        k1 = _velocity(x, t_max, c_min)
        k2 = _velocity(x + 0.5 * h * k1, t_max, c_min)
        k3 = _velocity(x + 0.5 * h * k2, t_max, c_min)
        k4 = _velocity(x + h * k3, t_max, c_min)
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if project:
            x = _project(x)
        out.append(x.copy())
    return LinkageTrajectory(np.linspace(0.0, n * h, n + 1), np.array(out))


def _linkage_field(x: Jet) -> Jet:
    """``x_i' = t_i v_i`` on jets of shape ``(N + 1, 2)``; far end follows the last link."""
    d = x[1:] - x[:-1]
    inv = (d * d).sum(-1).sqrt().reciprocal()
    v = d * Jet(inv.c[..., None])
    c = (v[:-1] * v[1:]).sum(-1)
    terms = [Jet.constant(np.ones(()), x.order)]
    for i in range(c.c.shape[1]):
        terms.append(terms[-1] * c[i].reciprocal())
    t = Jet.stack(terms, axis=-1)
    vel = v * Jet(t.c[..., None])
    return Jet(np.concatenate([vel.c, vel.c[:, -1:]], axis=1))


def taylor_linkage(link: Linkage, order: int) -> Jet:
    """Taylor coefficients in time of every vertex, by Picard iteration on jets."""
    x = Jet(link.vertices[None].copy())
    for r in range(order):
        x = Jet(np.concatenate([x.c, np.zeros_like(x.c[:1])], axis=0))
        f = _linkage_field(x)
        x.c[r + 1] = f.c[r] / (r + 1)
    return x


def jet_from_linkage(link: Linkage, order: int, c_min: float = C_MIN) -> list[np.ndarray]:
    """Derivatives ``x_0', ..., x_0^(order)`` of the base vertex along the linkage flow.

    The ``r``-th derivative of ``x_0`` depends on vertices up to ``x_r``; with
    at least ``order + 2`` links the truncated far end does not reach it.
    """
    if order < 1:
        raise ValueError("order must be a positive integer")
    if link.n_links < order + 2:
        raise LinkageError(f"jet of order {order} needs at least {order + 2} links")
    link.validate(c_min)
    d = taylor_linkage(link, order).derivatives()
    return [d[r, 0].copy() for r in range(1, order + 1)]


def arclength_jet(param, u: float, order: int) -> np.ndarray:
    """Derivatives of a parametrized curve with respect to arclength at ``u``.

    Returns an ``(order, dim)`` array of ``c', c'', ...``; the reference answer
    for jets of the base vertex of a track linkage.
    """
    g = param.jets(np.array(u, dtype=float), order + 1).c  # Taylor coefficients in du
    gcoef = list(g)
    speed_coef = [(k + 1) * g[k + 1] for k in range(order)]
    # du/ds = 1 / |g'(u)|, solved as a Taylor series in s
    delta = Jet(np.zeros((1,)))
    for r in range(order):
        delta = Jet(np.concatenate([delta.c, [0.0]]))
        dg = _poly_vec(speed_coef, delta)
        rate = (dg * dg).sum(-1).sqrt().reciprocal()
        delta.c[r + 1] = rate.c[r] / (r + 1)
    pos = _poly_vec(gcoef, delta)
    return pos.derivatives()[1 : order + 1]


def _poly_vec(coefs, x: Jet) -> Jet:
    dim = len(coefs[0])
    return Jet.stack([polyval([float(c[j]) for c in coefs], x) for j in range(dim)], axis=-1)
