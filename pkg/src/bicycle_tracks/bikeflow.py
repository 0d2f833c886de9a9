"""Tracking dynamics of the bicycle along a prescribed front-wheel path.

The front wheel runs along ``Gamma(x)`` (arclength ``x``, unit tangent ``T``,
curvature ``kappa``, ``N = J T``). The rear wheel sits at

    gamma(x) = Gamma(x) - ell * r(x),   r = cos(alpha) T - sin(alpha) N,

where ``r`` is the unit bike direction (rear -> front) and the angle obeys

    alpha' = kappa - sin(alpha) / ell.

Along the way we also integrate the signed rear length ``s' = cos(alpha)``, the
rear momentum integral ``a' = 1/2 gamma x gamma'`` and the turning of the bike
direction ``phi' = sin(alpha) / ell``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import mobius
from .errors import MonodromyError, NumericalFailure, UnsupportedFrontError
from .frontstats import TAU_CLOSE_REL, WaveFront, wavefront_from_path
from .geom import SampledCurve, build_from_parametrization, tangent_angles
from .jets import Jet
from .mobius import EPS_PAR, MobiusKind, MobiusMap

log = logging.getLogger(__name__)

DEFAULT_STEPS = 4096
MIN_STEPS = 256
RENORM_BLOCK = 64


@dataclass(frozen=True)
class BikeConfig:
    """Bike length and integration step (arclength units along the front).

    ``step=None`` means ``total_length / 4096``.
    """

    ell: float = 1.0
    step: Optional[float] = None
    eps_par: float = EPS_PAR

    def __post_init__(self):
        if not self.ell > 0:
            raise ValueError("ell must be positive")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")

    def grid(self, length: float) -> tuple[int, float]:
        if self.step is None:
            n = DEFAULT_STEPS
        else:
            n = int(math.ceil(length / self.step - 1e-9))
            if n < MIN_STEPS:
                raise ValueError(f"step {self.step} exceeds total_length/{MIN_STEPS}")
        return n, length / n


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _rhs(alpha, kappa, g_cross, g_dot, inv_ell):
    sa, ca = math.sin(alpha), math.cos(alpha)
    return (
        kappa - sa * inv_ell,
        ca,
        0.5 * ca * (ca * g_cross - sa * g_dot),
        sa * inv_ell,
    )


def _rk4(state, h, k0, km, k1, g0, gm, g1, inv_ell):
    a, s, ar, ph = state
    d1 = _rhs(a, k0, g0[0], g0[1], inv_ell)
    d2 = _rhs(a + 0.5 * h * d1[0], km, gm[0], gm[1], inv_ell)
    d3 = _rhs(a + 0.5 * h * d2[0], km, gm[0], gm[1], inv_ell)
    d4 = _rhs(a + h * d3[0], k1, g1[0], g1[1], inv_ell)
    return tuple(
        v + h / 6.0 * (p + 2 * q + 2 * r + w) for v, p, q, r, w in zip((a, s, ar, ph), d1, d2, d3, d4)
    )


@dataclass(eq=False)
class AlphaPath:
    """Integrated angle along the front, with running signed length, area and turning."""

    front: SampledCurve
    ell: float
    x: np.ndarray
    alpha: np.ndarray
    length: np.ndarray
    area: np.ndarray
    phi: np.ndarray
    cusp_x: list = field(default_factory=list)

    @property
    def signed_length(self) -> float:
        return float(self.length[-1])

    @property
    def step(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def phi_abs(self) -> np.ndarray:
        """Absolute angle of the bike direction ``theta_T(0) - alpha(0) + phi``."""
        t0 = self.front.tangents[0]
        return math.atan2(t0[1], t0[0]) - self.alpha[0] + self.phi

    def trapezoid_length(self) -> float:
        return float(np.trapezoid(np.cos(self.alpha), self.x))

    def _geometry(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        g = self.front.point_at(x)
        t = self.front.tangent_at(x)
        return self.front.curvature_at(x), _cross(g, t), np.sum(g * t, axis=-1)

    def state_at(self, xq: float) -> tuple:
        """Full state at any ``x`` by one RK4 substep from the preceding node."""
        h = self.step
        n = int(min(max(math.floor((xq - self.x[0]) / h), 0), len(self.x) - 2))
        dx = xq - self.x[n]
        st = (self.alpha[n], self.length[n], self.area[n], self.phi[n])
        if dx == 0:
            return st
        k, gc, gd = self._geometry([self.x[n], self.x[n] + 0.5 * dx, self.x[n] + dx])
        return _rk4(st, dx, k[0], k[1], k[2], (gc[0], gd[0]), (gc[1], gd[1]), (gc[2], gd[2]), 1.0 / self.ell)

    def alpha_slope(self, xq: float, alpha: float) -> float:
        return float(self.front.curvature_at(xq)) - math.sin(alpha) / self.ell

    def rear_points(self, x, alpha) -> np.ndarray:
        g = self.front.point_at(x)
        t = self.front.tangent_at(x)
        nrm = np.column_stack([-t[:, 1], t[:, 0]])
        r = np.cos(alpha)[:, None] * t - np.sin(alpha)[:, None] * nrm
        return g - self.ell * r

    def bike_directions(self) -> np.ndarray:
        phi = self.phi_abs
        return np.column_stack([np.cos(phi), np.sin(phi)])

    def momentum(self, xq: float, alpha: float) -> float:
        """``gamma x r`` (equal to ``Gamma x r``) at ``xq``."""
        _, gc, gd = self._geometry([xq])
        return float(math.cos(alpha) * gc[0] - math.sin(alpha) * gd[0])


def integrate_alpha(front: SampledCurve, alpha0: float, cfg: BikeConfig = BikeConfig()) -> AlphaPath:
    if not front.planar:
        raise UnsupportedFrontError("angle dynamics need a planar front")
    n, h = cfg.grid(front.total_length)
    x = np.linspace(0.0, front.total_length, n + 1)
    xm = x[:-1] + 0.5 * h
    k_nodes = front.curvature_at(x)
    k_mid = front.curvature_at(xm)
    g, t = front.point_at(x), front.tangent_at(x)
    gm, tm = front.point_at(xm), front.tangent_at(xm)
    gc, gd = _cross(g, t), np.sum(g * t, axis=1)
    gcm, gdm = _cross(gm, tm), np.sum(gm * tm, axis=1)
    inv_ell = 1.0 / cfg.ell

    out = np.empty((n + 1, 4))
    st = (float(alpha0), 0.0, 0.0, 0.0)
    out[0] = st
    for i in range(n):
        st = _rk4(
            st, h, k_nodes[i], k_mid[i], k_nodes[i + 1],
            (gc[i], gd[i]), (gcm[i], gdm[i]), (gc[i + 1], gd[i + 1]), inv_ell,
        )
        out[i + 1] = st
    path = AlphaPath(front, cfg.ell, x, out[:, 0], out[:, 1], out[:, 2], out[:, 3])
    path.cusp_x = _cusp_crossings(path)
    return path


def _cusp_crossings(path: AlphaPath, xtol: float = 1e-10) -> list:
    c = np.cos(path.alpha)
    if np.max(np.abs(c)) < 1e-9:
        return []
    nz = np.flatnonzero(np.abs(c) > 0)
    out = []
    for i, j in zip(nz[:-1], nz[1:]):
        if c[i] * c[j] < 0:
            f = lambda xq: math.cos(path.state_at(xq)[0])
            out.append(brentq(f, path.x[i], path.x[j], xtol=xtol))
    if path.front.closed and len(out) > 1:
        seam = 1e-7 * path.front.total_length
        if out[0] < seam and out[-1] > path.x[-1] - seam:
            out.pop()
    return out


def _step_matrices(gen0, genm, gen1, h):
    """RK4 one-step propagators for ``Y' = A(x) Y`` (stacked along axis 0)."""
    eye = np.eye(gen0.shape[-1])
    k1 = gen0
    k2 = genm @ (eye + 0.5 * h * k1)
    k3 = genm @ (eye + 0.5 * h * k2)
    k4 = gen1 @ (eye + h * k3)
    return eye + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def ordered_product(steps: np.ndarray, renorm) -> np.ndarray:
    """``steps[-1] @ ... @ steps[0]`` by pairwise reduction.

    ``renorm`` is applied to partial products once they span at least
    ``RENORM_BLOCK`` steps.
    """
    mats = steps
    span = 1
    eye = np.eye(steps.shape[-1])
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, eye[None]])
        mats = mats[1::2] @ mats[0::2]
        span *= 2
        if span >= RENORM_BLOCK:
            mats = renorm(mats)
    return mats[0]


def _unimodular(mats):
    """Rescale to unit determinant where the determinant is still computable."""
    det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
    ok = np.max(np.abs(mats), axis=(1, 2)) ** 2 <= mobius.WELL_CONDITIONED
    scale = np.where(ok, np.sqrt(np.where(ok, det, 1.0)), 1.0)
    return mats / scale[:, None, None]


def _planar_generators(kappa, ell):
    a = np.zeros(kappa.shape + (2, 2))
    a[:, 0, 0] = -0.5 / ell
    a[:, 1, 1] = 0.5 / ell
    a[:, 0, 1] = 0.5 * kappa
    a[:, 1, 0] = -0.5 * kappa
    return a


def monodromy_2d(front: SampledCurve, cfg: BikeConfig = BikeConfig(), require_closed: bool = True) -> MobiusMap:
    """Monodromy of the linearized angle equation over the whole front."""
    if require_closed and not front.closed:
        raise UnsupportedFrontError("monodromy needs a closed front")
    n, h = cfg.grid(front.total_length)
    x = np.linspace(0.0, front.total_length, n + 1)
    k = front.curvature_at(x)
    km = front.curvature_at(x[:-1] + 0.5 * h)
    steps = _step_matrices(
        _planar_generators(k[:-1], cfg.ell), _planar_generators(km, cfg.ell), _planar_generators(k[1:], cfg.ell), h
    )
    return MobiusMap(ordered_product(_unimodular(steps), _unimodular))


@dataclass(frozen=True, eq=False)
class LorentzMatrix:
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0] - 1

    def defect(self) -> float:
        return mobius.lorentz_defect(self.matrix)

    def act(self, r) -> np.ndarray:
        return mobius.sphere_action(self.matrix, r)


def _boost_generators(v):
    n = v.shape[-1]
    c = np.zeros(v.shape[:-1] + (n + 1, n + 1))
    c[..., :n, n] = v
    c[..., n, :n] = v
    return c


def monodromy_nd(front: SampledCurve, cfg: BikeConfig = BikeConfig()) -> LorentzMatrix:
    """O(n,1) monodromy; ``ell != 1`` is handled by rescaling the front by ``1/ell``."""
    t = front.tangents
    if np.max(np.abs(np.linalg.norm(t, axis=1) - 1)) > 1e-6:
        raise UnsupportedFrontError("front tangents must be unit vectors")
    if cfg.ell != 1.0:
        front = front.scaled(1.0 / cfg.ell)
        cfg = BikeConfig(1.0, None if cfg.step is None else cfg.step / cfg.ell, cfg.eps_par)
    n, h = cfg.grid(front.total_length)
    x = np.linspace(0.0, front.total_length, n + 1)
    v = front.tangent_at(x)
    vm = front.tangent_at(x[:-1] + 0.5 * h)
    steps = _step_matrices(_boost_generators(v[:-1]), _boost_generators(vm), _boost_generators(v[1:]), h)
    return LorentzMatrix(mobius.relorentz(ordered_product(mobius.relorentz(steps), mobius.relorentz)))


def bike_direction(front: SampledCurve, x: float, alpha: float) -> np.ndarray:
    """Unit vector rear -> front for angle ``alpha`` at front position ``x``."""
    t = front.tangent_at([x])[0]
    nrm = np.array([-t[1], t[0]])
    return math.cos(alpha) * t - math.sin(alpha) * nrm


def rear_track(front: SampledCurve, alpha0: float, cfg: BikeConfig = BikeConfig()) -> WaveFront:
    return wavefront_from_path(integrate_alpha(front, alpha0, cfg))


class Stability(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    NEUTRAL = "Neutral"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class ClosedRear:
    wavefront: WaveFront
    stability: Stability
    multiplier: float
    alpha0: float


def _closure_residual(front, a0, cfg):
    path = integrate_alpha(front, a0, cfg)
    return float(mobius.wrap_angle(path.alpha[-1] - a0)), path


def polish_fixed_alpha(front: SampledCurve, alpha0: float, multiplier: float, cfg: BikeConfig, iters: int = 3):
    """Newton on ``alpha(L) - alpha0 = 0 (mod 2 pi)`` using the Mobius slope."""
    res, path = _closure_residual(front, alpha0, cfg)
    slope = multiplier - 1.0
    if abs(slope) < 1e-3:
        return alpha0, path
    for _ in range(iters):
        if abs(res) < 1e-13:
            break
        trial = alpha0 - res / slope
        r2, p2 = _closure_residual(front, trial, cfg)
        if abs(r2) >= abs(res):
            break
        alpha0, res, path = trial, r2, p2
    return alpha0, path


def stability_of(multiplier: float, eps: float = EPS_PAR) -> Stability:
    if multiplier < 1 - eps:
        return Stability.STABLE
    if multiplier > 1 + eps:
        return Stability.UNSTABLE
    return Stability.NEUTRAL


def closed_rear_tracks(front: SampledCurve, cfg: BikeConfig = BikeConfig()) -> list[ClosedRear]:
    """Rear tracks that close after one lap, attracting one first."""
    mono = monodromy_2d(front, cfg)
    kind = mobius.classify(mono, cfg.eps_par).kind
    if kind is MobiusKind.IDENTITY:
        raise MonodromyError("identity monodromy: every rear track closes")
    out = []
    for fp in mobius.fixed_points(mono, cfg.eps_par):
        a0, path = polish_fixed_alpha(front, fp.alpha, fp.multiplier, cfg)
        wf = wavefront_from_path(path)
        if kind is MobiusKind.HYPERBOLIC and not wf.closed:
            raise NumericalFailure(f"rear track fails to close: gap {wf.closure_error:.3g}")
        out.append(ClosedRear(wf, stability_of(fp.multiplier, cfg.eps_par), fp.multiplier, a0))
    return out


def multiplier_check(front: SampledCurve, alpha0: float, cfg: BikeConfig = BikeConfig(), tol: float = 1e-6):
    """Mobius multiplier at a fixed direction and ``exp(-signed rear length)``."""
    mono = monodromy_2d(front, cfg)
    w = mobius.alpha_to_pair(alpha0)
    moved = mobius.pair_to_alpha(mobius.apply(mono, w))
    if abs(mobius.wrap_angle(moved - alpha0)) > tol:
        raise ValueError(f"alpha0 = {alpha0} is not a fixed direction")
    path = integrate_alpha(front, alpha0, cfg)
    return mobius.multiplier_at(mono, w), math.exp(-path.signed_length)


class _ForwardParam:
    """Front track of a rear parametrization: ``gamma + ell * gamma' / |gamma'|``."""

    def __init__(self, base, ell: float):
        self.base = base
        self.ell = ell
        self.closed = base.closed
        self.domain = base.domain

    def jets(self, u, order):
        g = self.base.jets(u, order + 1)
        d = g.deriv()
        speed = (d * d).sum(-1).sqrt()
        unit = d * Jet(speed.reciprocal().c[..., None])
        return g.truncate(order) + unit * self.ell


class _SampledForwardParam:
    """Forward map built from samples: positions, tangents and curvature splines."""

    def __init__(self, rear: SampledCurve, ell: float):
        self.rear = rear
        self.ell = ell
        self.closed = rear.closed
        self.domain = (0.0, rear.total_length)
        self._dk = rear._curvature_spline.derivative()

    def jets(self, u, order):
        if order > 2:
            raise ValueError("sampled forward map provides at most second derivatives")
        r, ell = self.rear, self.ell
        p, t, k = r.point_at(u), r.tangent_at(u), r.curvature_at(u)
        dk = self._dk(r._wrap(u))
        nrm = np.column_stack([-t[:, 1], t[:, 0]])
        c = np.zeros((order + 1,) + p.shape)
        c[0] = p + ell * t
        if order >= 1:
            c[1] = t + ell * k[:, None] * nrm
        if order >= 2:
            c[2] = 0.5 * (k[:, None] * nrm + ell * (dk[:, None] * nrm - (k * k)[:, None] * t))
        return Jet(c)


def forward_map(rear: SampledCurve, ell: float = 1.0, density: Optional[int] = None) -> SampledCurve:
    """Front-wheel track ``T_ell(rear)``, resampled by arclength."""
    if np.max(np.abs(np.linalg.norm(rear.tangents, axis=1) - 1)) > 1e-6:
        raise UnsupportedFrontError("rear track must be sampled at unit speed")
    if density is None:
        density = max(64, int(round((len(rear) - 1) / rear.total_length)))
    param = _ForwardParam(rear.source, ell) if rear.source is not None else _SampledForwardParam(rear, ell)
    return build_from_parametrization(param, density, rear.closed)
