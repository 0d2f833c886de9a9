"""Rear-wheel wave fronts: cusps, arc signs, signed length and area, Maslov index.

A :class:`WaveFront` is assembled from an integrated angle path (see
``bikeflow.integrate_alpha``). Orientation conventions:

* arc sign = sign of ``cos(alpha)``, i.e. whether the rear wheel moves forward;
* cusp sign = direction in which ``alpha`` crosses the level ``pi/2 (mod pi)``;
  with this choice ``rho(front) = rho(rear) + maslov / 2`` on every closed track;
* ``rotation`` counts only the smooth turning of the tangent line along arcs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnderResolvedError, UnsupportedFrontError
from .geom import SampledCurve, SupportFunction, rotation_number, support_from_points

TAU_CLOSE_REL = 1e-6


@dataclass(frozen=True)
class Arc:
    start: float
    end: float
    sign: int
    signed_length: float
    area: float  # 1/2 \int gamma x dgamma over the arc
    momentum_jump: float  # ell * [gamma x r] between the arc ends
    turning: float


@dataclass(frozen=True)
class Cusp:
    x: float
    position: np.ndarray
    sign: int
    slope: float  # d(alpha)/dx at the crossing


@dataclass(frozen=True, eq=False)
class WaveFront:
    x: np.ndarray
    points: np.ndarray
    alpha: np.ndarray
    arcs: list
    cusps: list
    signed_length: float
    signed_area: float
    ell: float
    closed: bool
    closure_error: float
    degenerate: bool = False
    path: object = field(default=None, repr=False)

    @property
    def maslov(self) -> int:
        return int(sum(c.sign for c in self.cusps))

    @property
    def turning(self) -> float:
        return float(sum(a.turning for a in self.arcs))

    @property
    def rotation(self) -> float:
        return self.turning / (2 * math.pi)

    @property
    def cusp_count(self) -> int:
        return len(self.cusps)

    @property
    def unsigned_length(self) -> float:
        return float(sum(abs(a.signed_length) for a in self.arcs))

    def summary(self) -> dict:
        return {
            "signed_length": self.signed_length,
            "signed_area": self.signed_area,
            "maslov": self.maslov,
            "rotation": self.rotation,
            "cusps": self.cusp_count,
        }


def _sign(v: float) -> int:
    return 1 if v > 0 else -1


def wavefront_from_path(path) -> WaveFront:
    """Split the rear track of an angle path into smooth arcs at its cusps."""
    front: SampledCurve = path.front
    ell = path.ell
    x = path.x
    alpha = path.alpha
    gam = path.rear_points(x, alpha)
    cos_a = np.cos(alpha)
    degenerate = bool(np.max(np.abs(cos_a)) < 1e-9)

    cusps = []
    for xc in path.cusp_x:
        st = path.state_at(xc)
        slope = path.alpha_slope(xc, st[0])
        cusps.append(Cusp(float(xc), path.rear_points(np.array([xc]), np.array([st[0]]))[0], _sign(slope), slope))

    bounds = [float(x[0])] + [c.x for c in cusps] + [float(x[-1])]
    bounds = [b for i, b in enumerate(bounds) if i == 0 or b > bounds[i - 1]]
    states = [path.state_at(b) for b in bounds]
    arcs = []
    for i in range(len(bounds) - 1):
        s0, s1 = states[i], states[i + 1]
        mid = path.state_at(0.5 * (bounds[i] + bounds[i + 1]))[0]
        sign = _sign(math.cos(mid)) if not degenerate else 1
        arcs.append(
            Arc(
                start=bounds[i],
                end=bounds[i + 1],
                sign=sign,
                signed_length=float(s1[1] - s0[1]),
                area=float(s1[2] - s0[2]),
                momentum_jump=ell * (path.momentum(bounds[i + 1], s1[0]) - path.momentum(bounds[i], s0[0])),
                turning=float(s1[3] - s0[3]),
            )
        )

    closure = float(np.linalg.norm(gam[-1] - gam[0]))
    closed = bool(front.closed and closure < TAU_CLOSE_REL * front.total_length)
    return WaveFront(
        x=x,
        points=gam,
        alpha=alpha,
        arcs=arcs,
        cusps=cusps,
        signed_length=float(path.signed_length),
        signed_area=float(path.area[-1]),
        ell=ell,
        closed=closed,
        closure_error=closure,
        degenerate=degenerate,
        path=path,
    )


def signed_area(wf: WaveFront) -> float:
    """Signed area of a closed front: half the sum of the arcs' momentum integrals."""
    if not wf.closed:
        raise UnsupportedFrontError("signed area needs a closed front")
    return float(sum(a.area for a in wf.arcs))


@dataclass(frozen=True)
class AreaBookkeeping:
    front_area: float
    rear_area: float
    momentum_sum: float
    turning_sum: float
    residual: float  # 2 A(front) - [2 A(rear) + sum momentum + ell^2 sum turning]


def area_bookkeeping(wf: WaveFront, front: SampledCurve) -> AreaBookkeeping:
    """Check ``2 A(front) = 2 A(rear) + sum sigma_i Delta_i + ell^2 sum theta_i`` arc by arc."""
    from .geom import enclosed_area

    rear = signed_area(wf)
    front_area = enclosed_area(front)
    mom = float(sum(a.momentum_jump for a in wf.arcs))
    turn = wf.turning
    resid = 2 * front_area - (2 * rear + mom + wf.ell**2 * turn)
    return AreaBookkeeping(front_area, rear, mom, turn, resid)


@dataclass(frozen=True)
class RotationCheck:
    rho_front: int
    rho_rear: float
    maslov: int
    residual: float


def rotation_relation_check(rear: WaveFront, front: SampledCurve) -> RotationCheck:
    if not (rear.closed and front.closed):
        raise UnsupportedFrontError("rotation relation needs closed tracks")
    xs = [c.x for c in rear.cusps]
    if len(xs) > 1:
        h = float(rear.x[1] - rear.x[0])
        gaps = np.diff(xs + [xs[0] + front.total_length])
        if np.min(gaps) < 4 * h:
            raise UnderResolvedError("two cusps within four grid steps")
    rho_front = rotation_number(front)
    mu = rear.maslov
    return RotationCheck(rho_front, rear.rotation, mu, rho_front - rear.rotation - 0.5 * mu)


def cusp_signs(rear: WaveFront, min_slope: float = 1e-8) -> list[int]:
    for c in rear.cusps:
        if abs(c.slope) < min_slope:
            raise UnderResolvedError(f"tangential crossing of cos(alpha) = 0 at x = {c.x}")
    return [c.sign for c in rear.cusps]


def inflection_check(rear: WaveFront) -> bool:
    """True when rear curvature ``tan(alpha)/ell`` keeps its sign inside every arc.

    Inside an arc ``cos(alpha)`` has a fixed sign, so this is a sign test on ``sin(alpha)``.
    """
    s = np.sin(rear.alpha)
    bounds = [a.start for a in rear.arcs] + [rear.arcs[-1].end]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        inside = (rear.x > lo) & (rear.x < hi)
        vals = s[inside]
        if len(vals) and np.min(vals) < 0 < np.max(vals):
            return False
    return True


def tangent_line_angles(wf: WaveFront) -> np.ndarray:
    """Continuous angle of the bike direction (tangent line of the rear track)."""
    return wf.path.phi_abs


def wavefront_support(wf: WaveFront, n: int = 1024) -> SupportFunction:
    """Support function of a closed inflection-free front, tangent lines oriented by the bike.

    With this orientation ``int p`` is the signed length and the area formula
    gives the signed area.
    """
    if not wf.closed:
        raise UnsupportedFrontError("support function needs a closed front")
    phi = tangent_line_angles(wf)
    pts = wf.points
    origin = pts[:-1].mean(axis=0)
    return support_from_points(pts, phi, origin, n)
