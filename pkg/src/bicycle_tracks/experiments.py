"""Homothety sweeps of convex fronts and location of the parabolic scale."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import mobius
from .bikeflow import BikeConfig, integrate_alpha, monodromy_2d, rear_track
from .errors import NumericalFailure
from .frontstats import WaveFront
from .geom import SampledCurve, SupportOval, build_curve, enclosed_area
from .mobius import MobiusKind

log = logging.getLogger(__name__)


def _as_curve(spec_or_curve, density: int) -> SampledCurve:
    if isinstance(spec_or_curve, SampledCurve):
        return spec_or_curve
    return build_curve(spec_or_curve, density)


def is_convex(curve: SampledCurve) -> bool:
    k = curve.curvature
    return bool(np.all(k > 0) or np.all(k < 0))


@dataclass(frozen=True)
class SweepRow:
    scale: float
    area: float
    kind: MobiusKind
    abs_trace: float
    margin: float
    signed_length: float = math.nan
    multiplier: float = math.nan


@dataclass
class SweepResult:
    rows: list
    convex: bool
    inconclusive: bool = False
    monotonicity_violations: list = field(default_factory=list)

    def kinds(self) -> list:
        return [r.kind for r in self.rows]


def classify_scaled(base: SampledCurve, scale: float, cfg: BikeConfig):
    mono = monodromy_2d(base.scaled(scale), cfg)
    return mono, mobius.classify(mono, cfg.eps_par)


def scale_sweep(spec, scales: Sequence[float], cfg: BikeConfig = BikeConfig(), density: int = 256) -> SweepResult:
    """Classify the monodromy of ``s * Gamma`` for each scale ``s``."""
    base = _as_curve(spec, density)
    convex = is_convex(base)
    if not convex:
        log.warning("front is not convex; Menzin's bound does not apply")
    area0 = enclosed_area(base)
    rows = []
    for s in sorted(float(v) for v in scales):
        if not s > 0:
            raise ValueError("scales must be positive")
        front = base.scaled(s)
        mono = monodromy_2d(front, cfg)
        typ = mobius.classify(mono, cfg.eps_par)
        length = mult = math.nan
        if typ.kind is MobiusKind.HYPERBOLIC:
            fp = mobius.fixed_points(mono, cfg.eps_par)[0]
            mult = fp.multiplier
            length = integrate_alpha(front, fp.alpha, cfg).signed_length
        rows.append(SweepRow(s, area0 * s * s, typ.kind, typ.abs_trace, typ.margin, length, mult))

    violations = []
    hyper = False
    for prev, row in zip(rows, rows[1:]):
        hyper = hyper or prev.margin > cfg.eps_par
        if hyper and row.margin < prev.margin:
            violations.append((prev.scale, row.scale))
            log.info("margin decreased between scales %.6g and %.6g", prev.scale, row.scale)
    margins = np.array([r.margin for r in rows])
    inconclusive = bool(
        len(rows) > 1 and np.max(margins) <= cfg.eps_par and np.min(margins) > -cfg.eps_par
    )
    return SweepResult(rows, convex, inconclusive, violations)


@dataclass(frozen=True, eq=False)
class BifurcationReport:
    scale: float
    area: float
    perimeter: float
    signed_length: float
    signed_area: float
    cusp_count: int
    maslov: int
    bracket_width: float
    degenerate: bool
    wavefront: WaveFront


def bisect_parabolic(
    spec,
    bracket: tuple[float, float],
    cfg: BikeConfig = BikeConfig(),
    density: int = 256,
    width: float = 1e-8,
) -> BifurcationReport:
    """Locate the scale where ``|trace| = 2`` and reconstruct the neutral rear front."""
    base = _as_curve(spec, density)

    def margin(s):
        return abs(monodromy_2d(base.scaled(s), cfg).trace) - 2.0

    lo, hi = bracket
    f_lo, f_hi = margin(lo), margin(hi)
    if f_lo * f_hi > 0:
        raise NumericalFailure(f"no change of monodromy type in bracket ({lo}, {hi})")
    star = brentq(margin, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    achieved = math.inf
    for w in (1e-12, 1e-11, 1e-10, 1e-9, width):
        a, b = max(lo, star - w / 2), min(hi, star + w / 2)
        if margin(a) * margin(b) <= 0:
            achieved = b - a
            break
    if achieved > width:
        raise NumericalFailure(f"could not certify a bracket of width {width}")

    front = base.scaled(star)
    mono = monodromy_2d(front, cfg)
    alpha0 = mobius.pair_to_alpha(mobius.neutral_direction(mono))
    wf = rear_track(front, alpha0, cfg)
    return BifurcationReport(
        scale=star,
        area=enclosed_area(front),
        perimeter=front.total_length,
        signed_length=wf.signed_length,
        signed_area=wf.signed_area,
        cusp_count=wf.cusp_count,
        maslov=wf.maslov,
        bracket_width=achieved,
        degenerate=wf.degenerate,
        wavefront=wf,
    )


def default_bracket(base: SampledCurve, ell: float = 1.0) -> tuple[float, float]:
    """Scales bracketing the parabolic point of a convex family.

    The upper end has area slightly above ``pi ell^2`` (hyperbolic by Menzin's
    bound); the lower end is half of it.
    """
    s_pi = ell * math.sqrt(math.pi / enclosed_area(base))
    return 0.5 * s_pi, 1.01 * s_pi


def random_convex_oval(rng: np.random.Generator, harmonics: int = 6, max_strength: float = 0.9) -> SupportOval:
    """Support-function oval ``1 + sum_{k>=2}`` with ``sum k^2 |coef| < 1`` (convex by construction)."""
    ks = np.arange(2, harmonics + 1)
    a = rng.normal(size=ks.size) / ks**2
    b = rng.normal(size=ks.size) / ks**2
    weight = float(np.sum(ks**2 * (np.abs(a) + np.abs(b))))
    strength = rng.uniform(0.0, max_strength)
    a *= strength / weight
    b *= strength / weight
    return SupportOval(1.0, tuple(float(v) for v in a), tuple(float(v) for v in b))


@dataclass(frozen=True)
class MenzinTrial:
    spec: SupportOval
    scale: float
    area: float
    kind: MobiusKind
    margin: float
    threshold_area: Optional[float] = None


def menzin_trials(
    n: int,
    seed: int = 0,
    cfg: BikeConfig = BikeConfig(),
    density: int = 256,
    area_range: tuple[float, float] = (math.pi + 0.01, 10 * math.pi),
    with_threshold: bool = True,
) -> list[MenzinTrial]:
    """Random convex ovals scaled to area in ``area_range``; classify, optionally bisect."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        spec = random_convex_oval(rng)
        base = build_curve(spec, density)
        area0 = enclosed_area(base)
        target = rng.uniform(*area_range)
        s = math.sqrt(target / area0)
        _, typ = classify_scaled(base, s, cfg)
        thr = None
        if with_threshold:
            thr = bisect_parabolic(base, default_bracket(base, cfg.ell), cfg).area
        out.append(MenzinTrial(spec, s, target, typ.kind, typ.margin, thr))
    return out
