"""Unimodular 2x2 maps on the circle of bike directions, and O(n,1) matrices.

Directions are projective pairs ``(p, q)``. The chart is ``u = p / q = tan(alpha / 2)``,
so the bike angle ``alpha`` corresponds to the pair ``(sin(alpha/2), cos(alpha/2))``
and the pole ``alpha = pi`` to ``(1, 0)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import MonodromyError

EPS_PAR = 1e-6
TAU_LORENTZ = 1e-7
# squared entry size beyond which a computed determinant / Lorentz defect is mostly rounding
WELL_CONDITIONED = 1e8


class MobiusKind(enum.Enum):
    ELLIPTIC = "Elliptic"
    PARABOLIC = "Parabolic"
    HYPERBOLIC = "Hyperbolic"
    IDENTITY = "Identity"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class MobiusType:
    kind: MobiusKind
    abs_trace: float

    @property
    def margin(self) -> float:
        return self.abs_trace - 2.0

    def __str__(self):
        return str(self.kind)


@dataclass(frozen=True, eq=False)
class MobiusMap:
    """Real 2x2 matrix with unit determinant (renormalized on construction)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float).reshape(2, 2)
        if not np.all(np.isfinite(m)):
            raise ValueError("Mobius matrix has non-finite entries")
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if np.max(np.abs(m)) ** 2 > WELL_CONDITIONED:
            # ad - bc is lost to cancellation; such products are unimodular by construction
            object.__setattr__(self, "matrix", m)
            return
        if not det > 0:
            raise ValueError(f"Mobius matrix needs positive determinant, got {det}")
        object.__setattr__(self, "matrix", m / math.sqrt(det))

    @classmethod
    def identity(cls):
        return cls(np.eye(2))

    @classmethod
    def rotation(cls, angle: float):
        c, s = math.cos(angle), math.sin(angle)
        return cls([[c, -s], [s, c]])

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def det(self) -> float:
        m = self.matrix
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        return MobiusMap(self.matrix @ other.matrix)

    def inverse(self) -> "MobiusMap":
        (a, b), (c, d) = self.matrix
        return MobiusMap([[d, -b], [-c, a]])

    def sign_normalized(self) -> np.ndarray:
        """Representative with nonnegative trace (the map is defined up to sign)."""
        return self.matrix if self.trace >= 0 else -self.matrix

    def to_list(self) -> list:
        return [float(v) for v in self.matrix.ravel()]


def alpha_to_pair(alpha):
    return np.array([np.sin(np.asarray(alpha) / 2), np.cos(np.asarray(alpha) / 2)])


def pair_to_alpha(pair) -> float:
    """Angle in ``(-pi, pi]`` for a projective pair (sign of the pair is irrelevant)."""
    p, q = pair
    a = 2.0 * math.atan2(p, q)
    return float(math.remainder(a, 2 * math.pi))


def wrap_angle(a):
    """Map angles to ``(-pi, pi]``."""
    return np.remainder(np.asarray(a) + math.pi, 2 * math.pi) - math.pi


def classify(m: MobiusMap, eps: float = EPS_PAR) -> MobiusType:
    tr = abs(m.trace)
    if np.max(np.abs(m.sign_normalized() - np.eye(2))) <= eps:
        return MobiusType(MobiusKind.IDENTITY, tr)
    margin = tr - 2.0
    if margin > eps:
        kind = MobiusKind.HYPERBOLIC
    elif margin < -eps:
        kind = MobiusKind.ELLIPTIC
    else:
        kind = MobiusKind.PARABOLIC
    return MobiusType(kind, tr)


def apply(m: MobiusMap, direction) -> np.ndarray:
    v = np.asarray(direction, dtype=float)
    if not np.any(v):
        raise ValueError("zero vector is not a direction")
    w = m.matrix @ v
    return w / np.linalg.norm(w)


def multiplier_at(m: MobiusMap, direction) -> float:
    """Derivative of the circle action at a fixed direction: ``1 / lambda^2``."""
    w = np.asarray(direction, dtype=float)
    lam = float(w @ (m.matrix @ w)) / float(w @ w)
    return 1.0 / (lam * lam)


@dataclass(frozen=True)
class FixedPoint:
    direction: np.ndarray
    multiplier: float

    @property
    def alpha(self) -> float:
        return pair_to_alpha(self.direction)


def fixed_points(m: MobiusMap, eps: float = EPS_PAR) -> list[FixedPoint]:
    """Fixed directions with multipliers; hyperbolic ones sorted attracting first."""
    kind = classify(m, eps).kind
    if kind is MobiusKind.IDENTITY:
        raise MonodromyError("identity map: every direction is fixed")
    if kind is MobiusKind.ELLIPTIC:
        return []
    if kind is MobiusKind.PARABOLIC:
        w = neutral_direction(m)
        return [FixedPoint(w, 1.0)]
    # dominant eigenpairs of M and of its inverse (the adjugate): both well conditioned
    (a, b), (c, d) = m.matrix
    out = []
    for mat in (m.matrix, np.array([[d, -b], [-c, a]])):
        vals, vecs = np.linalg.eig(mat)
        i = int(np.argmax(np.abs(vals.real)))
        lam = vals.real[i]
        w = vecs[:, i].real / np.linalg.norm(vecs[:, i].real)
        mult = 1.0 / (lam * lam) if mat is m.matrix else lam * lam
        out.append(FixedPoint(w, mult))
    out.sort(key=lambda fp: fp.multiplier)
    return out


def neutral_direction(m: MobiusMap) -> np.ndarray:
    """Direction least moved by a (near-)parabolic map.

    For a parabolic matrix this is the kernel of ``M - (tr/2) I``; slightly off
    parabolic it sits between the two nearby fixed points.
    """
    n = m.matrix - 0.5 * m.trace * np.eye(2)
    _, _, vt = np.linalg.svd(n)
    return vt[-1] / np.linalg.norm(vt[-1])


def fit_three(pairs_in, pairs_out) -> MobiusMap:
    """Mobius map sending three directions to three directions."""
    rows = []
    for (p, q), (p2, q2) in zip(pairs_in, pairs_out):
        # (M w) x w' = 0
        rows.append([p * q2, q * q2, -p * p2, -q * p2])
    _, _, vt = np.linalg.svd(np.array(rows))
    m = vt[-1].reshape(2, 2)
    if np.linalg.det(m) < 0:
        raise ValueError("data is not consistent with an orientation-preserving map")
    return MobiusMap(m)


def cross_ratio(a, b, c, d) -> float:
    """Cross ratio of four directions given as angles on the circle (chart-free)."""
    def s(x, y):
        return math.sin((x - y) / 2)

    return (s(a, c) * s(b, d)) / (s(a, d) * s(b, c))


# ---------------------------------------------------------------------------
# Lorentz matrices, signature (n, 1) with the time axis last
# ---------------------------------------------------------------------------


def minkowski_form(n: int) -> np.ndarray:
    q = np.eye(n + 1)
    q[n, n] = -1.0
    return q


def lorentz_generator(v) -> np.ndarray:
    """Boost generator ``[[0, v], [v^T, 0]]``."""
    v = np.asarray(v, dtype=float)
    n = v.size
    c = np.zeros((n + 1, n + 1))
    c[:n, n] = v
    c[n, :n] = v
    return c


def lorentz_defect(m: np.ndarray) -> float:
    """Max entry of ``M^T Q M - Q``."""
    q = minkowski_form(m.shape[0] - 1)
    return float(np.max(np.abs(m.T @ q @ m - q)))


def relorentz(m: np.ndarray, sweeps: int = 2) -> np.ndarray:
    """Pull ``m`` back toward O(n,1) by Newton-Schulz steps on ``Q M^T Q M``.

    Works on stacks of matrices (leading axes are batch axes).
    """
    n = m.shape[-1] - 1
    q = minkowski_form(n)
    eye = np.eye(n + 1)
    # the defect of a large boost is dominated by cancellation; leave those alone
    ok = np.max(np.abs(m), axis=(-2, -1)) ** 2 <= WELL_CONDITIONED
    if not np.any(ok):
        return m
    for _ in range(sweeps):
        g = q @ np.swapaxes(m, -1, -2) @ q @ m
        m = np.where(ok[..., None, None], m @ (1.5 * eye - 0.5 * g), m)
    return m


def lorentz_exp(v, s: float = 1.0) -> np.ndarray:
    return expm(s * lorentz_generator(v))


def sphere_action(m: np.ndarray, r) -> np.ndarray:
    """Action on unit vectors through the null cone point ``(r, 1)``."""
    r = np.asarray(r, dtype=float)
    y = m @ np.append(r, 1.0)
    if not y[-1] > 0:
        raise MonodromyError("null vector left the future cone (orientation-reversing component)")
    return y[:-1] / y[-1]
