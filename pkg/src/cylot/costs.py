"""Extended-value transport costs on the truncated sequence space.

Three families are provided:

* :class:`TranslationInvariant` -- ``c(x, y) = h(|x - y|)``;
* :class:`CoordinateSeparable` -- ``c(x, y) = h(sum_j h_j(|x_j - y_j|))``;
* :class:`CameronMartin` -- the weighted norm ``(sum_j (x_j - y_j)^2 / a_j^2)^(1/2)``
  when the two points share a tail class and ``+inf`` otherwise.

``+inf`` is ``math.inf``/``np.inf`` throughout, never a large finite number.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .measures import DiscreteMeasure
from .projections import Projection, apply

_ROW_CHUNK_BYTES = 4 * 2 ** 20


# --------------------------------------------------------------------------
# scalar profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarProfile:
    """A nonnegative lower semicontinuous function on ``[0, inf)``.

    ``kind`` is ``"power"`` (``z**p``), ``"saturating"``
    (``cap * (1 - exp(-z / scale))``) or ``"table"`` (piecewise linear
    through ``knots``; a repeated abscissa is a jump, and the value at the
    jump is the smaller of the two one-sided values).
    """

    kind: str
    p: float = 2.0
    cap: float = 1.0
    scale: float = 1.0
    knots: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "power":
            if not self.p > 0:
                raise ValueError("power profile needs p > 0")
        elif self.kind == "saturating":
            if not (self.cap > 0 and self.scale > 0):
                raise ValueError("saturating profile needs cap > 0 and scale > 0")
        elif self.kind == "table":
            if len(self.knots) < 1:
                raise ValueError("table profile needs at least one knot")
            zs = [z for z, _ in self.knots]
            if any(b < a for a, b in zip(zs, zs[1:])) or zs[0] < 0:
                raise ValueError("table abscissae must be nonnegative and sorted")
            if any(not (h >= 0) for _, h in self.knots):
                raise ValueError("table values must be nonnegative")
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    # table helpers: unique abscissae with left/right values
    def _table(self):
        zs, left, right = [], [], []
        for z, h in self.knots:
            if zs and z == zs[-1]:
                right[-1] = h
            else:
                zs.append(z)
                left.append(h)
                right.append(h)
        return np.array(zs), np.array(left), np.array(right)

    @property
    def monotone(self) -> bool:
        if self.kind in ("power", "saturating"):
            return True
        hs = [h for _, h in self.knots]
        return all(b >= a for a, b in zip(hs, hs[1:]))

    @property
    def sup_value(self) -> float:
        if self.kind == "power":
            return math.inf
        if self.kind == "saturating":
            return self.cap
        return max(h for _, h in self.knots)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "power":
            return z ** self.p
        if self.kind == "saturating":
            return self.cap * -np.expm1(-z / self.scale)
        zs, left, right = self._table()
        out = np.empty_like(z)
        idx = np.searchsorted(zs, z, side="right") - 1
        below = idx < 0
        out[below] = left[0]
        beyond = idx >= zs.size - 1
        on_knot = ~below & (z == zs[np.clip(idx, 0, None)])
        mid = ~below & ~beyond & ~on_knot
        i = idx[mid]
        t = (z[mid] - zs[i]) / (zs[i + 1] - zs[i])
        out[mid] = right[i] + t * (left[i + 1] - right[i])
        last = ~below & beyond & ~on_knot
        out[last] = right[-1]
        k = idx[on_knot]
        out[on_knot] = np.minimum(left[k], right[k])
        return out

    def of_squared(self, s):
        """``h(sqrt(s))``, evaluated without the square root for powers."""
        s = np.asarray(s, dtype=float)
        if self.kind == "power":
            return s if self.p == 2 else s ** (self.p / 2)
        return self(np.sqrt(s))

    def sublevel_sup(self, level: float, strict: bool = True) -> float:
        """``sup{z >= 0 : h(z) < level}`` (``<=`` when ``strict`` is false).

        Returns ``inf`` for an unbounded sublevel set and ``0`` for an empty one.
        """
        hit = (lambda v: v < level) if strict else (lambda v: v <= level)
        if self.kind == "power":
            return level ** (1.0 / self.p) if level > 0 else 0.0
        if self.kind == "saturating":
            if hit(self.cap):
                return math.inf
            if level <= 0:
                return 0.0
            return -self.scale * math.log1p(-level / self.cap)
        zs, left, right = self._table()
        if hit(right[-1]):
            return math.inf
        best = 0.0
        for k in range(zs.size):
            if hit(min(left[k], right[k])) or (k == 0 and hit(left[0])):
                best = max(best, zs[k])
            if k + 1 < zs.size:
                a, b = right[k], left[k + 1]
                if hit(b):
                    best = max(best, zs[k + 1])
                elif hit(a):
                    # b fails, a holds: the crossing is where h reaches level
                    best = max(best, zs[k] + (level - a) / (b - a) * (zs[k + 1] - zs[k]))
        return float(best)


def power(p: float = 2.0) -> ScalarProfile:
    return ScalarProfile("power", p=p)


def bounded_saturating(cap: float, scale: float = 1.0) -> ScalarProfile:
    return ScalarProfile("saturating", cap=cap, scale=scale)


def table(z: Sequence[float], h: Sequence[float]) -> ScalarProfile:
    return ScalarProfile("table", knots=tuple((float(a), float(b)) for a, b in zip(z, h)))


def load_profile_csv(path) -> ScalarProfile:
    """Two-column CSV ``z,h`` (a header row is skipped if not numeric)."""
    zs, hs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                z, h = float(row[0]), float(row[1])
            except ValueError:
                if zs:
                    raise
                continue
            zs.append(z)
            hs.append(h)
    return table(zs, hs)


# --------------------------------------------------------------------------
# cost families
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthEnvelope:
    """Nondecreasing ``f, g`` with ``c(l x, y) <= f(l) c(x, y)`` and ``c(x, l y) <= g(l) c(x, y)``."""

    f: Callable[[float], float]
    g: Callable[[float], float]


class Cost:
    """Base class; subclasses implement :meth:`_pair` and :meth:`_block`."""

    envelope: Optional[GrowthEnvelope] = None

    def evaluate(self, x, y, x_tail: int = 0, y_tail: int = 0) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
        return float(self._pair(x, y, int(x_tail), int(y_tail)))

    def matrix(self, X, Y, x_tail=None, y_tail=None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[1] != Y.shape[1]:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
        xt = np.zeros(len(X), dtype=np.int64) if x_tail is None else np.asarray(x_tail)
        yt = np.zeros(len(Y), dtype=np.int64) if y_tail is None else np.asarray(y_tail)
        out = np.empty((len(X), len(Y)))
        step = max(1, _ROW_CHUNK_BYTES // (8 * max(1, len(Y) * X.shape[1])))
        for lo in range(0, len(X), step):
            hi = min(lo + step, len(X))
            diff = X[lo:hi, None, :] - Y[None, :, :]
            out[lo:hi] = self._block(diff, xt[lo:hi, None] != yt[None, :])
        return out

    def sup_over_y(self) -> float:
        """``inf_x sup_y c(x, y)``; for these families it does not depend on ``x``."""
        raise NotImplementedError

    # subclass hooks
    def _pair(self, x, y, xt, yt):
        raise NotImplementedError

    def _block(self, diff, tail_mismatch):
        raise NotImplementedError


@dataclass(frozen=True)
class TranslationInvariant(Cost):
    """``c(x, y) = h(|x - y|)``."""

    profile: ScalarProfile = field(default_factory=power)
    envelope: Optional[GrowthEnvelope] = None

    def _pair(self, x, y, xt, yt):
        d = x - y
        return self.profile.of_squared(np.sum(d * d))

    def _block(self, diff, tail_mismatch):
        return self.profile.of_squared(np.sum(diff * diff, axis=-1))

    def sup_over_y(self) -> float:
        return self.profile.sup_value


@dataclass(frozen=True)
class CoordinateSeparable(Cost):
    """``c(x, y) = h(sum_j h_j(|x_j - y_j|))``.

    ``coordinate_profiles`` of length one is applied to every coordinate.
    """

    outer: ScalarProfile = field(default_factory=lambda: power(1.0))
    coordinate_profiles: Tuple[ScalarProfile, ...] = (ScalarProfile("power", p=2.0),)
    envelope: Optional[GrowthEnvelope] = None

    def _profiles(self, dim: int):
        if len(self.coordinate_profiles) == 1:
            return self.coordinate_profiles * dim
        if len(self.coordinate_profiles) != dim:
            raise ValueError(f"{len(self.coordinate_profiles)} coordinate profiles for dimension {dim}")
        return self.coordinate_profiles

    def _inner(self, absdiff):
        profs = self._profiles(absdiff.shape[-1])
        total = np.zeros(absdiff.shape[:-1])
        for j, h in enumerate(profs):
            total = total + h(absdiff[..., j])
        return total

    def _pair(self, x, y, xt, yt):
        return self.outer(self._inner(np.abs(x - y)))

    def _block(self, diff, tail_mismatch):
        return self.outer(self._inner(np.abs(diff)))

    def sup_over_y(self) -> float:
        sups = [h.sup_value for h in self.coordinate_profiles]
        if any(math.isinf(s) for s in sups):
            return self.outer.sup_value
        # a single broadcast profile has no fixed dimension here; be conservative
        if len(self.coordinate_profiles) == 1:
            return self.outer.sup_value
        return float(self.outer(sum(sups)))


@dataclass(frozen=True)
class CameronMartin(Cost):
    """Weighted norm with scales ``a_j`` on points of equal tail class, else ``+inf``."""

    scales: Tuple[float, ...] = (1.0,)
    envelope: Optional[GrowthEnvelope] = None

    def __post_init__(self):
        if not self.scales or any(not (a > 0) for a in self.scales):
            raise ValueError("Cameron-Martin scales must be positive")

    def _inv(self, dim):
        a = np.asarray(self.scales, dtype=float)
        if a.size == 1:
            a = np.full(dim, a[0])
        if a.size != dim:
            raise ValueError(f"{a.size} scales for dimension {dim}")
        return 1.0 / a

    def _pair(self, x, y, xt, yt):
        if xt != yt:
            return math.inf
        d = (x - y) * self._inv(x.size)
        return math.sqrt(np.sum(d * d))

    def _block(self, diff, tail_mismatch):
        d = diff * self._inv(diff.shape[-1])
        out = np.sqrt(np.sum(d * d, axis=-1))
        out[tail_mismatch] = np.inf
        return out

    def sup_over_y(self) -> float:
        return math.inf


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def evaluate(c: Cost, x, y, x_tail: int = 0, y_tail: int = 0) -> float:
    return c.evaluate(x, y, x_tail, y_tail)


def cost_matrix(c: Cost, mu: DiscreteMeasure, nu: DiscreteMeasure) -> np.ndarray:
    """Entry ``(i, j)`` is ``c(x_i, y_j)`` for the atoms of ``mu`` and ``nu``."""
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    return c.matrix(mu.points, nu.points, mu.tail, nu.tail)


def coercivity_radius(c: Cost, R: float, delta: float, M: float, dim: Optional[int] = None) -> float:
    """A radius ``R'`` such that ``|x| < R`` and
    ``c(x, y) < min(sup_eta c(x, eta) - delta, M)`` force ``|y| < R'``.

    Returns ``math.inf`` when the cost admits no finite radius (the sublevel
    set of the profile is unbounded).  ``dim`` is needed only for a
    coordinate-separable cost with a single broadcast profile.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    if not M > 0:
        raise ValueError("M must be positive")
    top = c.sup_over_y()
    if not (0 < delta < top):
        raise ValueError(f"delta out of range: need 0 < delta < {top}")
    level = min(top - delta, M)

    if isinstance(c, TranslationInvariant):
        return R + c.profile.sublevel_sup(level, strict=True)
    if isinstance(c, CameronMartin):
        # same class and weighted norm < level  =>  |x - y| < level * max a_j
        return R + level * max(c.scales)
    if isinstance(c, CoordinateSeparable):
        if not c.outer.monotone:
            raise ValueError("coercivity radius needs a nondecreasing outer profile")
        s_max = c.outer.sublevel_sup(level, strict=True)
        if math.isinf(s_max):
            return math.inf
        profs = c.coordinate_profiles
        if len(profs) == 1:
            if dim is None:
                raise ValueError("dim is required for a broadcast coordinate profile")
            profs = profs * dim
        radii = [h.sublevel_sup(s_max, strict=False) for h in profs]
        if any(math.isinf(r) for r in radii):
            return math.inf
        return R + math.sqrt(sum(r * r for r in radii))
    raise TypeError(f"no coercivity analysis for {type(c).__name__}")


def check_growth_envelope(c: Cost, samples) -> float:
    """Largest positive part of ``c(l x, y) - f(l) c(x, y)`` and
    ``c(x, l y) - g(l) c(x, y)`` over ``(x, y, l)`` samples; 0 means none found."""
    if c.envelope is None:
        raise ValueError("cost has no growth envelope")
    worst = 0.0
    for x, y, lam in samples:
        if not lam > 0:
            raise ValueError("scaling factors must be positive")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        base = c.evaluate(x, y)
        if math.isinf(base):
            continue
        for scaled, factor in ((c.evaluate(lam * x, y), c.envelope.f(lam)),
                               (c.evaluate(x, lam * y), c.envelope.g(lam))):
            bound = factor * base if base > 0 else 0.0
            worst = max(worst, scaled - bound)
    return worst


def check_projection_contraction(c: Cost, P: Projection, Q: Projection, samples,
                                 x_tail=None, y_tail=None) -> float:
    """``max c(P x, Q y) - c(x, y)`` over sampled pairs with finite ``c(x, y)``.

    ``samples`` is a sequence of ``(x, y)`` pairs or a pair of ``(s, D)``
    arrays.  Returns 0.0 when every sampled pair has infinite cost.
    """
    if isinstance(samples, tuple) and len(samples) == 2 and np.ndim(samples[0]) == 2:
        X, Y = (np.asarray(s, dtype=float) for s in samples)
    else:
        pairs = list(samples)
        X = np.array([p[0] for p in pairs], dtype=float)
        Y = np.array([p[1] for p in pairs], dtype=float)
    if X.shape != Y.shape:
        raise ValueError("sample arrays must match")
    if X.size == 0:
        return 0.0
    xt = np.zeros(len(X), dtype=np.int64) if x_tail is None else np.asarray(x_tail)
    yt = np.zeros(len(Y), dtype=np.int64) if y_tail is None else np.asarray(y_tail)
    diff = X - Y
    base = c._block(diff[:, None, :], (xt != yt)[:, None])[:, 0]
    proj = c._block((apply(P, X) - apply(Q, Y))[:, None, :], (xt != yt)[:, None])[:, 0]
    finite = np.isfinite(base)
    if not np.any(finite):
        return 0.0
    return float(np.max(proj[finite] - base[finite]))
