"""Finitely supported probability measures on a truncated sequence space.

A point is a real vector of fixed ambient length ``D``; coordinate ``j``
is the coefficient of the point along the ``j``-th basis vector.  Each atom
also carries an integer *tail class*, a symbolic label for the part of the
point that lives beyond the ambient truncation.  Only the Cameron-Martin cost
looks at it; two points whose tail classes differ are an infinite distance
apart in that cost.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

WEIGHT_ATOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Atoms ``points[i]`` with probabilities ``weights[i]``.

    Use :func:`make_discrete` to build one from raw data; the constructor only
    checks shapes and normalisation.
    """

    points: np.ndarray
    weights: np.ndarray
    tail: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or w.ndim != 1 or pts.shape[0] != w.shape[0] or w.size == 0:
            raise ValueError("points must be (n, D) and weights (n,) with n >= 1")
        if abs(w.sum() - 1.0) > WEIGHT_ATOL:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        tail = np.zeros(w.size, dtype=np.int64) if self.tail is None else np.asarray(self.tail, dtype=np.int64)
        if tail.shape != w.shape:
            raise ValueError("tail labels must match the number of atoms")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "tail", _frozen(tail))

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (np.array_equal(self.points, other.points)
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.tail, other.tail))

    def __hash__(self):
        return hash((self.points.tobytes(), self.weights.tobytes(), self.tail.tobytes()))

    def with_tail(self, tail) -> "DiscreteMeasure":
        tail = np.broadcast_to(np.asarray(tail, dtype=np.int64), self.weights.shape)
        return DiscreteMeasure(self.points, self.weights, tail)


@dataclass(frozen=True)
class GaussianSpec:
    """Gaussian with diagonal covariance in the coordinate basis."""

    mean: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        ev = np.asarray(self.eigenvalues, dtype=float).ravel()
        if mean.shape != ev.shape:
            raise ValueError(f"mean has length {mean.size} but {ev.size} eigenvalues given")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(ev)) or np.any(ev < 0):
            raise ValueError("eigenvalues must be finite and nonnegative, mean finite")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "eigenvalues", _frozen(ev))

    @property
    def dim(self) -> int:
        return self.mean.size


def make_discrete(points, weights, tail=None) -> DiscreteMeasure:
    """Build a measure, renormalising ``weights`` to sum to one.

    >>> make_discrete([[0.0], [1.0]], [1, 1]).weights
    array([0.5, 0.5])
    """
    rows = [np.asarray(p, dtype=float).ravel() for p in points]
    if not rows:
        raise ValueError("empty support")
    dims = {r.size for r in rows}
    if len(dims) != 1:
        raise ValueError(f"mismatched ambient dimensions: {sorted(dims)}")
    pts = np.vstack(rows)
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != pts.shape[0]:
        raise ValueError(f"{pts.shape[0]} points but {w.size} weights")
    if np.any(w < 0):
        raise ValueError("negative weight")
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise ValueError("weights must have a positive finite sum")
    return DiscreteMeasure(pts, w / total, tail)


def sample_gaussian(spec: GaussianSpec, n: int, seed: int, tail=None) -> DiscreteMeasure:
    """Draw ``n`` equally weighted atoms ``mean + sqrt(eigenvalues) * Z``."""
    if n < 1:
        raise ValueError("sample count must be at least 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, spec.dim))
    pts = spec.mean + np.sqrt(spec.eigenvalues) * z
    return DiscreteMeasure(pts, np.full(n, 1.0 / n),
                           None if tail is None else np.broadcast_to(tail, (n,)))


def empirical_moments(m: DiscreteMeasure) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted mean and per-coordinate weighted variance."""
    mean = m.weights @ m.points
    centred = m.points - mean
    var = m.weights @ (centred * centred)
    return mean, var


def load_measure_csv(path, dim: Optional[int] = None) -> DiscreteMeasure:
    """Read ``weight,x1,...,xD`` rows (header required).

    An optional trailing ``tail`` column holds integer tail classes.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not header or header[0] != "weight":
        raise ValueError(f"{path}: header must start with 'weight'")
    has_tail = header[-1] == "tail"
    n_coord = len(header) - 1 - int(has_tail)
    if dim is not None and n_coord != dim:
        raise ValueError(f"{path}: {n_coord} coordinates, expected {dim}")
    weights, points, tail = [], [], []
    for lineno, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(r)}")
        weights.append(float(r[0]))
        points.append([float(x) for x in r[1:1 + n_coord]])
        if has_tail:
            tail.append(int(r[-1]))
    return make_discrete(points, weights, tail if has_tail else None)


def save_measure_csv(m: DiscreteMeasure, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        header = ["weight"] + [f"x{j + 1}" for j in range(m.dim)]
        has_tail = bool(np.any(m.tail != 0))
        if has_tail:
            header.append("tail")
        w.writerow(header)
        for i in range(m.size):
            row = [repr(float(m.weights[i]))] + [repr(float(x)) for x in m.points[i]]
            if has_tail:
                row.append(int(m.tail[i]))
            w.writerow(row)


def point_mass(x: Sequence[float], tail: int = 0) -> DiscreteMeasure:
    return make_discrete([x], [1.0], [tail])
