"""Finite-rank projections and pushforwards of discrete measures.

Projected points stay in the ambient coordinates, so a cost can compare a
projected point with an unprojected one.  Tail classes are carried along
unchanged by every projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .measures import DiscreteMeasure

IDEMPOTENCE_ATOL = 1e-12
MERGE_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class Projection:
    """Either the coordinate truncation keeping the first ``rank`` coordinates
    (``matrix is None``) or ``x -> matrix @ x`` for an idempotent ``matrix``."""

    dim: int
    rank: int
    matrix: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if not 0 <= self.rank <= self.dim:
            raise ValueError(f"rank {self.rank} outside [0, {self.dim}]")
        if self.matrix is not None:
            M = np.array(self.matrix, dtype=float)
            if M.shape != (self.dim, self.dim):
                raise ValueError(f"projection matrix must be {self.dim}x{self.dim}")
            if not np.allclose(M @ M, M, atol=IDEMPOTENCE_ATOL, rtol=0):
                raise ValueError("projection matrix is not idempotent")
            M.setflags(write=False)
            object.__setattr__(self, "matrix", M)

    @property
    def is_truncation(self) -> bool:
        return self.matrix is None

    @classmethod
    def truncation(cls, rank: int, dim: int) -> "Projection":
        return cls(dim, rank)

    @classmethod
    def onto_rows(cls, rows) -> "Projection":
        """Orthogonal projection onto the span of orthonormal ``rows`` (r, D)."""
        A = np.atleast_2d(np.asarray(rows, dtype=float))
        if not np.allclose(A @ A.T, np.eye(A.shape[0]), atol=IDEMPOTENCE_ATOL, rtol=0):
            raise ValueError("rows must be orthonormal")
        return cls(A.shape[1], A.shape[0], A.T @ A)


def truncation_family(dim: int, ranks=None) -> List[Projection]:
    """Truncations of rank ``0..dim`` (or the given ``ranks``), increasing."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    ranks = range(0, dim + 1) if ranks is None else sorted(ranks)
    return [Projection.truncation(k, dim) for k in ranks]


def apply(P: Projection, X) -> np.ndarray:
    """Project a point ``(D,)`` or a batch ``(n, D)``."""
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != P.dim:
        raise ValueError(f"dimension mismatch: {X.shape[-1]} vs {P.dim}")
    if P.is_truncation:
        out = X.copy()
        out[..., P.rank:] = 0.0
        return out
    return X @ P.matrix.T


def pushforward(P: Projection, mu: DiscreteMeasure) -> DiscreteMeasure:
    """Image measure ``P#mu``.

    Atoms whose images agree within ``MERGE_ATOL`` in every coordinate and
    share a tail class are merged; the first occurrence is kept as the
    representative and the order of first occurrences is preserved.
    """
    pts = apply(P, mu.points)
    n = pts.shape[0]
    group = np.empty(n, dtype=np.int64)
    reps = []
    rep_pts = np.empty_like(pts)
    rep_tail = np.empty(n, dtype=np.int64)
    for i in range(n):
        g = len(reps)
        if g:
            close = (np.max(np.abs(rep_pts[:g] - pts[i]), axis=1) <= MERGE_ATOL) & (rep_tail[:g] == mu.tail[i])
            hit = np.flatnonzero(close)
            if hit.size:
                group[i] = hit[0]
                continue
        group[i] = g
        reps.append(i)
        rep_pts[g] = pts[i]
        rep_tail[g] = mu.tail[i]
    w = np.array([math.fsum(mu.weights[group == g]) for g in range(len(reps))])
    keep = np.array(reps)
    return DiscreteMeasure(pts[keep], w, mu.tail[keep])
