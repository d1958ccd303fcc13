"""Smooth, compactly supported feasible potentials on uniform grids.

A grid potential produced here is a normalised kernel average of node values
``g``: ``u(x) = sum_z eta(|x - z| / rho) g(z) / sum_z eta(|x - z| / rho)``,
the sums running over the whole (infinite) lattice with ``g = 0`` off the
stored box.  This is a smooth function of ``x``; at nodes it is the discrete
convolution with a unit-sum kernel, so constants are reproduced exactly.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..costs import Cost, coercivity_radius
from ..measures import DiscreteMeasure
from .duality import normalize_pair

MASS_TOL = 1e-6
_ALPHA_TOL = 1e-10
_CHUNK = 2 ** 18


def _f(t):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def bump(z):
    """Smooth profile equal to 1 on ``[0, 1/2]`` and 0 on ``[1, inf)``."""
    z = np.asarray(z, dtype=float)
    a = _f(1.0 - z)
    b = _f(z - 0.5)
    den = a + b
    out = np.where(den > 0, a / np.where(den > 0, den, 1.0), 0.0)
    out = np.where(z <= 0.5, 1.0, out)
    return np.where(z >= 1.0, 0.0, out)


def _ball_midpoint(k: int, q: float) -> float:
    """Midpoint rule for ``int eta(|x|) dx`` on the cube ``[-1, 1]^k`` at pitch ``q``."""
    n = int(math.ceil(1.0 / q))
    c = (np.arange(-n, n) + 0.5) * q
    r2 = np.zeros((1,) * k)
    for ax in range(k):
        shape = [1] * k
        shape[ax] = c.size
        r2 = r2 + (c * c).reshape(shape)
    return float(bump(np.sqrt(r2)).sum() * q ** k)


@dataclass(frozen=True)
class Mollifier:
    """``eta_rho(x) = eta(|x| / rho) / (alpha * rho^k)`` in dimension ``k``."""

    k: int
    rho: float
    alpha: float
    quad_pitch: float

    def density(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.sqrt(np.sum(x * x, axis=-1))
        return bump(r / self.rho) / (self.alpha * self.rho ** self.k)

    def mass(self, pitch: Optional[float] = None) -> float:
        """Midpoint quadrature of the density; ``pitch`` defaults to ``quad_pitch``."""
        q = (self.quad_pitch if pitch is None else pitch) / self.rho
        return _ball_midpoint(self.k, q) / self.alpha


def make_mollifier(k: int, rho: float, quad_pitch: float) -> Mollifier:
    """Build the scaled bump, with ``alpha`` from midpoint quadrature.

    The quadrature starts at ``quad_pitch`` and halves the pitch until two
    successive values of ``alpha`` agree to ``1e-10``; the pitch reached is
    stored as ``quad_pitch``.
    """
    if k < 1:
        raise ValueError("dimension must be at least 1")
    if not rho > 0:
        raise ValueError("rho must be positive")
    if not (0 < quad_pitch <= rho / 8):
        raise ValueError("pitch too coarse: need quad_pitch <= rho / 8")
    q = quad_pitch / rho
    prev = _ball_midpoint(k, q)
    while True:
        q /= 2
        cur = _ball_midpoint(k, q)
        if abs(cur - prev) <= _ALPHA_TOL * cur or q < 1e-4:
            break
        prev = cur
    return Mollifier(k, float(rho), cur, q * rho)


@dataclass(frozen=True, eq=False)
class GridPotential:
    """Values on the uniform lattice ``lo + i * pitch`` covering a box.

    When ``source`` and ``rho`` are set the potential is the kernel average
    of ``source`` (see the module docstring) and :meth:`evaluate` works at any
    point; otherwise only node values are defined and off-node evaluation
    interpolates multilinearly.
    """

    center: np.ndarray
    half_width: np.ndarray
    pitch: float
    values: np.ndarray
    source: Optional[np.ndarray] = None
    rho: Optional[float] = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        hw = np.broadcast_to(np.asarray(self.half_width, dtype=float), c.shape).copy()
        v = np.asarray(self.values, dtype=float)
        expect = tuple(int(round(2 * w / self.pitch)) + 1 for w in hw)
        if v.shape != expect:
            raise ValueError(f"values shape {v.shape}, expected {expect}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_width", hw)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def lo(self) -> np.ndarray:
        return self.center - self.half_width

    def axes(self):
        return [self.lo[a] + self.pitch * np.arange(n) for a, n in enumerate(self.values.shape)]

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def evaluate(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {self.dim}")
        if self.source is None:
            return _interp(self, X)
        return kernel_average(self.source, self.lo, self.pitch, self.rho, X)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j + 1}" for j in range(self.dim)] + ["value"])
            for p, v in zip(self.nodes(), self.values.ravel()):
                w.writerow([f"{c:.12g}" for c in p] + [f"{v:.12g}"])


def _interp(g: GridPotential, X) -> np.ndarray:
    t = (X - g.lo) / g.pitch
    shape = np.array(g.values.shape)
    inside = np.all((t >= 0) & (t <= shape - 1), axis=1)
    i0 = np.clip(np.floor(t).astype(np.int64), 0, shape - 2 if np.all(shape > 1) else 0)
    frac = t - i0
    out = np.zeros(len(X))
    for corner in itertools.product((0, 1), repeat=g.dim):
        idx = np.minimum(i0 + np.array(corner), shape - 1)
        w = np.prod(np.where(np.array(corner) == 1, frac, 1 - frac), axis=1)
        out += w * g.values[tuple(idx.T)]
    return np.where(inside, out, 0.0)


def kernel_average(source, lo, pitch, rho, X) -> np.ndarray:
    """Normalised ``eta(|x - z| / rho)`` average of lattice values at points ``X``."""
    source = np.asarray(source, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k = source.ndim
    shape = np.array(source.shape)
    r = int(math.ceil(rho / pitch)) + 1
    offs = np.array(list(itertools.product(range(-r, r + 1), repeat=k)), dtype=np.int64)
    out = np.empty(len(X))
    step = max(1, _CHUNK // max(1, len(offs)))
    for s in range(0, len(X), step):
        x = X[s:s + step]
        base = np.floor((x - lo) / pitch).astype(np.int64)
        idx = base[:, None, :] + offs[None, :, :]
        z = lo + idx * pitch
        d = x[:, None, :] - z
        w = bump(np.sqrt(np.sum(d * d, axis=-1)) / rho)
        inb = np.all((idx >= 0) & (idx < shape), axis=-1)
        vals = np.zeros(w.shape)
        cl = np.where(inb[..., None], idx, 0)
        vals[inb] = source[tuple(cl[inb].T)]
        out[s:s + step] = np.sum(w * vals, axis=1) / np.sum(w, axis=1)
    return out


def mollify_truncate(phi: GridPotential, R: float, rho: float, drop: float,
                     moll: Mollifier, extra_points=None, extra_values=None) -> GridPotential:
    """Kernel average of ``phi * 1{|z| < R - rho} - drop * 1{|z| < R + rho}``.

    Before smoothing, the closeness premise
    ``sup_{|x| < R} (avg(phi)(x) - phi(x))^+ < drop / 2`` is checked at the
    grid nodes in the ball and at any ``extra_points`` (with the values of
    ``phi`` there given by ``extra_values``).

    Raises
    ------
    ValueError
        ``"rho too large for requested drop"`` when the premise fails.
    """
    if not (0 < rho < 1):
        raise ValueError("rho must lie in (0, 1)")
    if not drop > 0:
        raise ValueError("drop must be positive")
    if moll.k != phi.dim or moll.rho != rho:
        raise ValueError("mollifier does not match the grid dimension or rho")
    lo, hi = phi.lo, phi.center + phi.half_width
    if np.any(lo > -(R + 2 * rho)) or np.any(hi < R + 2 * rho):
        raise ValueError("grid does not cover the ball of radius R + 2 rho")

    nodes = phi.nodes()
    vals = phi.values.ravel()
    inner = np.sqrt(np.sum(nodes * nodes, axis=1)) < R
    pts, ref = nodes[inner], vals[inner]
    if extra_points is not None:
        ep = np.atleast_2d(np.asarray(extra_points, dtype=float))
        ev = np.asarray(extra_values, dtype=float)
        keep = np.sqrt(np.sum(ep * ep, axis=1)) < R
        pts = np.vstack([pts, ep[keep]])
        ref = np.concatenate([ref, ev[keep]])
    if len(pts):
        gap = float(np.max(kernel_average(phi.values, lo, phi.pitch, rho, pts) - ref))
        if gap >= drop / 2:
            raise ValueError("rho too large for requested drop")

    radius = np.sqrt(np.sum(nodes * nodes, axis=1))
    g = vals * (radius < R - rho) - drop * (radius < R + rho)
    g = g.reshape(phi.values.shape)
    out = kernel_average(g, lo, phi.pitch, rho, nodes).reshape(phi.values.shape)
    return GridPotential(phi.center, phi.half_width, phi.pitch, out, g, rho)


# --------------------------------------------------------------------------
# end-to-end construction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothingResult:
    """Output of :func:`smooth_feasible_pair`; unpacks as ``(phi, psi, loss)``."""

    phi: GridPotential
    psi: GridPotential
    objective_loss: float
    objective: float
    reference_objective: float
    max_violation: float
    rho: float
    R_x: float
    R_y: float
    M: float
    verification_nodes: int
    achieved_delta: float
    extras: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.phi, self.psi, self.objective_loss))


def _chunked_ctransform(values, src, dst, cost: Cost) -> np.ndarray:
    """``min_i c(src_i, dst_j) - values_i`` for each ``dst_j``."""
    out = np.empty(len(dst))
    step = max(1, _CHUNK // max(1, len(src)))
    for s in range(0, len(dst), step):
        C = cost.matrix(src, dst[s:s + step])
        out[s:s + step] = np.min(C - values[:, None], axis=0)
    return out


def _max_violation(phi_v, X, psi_v, Y, cost: Cost) -> float:
    worst = -math.inf
    step = max(1, _CHUNK // max(1, len(Y)))
    for s in range(0, len(X), step):
        C = cost.matrix(X[s:s + step], Y)
        slack = phi_v[s:s + step, None] + psi_v[None, :] - C
        slack = np.where(np.isfinite(C), slack, -math.inf)
        worst = max(worst, float(slack.max()))
    return worst


def _lattice(L: float, pitch: float, k: int):
    n = int(round(2 * L / pitch)) + 1
    axis = -L + pitch * np.arange(n)
    mesh = np.meshgrid(*([axis] * k), indexing="ij")
    return np.column_stack([m.ravel() for m in mesh]), (n,) * k


def smooth_feasible_pair(dual, cost: Cost, mu: DiscreteMeasure, nu: DiscreteMeasure,
                         eps: float, *, rho_max: float = 0.5, nodes_per_rho: int = 4,
                         max_nodes: int = 40_000, max_halvings: int = 12) -> SmoothingResult:
    """Replace a feasible pair on the supports by smooth compactly supported
    grid potentials that stay feasible and lose at most about ``eps``.

    Parameters
    ----------
    dual : DualSolution
        Feasible potentials on the atoms of ``mu`` and ``nu``.
    cost : Cost
        Any shipped family; it is evaluated at grid nodes.
    mu, nu : DiscreteMeasure
        Measures in dimension 1 or 2, all atoms of one tail class.
    eps : float
        Objective budget.
    rho_max : float
        First mollification radius tried; it is halved until the closeness
        premise holds on both sides.
    nodes_per_rho : int
        Construction pitch is ``rho / nodes_per_rho``; verification runs on
        the lattice of half that pitch.
    max_nodes : int
        Budget on the number of verification nodes (both sides together).

    Returns
    -------
    SmoothingResult
        ``phi``, ``psi`` on a common box, ``objective_loss`` relative to the
        input pair, and the largest constraint violation over the product of
        the verification lattices.

    Notes
    -----
    Feasibility is certified on the computational box, which contains the
    supports of both smooth potentials.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    k = mu.dim
    if nu.dim != k:
        raise ValueError(f"dimension mismatch: {k} vs {nu.dim}")
    if k > 2:
        raise ValueError("grid smoothing supports dimension 1 or 2")
    if len(set(mu.tail.tolist()) | set(nu.tail.tolist())) > 1:
        raise ValueError("grid smoothing needs a single tail class")

    C = cost.matrix(mu.points, nu.points)
    phi_in = np.asarray(dual.phi, dtype=float)
    psi_in = np.asarray(dual.psi, dtype=float)
    reference = float(mu.weights @ phi_in + nu.weights @ psi_in)
    phi_s, psi_s, _, _ = normalize_pair(phi_in, psi_in, C)

    def phi1(P):
        return _chunked_ctransform(psi_s, nu.points, P, cost)

    # every atom sits inside B_{R_x - 1}, so no mass is cut off
    R_x = float(np.max(np.linalg.norm(mu.points, axis=1))) + 1.0
    ny = float(np.max(np.linalg.norm(nu.points, axis=1))) + 1.0

    # coarse first guess for M = sup of the normalised phi on B_{R_x}
    probe, _ = _lattice(math.ceil(R_x * 32) / 32, 1 / 32, k)
    probe = probe[np.linalg.norm(probe, axis=1) < R_x]
    pv = phi1(np.vstack([probe, mu.points]))
    M = 1.25 * float(pv.max() - pv.min()) + eps

    for _ in range(8):
        R_y = coercivity_radius(cost, R_x, eps / 6, max(M, eps / 6), dim=k)
        if math.isinf(R_y):
            raise ValueError("coercivity radius unavailable for this cost")
        R_y = max(R_y, ny)
        rho = rho_max
        restart = False
        for _ in range(max_halvings + 1):
            h = rho / nodes_per_rho
            L = math.ceil((max(R_x, R_y) + 2 * rho + h) / h) * h
            V, vshape = _lattice(L, h / 2, k)
            if 2 * len(V) > max_nodes:
                raise ValueError(f"grid budget exceeded: {2 * len(V)} verification nodes "
                                 f"> {max_nodes}")
            zmask = np.zeros(vshape, dtype=bool)
            zmask[(slice(None, None, 2),) * k] = True
            zmask = zmask.ravel()

            Xset = np.vstack([V, mu.points])
            f1 = phi1(Xset)
            shift = float(f1.min())
            phi_x = f1 - shift
            inside = np.linalg.norm(Xset, axis=1) < R_x
            m_need = float(phi_x[inside].max())
            if m_need > M:
                M = 1.5 * m_need
                restart = True
                break
            Yset = np.vstack([V, nu.points])
            psi_y = _chunked_ctransform(f1, Xset, Yset, cost) + shift

            zshape = tuple((n + 1) // 2 for n in vshape)
            center = np.zeros(k)
            hw = np.full(k, L)
            mx = make_mollifier(k, rho, rho / 8)
            nv = len(V)
            try:
                phi_grid = GridPotential(center, hw, h, phi_x[:nv][zmask].reshape(zshape))
                phi_hat = mollify_truncate(phi_grid, R_x, rho, eps / 3, mx,
                                           V[~zmask], phi_x[:nv][~zmask])
                psi_grid = GridPotential(center, hw, h, psi_y[:nv][zmask].reshape(zshape))
                psi_hat = mollify_truncate(psi_grid, R_y, rho, eps / 4, mx,
                                           V[~zmask], psi_y[:nv][~zmask])
            except ValueError as err:
                if "rho too large" not in str(err):
                    raise
                rho /= 2
                continue
            # averaging also pulls values down near concave kinks at the atoms
            low = (mu.weights @ np.maximum(phi_x[nv:] - kernel_average(
                       phi_grid.values, phi_grid.lo, h, rho, mu.points), 0.0)
                   + nu.weights @ np.maximum(psi_y[nv:] - kernel_average(
                       psi_grid.values, psi_grid.lo, h, rho, nu.points), 0.0))
            if low > eps / 3:
                rho /= 2
                continue
            break
        else:
            raise ValueError("rho too large for requested drop at every tried radius")
        if not restart:
            break
    else:
        raise ValueError("could not bound the potential on B_{R_x}")

    phi_v = phi_hat.evaluate(V)
    psi_v = psi_hat.evaluate(V)
    violation = _max_violation(phi_v, V, psi_v, V, cost)
    objective = float(mu.weights @ phi_hat.evaluate(mu.points)
                      + nu.weights @ psi_hat.evaluate(nu.points))
    achieved = max(0.0, -float(phi_v.min()), -float(phi_v.max()) - float(psi_v.min()),
                   -float(psi_v.max()))
    return SmoothingResult(phi_hat, psi_hat, reference - objective, objective, reference,
                           violation, rho, R_x, R_y, M, 2 * len(V), achieved)
