"""Dual potentials on finite supports: c-transforms, normalisation into the
sharp class and the relaxed membership test.

Potentials are plain float arrays aligned with the atoms of a measure (or the
rows/columns of a cost matrix).  Infinite cost entries never constrain a pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

FEAS_TOL = 1e-9
SHARP_TOL = 1e-9
RELAXED_TOL = 1e-12


def _as_cost(C) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.ndim != 2:
        raise ValueError("cost matrix must be 2-d")
    return C


def _check_shapes(phi, psi, C):
    if phi.shape != (C.shape[0],) or psi.shape != (C.shape[1],):
        raise ValueError(f"potentials of length {phi.size}, {psi.size} do not match "
                         f"cost shape {C.shape}")


def c_transform(psi, C) -> np.ndarray:
    """``psi^c(x_i) = min_j (C_ij - psi_j)`` over finite entries."""
    C = _as_cost(C)
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (C.shape[1],):
        raise ValueError(f"psi has length {psi.size}, cost has {C.shape[1]} columns")
    out = np.min(C - psi[None, :], axis=1)
    bad = ~np.isfinite(out)
    if np.any(bad):
        raise ValueError(f"transform undefined at atom {int(np.flatnonzero(bad)[0])}")
    return out


def feasibility_violation(phi, psi, C) -> float:
    """``max (phi_i + psi_j - C_ij)`` over finite entries; ``<= 0`` means feasible."""
    C = _as_cost(C)
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    _check_shapes(phi, psi, C)
    slack = phi[:, None] + psi[None, :] - C
    finite = np.isfinite(C)
    if not np.any(finite):
        return -math.inf
    return float(np.max(slack[finite]))


def _sharp_residual(phi, psi, C) -> float:
    gap = C - phi[:, None] - psi[None, :]
    return float(np.min(gap[np.isfinite(C)]))


@dataclass(frozen=True)
class MembershipReport:
    """Extremes of a potential pair and the verdict on each defining bound.

    ``delta == 0`` tests the sharp class (exact normalisation plus the sharp
    constraint); ``delta > 0`` tests the relaxed bounds.
    """

    inf_phi: float
    sup_phi: float
    inf_psi: float
    sup_psi: float
    sup_cost: float
    inf_cost_minus_phi: float
    sharp_residual: float
    max_violation: float
    delta: float
    verdicts: Dict[str, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    @property
    def achieved_delta(self) -> float:
        """Smallest ``delta`` for which the relaxed bounds hold (``inf`` if none)."""
        if self.inf_phi > RELAXED_TOL or self.sup_phi > self.sup_cost + RELAXED_TOL:
            return math.inf
        return max(0.0, -self.inf_phi, -self.sup_phi - self.inf_psi, -self.sup_psi)

    def recompute_verdicts(self) -> Dict[str, bool]:
        return _verdicts(self.inf_phi, self.sup_phi, self.inf_psi, self.sup_psi,
                         self.sup_cost, self.inf_cost_minus_phi, self.sharp_residual,
                         self.max_violation, self.delta)


def _verdicts(inf_phi, sup_phi, inf_psi, sup_psi, sup_cost, inf_c_phi, sharp,
              violation, delta) -> Dict[str, bool]:
    v = {"feasible": violation <= FEAS_TOL}
    if delta == 0:
        v["inf_phi_zero"] = abs(inf_phi) <= SHARP_TOL
        v["sup_phi_le_sup_cost"] = sup_phi <= sup_cost + SHARP_TOL
        v["psi_ge_inf_cost_minus_phi"] = inf_psi >= inf_c_phi - SHARP_TOL
        v["sup_psi_nonneg"] = sup_psi >= -SHARP_TOL
        v["sharp_constraint"] = abs(sharp) <= SHARP_TOL
        v["psi_ge_minus_sup_phi"] = inf_psi >= -sup_phi - SHARP_TOL
    else:
        t = RELAXED_TOL
        v["inf_phi_in_range"] = -delta - t <= inf_phi <= t
        v["sup_phi_le_sup_cost"] = sup_phi <= sup_cost + t
        v["psi_ge_minus_sup_phi_minus_delta"] = inf_psi >= -sup_phi - delta - t
        v["sup_psi_ge_minus_delta"] = sup_psi >= -delta - t
    return v


def check_membership(phi, psi, C, delta: float = 0.0) -> MembershipReport:
    """Evaluate the bounds defining the sharp (``delta == 0``) or relaxed class."""
    if not delta >= 0:
        raise ValueError("delta must be nonnegative")
    C = _as_cost(C)
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    _check_shapes(phi, psi, C)
    finite = np.isfinite(C)
    # sup over the whole product, so a single +inf entry makes the bound vacuous
    sup_cost = float(np.max(C))
    c_minus_phi = (C - phi[:, None])[finite]
    inf_c_phi = float(np.min(c_minus_phi)) if c_minus_phi.size else math.inf
    sharp = _sharp_residual(phi, psi, C) if np.any(finite) else math.inf
    viol = feasibility_violation(phi, psi, C)
    nums = (float(phi.min()), float(phi.max()), float(psi.min()), float(psi.max()),
            sup_cost, inf_c_phi, sharp, viol, float(delta))
    return MembershipReport(*nums, verdicts=_verdicts(*nums))


def normalize_pair(phi, psi, C):
    """Move a feasible pair into the sharp class without lowering its objective.

    With ``psi^c`` the c-transform of ``psi`` and
    ``lam = sup(phi - psi^c) + inf psi^c``, the output is
    ``phi_hat = (phi - lam)^+`` and
    ``psi_hat = max(psi + inf psi^c, inf_{x,y}(c - phi_hat))``.

    Parameters
    ----------
    phi, psi : array-like
        A pair with ``phi_i + psi_j <= C_ij`` on finite entries.
    C : array-like
        Cost matrix; every row needs a finite entry.

    Returns
    -------
    phi_hat, psi_hat : ndarray
    lam : float
    report : MembershipReport
        Membership of the output in the sharp class.
    """
    C = _as_cost(C)
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    _check_shapes(phi, psi, C)
    viol = feasibility_violation(phi, psi, C)
    if viol > FEAS_TOL:
        raise ValueError(f"input pair is infeasible (max violation {viol:.3e})")
    psi_c = c_transform(psi, C)
    inf_psi_c = float(psi_c.min())
    lam = float(np.max(phi - psi_c)) + inf_psi_c
    phi_hat = np.maximum(phi - lam, 0.0)
    finite = np.isfinite(C)
    floor = float(np.min((C - phi_hat[:, None])[finite]))
    psi_hat = np.maximum(psi + inf_psi_c, floor)
    return phi_hat, psi_hat, lam, check_membership(phi_hat, psi_hat, C, 0.0)
