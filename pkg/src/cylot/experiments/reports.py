"""Report records and their CSV / JSON persistence.

Floats are written with 12 significant digits; infinities as ``inf`` /
``-inf`` (quoted strings in JSON).  Reading a report back yields
``report.quantized()``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

CONVERGENCE_COLUMNS = ("k", "cost", "status", "runtime_ms", "contraction_max")


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def quantize(x: float) -> float:
    return float(fmt_float(float(x)))


def _encode(v):
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, float):
        return quantize(v) if math.isfinite(v) else fmt_float(v)
    if isinstance(v, dict):
        return {k: _encode(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_encode(x) for x in v]
    if hasattr(v, "item"):
        return _encode(v.item())
    raise TypeError(f"cannot encode {type(v).__name__}")


def _decode_float(v) -> float:
    return float(v)


@dataclass(frozen=True)
class RankRecord:
    k: int
    cost: float
    status: str
    runtime_ms: float
    contraction_max: float
    q_rank: Optional[int] = None
    method: str = "exact"


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-rank projected costs against the unprojected cost.

    ``monotone`` is true iff consecutive finite costs satisfy
    ``C_{k_i} <= C_{k_{i+1}} + 1e-9``.  ``certified`` records whether the
    sampled contraction check came out ``<= 0``.
    """

    records: Tuple[RankRecord, ...]
    full_cost: float
    full_status: str
    full_runtime_ms: float
    monotone: bool
    contraction_max: float
    gap: float
    certified: bool
    dominated: bool
    approximate: bool
    infeasible_ranks: Tuple[int, ...] = ()
    config: Dict[str, Any] = field(default_factory=dict)
    kind: str = "convergence"

    @property
    def costs(self) -> List[float]:
        return [r.cost for r in self.records]


@dataclass(frozen=True)
class OracleReport:
    empirical_cost: float
    oracle: float
    relative_error: float
    status: str
    n: int
    dim: int
    seed: int
    runtime_ms: float
    config: Dict[str, Any] = field(default_factory=dict)
    kind: str = "oracle"


@dataclass(frozen=True)
class SmoothReport:
    reference_objective: float
    smooth_objective: float
    objective_loss: float
    eps: float
    max_violation: float
    rho: float
    R_x: float
    R_y: float
    M: float
    verification_nodes: int
    achieved_delta: float
    membership: Dict[str, bool]
    runtime_ms: float
    config: Dict[str, Any] = field(default_factory=dict)
    kind: str = "smooth"


@dataclass(frozen=True)
class SolveSummary:
    cost: float
    dual_objective: float
    gap: float
    status: str
    method: str
    iterations: int
    marginal_error: float
    n_mu: int
    n_nu: int
    runtime_ms: float
    config: Dict[str, Any] = field(default_factory=dict)
    kind: str = "solve"


_KINDS = {"convergence": ConvergenceReport, "oracle": OracleReport,
          "smooth": SmoothReport, "solve": SolveSummary}


def to_dict(report) -> Dict[str, Any]:
    return _encode(dataclasses.asdict(report))


def from_dict(d: Dict[str, Any]):
    cls = _KINDS[d["kind"]]
    kwargs = {}
    hints = {f.name: f for f in dataclasses.fields(cls)}
    for name, value in d.items():
        if name not in hints:
            raise ValueError(f"unexpected field {name!r} in {d['kind']} report")
        if name == "records":
            value = tuple(RankRecord(**{k: (_decode_float(v) if k in ("cost", "runtime_ms", "contraction_max") else v)
                                        for k, v in r.items()}) for r in value)
        elif name == "infeasible_ranks":
            value = tuple(value)
        elif isinstance(value, str) and value in ("inf", "-inf", "nan"):
            value = float(value)
        kwargs[name] = value
    return cls(**kwargs)


def quantized(report):
    """The report as it reads back after a JSON round trip."""
    return from_dict(json.loads(json.dumps(to_dict(report))))


def without_runtime(report) -> Dict[str, Any]:
    """Report contents minus wall-clock fields (which are not reproducible)."""
    d = to_dict(report)
    d.pop("runtime_ms", None)
    d.pop("full_runtime_ms", None)
    for r in d.get("records", []):
        r.pop("runtime_ms", None)
    return d


def _csv_table(report) -> Tuple[List[str], List[List[str]]]:
    if isinstance(report, ConvergenceReport):
        rows = [[str(r.k), fmt_float(r.cost), r.status, fmt_float(r.runtime_ms),
                 fmt_float(r.contraction_max)] for r in report.records]
        return list(CONVERGENCE_COLUMNS), rows
    d = dataclasses.asdict(report)
    d.pop("config")
    d.pop("kind")
    d.pop("membership", None)
    header = list(d)
    row = [fmt_float(v) if isinstance(v, float) else str(v) for v in d.values()]
    return header, [row]


def render(report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(to_dict(report), indent=2, sort_keys=False) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    header, rows = _csv_table(report)
    lines = [",".join(header)] + [",".join(r) for r in rows]
    return "\n".join(lines) + "\n"


def emit_report(report, path, fmt: str = "csv") -> Path:
    """Write ``report`` as CSV (per-rank table) or JSON (full report)."""
    path = Path(path)
    path.write_text(render(report, fmt))
    return path


def load_report(path, fmt: Optional[str] = None):
    """Parse a file written by :func:`emit_report`.

    JSON gives back the full report; CSV gives back the convergence records
    (a tuple of :class:`RankRecord`) or, for single-row reports, a dict of
    column to value.
    """
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    text = path.read_text()
    if fmt == "json":
        return from_dict(json.loads(text))
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
        fh.seek(0)
        header = next(csv.reader(fh), [])
    if tuple(header) == CONVERGENCE_COLUMNS:
        return tuple(RankRecord(int(r["k"]), float(r["cost"]), r["status"],
                                float(r["runtime_ms"]), float(r["contraction_max"]))
                     for r in rows)
    return rows[0] if rows else {}
