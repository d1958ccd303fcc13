"""Experiment configuration: a schema-versioned JSON document.

Example::

    {
      "schema_version": 1,
      "cost": {"kind": "translation_invariant", "profile": {"kind": "power", "p": 2}},
      "dim": 8, "n": 64, "seed": 0,
      "mu": {"kind": "gaussian", "mean": 0.0, "eigenvalues": {"decay": 2.0}},
      "nu": {"kind": "gaussian", "mean": 0.5, "eigenvalues": 1.0},
      "ranks": [1, 2, 4, 8],
      "solver": {"kind": "exact"}
    }

Unknown keys anywhere in the document are errors.  Relative CSV paths are
resolved against the directory of the config file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..costs import (CameronMartin, CoordinateSeparable, Cost, ScalarProfile,
                     TranslationInvariant, bounded_saturating, load_profile_csv,
                     power, table)
from ..measures import (DiscreteMeasure, GaussianSpec, load_measure_csv,
                        make_discrete, sample_gaussian)

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema_version", "cost", "dim", "n", "seed", "mu", "nu", "ranks",
             "q_ranks", "solver", "delta", "eps", "smoothing", "contraction_samples",
             "output"}


class ConfigError(ValueError):
    pass


def _only(d: dict, allowed, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}")


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing key {key!r}")
    return d[key]


@dataclass(frozen=True)
class SolverChoice:
    kind: str = "exact"
    epsilon: Optional[float] = None
    max_iter: int = 100_000
    tol: float = 1e-9
    pivot_rule: str = "block"


@dataclass(frozen=True)
class ExperimentConfig:
    cost: Cost
    dim: int
    mu: Dict[str, Any]
    nu: Dict[str, Any]
    n: int = 64
    seed: int = 0
    ranks: Tuple[int, ...] = ()
    q_ranks: Optional[Tuple[int, ...]] = None
    solver: SolverChoice = field(default_factory=SolverChoice)
    delta: float = 0.0
    eps: float = 0.1
    smoothing: Dict[str, Any] = field(default_factory=dict)
    contraction_samples: int = 100_000
    output_path: Optional[str] = None
    output_format: str = "csv"
    raw: Dict[str, Any] = field(default_factory=dict)
    base_dir: str = "."
    built: Dict[str, DiscreteMeasure] = field(default_factory=dict, repr=False, compare=False)

    def measure(self, which: str) -> DiscreteMeasure:
        """``mu`` (sampled with ``seed``) or ``nu`` (sampled with ``seed + 1``)."""
        if which not in ("mu", "nu"):
            raise ValueError(f"unknown measure {which!r}")
        if which not in self.built:
            spec = self.mu if which == "mu" else self.nu
            default_seed = self.seed if which == "mu" else self.seed + 1
            self.built[which] = build_measure(spec, self.dim, self.n, default_seed, self.base_dir)
        return self.built[which]


def vector_param(v, dim: int, where: str) -> np.ndarray:
    if isinstance(v, (int, float)):
        return np.full(dim, float(v))
    if isinstance(v, dict):
        _only(v, {"decay", "scale"}, where)
        j = np.arange(1, dim + 1, dtype=float)
        return float(v.get("scale", 1.0)) * j ** (-float(_need(v, "decay", where)))
    arr = np.asarray(v, dtype=float)
    if arr.shape != (dim,):
        raise ConfigError(f"{where}: expected {dim} entries, got {arr.size}")
    return arr


def _tail(v, n: int, where: str):
    if v is None:
        return None
    if isinstance(v, int):
        return np.full(n, v, dtype=np.int64)
    arr = np.asarray(v, dtype=np.int64)
    if arr.shape != (n,):
        raise ConfigError(f"{where}: tail needs one label per atom")
    return arr


def build_measure(spec: dict, dim: int, n: int, seed: int, base_dir: str = ".") -> DiscreteMeasure:
    kind = spec.get("kind")
    where = f"measure[{kind}]"
    if kind == "gaussian":
        _only(spec, {"kind", "mean", "eigenvalues", "tail", "seed"}, where)
        g = GaussianSpec(vector_param(spec.get("mean", 0.0), dim, where + ".mean"),
                         vector_param(spec.get("eigenvalues", 1.0), dim, where + ".eigenvalues"))
        return sample_gaussian(g, n, int(spec.get("seed", seed)),
                               _tail(spec.get("tail"), n, where))
    if kind == "csv":
        _only(spec, {"kind", "path", "tail"}, where)
        path = Path(_need(spec, "path", where))
        if not path.is_absolute():
            path = Path(base_dir) / path
        m = load_measure_csv(path, dim)
        t = _tail(spec.get("tail"), m.size, where)
        return m if t is None else m.with_tail(t)
    if kind == "atoms":
        _only(spec, {"kind", "points", "weights", "tail"}, where)
        pts = _need(spec, "points", where)
        w = spec.get("weights", [1.0] * len(pts))
        m = make_discrete(pts, w, _tail(spec.get("tail"), len(pts), where))
        if m.dim != dim:
            raise ConfigError(f"{where}: points have dimension {m.dim}, config dim is {dim}")
        return m
    raise ConfigError(f"unknown measure kind {kind!r}")


def parse_profile(spec, base_dir: str = ".") -> ScalarProfile:
    kind = spec.get("kind") if isinstance(spec, dict) else None
    where = f"profile[{kind}]"
    if kind == "power":
        _only(spec, {"kind", "p"}, where)
        return power(float(spec.get("p", 2.0)))
    if kind == "bounded_saturating":
        _only(spec, {"kind", "cap", "scale"}, where)
        return bounded_saturating(float(_need(spec, "cap", where)), float(spec.get("scale", 1.0)))
    if kind == "table":
        _only(spec, {"kind", "z", "h", "path"}, where)
        if "path" in spec:
            path = Path(spec["path"])
            return load_profile_csv(path if path.is_absolute() else Path(base_dir) / path)
        return table(_need(spec, "z", where), _need(spec, "h", where))
    raise ConfigError(f"unknown profile kind {kind!r}")


def parse_cost(spec, base_dir: str = ".") -> Cost:
    kind = spec.get("kind") if isinstance(spec, dict) else None
    where = f"cost[{kind}]"
    if kind == "translation_invariant":
        _only(spec, {"kind", "profile"}, where)
        return TranslationInvariant(parse_profile(spec.get("profile", {"kind": "power", "p": 2}), base_dir))
    if kind == "coordinate_separable":
        _only(spec, {"kind", "outer", "coordinates"}, where)
        outer = parse_profile(spec.get("outer", {"kind": "power", "p": 1}), base_dir)
        coords = spec.get("coordinates", [{"kind": "power", "p": 2}])
        if isinstance(coords, dict):
            coords = [coords]
        return CoordinateSeparable(outer, tuple(parse_profile(c, base_dir) for c in coords))
    if kind == "cameron_martin":
        _only(spec, {"kind", "scales"}, where)
        s = spec.get("scales", 1.0)
        return CameronMartin(tuple(float(a) for a in np.atleast_1d(s)))
    raise ConfigError(f"unknown cost kind {kind!r}")


def parse_solver(spec) -> SolverChoice:
    if spec is None:
        return SolverChoice()
    _only(spec, {"kind", "epsilon", "max_iter", "tol", "pivot_rule"}, "solver")
    kind = spec.get("kind", "exact")
    if kind == "exact":
        if "epsilon" in spec:
            raise ConfigError("solver: epsilon only applies to sinkhorn")
        rule = spec.get("pivot_rule", "block")
        if rule not in ("block", "bland"):
            raise ConfigError(f"solver: unknown pivot rule {rule!r}")
        return SolverChoice("exact", pivot_rule=rule)
    if kind == "sinkhorn":
        eps = float(_need(spec, "epsilon", "solver"))
        if not eps > 0:
            raise ConfigError("solver: epsilon must be positive")
        return SolverChoice("sinkhorn", eps, int(spec.get("max_iter", 100_000)),
                            float(spec.get("tol", 1e-9)))
    raise ConfigError(f"solver: unknown kind {kind!r}")


def parse_config(doc: dict, base_dir: str = ".") -> ExperimentConfig:
    _only(doc, _TOP_KEYS, "config")
    version = _need(doc, "schema_version", "config")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    dim = int(_need(doc, "dim", "config"))
    if dim < 1:
        raise ConfigError("dim must be at least 1")
    n = int(doc.get("n", 64))
    if n < 1:
        raise ConfigError("n must be at least 1")
    ranks = tuple(int(k) for k in doc.get("ranks", range(1, dim + 1)))
    if any(b <= a for a, b in zip(ranks, ranks[1:])):
        raise ConfigError("ranks must be strictly increasing")
    if any(k < 0 or k > dim for k in ranks):
        raise ConfigError(f"ranks must lie in [0, {dim}]")
    q_ranks = doc.get("q_ranks")
    if q_ranks is not None:
        q_ranks = tuple(int(k) for k in q_ranks)
        if len(q_ranks) != len(ranks) or any(k < 0 or k > dim for k in q_ranks):
            raise ConfigError("q_ranks must match ranks in length and lie in [0, dim]")
    out = doc.get("output", {})
    _only(out, {"path", "format"}, "output")
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output.format must be csv or json, got {fmt!r}")
    smoothing = doc.get("smoothing", {})
    _only(smoothing, {"rho_max", "nodes_per_rho", "max_nodes", "grid_out"}, "smoothing")
    delta = float(doc.get("delta", 0.0))
    eps = float(doc.get("eps", 0.1))
    if delta < 0 or not eps > 0:
        raise ConfigError("delta must be >= 0 and eps > 0")
    for key in ("mu", "nu"):
        if not isinstance(_need(doc, key, "config"), dict):
            raise ConfigError(f"{key}: expected an object")
    cfg = ExperimentConfig(
        cost=parse_cost(_need(doc, "cost", "config"), base_dir),
        dim=dim, mu=doc["mu"], nu=doc["nu"], n=n, seed=int(doc.get("seed", 0)),
        ranks=ranks, q_ranks=q_ranks, solver=parse_solver(doc.get("solver")),
        delta=delta, eps=eps, smoothing=dict(smoothing),
        contraction_samples=int(doc.get("contraction_samples", 100_000)),
        output_path=out.get("path"), output_format=fmt, raw=doc, base_dir=base_dir)
    # measure specs are validated (and sampled) up front
    for which in ("mu", "nu"):
        try:
            cfg.measure(which)
        except ConfigError:
            raise
        except ValueError as err:
            raise ConfigError(f"{which}: {err}") from err
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err
    return parse_config(doc, str(path.parent))
