"""Nondegeneracy diagnostics for pairs of candidate minimizers.

For a triple ``(t, s, z)`` with ``t != s`` the objective gap
``gap(t, s, z) = Q(t, z) - Q(s, z)`` is probed for four ways of ruling out
a simultaneous global minimum at both points:

  (a) the gap itself is nonzero,
  (b) some admissible direction at t strictly decreases the gap,
  (c) some admissible direction at s strictly increases the gap,
  (d) the z-gradient of the gap is nonzero.

A triple for which all four margins fall below tolerance is *degenerate*:
it witnesses exactly the kind of tie that makes multiple global minimizers
possible with positive probability.  Degenerate triples are reported, never
repaired.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .domain import (FD_DEFAULT, Box, Domain, FDConfig, Objective, as_vector,
                     directional_derivative_t, eval_objective, grad_z)
from .errors import NotDistinct

CONDITION_ORDER = ("a", "b", "c", "d")


def objective_gap(obj: Objective, t, s, z, min_separation: float = 1e-9) -> float:
    """Q(t, z) - Q(s, z); raises NotDistinct when t and s coincide."""
    t, s = as_vector(t), as_vector(s)
    if np.linalg.norm(t - s) <= min_separation:
        raise NotDistinct(f"points {t} and {s} are within {min_separation}")
    return eval_objective(obj, t, z) - eval_objective(obj, s, z)


@dataclass(frozen=True)
class GenericityVerdict:
    """Outcome of checking one (t, s, z) triple.

    ``condition`` is one of "a", "b", "c", "d" (first condition satisfied,
    in that fixed order) or "degenerate".  ``margin`` is the witnessing
    magnitude; ``margins`` records all four tested magnitudes.
    """

    t: tuple
    s: tuple
    z: tuple
    condition: str
    margin: float
    tolerance: float
    margins: dict

    @property
    def degenerate(self) -> bool:
        return self.condition == "degenerate"

    def to_dict(self) -> dict:
        return {
            "t": list(self.t),
            "s": list(self.s),
            "z": list(self.z),
            "condition": self.condition,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "margins": dict(self.margins),
        }


def default_tolerance(obj: Objective, t, s, z) -> float:
    """Scale-aware zero tolerance: 1e-6 * (1 + |Q(t,z)| + |Q(s,z)|)."""
    return 1e-6 * (1.0 + abs(eval_objective(obj, t, z)) + abs(eval_objective(obj, s, z)))


def _best_descent(obj: Objective, point, z, fd: FDConfig) -> float:
    """max over admissible directions of the descent rate -dQ/dh (0 if none)."""
    if obj.admissible_directions is None:
        raise ValueError("objective must provide admissible_directions for t/s checks")
    dirs = obj.admissible_directions(as_vector(point))
    best = 0.0
    for d in dirs:
        best = max(best, -directional_derivative_t(obj, point, z, d, fd))
    return best


def check_triple(obj: Objective, t, s, z, tol: Optional[float] = None,
                 fd: FDConfig = FD_DEFAULT,
                 min_separation: float = 1e-9) -> GenericityVerdict:
    """Classify a triple by the first condition (a)-(d) that holds.

    All four margins are computed and attached to the verdict so that
    degenerate reports carry the full evidence.
    """
    t, s, z = as_vector(t), as_vector(s), as_vector(z)
    gap = objective_gap(obj, t, s, z, min_separation)
    if tol is None:
        tol = default_tolerance(obj, t, s, z)
    margins = {
        "a": abs(gap),
        "b": _best_descent(obj, t, z, fd),
        "c": _best_descent(obj, s, z, fd),
        "d": float(np.max(np.abs(grad_z(obj, t, z, fd) - grad_z(obj, s, z, fd)))),
    }
    for cond in CONDITION_ORDER:
        if margins[cond] > tol:
            return GenericityVerdict(t=tuple(t), s=tuple(s), z=tuple(z),
                                     condition=cond, margin=margins[cond],
                                     tolerance=tol, margins=margins)
    return GenericityVerdict(t=tuple(t), s=tuple(s), z=tuple(z),
                             condition="degenerate",
                             margin=max(margins.values()),
                             tolerance=tol, margins=margins)


@dataclass(frozen=True)
class ScanReport:
    """Grid-scan summary; only degenerate triples are listed in full."""

    grid_spec: str
    total_triples: int
    degenerate: tuple

    def to_dict(self) -> dict:
        return {
            "grid_spec": self.grid_spec,
            "total_triples": self.total_triples,
            "degenerate": [v.to_dict() for v in self.degenerate],
        }


def _mesh_points(boxes: Sequence[Box], resolution: int) -> np.ndarray:
    pts = []
    for b in boxes:
        axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(b.lower, b.upper)]
        grid = np.meshgrid(*axes, indexing="ij")
        cand = np.stack([g.ravel() for g in grid], axis=1)
        pts.extend(p for p in cand if b.contains(p, slack=1e-9))
    return np.asarray(pts)


def scan_grid(obj: Objective, domain: Domain, z_region: Optional[Box] = None,
              resolution: int = 11, tol: Optional[float] = None,
              t_points: Optional[Iterable] = None,
              z_points: Optional[Iterable] = None,
              fd: FDConfig = FD_DEFAULT,
              min_separation: Optional[float] = None) -> ScanReport:
    """Check every (t, s, z) grid triple with t, s in distinct cells.

    Explicit ``t_points`` / ``z_points`` override the uniform meshes, which
    is how known tie candidates are routed through the scan.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2 per axis")
    if t_points is not None:
        tp = np.asarray([as_vector(p) for p in t_points])
    else:
        tp = _mesh_points(domain.pieces, resolution)
    if z_points is not None:
        zp = np.asarray([as_vector(p) for p in z_points])
    elif z_region is not None:
        zp = _mesh_points([z_region], resolution)
    else:
        raise ValueError("provide z_region or z_points")
    if min_separation is None:
        spans = np.concatenate([np.asarray(p.upper) - np.asarray(p.lower)
                                for p in domain.pieces])
        min_separation = 0.5 * float(spans.min()) / max(resolution - 1, 1)
    total = 0
    degenerate = []
    for i, j in itertools.combinations(range(len(tp)), 2):
        t, s = tp[i], tp[j]
        if np.linalg.norm(t - s) <= min_separation:
            continue
        for z in zp:
            total += 1
            verdict = check_triple(obj, t, s, z, tol=tol, fd=fd,
                                   min_separation=min_separation)
            if verdict.degenerate:
                degenerate.append(verdict)
    degenerate.sort(key=lambda v: (v.t, v.s, v.z))
    spec = (f"t-points={len(tp)}, z-points={len(zp)}, resolution={resolution}, "
            f"min_separation={min_separation:.3g}")
    return ScanReport(grid_spec=spec, total_triples=total,
                      degenerate=tuple(degenerate))
