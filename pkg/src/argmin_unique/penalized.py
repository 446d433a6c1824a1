"""Penalized least squares with sparsity-inducing (possibly nonconvex) penalties.

Supported penalties are coordinate-separable: subset-count (l0), bridge
|b|^q with q in (0,1), smoothly clipped absolute deviation (scad), and the
minimax concave penalty (mcp).  The parameter space is partitioned into
pieces on which the penalty is continuous: 2^d zero/nonzero pieces for the
discontinuous or kinked penalties, a single box for scad/mcp.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import numpy as np

from .domain import Box, Domain, Objective
from .errors import ExplicitBound
from .globalopt import (ArgminReport, DEFAULT_CONFIG, MultistartConfig,
                        cluster_minimizers, multistart_minimize)

PENALTY_KINDS = ("l0", "bridge", "scad", "mcp")
ENUMERATION_CAP = 20
DEFAULT_RADIUS = 10.0


@dataclass(frozen=True)
class PenaltySpec:
    """One of the supported penalties with its tuning constants."""

    kind: str
    lam: float
    q: float = 0.5       # bridge exponent
    a: float = 3.7       # scad knee
    gamma: float = 3.0   # mcp concavity

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"kind must be one of {PENALTY_KINDS}")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.kind == "bridge" and not 0 < self.q < 1:
            raise ValueError("bridge exponent q must lie in (0, 1)")
        if self.kind == "scad" and not self.a > 2:
            raise ValueError("scad requires a > 2")
        if self.kind == "mcp" and not self.gamma > 1:
            raise ValueError("mcp requires gamma > 1")

    @property
    def separable_smooth(self) -> bool:
        return self.kind in ("scad", "mcp")


def penalty_rho(spec: PenaltySpec, t: float) -> float:
    """Per-coordinate penalty at |beta_k| = t >= 0."""
    t = abs(float(t))
    lam = spec.lam
    if spec.kind == "l0":
        return lam if t > 0 else 0.0
    if spec.kind == "bridge":
        return lam * t ** spec.q
    if spec.kind == "scad":
        a = spec.a
        if t <= lam:
            return lam * t
        if t <= a * lam:
            return (2 * a * lam * t - t * t - lam * lam) / (2 * (a - 1))
        return (a + 1) * lam * lam / 2
    # mcp
    g = spec.gamma
    if t <= g * lam:
        return lam * t - t * t / (2 * g)
    return g * lam * lam / 2


def scad_derivative(spec: PenaltySpec, t: float) -> float:
    """scad slope: lam for t <= lam, then the linear clip down to zero."""
    t = abs(float(t))
    lam, a = spec.lam, spec.a
    if t <= lam:
        return lam
    return max(a * lam - t, 0.0) / (a - 1)


def penalty_value(spec: PenaltySpec, beta) -> float:
    """Separable penalty sum_k rho(|beta_k|); zero at beta = 0."""
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    if spec.kind == "l0":
        return spec.lam * float(np.count_nonzero(b))
    return float(sum(penalty_rho(spec, t) for t in np.abs(b)))


@dataclass(frozen=True)
class RegressionData:
    """Response and full-column-rank design."""

    y: tuple
    x: tuple  # row-major n x d

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        X = np.atleast_2d(np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", tuple(y))
        object.__setattr__(self, "x", tuple(tuple(r) for r in X))
        if X.shape[0] != len(y):
            raise ValueError("row count of x must match length of y")
        if X.shape[0] < X.shape[1]:
            raise ValueError("need n >= d")
        s = np.linalg.svd(X, compute_uv=False)
        if s[-1] <= 1e-10 * s[0]:
            raise ValueError("design matrix is rank deficient")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return len(self.x[0])

    @cached_property
    def y_arr(self) -> np.ndarray:
        return np.asarray(self.y)

    @cached_property
    def x_arr(self) -> np.ndarray:
        return np.asarray(self.x)


def penalized_objective(spec: PenaltySpec, data: RegressionData, beta) -> float:
    """0.5 ||y - X beta||^2 + penalty(beta)."""
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    resid = data.y_arr - data.x_arr @ b
    return 0.5 * float(resid @ resid) + penalty_value(spec, b)


def regression_objective(spec: PenaltySpec, data: RegressionData) -> Objective:
    """Objective in (beta, y): the design stays fixed, y is the random input."""
    X = data.x_arr

    def fn(beta, y):
        resid = y - X @ beta
        return 0.5 * float(resid @ resid) + penalty_value(spec, beta)

    def gz(beta, y):
        return y - X @ beta

    dom = partition_domain(spec, data.d)
    return Objective(eval=fn, grad_z=gz,
                     admissible_directions=dom.admissible_directions)


def partition_domain(spec: PenaltySpec, d: int,
                     radius: float = DEFAULT_RADIUS) -> Domain:
    """Pieces on which the penalty is continuous.

    l0/bridge: 2^d pieces indexed by the zero set (zeros pinned by equality
    constraints, the rest kept off zero).  scad/mcp: one box.
    """
    if d < 1:
        raise ValueError("d must be positive")
    lower = tuple([-radius] * d)
    upper = tuple([radius] * d)
    if spec.separable_smooth:
        return Domain(pieces=(Box(lower=lower, upper=upper),))
    if d > ENUMERATION_CAP:
        raise ExplicitBound(f"2^{d} pieces exceed the d <= {ENUMERATION_CAP} cap")
    pieces = []
    for mask in range(2 ** d):
        support = tuple(k for k in range(d) if mask >> k & 1)
        zeros = tuple(k for k in range(d) if k not in support)
        eq = tuple((tuple(1.0 if i == k else 0.0 for i in range(d)), 0.0)
                   for k in zeros)
        pieces.append(Box(lower=lower, upper=upper, eq_constraints=eq,
                          nonzero=support))
    return Domain(pieces=tuple(pieces))


def enumerate_best_subsets(spec: PenaltySpec, data: RegressionData) -> list:
    """Exact per-support least squares for the l0 penalty.

    Returns (beta, value) for every support, value = 0.5||resid||^2 + lam |S|.
    """
    if spec.kind != "l0":
        raise ValueError("enumeration applies to the l0 penalty")
    d = data.d
    if d > ENUMERATION_CAP:
        raise ExplicitBound(f"2^{d} supports exceed the d <= {ENUMERATION_CAP} cap")
    X, y = data.x_arr, data.y_arr
    out = []
    for mask in range(2 ** d):
        support = [k for k in range(d) if mask >> k & 1]
        beta = np.zeros(d)
        if support:
            sol, *_ = np.linalg.lstsq(X[:, support], y, rcond=None)
            beta[support] = sol
        resid = y - X @ beta
        value = 0.5 * float(resid @ resid) + spec.lam * len(support)
        out.append((beta, value))
    return out


def global_minimize(spec: PenaltySpec, data: RegressionData,
                    cfg: MultistartConfig = DEFAULT_CONFIG) -> ArgminReport:
    """Global minimum report: exact enumeration for l0, multistart otherwise."""
    if spec.kind == "l0":
        points = enumerate_best_subsets(spec, data)
        best = min(v for _, v in points)
        eps = cfg.eps_value if cfg.eps_value is not None else 1e-6 * (1 + abs(best))
        delta = (cfg.delta_cluster if cfg.delta_cluster is not None
                 else 1e-3 * partition_domain(spec, data.d).diameter())
        clusters = cluster_minimizers(points, eps, delta)
        return ArgminReport(global_value=best, clusters=tuple(clusters),
                            eps_value=eps, delta_cluster=delta,
                            verdict="unique" if len(clusters) == 1 else "multiple",
                            converged_fraction=1.0)
    obj = regression_objective(spec, data)
    return multistart_minimize(obj, partition_domain(spec, data.d),
                               data.y_arr, cfg)


def multistart_global_minimize(spec: PenaltySpec, data: RegressionData,
                               cfg: MultistartConfig = DEFAULT_CONFIG
                               ) -> ArgminReport:
    """Multistart route for any penalty (the l0 cross-check of enumeration)."""
    obj = regression_objective(spec, data)
    return multistart_minimize(obj, partition_domain(spec, data.d),
                               data.y_arr, cfg)


@dataclass(frozen=True)
class PenalizedModel:
    """y ~ N(X beta0, I) draws fed to the global-minimum detector."""

    spec: PenaltySpec
    x: tuple
    beta0: tuple

    @cached_property
    def data_template(self) -> np.ndarray:
        return np.asarray(self.x)

    def sample_z(self, rng: np.random.Generator) -> np.ndarray:
        X = self.data_template
        return X @ np.asarray(self.beta0) + rng.standard_normal(X.shape[0])

    def detect(self, z, cfg: MultistartConfig) -> ArgminReport:
        data = RegressionData(y=tuple(z), x=self.x)
        return global_minimize(self.spec, data, cfg)


def ols_solution(data: RegressionData) -> np.ndarray:
    sol, *_ = np.linalg.lstsq(data.x_arr, data.y_arr, rcond=None)
    return sol
