"""Simple reference models used by tests, scans and CLI demos."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Domain, Objective, box
from .globalopt import (ArgminReport, DEFAULT_CONFIG, MultistartConfig,
                        multistart_minimize)


@dataclass(frozen=True)
class QuadraticModel:
    """Strictly convex baseline Q(t, z) = ||t - z||^2 on a box.

    Its argmin is unique for every z, so every diagnostic in the package
    must come back clean on it.
    """

    dim: int = 1
    bound: float = 10.0

    @property
    def domain(self) -> Domain:
        return Domain(pieces=(box([-self.bound] * self.dim,
                                  [self.bound] * self.dim),))

    def objective(self) -> Objective:
        dom = self.domain

        def fn(t, z):
            d = t - z
            return float(d @ d)

        def gt(t, z):
            return 2.0 * (t - z)

        def gz(t, z):
            return 2.0 * (z - t)

        return Objective(eval=fn, grad_t=gt, grad_z=gz,
                         admissible_directions=dom.admissible_directions)

    def sample_z(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.dim)

    def detect(self, z, cfg: MultistartConfig = DEFAULT_CONFIG) -> ArgminReport:
        return multistart_minimize(self.objective(), self.domain, z, cfg)
