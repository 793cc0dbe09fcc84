"""Inexact gradient oracles with a uniform additive error bound."""
from __future__ import annotations

import numpy as np

from .core import as_vector
from .problems import Objective


def sample_unit_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the unit sphere in R^n (normalized Gaussian draw)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    while True:
        z = rng.standard_normal(n)
        nz = np.linalg.norm(z)
        if nz > 0.0:
            return z / nz


class SphereNoiseOracle:
    """g(x) = grad f(x) + delta * xi with xi uniform on the unit sphere.

    A fresh xi is drawn on every call, so ||g(x) - grad f(x)|| equals
    ``delta`` (up to rounding) rather than merely being bounded by it.
    ``delta=0`` gives the exact gradient.
    """

    def __init__(self, problem: Objective, delta: float = 0.0, seed: int = 0):
        if delta < 0:
            raise ValueError("delta must be non-negative")
        self.problem = problem
        self.delta = float(delta)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.calls = 0

    @property
    def delta1(self) -> float:
        return self.delta

    def query(self, x, true_grad=None) -> np.ndarray:
        x = as_vector(x, self.problem.dim)
        gf = self.problem.grad(x) if true_grad is None else true_grad
        self.calls += 1
        if self.delta == 0.0:
            return gf.copy()
        return gf + self.delta * sample_unit_sphere(x.shape[0], self.rng)

    __call__ = query

    def clone(self, seed: int | None = None) -> "SphereNoiseOracle":
        return SphereNoiseOracle(self.problem, self.delta, self.seed if seed is None else seed)

    def config(self) -> dict:
        return {"delta1": self.delta, "seed": self.seed}


def noisy_grad(o: SphereNoiseOracle, x) -> np.ndarray:
    return o.query(x)
