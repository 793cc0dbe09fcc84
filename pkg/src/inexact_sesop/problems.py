"""Test objectives: the random convex quadratic and a separable 1-quasar-convex function."""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np
import scipy.linalg

from .core import as_vector

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    pass


class Objective:
    """Smooth objective with known smoothness constant and quasar parameter.

    Subclasses set ``dim``, ``L``, ``gamma`` and, when available, ``x_star``
    and ``f_star``.
    """

    dim: int
    L: float
    gamma: float = 1.0
    x_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None

    def value(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def gap(self, x) -> Optional[float]:
        if self.f_star is None:
            return None
        return self.value(x) - self.f_star

    def identity(self) -> dict:
        raise NotImplementedError

    @property
    def has_optimum(self) -> bool:
        return self.x_star is not None and self.f_star is not None


def power_iteration(A: np.ndarray, tol: float = 1e-13, max_iter: int = 200_000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix via the power method.

    Stops once the Rayleigh quotient changes by less than ``tol`` (relative).
    """
    n = A.shape[0]
    # deterministic start vector that is not orthogonal to anything structured
    v = 1.0 + np.arange(n, dtype=np.float64) / max(n, 1)
    v /= np.linalg.norm(v)
    rho = float(v @ A @ v)
    for _ in range(max_iter):
        w = A @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        rho_new = float(v @ A @ v)
        if abs(rho_new - rho) <= tol * abs(rho_new):
            return rho_new
        rho = rho_new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


class QuadraticProblem(Objective):
    """f(x) = x^T A x + 2 b^T x with A symmetric PSD.

    The gradient is 2(Ax + b), so the smoothness constant is twice the
    largest eigenvalue of A.
    """

    def __init__(self, A, b, seed: Optional[int] = None, L: Optional[float] = None):
        A = np.asarray(A, dtype=np.float64)
        b = as_vector(b)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
            raise ValueError(f"incompatible shapes A={A.shape}, b={b.shape}")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise ValueError("A must be symmetric")
        self.A = A
        self.b = b
        self.dim = b.shape[0]
        self.seed = seed
        self.gamma = 1.0
        self.L = lipschitz_constant(self) if L is None else float(L)
        self.x_star, self.f_star = self._solve_optimum()

    def _solve_optimum(self):
        try:
            c = scipy.linalg.cho_factor(self.A, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            return None, None
        x = scipy.linalg.cho_solve(c, -self.b, check_finite=False)
        if not np.all(np.isfinite(x)):
            return None, None
        # f(x*) = -b^T A^{-1} b = b^T x*
        return x, float(self.b @ x)

    def value(self, x) -> float:
        x = as_vector(x, self.dim)
        return float(x @ (self.A @ x) + 2.0 * (self.b @ x))

    def grad(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        return 2.0 * (self.A @ x + self.b)

    def gap(self, x) -> Optional[float]:
        if self.x_star is None:
            return None
        # f(x) - f* = (x - x*)^T A (x - x*) exactly; avoids cancellation
        e = as_vector(x, self.dim) - self.x_star
        return float(e @ (self.A @ e))

    def identity(self) -> dict:
        return {"type": "quadratic", "n": self.dim, "seed": self.seed}


def lipschitz_constant(p: QuadraticProblem) -> float:
    return 2.0 * power_iteration(p.A)


def quad_eval(p: QuadraticProblem, x) -> float:
    return p.value(x)


def quad_grad(p: QuadraticProblem, x) -> np.ndarray:
    return p.grad(x)


def _draw_quadratic(n: int, seed: int):
    rng = np.random.default_rng(seed)
    B = rng.uniform(-1.0, 1.0, size=(n, n))
    b = rng.uniform(-1.0, 1.0, size=n)
    return B.T @ B, b


def generate_quadratic(n: int, seed: int, max_retries: int = 16) -> QuadraticProblem:
    """Random instance with A = B^T B, entries of B and b i.i.d. U[-1, 1].

    A singular draw (no Cholesky factor) is replaced by the draw for seed+1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    for attempt in range(max_retries):
        s = seed + attempt
        A, b = _draw_quadratic(n, s)
        p = QuadraticProblem(A, b, seed=s)
        if p.x_star is not None:
            if attempt:
                log.warning("seed %d gave a singular matrix, used seed %d", seed, s)
            return p
    raise ConvergenceError(f"no nonsingular draw in {max_retries} seeds from {seed}")


class QuasarTestProblem(Objective):
    """f(x) = sum_i |x_i| (1 - exp(-|x_i|)), 1-quasar-convex about 0, not convex."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.dim = n
        self.gamma = 1.0
        # sup_u |(2 - u) e^{-u}| = 2 bounds the second derivative
        self.L = 2.0
        self.x_star = np.zeros(n)
        self.f_star = 0.0

    def value(self, x) -> float:
        return quasar_eval_grad(self, x)[0]

    def grad(self, x) -> np.ndarray:
        return quasar_eval_grad(self, x)[1]

    def gap(self, x) -> float:
        return self.value(x)

    def identity(self) -> dict:
        return {"type": "quasar", "n": self.dim, "seed": None}


def quasar_eval_grad(p: QuasarTestProblem, x):
    x = as_vector(x, p.dim)
    u = np.abs(x)
    e = np.exp(-u)
    f = float(np.sum(u * (1.0 - e)))
    g = np.sign(x) * (1.0 - e + u * e)
    return f, g


def make_problem(spec: dict) -> Objective:
    """Rebuild a problem from its identity dict ``{type, n, seed}``."""
    kind = spec.get("type")
    n = int(spec.get("n", 0))
    if kind == "quadratic":
        return generate_quadratic(n, int(spec.get("seed") or 0))
    if kind == "quasar":
        return QuasarTestProblem(n)
    raise ValueError(f"unknown problem type {kind!r}")
