"""Subspace optimization with inexact gradients, plus a similar-triangles baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.optimize

from .core import IterationRecord, OmegaSequence, Trace, as_vector
from .oracles import SphereNoiseOracle
from .problems import Objective, QuadraticProblem


class NonConvexSubproblemError(ValueError):
    pass


class AccuracyNotReachedError(RuntimeError):
    def __init__(self, msg, tau=None, gap=None):
        super().__init__(msg)
        self.tau = tau
        self.gap = gap


class DivergenceError(RuntimeError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


@dataclass
class SesopState:
    x: np.ndarray
    x0: np.ndarray
    d2_acc: np.ndarray
    omega: OmegaSequence = field(default_factory=OmegaSequence)
    k: int = 0

    @classmethod
    def start(cls, x0) -> "SesopState":
        x0 = as_vector(x0)
        return cls(x=x0.copy(), x0=x0.copy(), d2_acc=np.zeros_like(x0))


@dataclass
class DirectionSet:
    d0: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([self.d0, self.d1, self.d2])


def build_directions(state: SesopState, g_xk: np.ndarray) -> DirectionSet:
    """Columns [g(x_k), x_k - x_0, sum_{i<=k} w_i g(x_i)]; advances the accumulator."""
    d2 = state.d2_acc + state.omega[state.k] * g_xk
    state.d2_acc = d2
    return DirectionSet(d0=g_xk, d1=state.x - state.x0, d2=d2)


class SubspaceProblem:
    """f_k(tau) = f(x + D tau) over tau in R^3.

    Columns are rescaled to unit norm internally (zero columns stay zero);
    ``tau`` values exchanged with callers are in the original coordinates.
    """

    def __init__(self, problem: Objective, x: np.ndarray, D: np.ndarray,
                 grad_x: Optional[np.ndarray] = None):
        self.problem = problem
        self.x = x
        self.D = D
        self.grad_x = problem.grad(x) if grad_x is None else grad_x
        norms = np.linalg.norm(D, axis=0)
        self.scale = np.where(norms > 0, norms, 1.0)
        self.Ds = D / self.scale
        self._quad = None

    @property
    def is_quadratic(self) -> bool:
        return isinstance(self.problem, QuadraticProblem)

    def unscale(self, tau_s: np.ndarray) -> np.ndarray:
        return tau_s / self.scale

    def value(self, tau) -> float:
        return self.problem.value(self.x + self.D @ tau)

    def grad(self, tau) -> np.ndarray:
        return self.D.T @ self.problem.grad(self.x + self.D @ tau)

    def quadratic_form(self):
        """(H, c) in scaled coordinates: f_k = f(x) + s^T H s - c^T s."""
        if self._quad is None:
            A = self.problem.A
            H = self.Ds.T @ (A @ self.Ds)
            H = 0.5 * (H + H.T)
            c = -(self.Ds.T @ self.grad_x)
            self._quad = (H, c)
        return self._quad

    def gap(self, tau, tau_opt) -> float:
        """f_k(tau) - f_k(tau_opt) for the quadratic case, computed without cancellation."""
        H, _ = self.quadratic_form()
        e = (tau - tau_opt) * self.scale
        return float(e @ H @ e)


def _pinv_solve(H: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(H)
    tr = float(np.trace(H))
    if tr <= 0.0:
        return np.zeros_like(rhs)
    if lam[0] < -1e-9 * tr:
        raise NonConvexSubproblemError(f"reduced Hessian has eigenvalue {lam[0]:.3e}")
    keep = lam > 1e-12 * tr
    coef = (V.T @ rhs)
    coef = np.where(keep, coef / np.where(keep, lam, 1.0), 0.0)
    return V @ coef


def solve_subspace_exact_quadratic(sp: SubspaceProblem, refine: int = 1) -> np.ndarray:
    """Minimizer of the reduced quadratic via a thresholded pseudo-inverse.

    ``refine`` extra correction steps use the true gradient at the new point,
    which restores first-order optimality lost to rounding when the reduced
    Hessian is badly conditioned.
    """
    if not sp.is_quadratic:
        raise TypeError("exact quadratic solve needs a QuadraticProblem")
    H, c = sp.quadratic_form()
    tau_s = _pinv_solve(H, 0.5 * c)
    for _ in range(refine):
        r = sp.Ds.T @ sp.problem.grad(sp.x + sp.Ds @ tau_s)
        tau_s = tau_s - _pinv_solve(H, 0.5 * r)
    return sp.unscale(tau_s)


def solve_subspace_numeric(sp: SubspaceProblem, gtol: float = 1e-12) -> np.ndarray:
    """Minimize a general reduced objective with BFGS to a tight gradient tolerance."""
    Ds = sp.Ds

    def fun(s):
        y = sp.x + Ds @ s
        return sp.problem.value(y), Ds.T @ sp.problem.grad(y)

    res = scipy.optimize.minimize(fun, np.zeros(3), jac=True, method="BFGS",
                                  options={"gtol": gtol, "maxiter": 2000})
    s = res.x
    if sp.problem.value(sp.x + Ds @ s) > sp.problem.value(sp.x):
        s = np.zeros(3)
    return sp.unscale(s)


def solve_subspace_exact(sp: SubspaceProblem) -> np.ndarray:
    if sp.is_quadratic:
        return solve_subspace_exact_quadratic(sp)
    return solve_subspace_numeric(sp)


def solve_subspace_iterative(sp: SubspaceProblem, delta4: float,
                             max_iters: int = 100_000) -> np.ndarray:
    """Gradient descent from tau = 0 until the subproblem gap drops to ``delta4``.

    Works in unit-column coordinates. For quadratics the gap is measured
    against the exact minimizer and the iterates are evaluated in closed form
    through the eigenbasis of the reduced Hessian. Otherwise the stopping rule
    is ||grad f_k||^2 <= 2 L_red delta4 with L_red = L * sigma_max(D_s)^2.
    """
    if delta4 < 0:
        raise ValueError("delta4 must be non-negative")
    if delta4 == 0.0:
        return solve_subspace_exact(sp)
    if sp.is_quadratic:
        return _gd_quadratic(sp, delta4, max_iters)
    return _gd_general(sp, delta4, max_iters)


def _gd_quadratic(sp: SubspaceProblem, delta4: float, max_iters: int) -> np.ndarray:
    H, _ = sp.quadratic_form()
    tau_opt_s = solve_subspace_exact_quadratic(sp) * sp.scale
    lam, V = np.linalg.eigh(H)
    lam = np.clip(lam, 0.0, None)
    L_red = 2.0 * lam[-1]
    if L_red == 0.0:
        return np.zeros(3)
    # error e_j = (I - 2H/L_red)^j e_0 with e_0 = -tau_opt
    e0 = V.T @ (-tau_opt_s)
    contraction = 1.0 - 2.0 * lam / L_red

    def gap_at(j):
        return float(np.sum(lam * (contraction ** (2 * j)) * e0 ** 2))

    if gap_at(0) <= delta4:
        return np.zeros(3)
    if gap_at(max_iters) > delta4:
        j = max_iters
        tau_s = tau_opt_s + V @ (contraction ** j * e0)
        raise AccuracyNotReachedError(
            f"gap {gap_at(j):.3e} > {delta4:.3e} after {max_iters} steps",
            tau=sp.unscale(tau_s), gap=gap_at(j))
    lo, hi = 0, max_iters
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if gap_at(mid) <= delta4:
            hi = mid
        else:
            lo = mid
    tau_s = tau_opt_s + V @ (contraction ** hi * e0)
    return sp.unscale(tau_s)


def _gd_general(sp: SubspaceProblem, delta4: float, max_iters: int) -> np.ndarray:
    Ds = sp.Ds
    L_red = sp.problem.L * np.linalg.norm(Ds, 2) ** 2
    s = np.zeros(3)
    for _ in range(max_iters):
        gs = Ds.T @ sp.problem.grad(sp.x + Ds @ s)
        if gs @ gs <= 2.0 * L_red * delta4:
            return sp.unscale(s)
        s = s - gs / L_red
    raise AccuracyNotReachedError(f"no certificate after {max_iters} steps",
                                  tau=sp.unscale(s))


def _norm(v) -> float:
    return float(np.linalg.norm(v))


def _check_finite(rec: IterationRecord, trace: Trace):
    for name in ("f_gap", "grad_norm", "g_norm", "W_k"):
        v = getattr(rec, name)
        if v is not None and not math.isfinite(v):
            raise DivergenceError(f"{name} is not finite at k={rec.k}", trace)


def run_sesop(problem: Objective, oracle: SphereNoiseOracle, T: int,
              subsolver: str = "exact", delta4: float = 0.0,
              max_inner_iters: int = 10**12, x0=None,
              query_log: Optional[list] = None) -> Trace:
    """Run T iterations of the three-direction subspace method.

    Returns a trace with records for k = 0..T. The orthogonality and
    subproblem diagnostics are measured with the true gradient.
    ``query_log``, if given, receives ||g(x_k) - grad f(x_k)|| per query.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if subsolver not in ("exact", "iterative"):
        raise ValueError(f"unknown subsolver {subsolver!r}")
    x0 = np.zeros(problem.dim) if x0 is None else as_vector(x0, problem.dim)
    state = SesopState.start(x0)
    trace = Trace(meta={
        "problem": problem.identity(), "oracle": oracle.config(),
        "solver": {"type": "sesop", "iterations": T, "subsolver": subsolver,
                   "delta4": delta4, "max_inner_iters": max_inner_iters},
        "L": problem.L, "gamma": problem.gamma,
        "R": _norm(problem.x_star - x0) if problem.x_star is not None else None,
    })

    grad_x = problem.grad(state.x)
    prev = None  # (x_{k-1}, D_{k-1}, d2_{k-1}, sp_{k-1}, tau_{k-1})
    for k in range(T + 1):
        state.k = k
        x = state.x
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"non-finite iterate at k={k}", trace)
        g = oracle.query(x, true_grad=grad_x)
        if query_log is not None:
            query_log.append(_norm(g - grad_x))
        dirs = build_directions(state, g)
        rec = IterationRecord(
            k=k, f_gap=problem.gap(x), grad_norm=_norm(grad_x), g_norm=_norm(g),
            w_k=state.omega[k], W_k=_norm(dirs.d2),
            ip_d1=float(grad_x @ dirs.d1), d1_norm=_norm(dirs.d1),
            dist_to_opt=_norm(x - problem.x_star) if problem.x_star is not None else None,
        )
        if prev is not None:
            x_prev, D_prev, d2_prev, sp_prev, tau_prev = prev
            rec.ip_d2 = float(grad_x @ d2_prev)
            rec.d2_prev_norm = _norm(d2_prev)
            rec.d1_prev_norm = _norm(D_prev[:, 1])
            rec.step_norm = _norm(x - x_prev)
            rec.D_tau_norm = float(np.linalg.norm(D_prev, 2)) * _norm(tau_prev)
            if sp_prev.is_quadratic:
                tau_opt = (tau_prev if subsolver == "exact"
                           else solve_subspace_exact_quadratic(sp_prev))
                rec.sub_gap = sp_prev.gap(tau_prev, tau_opt)
        trace.append(rec)
        _check_finite(rec, trace)
        if k == T:
            break

        D = dirs.matrix
        sp = SubspaceProblem(problem, x, D, grad_x=grad_x)
        if subsolver == "exact":
            tau = solve_subspace_exact(sp)
        else:
            tau = solve_subspace_iterative(sp, delta4, max_inner_iters)
        x_new = x + D @ tau
        if not np.all(np.isfinite(x_new)):
            raise DivergenceError(f"non-finite iterate at k={k + 1}", trace)
        prev = (x, D, dirs.d2, sp, tau)
        state.x = x_new
        grad_x = problem.grad(x_new)
    return trace


@dataclass
class StmState:
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    A_acc: float = 0.0
    k: int = 0


def run_stm(problem: Objective, oracle: SphereNoiseOracle, T: int, x0=None,
            query_log: Optional[list] = None) -> Trace:
    """Similar triangles method with steps a_{k+1} = (k+2)/(2L)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    L = problem.L
    x0 = np.zeros(problem.dim) if x0 is None else as_vector(x0, problem.dim)
    st = StmState(x=x0.copy(), u=x0.copy(), y=x0.copy())
    trace = Trace(meta={
        "problem": problem.identity(), "oracle": oracle.config(),
        "solver": {"type": "stm", "iterations": T},
        "L": L, "gamma": problem.gamma,
        "R": _norm(problem.x_star - x0) if problem.x_star is not None else None,
    })
    g_norm = math.nan
    for k in range(T + 1):
        gx = problem.grad(st.x)
        trace.append(IterationRecord(
            k=k, f_gap=problem.gap(st.x), grad_norm=_norm(gx),
            g_norm=None if k == 0 else g_norm, w_k=None, W_k=None,
            dist_to_opt=_norm(st.x - problem.x_star) if problem.x_star is not None else None,
        ))
        _check_finite(trace.records[-1], trace)
        if k == T:
            break
        a = (k + 2) / (2.0 * L)
        A_new = st.A_acc + a
        st.y = (a * st.u + st.A_acc * st.x) / A_new
        gy = problem.grad(st.y)
        g = oracle.query(st.y, true_grad=gy)
        if query_log is not None:
            query_log.append(_norm(g - gy))
        g_norm = _norm(g)
        st.u = st.u - a * g
        st.x = (a * st.u + st.A_acc * st.x) / A_new
        st.A_acc = A_new
        st.k = k + 1
        if not np.all(np.isfinite(st.x)):
            raise DivergenceError(f"non-finite iterate at k={k + 1}", trace)
    return trace
