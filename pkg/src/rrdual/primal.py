"""Direct solution of sampled instances.

``solve_primal`` is an over-relaxed ADMM on the splitting

    minimize  f(y_f) + I_ball(y_ball) + I_{w <= b}(w)
    subject to  y_f = x,  y_ball = x,  w = B x,  A x = a,

where the x-update (an equality constrained least squares problem) is a
dense affine map precomputed from Cholesky factors. ``conic_dual_value``
is an independent exact route for homogeneous instances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import lsq_linear
from scipy.special import ndtr

from .numerics import RngStream, SingularMatrixError, gaussian_vector, nullspace_projector
from .problem import ConfigurationError, ProblemInstance, evaluate_objective, prox_objective


class NonConvergedError(ArithmeticError):
    """ADMM stopped at max_iter with residuals above tolerance."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class InfeasibleError(ArithmeticError):
    """No feasible point exists (or none was found within budget)."""


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1.0
    max_iter: int = 50_000
    tol_primal: float = 1e-7
    tol_dual: float = 1e-7
    over_relaxation: float = 1.6

    def __post_init__(self):
        if self.rho <= 0:
            raise ConfigurationError("rho must be positive")
        if self.tol_primal <= 0 or self.tol_dual <= 0:
            raise ConfigurationError("tolerances must be positive")
        if not 1.0 <= self.over_relaxation <= 1.9:
            raise ConfigurationError("over_relaxation must lie in [1, 1.9]")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be positive")


@dataclass(frozen=True)
class ResidualReport:
    residual_eq: float
    residual_ineq: float
    residual_ball: float
    passed: bool


@dataclass(frozen=True)
class Solution:
    x: np.ndarray
    objective: float
    residual_eq: float
    residual_ineq: float
    residual_ball: float
    iterations: int
    converged: bool
    history: tuple = ()
    multipliers: np.ndarray | None = None


def certify(inst: ProblemInstance, x, tol: float) -> ResidualReport:
    x = np.asarray(x, dtype=float)
    if x.size != inst.n:
        raise ConfigurationError(f"x has length {x.size}, expected {inst.n}")
    root_n = math.sqrt(inst.n)
    r_eq = float(np.linalg.norm(inst.A @ x - inst.a_vec)) / root_n if inst.m1 else 0.0
    r_in = (float(np.linalg.norm(np.maximum(inst.B @ x - inst.b_vec, 0.0))) / root_n
            if inst.m2 else 0.0)
    r_ball = max(0.0, float(np.linalg.norm(x)) - inst.ball_radius) if inst.ball_bound else 0.0
    return ResidualReport(r_eq, r_in, r_ball, max(r_eq, r_in, r_ball) <= tol)


def _project_ball(v, radius):
    nv = np.linalg.norm(v)
    return v if nv <= radius else v * (radius / nv)


def _project_budget(v, split, a, b, gamma):
    """Project onto {v : dist(v, {a} x (-inf, b]) <= gamma}."""
    anchor = np.concatenate([a, np.minimum(v[split:], b)])
    gap = v - anchor
    dist = np.linalg.norm(gap)
    if dist <= gamma:
        return v
    return anchor + gap * (gamma / dist)


def _xupdate_map(n, identity_blocks, L, A, a):
    """Dense (P, P L^T, x0) with x = P q_I + (P L^T) q_L + x0."""
    M = identity_blocks * np.eye(n)
    if L is not None and L.shape[0]:
        M += L.T @ L
    factor = sla.cho_factor(M, lower=True, check_finite=False)
    Minv = sla.cho_solve(factor, np.eye(n), check_finite=False)
    x0 = np.zeros(n)
    P = Minv
    if A is not None and A.shape[0]:
        if A.shape[0] > n:
            raise SingularMatrixError("more equality rows than unknowns")
        MAt = Minv @ A.T
        S = A @ MAt
        try:
            sfac = sla.cho_factor(S, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError("A M^{-1} A^T is not positive definite") from exc
        d = np.diag(sfac[0])
        if d.min() <= 1e-10 * max(d.max(), 1.0):
            raise SingularMatrixError("A is numerically rank deficient")
        P = Minv - MAt @ sla.cho_solve(sfac, MAt.T, check_finite=False)
        x0 = MAt @ sla.cho_solve(sfac, a, check_finite=False)
    PLt = P @ L.T if L is not None and L.shape[0] else None
    return P, PLt, x0


def _admm(inst: ProblemInstance, cfg: SolverConfig, gamma: float | None,
          trace: bool) -> Solution:
    n = inst.n
    obj = inst.objective
    relaxed = gamma is not None
    if relaxed:
        L = np.vstack([inst.A, inst.B])
        split = inst.m1
        eq_A = None
    else:
        L = inst.B
        eq_A = inst.A
    has_L = L.shape[0] > 0
    nid = 2 if inst.ball_bound else 1
    P, PLt, x0 = _xupdate_map(n, nid, L, eq_A, inst.a_vec)

    rho = cfg.rho
    alpha = cfg.over_relaxation
    radius = inst.ball_radius
    y_f = np.zeros(n)
    u_f = np.zeros(n)
    y_b = np.zeros(n)
    u_b = np.zeros(n)
    y_L = np.zeros(L.shape[0])
    u_L = np.zeros(L.shape[0])
    if relaxed:
        # start on the constraint set so the first steps are sensible
        y_L = _project_budget(y_L, split, inst.a_vec, inst.b_vec, gamma)
    else:
        y_L = np.minimum(y_L, inst.b_vec)
    x = x0.copy()
    history = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        q = y_f - u_f
        if inst.ball_bound:
            q = q + (y_b - u_b)
        x = P @ q + x0
        if has_L:
            x += PLt @ (y_L - u_L)

        h = alpha * x + (1.0 - alpha) * y_f
        y_f_new = prox_objective(obj, h + u_f, 1.0 / rho)
        u_f += h - y_f_new
        r2 = float(np.sum((x - y_f_new) ** 2))
        dq = y_f_new - y_f
        y_f = y_f_new

        if inst.ball_bound:
            h = alpha * x + (1.0 - alpha) * y_b
            y_b_new = _project_ball(h + u_b, radius)
            u_b += h - y_b_new
            r2 += float(np.sum((x - y_b_new) ** 2))
            dq = dq + (y_b_new - y_b)
            y_b = y_b_new

        if has_L:
            Lx = L @ x
            h = alpha * Lx + (1.0 - alpha) * y_L
            if relaxed:
                y_L_new = _project_budget(h + u_L, split, inst.a_vec, inst.b_vec, gamma)
            else:
                y_L_new = np.minimum(h + u_L, inst.b_vec)
            u_L += h - y_L_new
            r2 += float(np.sum((Lx - y_L_new) ** 2))
            dq = dq + L.T @ (y_L_new - y_L)
            y_L = y_L_new

        r = math.sqrt(r2)
        s = rho * float(np.linalg.norm(dq))
        if trace:
            history.append(max(r, s))
        if r <= cfg.tol_primal and s <= cfg.tol_dual:
            converged = True
            break

    rep = certify(inst, x, math.inf)
    return Solution(x=x, objective=evaluate_objective(obj, x),
                    residual_eq=rep.residual_eq, residual_ineq=rep.residual_ineq,
                    residual_ball=rep.residual_ball, iterations=it,
                    converged=converged, history=tuple(history),
                    multipliers=rho * u_L)


def solve_primal(inst: ProblemInstance, cfg: SolverConfig = SolverConfig(),
                 trace: bool = False, strict: bool = False) -> Solution:
    """Solve min f(x) s.t. Ax = a, Bx <= b (and the ball) by ADMM.

    With ``strict`` an unconverged run raises NonConvergedError carrying the
    last iterate; otherwise ``converged`` is False on the returned Solution.
    """
    sol = _admm(inst, cfg, None, trace)
    if strict and not sol.converged:
        raise NonConvergedError(
            f"ADMM hit max_iter={cfg.max_iter} (eq {sol.residual_eq:.2e}, "
            f"ineq {sol.residual_ineq:.2e}, ball {sol.residual_ball:.2e})", sol)
    return sol


def solve_relaxed(inst: ProblemInstance, budget: float,
                  cfg: SolverConfig = SolverConfig(), strict: bool = False) -> Solution:
    """min f(x) s.t. ||(Ax - a, (Bx - b)_+)||_2 <= budget and the ball."""
    if budget < 0:
        raise ConfigurationError("budget must be nonnegative")
    sol = _admm(inst, cfg, float(budget), False)
    if strict and not sol.converged:
        raise NonConvergedError(f"ADMM hit max_iter={cfg.max_iter}", sol)
    return sol


def conic_dual_value(inst: ProblemInstance) -> float:
    """Exact optimum of a homogeneous instance through its conic dual.

    For the cone K = {Ax = 0, Bx <= 0} and f(x) = max_{y in box} y @ x,
    min over K and the ball equals -radius * dist(box, -K polar), a
    bounded-variable least squares problem.
    """
    if not inst.homogeneous or not inst.ball_bound:
        raise ConfigurationError("conic dual needs a homogeneous, ball-bounded instance")
    n = inst.n
    lo, hi = inst.objective.subgradient_box(n)
    free = np.flatnonzero(hi > lo)
    fixed = np.where(hi > lo, 0.0, lo)
    E = np.zeros((n, free.size))
    E[free, np.arange(free.size)] = 1.0
    M = np.hstack([E, inst.A.T, inst.B.T])
    if M.shape[1] == 0:
        return -inst.ball_radius * float(np.linalg.norm(fixed))
    lb = np.concatenate([lo[free], np.full(inst.m1, -np.inf), np.zeros(inst.m2)])
    ub = np.concatenate([hi[free], np.full(inst.m1 + inst.m2, np.inf)])
    res = lsq_linear(M, -fixed, bounds=(lb, ub), method="bvls", tol=1e-13)
    return -inst.ball_radius * float(np.linalg.norm(M @ res.x + fixed))


def brute_force_oracle(inst: ProblemInstance, budget: int = 1_000_000,
                       stream: RngStream | None = None, polish_top: int = 20,
                       polish_steps: int = 400) -> float:
    """Feasible-sample upper bound on the optimum for n <= 8.

    Uniform ball samples are mapped into {Ax = a}, pushed radially to the
    sphere when that keeps them feasible, filtered by Bx <= b, and the best
    few are improved by projected subgradient steps with backtracking.
    """
    n = inst.n
    if n > 8:
        raise ConfigurationError("brute force oracle is limited to n <= 8")
    if stream is None:
        stream = RngStream(0x5EED, 0)
    proj = nullspace_projector(inst.A)
    x_part = proj.particular(inst.a_vec)
    radius = inst.ball_radius
    obj = inst.objective
    mask = obj.abs_mask(n)
    lin = np.where(mask, 0.0, obj.subgradient_box(n)[1])

    def values(X):
        return np.abs(X[:, mask]).sum(axis=1) + X[:, ~mask] @ lin[~mask]

    def feasible(X):
        ok = np.linalg.norm(X, axis=1) <= radius * (1 + 1e-12)
        if inst.m2:
            ok &= np.all(X @ inst.B.T <= inst.b_vec + 1e-12, axis=1)
        return ok

    best_pts = np.empty((0, n))
    best_vals = np.empty(0)
    chunk = 100_000
    drawn = 0
    while drawn < budget:
        size = min(chunk, budget - drawn)
        drawn += size
        G = gaussian_vector(stream, size * n).reshape(size, n)
        U = gaussian_vector(stream, size)
        # radius distributed as U^(1/n) via the normal CDF of U
        rad = radius * ndtr(U) ** (1.0 / n)
        X = G / np.linalg.norm(G, axis=1)[:, None] * rad[:, None]
        X = proj(X.T).T + x_part
        keep = feasible(X)
        X = X[keep]
        if inst.homogeneous and X.size:
            # cone points stay feasible when stretched to the sphere
            norms = np.linalg.norm(X, axis=1)
            norms[norms == 0] = 1.0
            stretched = X / norms[:, None] * radius
            vals_s, vals_x = values(stretched), values(X)
            X = np.where((vals_s < vals_x)[:, None], stretched, X)
        if not X.size:
            continue
        vals = values(X)
        best_pts = np.vstack([best_pts, X])
        best_vals = np.concatenate([best_vals, vals])
        order = np.argsort(best_vals)[:polish_top]
        best_pts, best_vals = best_pts[order], best_vals[order]
    if inst.homogeneous:
        best_pts = np.vstack([best_pts, np.zeros(n)])
        best_vals = np.concatenate([best_vals, [0.0]])
    if not best_vals.size:
        raise InfeasibleError("no feasible sample found within budget")

    best = float(best_vals.min())
    for x, fx in zip(best_pts, best_vals):
        step = 0.1 * radius
        for _ in range(polish_steps):
            sub = np.where(mask, np.sign(x), lin)
            trial = x - step * proj(sub)
            nt = np.linalg.norm(trial)
            if inst.homogeneous and nt > 0:
                trial = trial / nt * radius
            elif nt > radius:
                trial = trial * (radius / nt)
            ok = feasible(trial[None, :])[0] and (
                not inst.m1 or np.allclose(inst.A @ trial, inst.a_vec, atol=1e-9))
            ft = float(values(trial[None, :])[0])
            if ok and ft < fx:
                x, fx = trial, ft
            else:
                step *= 0.5
                if step < 1e-12:
                    break
        best = min(best, fx)
    return best
