"""Auxiliary programs with a single random linear constraint, and a Monte
Carlo check of the Gaussian comparison that links them to the original
program."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import (RngStream, UnboundedMaximumError, brent_maximize, gaussian_vector,
                       maximize_scalar)
from .primal import (InfeasibleError, NonConvergedError, SolverConfig,
                     solve_primal, solve_relaxed)
from .problem import (ConfigurationError, ObjectiveKind, ObjectiveSpec,
                      ProblemInstance, ShapeConfig, sample_instance)
from .theory import EpsilonConfig, Side


class UnboundedAuxError(ArithmeticError):
    """The scalar dual is unbounded, i.e. the auxiliary program is infeasible."""


@dataclass(frozen=True)
class AuxSpec:
    side: Side
    shape: ShapeConfig
    eps: EpsilonConfig = EpsilonConfig()
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec.purely_linear)
    nonhomogeneous: tuple | None = None

    @property
    def sign(self) -> float:
        return 1.0 if self.side is Side.LOWER else -1.0

    def constant(self) -> float:
        """K in  sign * g @ x + K <= 0, with m1, m2 from the shape."""
        n, m1, m2 = self.shape.n, self.shape.m1, self.shape.m2
        root = math.sqrt(m1 + m2 / 2.0)
        tail = self.eps.eps5_g * math.sqrt(n)
        if self.side is Side.LOWER:
            return (1.0 - self.eps.eps1_m) * root - tail
        return (1.0 + self.eps.eps1_m) * root + tail


@dataclass(frozen=True)
class AuxEvaluation:
    value: float
    dual_scalar: float
    g_stream_id: int
    n: int
    side: Side = Side.LOWER


def _check_g(g, spec: AuxSpec) -> np.ndarray:
    g = np.asarray(g, dtype=float).ravel()
    if g.size != spec.shape.n:
        raise ConfigurationError(f"g has length {g.size}, expected {spec.shape.n}")
    spec.objective.check_dim(g.size)
    return g


def _resolve_constant(spec: AuxSpec, constant):
    return spec.constant() if constant is None else float(constant)


def eval_aux_lp(g, spec: AuxSpec, constant: float | None = None,
                stream_id: int = -1) -> AuxEvaluation:
    """max over lam >= 0 of -||c + lam*s*g|| + lam*K for linear objectives.

    Solved through the stationarity quadratic; unbounded when ||g|| <= K.
    """
    g = _check_g(g, spec)
    if not spec.objective.is_linear:
        raise ConfigurationError("eval_aux_lp needs a linear objective")
    n = g.size
    c = spec.objective.linear_coefficients(n)
    gs = spec.sign * g
    K = _resolve_constant(spec, constant)
    S = float(c @ gs)
    G = float(gs @ gs)
    N = float(c @ c)
    if K > 0 and G <= K * K:
        raise UnboundedAuxError(f"||g||^2 = {G:.6g} <= K^2 = {K * K:.6g}")
    slope0 = -S / math.sqrt(N) + K
    if slope0 <= 0.0:
        lam = 0.0
    else:
        lam = (-S + K * math.sqrt(max(G * N - S * S, 0.0) / (G - K * K))) / G
        lam = max(lam, 0.0)
    value = -math.sqrt(max(N + 2.0 * lam * S + lam * lam * G, 0.0)) + lam * K
    return AuxEvaluation(value, lam, stream_id, n, spec.side)


def bp_dual_function(g, k: int, K: float, sign: float = 1.0):
    """lam -> -sqrt(||(1 - lam|g_S|)_-||^2 + ||1 + lam*s*g_T||^2) + lam*K."""
    g = np.asarray(g, dtype=float)
    split = g.size - k
    abs_head = np.abs(g[:split])
    tail = sign * g[split:]

    def psi(lam: float) -> float:
        over = np.maximum(lam * abs_head - 1.0, 0.0)
        lin = 1.0 + lam * tail
        return -math.sqrt(float(over @ over + lin @ lin)) + lam * K

    return psi


def eval_aux_bp(g, spec: AuxSpec, constant: float | None = None,
                stream_id: int = -1) -> AuxEvaluation:
    """Split l1 objective; ``dual_scalar`` is theta = 1/lam (inf at lam = 0)."""
    g = _check_g(g, spec)
    if spec.objective.kind is not ObjectiveKind.BP_SPLIT:
        raise ConfigurationError("eval_aux_bp needs a BP_SPLIT objective")
    K = _resolve_constant(spec, constant)
    if K > 0 and float(g @ g) <= K * K:
        raise UnboundedAuxError(f"||g|| = {np.linalg.norm(g):.6g} <= K = {K:.6g}")
    psi = bp_dual_function(g, spec.objective.k, K, spec.sign)
    try:
        res = maximize_scalar(psi, lo=0.0, hi_init=1.0, tol=1e-12)
    except UnboundedMaximumError as exc:
        raise UnboundedAuxError(str(exc)) from exc
    theta = math.inf if res.argopt == 0.0 else 1.0 / res.argopt
    return AuxEvaluation(res.value, theta, stream_id, g.size, spec.side)


# The feasible cap shrinks as K approaches ||g||; a stiffer penalty copes
# with that much better than rho = 1.
AUX_SOLVER = SolverConfig(rho=3.0, max_iter=200_000)


def aux_instance(g, spec: AuxSpec, constant: float | None = None) -> ProblemInstance:
    """The auxiliary program as an instance: one unit-norm inequality row and
    the ball."""
    g = _check_g(g, spec)
    K = _resolve_constant(spec, constant)
    n = g.size
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        raise UnboundedAuxError("g is zero")
    return ProblemInstance.build(np.zeros((0, n)), (spec.sign * g / gn)[None, :],
                                 spec.objective, b_vec=np.array([-K / gn]))


def eval_aux_general(g, spec: AuxSpec, constant: float | None = None,
                     cfg: SolverConfig = AUX_SOLVER,
                     stream_id: int = -1) -> AuxEvaluation:
    """Solve min f(x) s.t. s*g@x + K <= 0, ||x|| <= 1 with the ADMM solver."""
    g = _check_g(g, spec)
    K = _resolve_constant(spec, constant)
    gn = float(np.linalg.norm(g))
    if K > gn:
        raise UnboundedAuxError("constraint misses the unit ball; dual is unbounded")
    inst = aux_instance(g, spec, K)
    # stiffen the penalty in proportion to how thin the feasible cap is
    ratio = max(K / gn, 0.0)
    width = math.sqrt(max(1.0 - ratio * ratio, 1e-12))
    if 1.5 / width > cfg.rho:
        cfg = replace(cfg, rho=1.5 / width)
    sol = solve_primal(inst, cfg)
    if not sol.converged:
        raise NonConvergedError(
            f"auxiliary solve stopped after {sol.iterations} iterations "
            f"(ineq {sol.residual_ineq:.2e}, ball {sol.residual_ball:.2e})", sol)
    lam = float(sol.multipliers[0]) / gn if sol.multipliers is not None else 0.0
    return AuxEvaluation(sol.objective, max(lam, 0.0), stream_id, g.size, spec.side)


def sphere_cap_min(c: np.ndarray, g: np.ndarray, r: float, rhs: float) -> float:
    """min c@x over ||x|| = r and g@x <= rhs; +inf when the cap is empty."""
    if r == 0.0:
        return 0.0 if rhs >= 0.0 else math.inf
    gn = float(np.linalg.norm(g))
    cn = float(np.linalg.norm(c))
    if gn == 0.0:
        return -r * cn if rhs >= 0.0 else math.inf
    if rhs < -r * gn:
        return math.inf
    # unconstrained minimizer -r c/||c||
    if -r * float(c @ g) / cn <= rhs:
        return -r * cn
    ghat = g / gn
    along = float(c @ ghat)
    perp = math.sqrt(max(cn * cn - along * along, 0.0))
    height = rhs / gn
    return height * along - perp * math.sqrt(max(r * r - height * height, 0.0))


def nonhomogeneous_constant(r: float, h_A, h_B, a_vec, b_vec, spec: AuxSpec) -> float:
    """K(r) = sqrt(||r h_A + a||^2 + ||(r h_B + b)_+||^2) -/+ r*eps5*sqrt(n)."""
    ea = r * h_A + a_vec
    eb = np.maximum(r * h_B + b_vec, 0.0)
    tail = r * spec.eps.eps5_g * math.sqrt(spec.shape.n)
    root = math.sqrt(float(ea @ ea + eb @ eb))
    return root - tail if spec.side is Side.LOWER else root + tail


def eval_aux_nonhomogeneous(g, h_A, h_B, spec: AuxSpec, ball_bound: bool = True,
                            grid: int = 513, stream_id: int = -1) -> AuxEvaluation:
    """Nonhomogeneous auxiliary program for linear objectives.

    Outer search over the radius r = ||x||, inner closed form on the sphere
    of radius r. ``dual_scalar`` holds the optimal radius.
    """
    g = _check_g(g, spec)
    if not spec.objective.is_linear:
        raise ConfigurationError("nonhomogeneous evaluator supports linear objectives")
    if spec.nonhomogeneous is None:
        raise ConfigurationError("spec carries no offsets (a, b)")
    n = g.size
    m1, m2 = spec.shape.m1, spec.shape.m2
    a_vec, b_vec = (np.asarray(v, dtype=float).ravel() for v in spec.nonhomogeneous)
    h_A = np.asarray(h_A, dtype=float).ravel()
    h_B = np.asarray(h_B, dtype=float).ravel()
    if a_vec.size != m1 or h_A.size != m1 or b_vec.size != m2 or h_B.size != m2:
        raise ConfigurationError("h_A, a must have m1 entries and h_B, b m2 entries")
    c = spec.objective.linear_coefficients(n)
    gs = spec.sign * g

    def value(r: float) -> float:
        K = nonhomogeneous_constant(r, h_A, h_B, a_vec, b_vec, spec)
        return sphere_cap_min(c, gs, r, -K)

    if ball_bound:
        r_max = 1.0
        expansions = 0
    else:
        r_max = 10.0 * (1.0 + max(np.linalg.norm(a_vec), np.linalg.norm(b_vec)) / math.sqrt(n))
        expansions = 20
    for _ in range(expansions + 1):
        radii = np.linspace(0.0, r_max, grid)
        vals = np.array([value(r) for r in radii])
        if not np.any(np.isfinite(vals)):
            if ball_bound or _ == expansions:
                raise InfeasibleError("auxiliary program infeasible at every radius")
            r_max *= 2.0
            continue
        i = int(np.argmin(vals))
        if ball_bound or i < grid - 1:
            break
        r_max *= 2.0
    else:
        raise UnboundedAuxError("optimum keeps moving outward with the radius")

    best_r, best = float(radii[i]), float(vals[i])
    lo, hi = radii[max(i - 1, 0)], radii[min(i + 1, grid - 1)]
    if hi > lo and np.isfinite(vals[max(i - 1, 0)]) and np.isfinite(vals[min(i + 1, grid - 1)]):
        res = brent_maximize(lambda r: -value(r), float(lo), float(hi), tol=1e-12)
        if -res.value < best:
            best_r, best = res.argopt, -res.value
    return AuxEvaluation(best, best_r, stream_id, n, spec.side)


# --------------------------------------------------------------------------
# Gaussian comparison check
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GordonCheckSpec:
    shape: ShapeConfig
    objective: ObjectiveSpec
    offset_level: float
    trials: int = 500
    master_seed: int = 0
    eps: EpsilonConfig = EpsilonConfig()
    solver: SolverConfig = SolverConfig()
    side: Side = Side.LOWER
    aux_solver: SolverConfig = AUX_SOLVER

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be positive")
        if self.side is not Side.LOWER:
            raise ConfigurationError(
                "only the lower-bound comparison has a tractable left-hand side")


@dataclass(frozen=True)
class GordonSamples:
    """Per-trial values; events are value >= offset_level."""

    left_lower: np.ndarray
    left_upper: np.ndarray
    right: np.ndarray
    failures: int
    trials: int


@dataclass(frozen=True)
class GordonReport:
    offset_level: float
    p_left: float
    p_left_upper: float
    p_right: float
    ci_left: tuple
    ci_right: tuple
    consistent: bool
    trials_used: int
    failures: int


def wilson_interval(successes: int, total: int, z: float = 1.959963984540054) -> tuple:
    if total == 0:
        return (0.0, 1.0)
    p = successes / total
    denom = 1.0 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == total else min(1.0, centre + half)
    return (lo, hi)


def gordon_trial(spec: GordonCheckSpec, trial: int):
    """(left_lower, left_upper, right) for one trial.

    Left: the min-max over x in the ball of the bilinear Gaussian form with
    scalar g. For g - eps5*sqrt(n) > 0 only x = 0 survives; otherwise the
    value lies between the convex relaxation ||(Ax, (Bx)_+)|| <= |g| (exact
    when its optimum sits on the sphere) and the original optimum.
    Right: min(0, auxiliary optimum) with K built from fresh h.
    """
    shape = spec.shape
    n = shape.n
    stream = RngStream(spec.master_seed, trial)
    inst = sample_instance(shape, spec.objective, stream)
    g_scalar = float(gaussian_vector(stream, 1)[0]) - spec.eps.eps5_g * math.sqrt(n)
    if g_scalar > 0.0:
        left_lo = left_hi = 0.0
    else:
        relaxed = solve_relaxed(inst, abs(g_scalar), spec.solver, strict=True)
        left_lo = min(relaxed.objective, 0.0)
        if np.linalg.norm(relaxed.x) >= 1.0 - 1e-5:
            left_hi = left_lo
        else:
            left_hi = min(solve_primal(inst, spec.solver, strict=True).objective, 0.0)

    g = gaussian_vector(stream, n)
    h = gaussian_vector(stream, shape.m1 + shape.m2) if shape.m1 + shape.m2 else np.zeros(0)
    h_A, h_B = h[: shape.m1], h[shape.m1:]
    K = math.sqrt(float(h_A @ h_A) + float(np.sum(np.maximum(h_B, 0.0) ** 2)))
    K -= spec.eps.eps5_g * math.sqrt(n)
    aux_spec = AuxSpec(Side.LOWER, shape, spec.eps, spec.objective)
    try:
        right = min(eval_aux_general(g, aux_spec, constant=K, cfg=spec.aux_solver).value, 0.0)
    except UnboundedAuxError:
        right = 0.0
    return left_lo, left_hi, right


def gordon_samples(spec: GordonCheckSpec) -> GordonSamples:
    lo, hi, right = [], [], []
    failures = 0
    for t in range(spec.trials):
        try:
            a, b, c = gordon_trial(spec, t)
        except (NonConvergedError, np.linalg.LinAlgError):
            failures += 1
            continue
        lo.append(a)
        hi.append(b)
        right.append(c)
    return GordonSamples(np.array(lo), np.array(hi), np.array(right), failures, spec.trials)


def gordon_report(samples: GordonSamples, offset_level: float) -> GordonReport:
    used = samples.left_lower.size
    k_left = int(np.sum(samples.left_lower >= offset_level))
    k_left_hi = int(np.sum(samples.left_upper >= offset_level))
    k_right = int(np.sum(samples.right >= offset_level))
    ci_left = wilson_interval(k_left, used)
    ci_right = wilson_interval(k_right, used)
    frac = (lambda k: k / used) if used else (lambda k: math.nan)
    return GordonReport(offset_level, frac(k_left), frac(k_left_hi), frac(k_right),
                        ci_left, ci_right, ci_left[1] >= ci_right[0], used,
                        samples.failures)


def gordon_check(spec: GordonCheckSpec) -> GordonReport:
    """Estimate both sides of the comparison inequality at ``offset_level``."""
    return gordon_report(gordon_samples(spec), spec.offset_level)
