"""Shared numerical layer: reproducible Gaussian streams, erfc, scalar
maximization and the nullspace projector."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.special

MASK64 = (1 << 64) - 1
SQRT_EPS = math.sqrt(np.finfo(float).eps)
GOLDEN = 0.3819660112501051  # (3 - sqrt(5)) / 2


class EmptyDimensionError(ValueError):
    """Requested a vector of dimension zero."""


class UnboundedMaximumError(ArithmeticError):
    """Objective kept increasing up to the bracket expansion cap."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Factorization detected a (numerically) rank deficient matrix."""


# --------------------------------------------------------------------------
# random streams
# --------------------------------------------------------------------------

@dataclass
class RngStream:
    """Counter-based Gaussian stream owned by one Monte Carlo trial.

    The Philox key is built from ``(master_seed, stream_id)``; ``counter``
    is the number of normal variates already consumed (always a multiple
    of 4, one Philox block per four variates). Every draw is a pure
    function of the three fields.
    """

    master_seed: int
    stream_id: int
    counter: int = 0

    @property
    def key(self) -> int:
        return (self.master_seed & MASK64) | ((self.stream_id & MASK64) << 64)

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.master_seed, stream_id)


def _raw_blocks(stream: RngStream, nblocks: int) -> np.ndarray:
    bitgen = np.random.Philox(key=stream.key)
    bitgen.advance(stream.counter // 4)
    return bitgen.random_raw(4 * nblocks)


def gaussian_vector(stream: RngStream, dim: int) -> np.ndarray:
    """Draw ``dim`` i.i.d. standard normals and advance ``stream``.

    Box-Muller on pairs of 53-bit uniforms; consumption is fixed at
    ``ceil(dim / 4)`` Philox blocks so the counter arithmetic stays exact.
    """
    if dim < 1:
        raise EmptyDimensionError("gaussian_vector needs dim >= 1")
    nblocks = -(-dim // 4)
    raw = _raw_blocks(stream, nblocks)
    # uniforms in (0, 1]; the open lower end keeps log finite
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(4 * nblocks)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    stream.counter += 4 * nblocks
    return z[:dim]


def gaussian_matrix(stream: RngStream, rows: int, cols: int) -> np.ndarray:
    """Row-major ``rows x cols`` standard normal matrix; empty when rows == 0."""
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols))
    return gaussian_vector(stream, rows * cols).reshape(rows, cols)


# --------------------------------------------------------------------------
# special functions
# --------------------------------------------------------------------------

def erfc(x):
    """Complementary error function for scalars or arrays."""
    if np.ndim(x) == 0:
        return math.erfc(float(x))
    return scipy.special.erfc(np.asarray(x, dtype=float))


# --------------------------------------------------------------------------
# one-dimensional maximization
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarOptResult:
    argopt: float
    value: float
    evaluations: int
    converged: bool


def brent_maximize(f: Callable[[float], float], a: float, b: float,
                   tol: float = 1e-10, max_iter: int = 500) -> ScalarOptResult:
    """Brent's parabolic/golden-section search for a maximum of f on [a, b].

    The endpoints themselves are compared at the end, so monotone
    functions return the better endpoint.
    """
    if not a < b:
        raise ValueError(f"empty bracket [{a}, {b}]")
    # work with g = -f and the classical minimization recurrences
    x = w = v = a + GOLDEN * (b - a)
    fx = fw = fv = -f(x)
    evals = 1
    d = e = 0.0
    lo, hi = a, b
    converged = False
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        tol1 = SQRT_EPS * abs(x) + tol / 3.0
        tol2 = 2.0 * tol1
        if abs(x - mid) <= tol2 - 0.5 * (hi - lo):
            converged = True
            break
        use_golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_prev, e = e, d
            if abs(p) < abs(0.5 * q * e_prev) and q * (lo - x) < p < q * (hi - x):
                d = p / q
                u = x + d
                if u - lo < tol2 or hi - u < tol2:
                    d = tol1 if x < mid else -tol1
                use_golden = False
        if use_golden:
            e = (hi - x) if x < mid else (lo - x)
            d = GOLDEN * e
        u = x + d if abs(d) >= tol1 else x + math.copysign(tol1, d)
        fu = -f(u)
        evals += 1
        if fu <= fx:
            if u >= x:
                lo = x
            else:
                hi = x
            v, fv, w, fw, x, fx = w, fw, x, fx, u, fu
        else:
            if u < x:
                lo = u
            else:
                hi = u
            if fu <= fw or w == x:
                v, fv, w, fw = w, fw, u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    best_x, best = x, -fx
    for end in (a, b):
        val = f(end)
        evals += 1
        if val > best:
            best_x, best = end, val
    return ScalarOptResult(best_x, best, evals, converged)


def maximize_scalar(f: Callable[[float], float], lo: float = 0.0,
                    hi_init: float = 1.0, tol: float = 1e-10,
                    expansion_cap: float = 2.0**60) -> ScalarOptResult:
    """Maximize a unimodal f on [lo, inf).

    The right end of the bracket doubles from ``lo + hi_init`` until f
    drops there; reaching ``expansion_cap`` with f still rising raises
    UnboundedMaximumError.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    points = [lo, lo + hi_init]
    values = [f(points[0]), f(points[1])]
    step = hi_init
    while values[-1] > values[-2]:
        if step >= expansion_cap:
            raise UnboundedMaximumError(
                f"objective still increasing at {points[-1]:.3g} "
                f"(value {values[-1]:.6g})")
        step *= 2.0
        points.append(lo + step)
        values.append(f(points[-1]))
    evals = len(points)
    left = points[-3] if len(points) >= 3 else points[0]
    res = brent_maximize(f, left, points[-1], tol=tol)
    return ScalarOptResult(res.argopt, res.value, evals + res.evaluations,
                           res.converged)


# --------------------------------------------------------------------------
# linear algebra
# --------------------------------------------------------------------------

class NullspaceProjector:
    """x -> x - A^T (A A^T)^{-1} A x using a cached Cholesky factor."""

    def __init__(self, A: np.ndarray):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        self.A = A
        self.n = A.shape[1]
        self._factor = None
        if A.shape[0] == 0:
            return
        if A.shape[0] > self.n:
            raise SingularMatrixError(
                f"{A.shape[0]} equality rows exceed dimension {self.n}")
        gram = A @ A.T
        try:
            self._factor = sla.cho_factor(gram, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError("A A^T is not positive definite") from exc
        diag = np.diag(self._factor[0])
        if diag.min() <= 1e-10 * max(diag.max(), 1.0):
            raise SingularMatrixError("A is numerically rank deficient")

    def solve_gram(self, r: np.ndarray) -> np.ndarray:
        """(A A^T)^{-1} r."""
        return sla.cho_solve(self._factor, r, check_finite=False)

    def particular(self, a: np.ndarray) -> np.ndarray:
        """Minimum-norm solution of A x = a."""
        if self._factor is None:
            return np.zeros(self.n)
        return self.A.T @ self.solve_gram(a)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self._factor is None:
            return np.array(x, dtype=float, copy=True)
        # works column-wise for an (n, k) block as well
        return x - self.A.T @ self.solve_gram(self.A @ x)


def nullspace_projector(A: np.ndarray) -> NullspaceProjector:
    return NullspaceProjector(A)
