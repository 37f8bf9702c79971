"""Closed-form large-n predictions of the optimal value divided by sqrt(n)."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import UnboundedMaximumError, erfc, maximize_scalar

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
RADICAND_GUARD = 1e-12


class Side(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


class Branch(enum.Enum):
    INTERIOR = "interior"
    CLAMPED_ZERO = "clamped_zero"


@dataclass(frozen=True)
class EpsilonConfig:
    eps1_m: float = 0.0
    eps5_g: float = 0.0

    def __post_init__(self):
        if self.eps1_m < 0 or self.eps5_g < 0:
            raise ValueError("epsilons must be nonnegative")


@dataclass(frozen=True)
class TheoryResult:
    xi_over_sqrt_n: float
    optimizer: float
    branch: Branch
    side: Side


def sqrt_d_factor(alpha1: float, alpha2: float, eps: EpsilonConfig = EpsilonConfig(),
                  side: Side = Side.LOWER) -> float:
    """Signed square root of D (it can turn negative for large lower-side eps)."""
    base = math.sqrt(alpha1 + alpha2 / 2.0)
    if side is Side.LOWER:
        return (1.0 - eps.eps1_m) * base - eps.eps5_g
    return (1.0 + eps.eps1_m) * base + eps.eps5_g


def d_factor(alpha1: float, alpha2: float, eps: EpsilonConfig = EpsilonConfig(),
             side: Side = Side.LOWER) -> float:
    return sqrt_d_factor(alpha1, alpha2, eps, side) ** 2


def _lp_from_root(root_d: float, side: Side) -> TheoryResult:
    # max over lambda >= 0 of -sqrt(1 + lambda^2) + lambda * root_d
    if root_d <= 0.0:
        return TheoryResult(-1.0, 0.0, Branch.INTERIOR, side)
    D = root_d * root_d
    gap = 1.0 - D
    if gap < -RADICAND_GUARD or abs(gap) <= RADICAND_GUARD:
        return TheoryResult(0.0, 0.0, Branch.CLAMPED_ZERO, side)
    return TheoryResult(-math.sqrt(gap), math.sqrt(D / gap), Branch.INTERIOR, side)


def xi_lp(alpha1: float, alpha2: float, eps: EpsilonConfig = EpsilonConfig(),
          side: Side = Side.LOWER) -> TheoryResult:
    return _lp_from_root(sqrt_d_factor(alpha1, alpha2, eps, side), side)


def xi_gl(c, alpha1: float, alpha2: float, eps: EpsilonConfig = EpsilonConfig(),
          side: Side = Side.LOWER) -> TheoryResult:
    c = np.asarray(c, dtype=float).ravel()
    norm = float(np.linalg.norm(c))
    if norm == 0.0:
        raise ValueError("c must be nonzero")
    scale = norm / math.sqrt(c.size)
    base = xi_lp(alpha1, alpha2, eps, side)
    return TheoryResult(scale * base.xi_over_sqrt_n, base.optimizer, base.branch, side)


def truncated_second_moment(theta: float) -> float:
    """2 * E[(|g| - theta)^2 ; |g| > theta] for standard normal g."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    return ((theta * theta + 1.0) * erfc(theta / math.sqrt(2.0))
            - 2.0 * theta * math.exp(-0.5 * theta * theta) * INV_SQRT_2PI)


def _bp_norm_term(theta: float, beta: float) -> float:
    return (1.0 - beta) * truncated_second_moment(theta) + beta * (1.0 + theta * theta)


def phi_bp(theta: float, beta: float, D: float) -> float:
    """(sqrt(D) - sqrt((1-beta) T(theta) + beta (1 + theta^2))) / theta."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    return (-math.sqrt(_bp_norm_term(theta, beta)) + math.sqrt(D)) / theta


def _psi_bp(lam: float, beta: float, root_d: float) -> float:
    # phi_bp(1/lam) written in lambda = 1/theta, concave on [0, inf)
    if lam == 0.0:
        return -math.sqrt(beta)
    theta = 1.0 / lam
    inner = (1.0 - beta) * lam * lam * truncated_second_moment(theta) + beta * (lam * lam + 1.0)
    return -math.sqrt(inner) + lam * root_d


def _assert_unimodal(func, grid) -> None:
    vals = np.array([func(t) for t in grid])
    diffs = np.diff(vals)
    slack = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
    # once decreasing, never increasing again
    falling = np.flatnonzero(diffs < -slack)
    if falling.size and np.any(diffs[falling[0]:] > slack):
        raise AssertionError("objective is not unimodal on the pre-scan grid")


def xi_bp(beta: float, alpha1: float, alpha2: float,
          eps: EpsilonConfig = EpsilonConfig(),
          side: Side = Side.LOWER) -> TheoryResult:
    """Maximize phi_bp over theta > 0; ``optimizer`` is the maximizing theta."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if beta > alpha1 + 1e-12:
        warnings.warn(f"beta = {beta} exceeds alpha1 = {alpha1}", stacklevel=2)
    root_d = sqrt_d_factor(alpha1, alpha2, eps, side)
    if root_d * abs(root_d) >= 1.0 - RADICAND_GUARD:
        # asymptotic slope -1 + sqrt(D) >= 0, so the supremum is >= 0
        return TheoryResult(0.0, 0.0, Branch.CLAMPED_ZERO, side)

    def psi(lam):
        return _psi_bp(lam, beta, root_d)

    if __debug__:
        _assert_unimodal(psi, np.geomspace(1e-3, 1e3, 64))
    try:
        res = maximize_scalar(psi, lo=0.0, hi_init=1.0, tol=1e-10)
    except UnboundedMaximumError:
        return TheoryResult(0.0, 0.0, Branch.CLAMPED_ZERO, side)
    if res.value >= 0.0:
        return TheoryResult(0.0, 0.0, Branch.CLAMPED_ZERO, side)
    theta_hat = math.inf if res.argopt == 0.0 else 1.0 / res.argopt
    return TheoryResult(res.value, theta_hat, Branch.INTERIOR, side)
