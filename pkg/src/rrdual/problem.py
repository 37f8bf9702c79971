"""Objectives and random instances of linearly constrained programs

    min f(x)  s.t.  A x = a,  B x <= b,  ||x||_2 <= radius

with A, B filled by i.i.d. standard normals.
"""
from __future__ import annotations

import enum
import io
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .numerics import RngStream, gaussian_matrix


class ConfigurationError(ValueError):
    """Invalid shapes, ratios or objective parameters."""


class ObjectiveKind(enum.Enum):
    PURELY_LINEAR = "lp"
    GENERAL_LINEAR = "gl"
    BP_SPLIT = "bp"


@dataclass(frozen=True)
class ObjectiveSpec:
    """One of the built-in positively homogeneous objectives.

    ``PURELY_LINEAR``: sum(x).  ``GENERAL_LINEAR``: c @ x.
    ``BP_SPLIT``: sum |x_i| over the first n - k entries plus the plain sum
    of the last k entries.
    """

    kind: ObjectiveKind
    c: np.ndarray | None = field(default=None, compare=False)
    k: int = 0
    degree: float = 1.0

    def __post_init__(self):
        if self.kind is ObjectiveKind.GENERAL_LINEAR:
            if self.c is None:
                raise ConfigurationError("general linear objective needs c")
            c = np.asarray(self.c, dtype=float).ravel()
            if not np.all(np.isfinite(c)) or np.linalg.norm(c) == 0.0:
                raise ConfigurationError("c must be finite and nonzero")
            object.__setattr__(self, "c", c)
        if self.k < 0:
            raise ConfigurationError("k must be nonnegative")

    @classmethod
    def purely_linear(cls) -> "ObjectiveSpec":
        return cls(ObjectiveKind.PURELY_LINEAR)

    @classmethod
    def general_linear(cls, c) -> "ObjectiveSpec":
        return cls(ObjectiveKind.GENERAL_LINEAR, c=np.asarray(c, dtype=float))

    @classmethod
    def bp_split(cls, k: int) -> "ObjectiveSpec":
        return cls(ObjectiveKind.BP_SPLIT, k=int(k))

    @property
    def is_linear(self) -> bool:
        return self.kind is not ObjectiveKind.BP_SPLIT

    def check_dim(self, n: int) -> None:
        if self.kind is ObjectiveKind.GENERAL_LINEAR and self.c.size != n:
            raise ConfigurationError(f"c has length {self.c.size}, expected {n}")
        if self.kind is ObjectiveKind.BP_SPLIT and self.k > n:
            raise ConfigurationError(f"k = {self.k} exceeds n = {n}")

    def linear_coefficients(self, n: int) -> np.ndarray:
        """Gradient of a linear objective."""
        if self.kind is ObjectiveKind.GENERAL_LINEAR:
            return self.c
        if self.kind is ObjectiveKind.PURELY_LINEAR:
            return np.ones(n)
        raise ConfigurationError("objective is not linear")

    def abs_mask(self, n: int) -> np.ndarray:
        """True on coordinates that enter through |x_i|."""
        mask = np.zeros(n, dtype=bool)
        if self.kind is ObjectiveKind.BP_SPLIT:
            mask[: n - self.k] = True
        return mask

    def subgradient_box(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Bounds (lo, hi) with f(x) = max over lo <= y <= hi of y @ x."""
        if self.kind is ObjectiveKind.BP_SPLIT:
            mask = self.abs_mask(n)
            return np.where(mask, -1.0, 1.0), np.ones(n)
        c = self.linear_coefficients(n)
        return c.copy(), c.copy()


def evaluate_objective(obj: ObjectiveSpec, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ConfigurationError("x must be a vector")
    n = x.size
    obj.check_dim(n)
    if obj.kind is ObjectiveKind.PURELY_LINEAR:
        return float(np.sum(x))
    if obj.kind is ObjectiveKind.GENERAL_LINEAR:
        return float(obj.c @ x)
    split = n - obj.k
    return float(np.sum(np.abs(x[:split])) + np.sum(x[split:]))


def prox_objective(obj: ObjectiveSpec, v, t: float) -> np.ndarray:
    """argmin_u t*f(u) + 0.5*||u - v||^2."""
    if t <= 0:
        raise ConfigurationError("prox step must be positive")
    v = np.asarray(v, dtype=float)
    n = v.size
    obj.check_dim(n)
    if obj.kind is ObjectiveKind.PURELY_LINEAR:
        return v - t
    if obj.kind is ObjectiveKind.GENERAL_LINEAR:
        return v - t * obj.c
    split = n - obj.k
    out = v - t
    head = v[:split]
    out[:split] = np.sign(head) * np.maximum(np.abs(head) - t, 0.0)
    return out


def round_half_up(x: float) -> int:
    # guard against 0.7*200 = 139.99999999999997 style representation error
    return int(math.floor(x + 0.5 + 1e-9))


@dataclass(frozen=True)
class ShapeConfig:
    n: int
    alpha1: float = 0.0
    alpha2: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("n must be positive")
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ConfigurationError("alpha1, alpha2 must be nonnegative")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError("beta must lie in [0, 1]")
        if self.m1 > self.n:
            raise ConfigurationError(
                f"m1 = {self.m1} equality rows exceed n = {self.n}")

    @property
    def m1(self) -> int:
        return round_half_up(self.alpha1 * self.n)

    @property
    def m2(self) -> int:
        return round_half_up(self.alpha2 * self.n)

    @property
    def k(self) -> int:
        return round_half_up(self.beta * self.n)

    def objective(self, kind: ObjectiveKind | str, c=None) -> ObjectiveSpec:
        """Objective matching this shape (k = round(beta*n) for BP_SPLIT)."""
        kind = ObjectiveKind(kind)
        if kind is ObjectiveKind.BP_SPLIT:
            return ObjectiveSpec.bp_split(self.k)
        if kind is ObjectiveKind.GENERAL_LINEAR:
            return ObjectiveSpec.general_linear(c)
        return ObjectiveSpec.purely_linear()


@dataclass(frozen=True)
class ProblemInstance:
    n: int
    A: np.ndarray
    B: np.ndarray
    a_vec: np.ndarray
    b_vec: np.ndarray
    objective: ObjectiveSpec
    ball_bound: bool = True
    ball_radius: float = 1.0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float).reshape(-1, self.n)
        B = np.asarray(self.B, dtype=float).reshape(-1, self.n)
        a = np.asarray(self.a_vec, dtype=float).ravel()
        b = np.asarray(self.b_vec, dtype=float).ravel()
        if a.size != A.shape[0] or b.size != B.shape[0]:
            raise ConfigurationError("offset lengths do not match A, B rows")
        for arr in (A, B, a, b):
            if not np.all(np.isfinite(arr)):
                raise ConfigurationError("instance data must be finite")
        self.objective.check_dim(self.n)
        if self.ball_radius <= 0:
            raise ConfigurationError("ball radius must be positive")
        for name, arr in (("A", A), ("B", B), ("a_vec", a), ("b_vec", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def m1(self) -> int:
        return self.A.shape[0]

    @property
    def m2(self) -> int:
        return self.B.shape[0]

    @property
    def homogeneous(self) -> bool:
        return not (np.any(self.a_vec) or np.any(self.b_vec))

    @classmethod
    def build(cls, A, B, objective: ObjectiveSpec, a_vec=None, b_vec=None,
              ball_bound: bool = True, ball_radius: float = 1.0,
              allow_unbounded: bool = False) -> "ProblemInstance":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.asarray(B, dtype=float)
        n = A.shape[1]
        B = B.reshape(-1, n)
        A = A.reshape(-1, n)
        a_vec = np.zeros(A.shape[0]) if a_vec is None else a_vec
        b_vec = np.zeros(B.shape[0]) if b_vec is None else b_vec
        if not ball_bound and not allow_unbounded:
            raise ConfigurationError(
                "homogeneous objectives are unbounded without the ball "
                "constraint; pass allow_unbounded=True to override")
        return cls(n, A, B, a_vec, b_vec, objective, ball_bound, ball_radius)


def sample_instance(cfg: ShapeConfig, obj: ObjectiveSpec, stream: RngStream,
                    nonhomogeneous: tuple | None = None,
                    ball_bound: bool = True,
                    allow_unbounded: bool = False,
                    allow_beta_above_alpha1: bool = False) -> ProblemInstance:
    """Draw A (m1 x n) then B (m2 x n) from ``stream``.

    BP_SPLIT with beta > alpha1 is refused unless explicitly allowed; the
    results-table sweeps need it.
    """
    if (obj.kind is ObjectiveKind.BP_SPLIT and cfg.beta > cfg.alpha1 + 1e-12
            and not allow_beta_above_alpha1):
        raise ConfigurationError(
            f"beta = {cfg.beta} exceeds alpha1 = {cfg.alpha1}")
    obj.check_dim(cfg.n)
    A = gaussian_matrix(stream, cfg.m1, cfg.n)
    B = gaussian_matrix(stream, cfg.m2, cfg.n)
    a_vec = b_vec = None
    if nonhomogeneous is not None:
        a_vec, b_vec = nonhomogeneous
        if len(a_vec) != cfg.m1 or len(b_vec) != cfg.m2:
            raise ConfigurationError("offsets do not match (m1, m2)")
    return ProblemInstance.build(A, B, obj, a_vec, b_vec, ball_bound=ball_bound,
                                 allow_unbounded=allow_unbounded)


def householder_to_ones(c: np.ndarray) -> np.ndarray:
    """Symmetric orthogonal Q with Q (c/||c||) = ones/sqrt(n)."""
    c = np.asarray(c, dtype=float)
    n = c.size
    target = np.full(n, 1.0 / math.sqrt(n))
    v = c / np.linalg.norm(c) - target
    vv = v @ v
    if vv < 1e-30:
        return np.eye(n)
    return np.eye(n) - (2.0 / vv) * np.outer(v, v)


def rotate_to_canonical(inst: ProblemInstance) -> tuple[ProblemInstance, float]:
    """Map a general linear instance to a purely linear one.

    With Q the Householder reflector above, c @ x = C_gl * sum(Q x) where
    C_gl = ||c|| / sqrt(n); the returned instance has A Q^T, B Q^T so its
    optimum times C_gl is the original optimum.
    """
    obj = inst.objective
    if obj.kind is not ObjectiveKind.GENERAL_LINEAR:
        raise ConfigurationError("rotation needs a general linear objective")
    Q = householder_to_ones(obj.c)
    scale = float(np.linalg.norm(obj.c) / math.sqrt(inst.n))
    rotated = replace(inst, A=inst.A @ Q.T, B=inst.B @ Q.T,
                      objective=ObjectiveSpec.purely_linear())
    return rotated, scale


# --------------------------------------------------------------------------
# flat binary dump
# --------------------------------------------------------------------------

MAGIC = b"RRDI"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQQBQBd")
_KIND_CODES = {ObjectiveKind.PURELY_LINEAR: 0, ObjectiveKind.GENERAL_LINEAR: 1,
               ObjectiveKind.BP_SPLIT: 2}


def dump_instance(inst: ProblemInstance, path) -> None:
    """Write the layout documented in README.md (little-endian throughout)."""
    obj = inst.objective
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, inst.n, inst.m1, inst.m2,
                          _KIND_CODES[obj.kind], obj.k, int(inst.ball_bound),
                          inst.ball_radius)
    parts = [inst.A, inst.B, inst.a_vec, inst.b_vec]
    if obj.kind is ObjectiveKind.GENERAL_LINEAR:
        parts.append(obj.c)
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in parts:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_instance(path) -> ProblemInstance:
    data = Path(path).read_bytes()
    magic, version, n, m1, m2, code, k, ball, radius = _HEADER.unpack_from(data)
    if magic != MAGIC or version != FORMAT_VERSION:
        raise ConfigurationError(f"{path}: not an instance dump (v{FORMAT_VERSION})")
    kind = {v: key for key, v in _KIND_CODES.items()}[code]
    buf = io.BytesIO(data[_HEADER.size:])

    def take(count):
        return np.frombuffer(buf.read(8 * count), dtype="<f8").astype(float)

    A = take(m1 * n).reshape(m1, n)
    B = take(m2 * n).reshape(m2, n)
    a_vec, b_vec = take(m1), take(m2)
    if kind is ObjectiveKind.GENERAL_LINEAR:
        obj = ObjectiveSpec.general_linear(take(n))
    else:
        obj = ObjectiveSpec(kind, k=k)
    return ProblemInstance(n, A, B, a_vec, b_vec, obj, bool(ball), radius)
