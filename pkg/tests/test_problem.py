import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrdual.numerics import RngStream
from rrdual.primal import solve_primal
from rrdual.problem import (ConfigurationError, ObjectiveKind, ObjectiveSpec, ProblemInstance,
                            ShapeConfig, dump_instance, evaluate_objective,
                            householder_to_ones, load_instance, prox_objective,
                            rotate_to_canonical, round_half_up, sample_instance)

from conftest import CI_SEED


def test_table_shape_dimensions():
    inst = sample_instance(ShapeConfig(200, 0.5, 0.5), ObjectiveSpec.purely_linear(),
                           RngStream(1, 0))
    assert inst.A.shape == (100, 200) and inst.B.shape == (100, 200)
    assert inst.ball_bound and inst.homogeneous


def test_no_equalities():
    inst = sample_instance(ShapeConfig(10, 0.0, 0.3), ObjectiveSpec.purely_linear(),
                           RngStream(1, 0))
    assert inst.m1 == 0 and inst.m2 == 3


def test_sampling_is_deterministic():
    cfg = ShapeConfig(12, 0.5, 0.25)
    a = sample_instance(cfg, ObjectiveSpec.purely_linear(), RngStream(3, 4))
    b = sample_instance(cfg, ObjectiveSpec.purely_linear(), RngStream(3, 4))
    assert np.array_equal(a.A, b.A) and np.array_equal(a.B, b.B)


def test_bp_beta_above_alpha1_refused_unless_allowed():
    cfg = ShapeConfig(20, 0.5, 0.5, 0.8)
    with pytest.raises(ConfigurationError):
        sample_instance(cfg, cfg.objective("bp"), RngStream(1, 0))
    inst = sample_instance(cfg, cfg.objective("bp"), RngStream(1, 0),
                           allow_beta_above_alpha1=True)
    assert inst.objective.k == 16


def test_offsets_must_match():
    cfg = ShapeConfig(10, 0.2, 0.3)
    with pytest.raises(ConfigurationError):
        sample_instance(cfg, ObjectiveSpec.purely_linear(), RngStream(1, 0),
                        nonhomogeneous=(np.zeros(3), np.zeros(3)))


def test_unbounded_instance_needs_override():
    A = np.zeros((0, 3))
    B = np.zeros((0, 3))
    with pytest.raises(ConfigurationError):
        ProblemInstance.build(A, B, ObjectiveSpec.purely_linear(), ball_bound=False)
    inst = ProblemInstance.build(A, B, ObjectiveSpec.purely_linear(), ball_bound=False,
                                 allow_unbounded=True)
    assert not inst.ball_bound


def test_instance_arrays_are_read_only():
    inst = sample_instance(ShapeConfig(6, 0.5, 0.5), ObjectiveSpec.purely_linear(),
                           RngStream(1, 0))
    with pytest.raises(ValueError):
        inst.A[0, 0] = 1.0


def test_rounding_half_up():
    assert round_half_up(0.5) == 1 and round_half_up(2.5) == 3 and round_half_up(2.49) == 2
    assert ShapeConfig(5, 0.5, 0.3).m1 == 3


def test_pooled_entries_moments():
    cfg = ShapeConfig(20, 0.5, 0.5)
    pooled = np.concatenate([
        np.concatenate([inst.A.ravel(), inst.B.ravel()])
        for inst in (sample_instance(cfg, ObjectiveSpec.purely_linear(), RngStream(CI_SEED, t))
                     for t in range(100))])
    assert -0.02 < pooled.mean() < 0.02
    assert 0.98 < pooled.var() < 1.02


# -- objectives -------------------------------------------------------------

def test_objective_values():
    assert evaluate_objective(ObjectiveSpec.purely_linear(), np.ones(3)) == 3.0
    x = np.array([-1.0, 2.0, -3.0, 4.0])
    assert evaluate_objective(ObjectiveSpec.bp_split(2), x) == 4.0
    c = np.array([1.0, -2.0, 0.5, 0.0])
    assert evaluate_objective(ObjectiveSpec.general_linear(c), x) == c @ x


def test_objective_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        evaluate_objective(ObjectiveSpec.bp_split(5), np.ones(3))
    with pytest.raises(ConfigurationError):
        ObjectiveSpec.general_linear(np.zeros(3))


@given(st.integers(0, 8), st.floats(0.01, 100.0), st.integers(0, 2**31))
def test_positive_homogeneity(k, scale, seed):
    x = np.random.default_rng(seed).standard_normal(8)
    for obj in (ObjectiveSpec.purely_linear(), ObjectiveSpec.bp_split(k),
                ObjectiveSpec.general_linear(np.arange(1.0, 9.0))):
        lhs = evaluate_objective(obj, scale * x)
        rhs = scale * evaluate_objective(obj, x)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_prox_examples():
    out = prox_objective(ObjectiveSpec.purely_linear(), np.zeros(2), 0.5)
    assert np.allclose(out, [-0.5, -0.5])
    out = prox_objective(ObjectiveSpec.bp_split(1), np.array([0.3, 0.3]), 0.5)
    assert out[0] == 0.0 and out[1] == pytest.approx(-0.2)


@settings(max_examples=50)
@given(st.integers(0, 6), st.floats(0.05, 3.0), st.integers(0, 2**31))
def test_prox_optimality(k, t, seed):
    # v - prox(v) must be a subgradient of t*f at prox(v)
    obj = ObjectiveSpec.bp_split(k)
    v = np.random.default_rng(seed).standard_normal(6) * 2
    u = prox_objective(obj, v, t)
    lo, hi = obj.subgradient_box(6)
    g = (v - u) / t
    split = 6 - k
    for i in range(6):
        if i < split and u[i] != 0.0:
            assert g[i] == pytest.approx(math.copysign(1.0, u[i]))
        else:
            assert lo[i] - 1e-12 <= g[i] <= hi[i] + 1e-12


# -- rotation ---------------------------------------------------------------

def test_householder_identity_for_ones():
    Q = householder_to_ones(np.ones(5))
    assert np.allclose(Q, np.eye(5))


def test_rotation_identity(rng):
    c = rng.standard_normal(9)
    Q = householder_to_ones(c)
    assert np.allclose(Q @ Q.T, np.eye(9), atol=1e-12)
    x = rng.standard_normal(9)
    C = np.linalg.norm(c) / 3.0
    assert abs(c @ x - C * np.sum(Q @ x)) < 1e-10


def test_rotated_instance_has_scaled_optimum(rng):
    cfg = ShapeConfig(20, 0.3, 0.3)
    c = rng.standard_normal(20)
    inst = sample_instance(cfg, ObjectiveSpec.general_linear(c), RngStream(2, 0))
    rot, scale = rotate_to_canonical(inst)
    assert rot.objective.kind is ObjectiveKind.PURELY_LINEAR
    assert scale == pytest.approx(np.linalg.norm(c) / math.sqrt(20))
    orig = solve_primal(inst).objective
    canon = solve_primal(rot).objective
    assert abs(orig - scale * canon) < 1e-5


def test_rotation_needs_general_linear():
    inst = sample_instance(ShapeConfig(6, 0.5, 0.5), ObjectiveSpec.purely_linear(),
                           RngStream(1, 0))
    with pytest.raises(ConfigurationError):
        rotate_to_canonical(inst)


# -- binary dump ------------------------------------------------------------

@pytest.mark.parametrize("obj", [ObjectiveSpec.purely_linear(), ObjectiveSpec.bp_split(3),
                                 ObjectiveSpec.general_linear(np.linspace(-1, 1, 8))])
def test_dump_round_trip(tmp_path, obj):
    cfg = ShapeConfig(8, 0.25, 0.5)
    inst = sample_instance(cfg, obj, RngStream(4, 1),
                           nonhomogeneous=(np.arange(2.0), -np.arange(4.0)))
    path = tmp_path / "inst.bin"
    dump_instance(inst, path)
    back = load_instance(path)
    assert back.n == inst.n and back.objective.kind is obj.kind and back.objective.k == obj.k
    for name in ("A", "B", "a_vec", "b_vec"):
        assert np.array_equal(getattr(back, name), getattr(inst, name))
    if obj.c is not None:
        assert np.array_equal(back.objective.c, obj.c)


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"not an instance at all, sorry" * 3)
    with pytest.raises(ConfigurationError):
        load_instance(path)
