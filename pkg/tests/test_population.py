import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rvsm.core import make_rng, sample_unit_sphere
from rvsm.errors import DegenerateVector, InvalidRadius
from rvsm.population import (
    ProblemSpec,
    critical_points,
    estimate_lipschitz,
    finite_diff_grad,
    g_closed,
    grad,
    lipschitz_bound,
    loss,
    saddle_point,
)

# frozen values from 30-digit mpmath quadrature / arithmetic
KERNEL_QUAD = 0.6361672737835762956          # u=(1,0), v=2(cos 1, sin 1)
LOSS_QUAD = 0.21473299418658771952           # w=(0.3,-0.8), w*=(1,0), k=2
SADDLE_K2 = 0.241453007005223854655569310955
SADDLE_K4 = 0.488472643695521585347710197862


def test_problem_spec_derived_constants():
    spec = ProblemSpec.random(5, 3, seed=0)
    assert spec.w_star_norm == pytest.approx(1.0, abs=1e-12)
    assert spec.b == pytest.approx(6 / (2 * math.pi))
    assert spec.a == pytest.approx(spec.b + 1.5)
    with pytest.raises(ValueError):
        spec.w_star[0] = 1.0
    with pytest.raises(DegenerateVector):
        ProblemSpec(np.zeros(3), 2)
    with pytest.raises(ValueError):
        ProblemSpec(np.ones(3), 0)


def test_kernel_examples():
    u = np.array([0.6, 0.8])
    assert g_closed(u, u) == pytest.approx(0.5, abs=1e-15)
    assert g_closed(u, -u) == pytest.approx(0.0, abs=1e-15)
    assert g_closed([1, 0], [0, 1]) == pytest.approx(1 / (2 * math.pi), abs=1e-15)
    assert g_closed([1, 0], 2 * np.array([math.cos(1), math.sin(1)])) == pytest.approx(KERNEL_QUAD, rel=1e-13)
    with pytest.raises(DegenerateVector):
        g_closed([0, 0], [1, 0])


vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=4).filter(
    lambda v: np.linalg.norm(v) > 1e-2)


@given(vec, vec, st.floats(1e-2, 1e2))
def test_kernel_symmetric_and_homogeneous(u, v, c):
    g = g_closed(u, v)
    assert g_closed(v, u) == pytest.approx(g, rel=1e-12, abs=1e-14)
    assert g_closed(c * np.array(u), v) == pytest.approx(c * g, rel=1e-9, abs=1e-12)


def test_loss_examples():
    for k in (1, 2, 5):
        spec = ProblemSpec.random(6, k, seed=k)
        assert loss(spec.w_star, spec) == pytest.approx(0.0, abs=1e-15)
        assert loss(-spec.w_star, spec) == pytest.approx(1.0 / k, rel=1e-12)
    assert loss([0.3, -0.8], ProblemSpec([1.0, 0.0], 2)) == pytest.approx(LOSS_QUAD, rel=1e-7)
    with pytest.raises(DegenerateVector):
        loss(np.zeros(6), ProblemSpec.random(6, 2, seed=0))


@given(st.integers(1, 8), st.integers(0, 10_000), st.floats(0.05, 5))
def test_loss_nonnegative_and_rotation_invariant(k, seed, scale):
    rng = make_rng(seed)
    spec = ProblemSpec(sample_unit_sphere(5, rng), k)
    w = scale * sample_unit_sphere(5, rng)
    f = loss(w, spec)
    assert f >= -1e-12
    Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    rotated = ProblemSpec(Q @ spec.w_star, k)
    assert loss(Q @ w, rotated) == pytest.approx(f, rel=1e-9, abs=1e-13)


def test_grad_zero_at_truth_and_saddle():
    spec = ProblemSpec.random(7, 2, seed=3)
    assert np.linalg.norm(grad(spec.w_star, spec)) <= 1e-15
    s = saddle_point(spec)
    assert np.allclose(s, -SADDLE_K2 * spec.w_star, atol=1e-15)
    assert np.linalg.norm(grad(s, spec)) <= 1e-10
    spec4 = ProblemSpec.random(7, 4, seed=3)
    assert np.allclose(saddle_point(spec4), -SADDLE_K4 * spec4.w_star, atol=1e-15)


def test_grad_matches_finite_differences():
    rng = make_rng(0)
    spec = ProblemSpec(sample_unit_sphere(6, rng), 4)
    for _ in range(100):
        w = rng.standard_normal(6)
        g = grad(w, spec)
        fd = finite_diff_grad(w, spec, 1e-6)
        assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(g)


def test_finite_difference_is_second_order():
    spec = ProblemSpec.random(4, 3, seed=9)
    w = np.array([0.7, -0.2, 0.4, 1.1])
    g = grad(w, spec)
    e1 = np.linalg.norm(finite_diff_grad(w, spec, 1e-2) - g)
    e2 = np.linalg.norm(finite_diff_grad(w, spec, 5e-3) - g)
    assert 3.0 < e1 / e2 < 5.0
    assert np.linalg.norm(finite_diff_grad(spec.w_star, spec, 1e-6)) <= 10 * 1e-6
    with pytest.raises(DegenerateVector):
        finite_diff_grad(np.full(4, 1e-7), spec, 1e-6)


def test_critical_points():
    spec1 = ProblemSpec.random(5, 1, seed=0)
    pts = critical_points(spec1)
    assert len(pts) == 1 and pts[0][1] == "global-min"
    assert np.array_equal(pts[0][0], spec1.w_star)
    spec = ProblemSpec.random(5, 2, seed=0)
    pts = critical_points(spec)
    assert [label for _, label in pts] == ["local-max", "global-min", "saddle"]
    assert np.array_equal(pts[0][0], np.zeros(5))
    assert np.allclose(pts[2][0], -SADDLE_K2 * spec.w_star)
    for p, label in pts:
        if np.linalg.norm(p) > 0:
            assert np.linalg.norm(grad(p, spec)) <= 1e-9, label


def test_lipschitz_bound():
    spec = ProblemSpec.random(3, 2, seed=0)
    assert lipschitz_bound(1.0, spec) == pytest.approx(4.0)
    assert lipschitz_bound(0.5, spec) == pytest.approx(7.0)
    with pytest.raises(InvalidRadius):
        lipschitz_bound(0.0, spec)


@pytest.mark.parametrize("k", [1, 2, 8])
def test_sampled_lipschitz_ratio_within_bound(k):
    # measured constant c: the sampled ratio never exceeds the coplanar bound (c = 1)
    spec = ProblemSpec.random(6, k, seed=k)
    for M in (0.25, 0.5, 1.0):
        est = estimate_lipschitz(spec, M, n_pairs=10_000, seed=1)
        assert 0 < est <= lipschitz_bound(M, spec)
