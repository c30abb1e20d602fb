import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rvsm.empirical import RunningStats, empirical_g, empirical_loss, net_output
from rvsm.errors import ShapeMismatch
from rvsm.population import ProblemSpec, g_closed, loss


def test_net_output_examples():
    assert net_output([3, 5], [1, 0], 1) == 3.0
    assert net_output([-2, 4], [1], 2) == 2.0
    with pytest.raises(ShapeMismatch):
        net_output([1, 2, 3], [1, 0], 2)
    batch = np.array([[3, 5], [-1, 0]])
    assert net_output(batch, [1, 0], 1).tolist() == [3.0, 0.0]


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=6), st.floats(1e-3, 1e3))
def test_net_output_positively_homogeneous(x, c):
    w = np.array([0.3, -1.2])
    assert net_output(x, c * w, 3) == pytest.approx(c * net_output(x, w, 3), rel=1e-12, abs=1e-12)


def test_running_stats_merge_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(10_001) * 3 + 2
    a, b = RunningStats(), RunningStats()
    for chunk in np.array_split(x[:6000], 7):
        a.push_chunk(chunk)
    b.push_chunk(x[6000:])
    a.merge(b)
    assert a.n == x.size
    assert a.mean == pytest.approx(x.mean(), rel=1e-13)
    assert a.variance == pytest.approx(x.var(ddof=1), rel=1e-12)


def test_kernel_estimates():
    u = np.array([0.6, 0.8, 0.0])
    est = empirical_g(u, u, 1_000_000, seed=1)
    assert abs(est.z_score(0.5)) <= 3
    est = empirical_g([1, 0, 0], [0, 1, 0], 1_000_000, seed=2)
    assert abs(est.z_score(1 / (2 * math.pi))) <= 3
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal(5), rng.standard_normal(5)
    est = empirical_g(u, v, 200_000, seed=4)
    assert abs(est.z_score(g_closed(u, v))) <= 3
    with pytest.raises(ShapeMismatch):
        empirical_g([1, 0], [1, 0, 0], 10, seed=0)


def test_loss_estimates():
    spec = ProblemSpec.random(4, 2, seed=5)
    est = empirical_loss(spec.w_star, spec, 1000, seed=0)
    assert est.mean == 0.0 and est.std_error == 0.0
    est = empirical_loss(-spec.w_star, spec, 1_000_000, seed=6)
    assert abs(est.z_score(0.5)) <= 3
    spec3 = ProblemSpec.random(4, 3, seed=7)
    w = np.random.default_rng(8).standard_normal(4)
    est = empirical_loss(w, spec3, 1_000_000, seed=9)
    assert abs(est.z_score(loss(w, spec3))) <= 3


def test_estimates_reproducible_and_scale_as_root_n():
    u, v = np.array([1.0, 0.5]), np.array([-0.2, 1.0])
    a = empirical_g(u, v, 50_000, seed=10)
    assert a == empirical_g(u, v, 50_000, seed=10)
    b = empirical_g(u, v, 200_000, seed=11)
    assert b.std_error == pytest.approx(a.std_error / 2, rel=0.2)
    with pytest.raises(ValueError):
        empirical_g(u, v, 1, seed=0)


def test_chunking_changes_stream_but_not_statistics():
    u, v = np.array([1.0, 0.5]), np.array([-0.2, 1.0])
    a = empirical_g(u, v, 100_000, seed=12, chunk=1000)
    b = empirical_g(u, v, 100_000, seed=12, chunk=1000)
    assert a.mean == b.mean
    assert abs(a.z_score(g_closed(u, v))) <= 4
