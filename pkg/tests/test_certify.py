from rvsm import certify
from rvsm.penalties import PenaltyKind


def test_prox_suites_cover_threshold_boundaries():
    for kind in PenaltyKind:
        r = certify.prox_suite(kind, n=50)
        assert r.passed and r.n_cases == 50 and r.worst <= certify.PROX_ATOL


def test_mc_gate_widens_with_fewer_samples():
    small = certify.mc_suite(n_samples=1_000, n_instances=6)
    large = certify.mc_suite(n_samples=16_000, n_instances=6)
    assert all(r.passed for r in small + large)
    from rvsm.empirical import empirical_g

    se_small = empirical_g([1.0, 0.2], [0.3, 1.0], 1_000, seed=1).std_error
    se_large = empirical_g([1.0, 0.2], [0.3, 1.0], 16_000, seed=1).std_error
    assert 3.0 < se_small / se_large < 5.0


def test_table_format():
    rows = [certify.SuiteResult("x", True, 3, 0, 0.0, "gate", 0.1),
            certify.SuiteResult("y", False, 3, 1, 2.0, "gate", 0.1, "case 1 broke")]
    text = certify.format_table(rows)
    assert "PASS" in text and "FAIL" in text and "case 1 broke" in text
