import math

import numpy as np
import pytest

from unionvol import (
    AxisBox,
    BudgetError,
    ContractError,
    EmptyBodyError,
    HPolytope,
    MembershipBody,
    OracleErrors,
    SamplingTimeoutError,
    calibrate,
    error_budget_check,
    mc_volume,
    rejection_sample,
)
from unionvol.weak_oracles import hoeffding_samples, lemma_budget, rejection_sample_many


def simplex(d, rho=None):
    A = np.vstack([-np.eye(d), np.ones((1, d))])
    b = np.concatenate([np.zeros(d), [1.0]])
    return HPolytope(A, b, fill_lower_bound=rho if rho is not None else 1 / math.factorial(d))


def disc_body(rho=0.7):
    return MembershipBody(lambda X: np.sum(X * X, axis=1) <= 1.0, AxisBox([-1, -1], [1, 1]),
                          fill_lower_bound=rho, vectorized=True)


def test_hoeffding_example():
    # ln(200) / (2 * 0.0125^2) = 16954.6156..., checked with mpmath.
    assert hoeffding_samples(0.0125, 0.01) == 16955


def test_mc_volume_sample_count_and_value():
    body = MembershipBody(lambda X: X[:, 0] <= 0.5, AxisBox([0, 0], [1, 1]),
                          fill_lower_bound=0.5, vectorized=True)
    res = mc_volume(body, eps_v=0.025, delta=0.01, rng=np.random.default_rng(1))
    assert res.samples_used == 16955
    assert abs(res.value - 0.5) <= 0.0125


def test_mc_volume_budget_limit():
    with pytest.raises(BudgetError):
        mc_volume(disc_body(), eps_v=1e-6, delta=1e-6, rng=np.random.default_rng(0), max_samples=10**6)


def test_mc_volume_needs_fill_bound():
    body = MembershipBody(lambda x: True, AxisBox([0], [1]))
    with pytest.raises(ContractError):
        mc_volume(body, 0.1, 0.1, np.random.default_rng(0))


def test_mc_volume_empty_body():
    body = MembershipBody(lambda X: np.zeros(len(X), bool), AxisBox([0], [1]),
                          fill_lower_bound=0.5, vectorized=True)
    with pytest.raises(EmptyBodyError):
        mc_volume(body, 0.1, 0.1, np.random.default_rng(0))


def test_mc_volume_coverage_on_disc():
    # Each run holds its relative error with probability 1 - delta = 0.9.
    body = disc_body()
    ok = 0
    for seed in range(60):
        v = mc_volume(body, eps_v=0.02, delta=0.1, rng=np.random.default_rng(seed)).value
        ok += abs(v - math.pi) <= 0.02 * math.pi
    assert ok >= 54


def test_uncalibrated_volume_raises():
    with pytest.raises(ContractError, match="calibrate"):
        disc_body().volume()


def test_calibrate_sets_volume_and_errors():
    cal = calibrate(disc_body(), eps_v=0.01, delta=0.01, rng=np.random.default_rng(3))
    assert abs(cal.volume() - math.pi) <= 0.01 * math.pi
    assert cal.errors == OracleErrors(eps_v=0.01)
    assert disc_body().volume_estimate is None


def test_scalar_membership_callable():
    body = MembershipBody(lambda x: x[0] + x[1] <= 1, AxisBox([0, 0], [1, 1]), fill_lower_bound=0.5)
    assert body.point_query([0.2, 0.2]) and not body.point_query([0.9, 0.9])
    assert not body.point_query([5.0, -3.0])


def test_rejection_sample_inside(rng):
    body = disc_body()
    x = rejection_sample(body, rng)
    assert x.shape == (2,) and body.point_query(x)
    pts = body.sample(rng, 5000)
    assert body.contains(pts).all()
    # Uniform on the disc: E|x|^2 = 1/2.
    assert np.mean(np.sum(pts**2, axis=1)) == pytest.approx(0.5, abs=0.02)


def test_rejection_timeout():
    body = MembershipBody(lambda X: np.zeros(len(X), bool), AxisBox([0], [1]),
                          fill_lower_bound=0.5, vectorized=True)
    with pytest.raises(SamplingTimeoutError) as info:
        rejection_sample(body, np.random.default_rng(0), max_tries=100)
    assert info.value.tries == 100
    with pytest.raises(SamplingTimeoutError):
        rejection_sample_many(body, np.random.default_rng(0), 5, max_tries=1000)


def test_rejection_many_counts_tries():
    body = MembershipBody(lambda X: X[:, 0] <= 0.25, AxisBox([0], [1]), fill_lower_bound=0.25,
                          vectorized=True)
    pts, tries = rejection_sample_many(body, np.random.default_rng(0), 20000)
    assert pts.shape == (20000, 1) and np.all(pts <= 0.25)
    assert 20000 / tries == pytest.approx(0.25, rel=0.05)


def test_polytope_bbox_by_lp():
    P = simplex(4)
    assert np.allclose(P.bbox.lo, 0, atol=1e-9) and np.allclose(P.bbox.hi, 1, atol=1e-9)


def test_polytope_bad_bbox_rejected():
    d = 3
    A = np.vstack([-np.eye(d), np.ones((1, d))])
    b = np.concatenate([np.zeros(d), [1.0]])
    with pytest.raises(ContractError):
        HPolytope(A, b, bbox=AxisBox([0, 0, 0], [0.5, 1, 1]))


def test_polytope_empty_and_unbounded():
    with pytest.raises(EmptyBodyError):
        HPolytope([[1.0], [-1.0]], [0.0, -1.0])
    with pytest.raises(ContractError):
        HPolytope([[1.0, 0.0]], [1.0])


def test_polytope_membership_matches_raw_inequalities(rng):
    P = simplex(5)
    X = rng.uniform(-0.2, 1.2, size=(20000, 5))
    raw = np.all(X @ P.A.T <= P.b, axis=1)
    assert np.array_equal(P.contains(X), raw)


def test_simplex_volume_estimate():
    P = simplex(4)
    res = mc_volume(P, eps_v=0.05, delta=0.01, rng=np.random.default_rng(9))
    assert abs(res.value - 1 / 24) <= 0.05 / 24


def test_lemma_budget_values():
    # eps^2/(47 n) and eps^2/(47 n^2) at n=10, eps=0.1, checked with mpmath.
    b = lemma_budget(10, 0.1)
    assert b.eps_v == pytest.approx(2.127659574468085e-05, rel=1e-12)
    assert b.eps_s == pytest.approx(2.127659574468085e-05, rel=1e-12)
    assert b.eps_p == pytest.approx(2.127659574468085e-06, rel=1e-12)
    assert error_budget_check(10, 0.1, b)
    assert not error_budget_check(10, 0.1, OracleErrors(eps_p=1e-5))


def test_oracle_errors_validation():
    with pytest.raises(ContractError):
        OracleErrors(eps_v=1.0)
    with pytest.raises(ContractError):
        OracleErrors(eps_p=-0.1)
    assert OracleErrors().exact
    worst = OracleErrors.worst([OracleErrors(eps_p=0.1), OracleErrors(eps_v=0.2)])
    assert worst == OracleErrors(eps_p=0.1, eps_v=0.2)
