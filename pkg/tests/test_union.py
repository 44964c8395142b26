import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from oracles import inclusion_exclusion_union, lens_area
from unionvol import (
    AmplificationError,
    AxisBox,
    Ball,
    ContractError,
    EstimatorParams,
    InfeasibleBudgetError,
    NoCompletedTrialError,
    OracleErrors,
    amplify,
    approx_union,
    body_picker,
    derived_constants,
)
from unionvol.union import BodyPicker, amplification_runs, feasibility_threshold


def test_t_budget_frozen():
    # 24 ln2 * 1.1 * 10 / 0.01 evaluated with mpmath at 50 digits.
    c = derived_constants(10, EstimatorParams(eps=0.1))
    assert c.t_budget == pytest.approx(18299.085566782556, rel=1e-12)
    assert c.eps_tilde == 0.1 and c.c_tilde == 1.0


def test_feasibility_threshold_frozen():
    # Reference values from mpmath at 40 digits.
    errors = OracleErrors(eps_p=0.01, eps_v=0.02, eps_s=0.03)
    assert feasibility_threshold(5, errors) == pytest.approx(2.4078719537555751, rel=1e-12)
    with pytest.raises(InfeasibleBudgetError) as info:
        derived_constants(5, EstimatorParams(eps=0.99, errors=errors))
    assert info.value.min_eps == pytest.approx(2.4078719537555751, rel=1e-12)


def test_derived_constants_with_errors_frozen():
    errors = OracleErrors(eps_p=1e-4, eps_v=1e-3, eps_s=1e-3)
    c = derived_constants(3, EstimatorParams(eps=0.5, errors=errors))
    assert c.c_tilde == pytest.approx(1.0034052457297782, rel=1e-12)
    assert c.eps_tilde == pytest.approx(0.4985014985014985, rel=1e-12)
    assert c.t_budget == pytest.approx(448.41153643850642, rel=1e-12)


def test_infeasible_example():
    with pytest.raises(InfeasibleBudgetError) as info:
        derived_constants(10, EstimatorParams(eps=0.1, errors=OracleErrors(eps_p=0.01)))
    assert info.value.min_eps > 0.1


def test_params_validation():
    with pytest.raises(ContractError):
        EstimatorParams(eps=0)
    with pytest.raises(ContractError):
        EstimatorParams(eps=0.1, seed=-1)
    with pytest.raises(ContractError):
        EstimatorParams(eps=0.1, seed=2**64)


def test_body_picker_frequencies():
    vols = [1.0, 2.0, 3.0, 4.0]
    picks = BodyPicker(vols).pick(np.random.default_rng(7), 10**5)
    counts = np.bincount(picks, minlength=4)
    p = np.array(vols) / sum(vols)
    sigma = np.sqrt(10**5 * p * (1 - p))
    assert np.all(np.abs(counts - 10**5 * p) <= 3 * sigma)


def test_body_picker_single_draw():
    assert body_picker([5.0], np.random.default_rng(0)) == 0
    with pytest.raises(ContractError):
        body_picker([1.0, 0.0], np.random.default_rng(0))


def test_disjoint_unit_boxes():
    boxes = [AxisBox([2 * i, 0], [2 * i + 1, 1]) for i in range(4)]
    estimates = [approx_union(boxes, EstimatorParams(eps=0.1, seed=s)).estimate for s in range(40)]
    ok = sum(abs(e - 4) <= 0.4 for e in estimates)
    assert ok >= 30


def test_identical_bodies():
    ball = Ball([0, 0, 0], 1.0)
    rep = approx_union([ball] * 5, EstimatorParams(eps=0.1, seed=1))
    # Every trial finishes on its first step, so M = T exactly (up to the budget edge).
    assert rep.trials_m == math.ceil(rep.constants.t_budget)
    assert rep.estimate == pytest.approx(ball.volume(), rel=1e-3)


def test_two_overlapping_discs():
    r, dist = 1.0, 1.0
    truth = 2 * math.pi - lens_area(r, dist)
    discs = [Ball([0, 0], r), Ball([dist, 0], r)]
    ests = [approx_union(discs, EstimatorParams(eps=0.1, seed=s)).estimate for s in range(60)]
    assert sum(abs(e - truth) <= 0.1 * truth for e in ests) >= 45


def test_report_fields():
    boxes = [AxisBox([0, 0], [1, 1]), AxisBox([0.5, 0], [1.5, 1])]
    rep = approx_union(boxes, EstimatorParams(eps=0.2, seed=3))
    assert rep.per_body_volumes == (1.0, 1.0) and rep.v_prime_total == 2.0
    assert rep.steps_t >= math.ceil(rep.constants.t_budget)
    assert rep.estimate == pytest.approx(rep.constants.t_budget * 2.0 / (2 * rep.trials_m))
    d = rep.to_dict()
    assert "wall_time" not in d and "wall_time" in rep.to_dict(timing=True)
    assert set(d["derived"]) == {"eps_tilde", "c_tilde", "t_budget"}


def test_same_seed_same_result():
    boxes = [AxisBox([0, 0], [1, 1]), AxisBox([0.5, 0.5], [2, 2])]
    for method in ("batched", "stepwise"):
        a = approx_union(boxes, EstimatorParams(eps=0.3, seed=11), method=method)
        b = approx_union(boxes, EstimatorParams(eps=0.3, seed=11), method=method)
        assert a.to_dict() == b.to_dict()


def test_effective_errors_use_body_declarations():
    boxes = [AxisBox([0], [1], OracleErrors(eps_v=1e-4)), AxisBox([0.5], [2])]
    rep = approx_union(boxes, EstimatorParams(eps=0.2, seed=0))
    assert rep.constants.errors.eps_v == 1e-4


def test_unknown_method():
    with pytest.raises(ContractError):
        approx_union([AxisBox([0], [1])], EstimatorParams(eps=0.5), method="fast")


def test_stepwise_and_batched_agree_in_law():
    boxes = [AxisBox([0, 0], [1, 1]), AxisBox([0.5, 0], [1.5, 1]), AxisBox([0.2, 0.5], [0.8, 2])]
    truth = inclusion_exclusion_union(boxes)
    params = [EstimatorParams(eps=0.3, seed=s) for s in range(80)]
    m_step = [approx_union(boxes, p, method="stepwise").trials_m for p in params]
    m_batch = [approx_union(boxes, EstimatorParams(eps=0.3, seed=10**6 + p.seed)).trials_m for p in params]
    res = stats.ks_2samp(m_step, m_batch)
    assert res.pvalue > 0.001
    est = [approx_union(boxes, p, method="stepwise").estimate for p in params[:40]]
    assert np.mean(est) == pytest.approx(truth, rel=0.05)


def test_batch_size_does_not_bias():
    boxes = [AxisBox([0], [1]), AxisBox([0.5], [1.5])]
    small = [approx_union(boxes, EstimatorParams(eps=0.2, seed=s), batch_size=7).estimate for s in range(40)]
    assert np.mean(small) == pytest.approx(1.5, rel=0.04)


def test_no_completed_trial():
    # A body that never contains its own samples cannot finish a trial.
    class Leaky(AxisBox):
        def contains(self, X):
            return np.zeros(np.atleast_2d(X).shape[0], dtype=bool)

    with pytest.raises(NoCompletedTrialError):
        approx_union([Leaky([0], [1])], EstimatorParams(eps=0.9))
    with pytest.raises(AmplificationError) as info:
        amplify([Leaky([0], [1])], EstimatorParams(eps=0.9), 0.25)
    assert info.value.failed == info.value.runs


def test_amplification_runs_frozen():
    assert amplification_runs(0.01) == 111
    assert amplification_runs(0.999) == 1


def test_amplify_median_and_threads():
    boxes = [AxisBox([0, 0], [1, 1]), AxisBox([0.5, 0.5], [1.5, 1.5])]
    one = amplify(boxes, EstimatorParams(eps=0.2, seed=5), 0.1)
    many = amplify(boxes, EstimatorParams(eps=0.2, seed=5), 0.1, threads=3)
    assert one.runs == amplification_runs(0.1) == len(one.run_estimates)
    assert one.estimate == many.estimate and one.run_estimates == many.run_estimates
    assert one.estimate == sorted(one.run_estimates)[(one.runs - 1) // 2]
    assert abs(one.estimate - 1.75) <= 0.2 * 1.75


def test_amplify_success_rate():
    boxes = [AxisBox([0, 0], [1, 1]), AxisBox([0.5, 0.5], [1.5, 1.5])]
    ok = sum(abs(amplify(boxes, EstimatorParams(eps=0.3, seed=s), 0.05).estimate - 1.75) <= 0.3 * 1.75
             for s in range(10))
    assert ok == 10


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 100), st.floats(1e-3, 0.999))
def test_budget_grows_with_n_and_shrinks_with_eps(n, eps):
    a = derived_constants(n, EstimatorParams(eps=eps)).t_budget
    assert derived_constants(n + 1, EstimatorParams(eps=eps)).t_budget > a
    assert derived_constants(n, EstimatorParams(eps=min(eps * 1.01, 0.9999))).t_budget < a


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 100), st.floats(0.01, 0.999), st.floats(0, 1))
def test_lemma_budget_implies_feasible_and_bounded(n, eps, scale):
    errors = OracleErrors(eps_p=scale * eps * eps / (47 * n * n), eps_v=scale * eps * eps / (47 * n),
                          eps_s=scale * eps * eps / (47 * n))
    c = derived_constants(n, EstimatorParams(eps=eps, errors=errors))
    assert 0 < c.t_budget < 2365 * n / eps**2
