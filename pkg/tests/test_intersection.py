import math

import numpy as np
import pytest

from oracles import lens_area
from unionvol import AxisBox, Ball, CoBox, ContractError, OracleErrors, approx_intersection, n_from_eps


@pytest.mark.parametrize("eps, n", [(0.05, 400), (0.1, 100), (0.3, 12), (0.999, 2), (0.07, 205)])
def test_n_from_eps(eps, n):
    # 1/0.1^2 in binary floating point is 99.99999999999999..., so N = 100.
    assert n_from_eps(eps) == n


def test_invalid_eps():
    with pytest.raises(ContractError):
        n_from_eps(0)
    with pytest.raises(ContractError):
        n_from_eps(1.0)


def test_cobox_example():
    rep = approx_intersection([CoBox([0.5, 1.0]), CoBox([1.0, 0.5])], eps=0.05, seed=0)
    assert rep.v_min == 0.5 and rep.min_index == 0 and rep.samples_n == 400
    assert abs(rep.estimate - 0.25) <= 0.05 * 0.5


def test_estimate_is_scaled_hit_fraction():
    rep = approx_intersection([AxisBox([0], [2]), AxisBox([1], [4])], eps=0.1, seed=3)
    assert rep.v_min == 2.0 and rep.min_index == 0
    assert rep.estimate == rep.v_min * rep.hits / rep.samples_n


def test_tie_break_is_lowest_index():
    rep = approx_intersection([AxisBox([1], [2]), AxisBox([0], [1]), AxisBox([0], [5])], eps=0.2, seed=0)
    assert rep.min_index == 0


def test_identical_boxes_give_v_min():
    box = AxisBox([0, 0], [1, 3])
    rep = approx_intersection([box, box], eps=0.1, seed=0)
    assert rep.estimate == 3.0 and rep.hits == rep.samples_n


def test_containing_body_leaves_report_unchanged():
    small = AxisBox([0, 0], [1, 1])
    other = Ball([0.5, 1.0], 0.7)
    a = approx_intersection([small, other], eps=0.05, seed=9).to_dict()
    b = approx_intersection([small, other, AxisBox([-1, -1], [3, 3])], eps=0.05, seed=9).to_dict()
    assert a.pop("n") == 2 and b.pop("n") == 3
    assert a == b


def test_disjoint_gives_zero():
    rep = approx_intersection([AxisBox([0, 0], [1, 1]), AxisBox([2, 2], [3, 3])], eps=0.1, seed=0)
    assert rep.estimate == 0.0 and rep.hits == 0


def test_single_body_returns_its_volume():
    rep = approx_intersection([Ball([0, 0], 1.0)], eps=0.1, seed=0)
    assert rep.estimate == pytest.approx(math.pi, rel=1e-15)


def test_disc_lens_coverage():
    truth = lens_area(1.0, 1.2)
    discs = [Ball([0, 0], 1.0), Ball([1.2, 0], 1.0)]
    ok = sum(abs(approx_intersection(discs, 0.05, seed=s).estimate - truth) <= 0.05 * math.pi
             for s in range(100))
    assert ok >= 75


def test_rng_overrides_seed():
    bodies = [AxisBox([0], [1]), AxisBox([0.5], [2])]
    a = approx_intersection(bodies, 0.1, np.random.default_rng(5))
    b = approx_intersection(bodies, 0.1, np.random.default_rng(5))
    assert a.to_dict() == b.to_dict()


def test_selection_slack_from_declared_errors():
    bodies = [AxisBox([0], [1], OracleErrors(eps_v=0.1)), AxisBox([0], [2])]
    rep = approx_intersection(bodies, 0.1, seed=0)
    assert rep.selection_slack == pytest.approx(1.1 / 0.9)
    assert approx_intersection([AxisBox([0], [1])], 0.1).selection_slack == 1.0
