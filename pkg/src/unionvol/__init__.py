"""Volume of unions and intersections of high-dimensional bodies.

Bodies are accessed only through membership, volume and sampling oracles.
The union estimator gives a ``1 +- eps`` relative approximation with
probability at least 3/4; the intersection estimator an additive one.
"""

__version__ = "0.1.0"

from .bodies import (
    AffineBody,
    AxisBox,
    Ball,
    Body,
    BoxBallProduct,
    CoBox,
    OracleErrors,
    cobox_slabs,
    make_box_ball,
    point_query,
    sample_query,
    volume_query,
)
from .estimators import IntersectionVolumeEstimator, UnionVolumeEstimator, WeakVolumeCalibrator
from .exceptions import (
    AmplificationError,
    BudgetError,
    ContractError,
    EmptyBodyError,
    InfeasibleBudgetError,
    NoCompletedTrialError,
    SamplingTimeoutError,
    SpecParseError,
    UnionVolError,
)
from .intersection import IntersectionReport, approx_intersection, n_from_eps
from .reductions import (
    MonotoneCnf,
    cnf_to_coboxes,
    cnf_to_kmp,
    count_sat_brute,
    exact_cobox_intersection,
    exact_union_axis_boxes,
    mc_reference_union,
)
from .specs import dump_bodies, load_bodies, parse_bodies
from .union import (
    DerivedConstants,
    EstimateReport,
    EstimatorParams,
    amplify,
    approx_union,
    body_picker,
    derived_constants,
)
from .weak_oracles import (
    HPolytope,
    MembershipBody,
    WeakVolumeResult,
    calibrate,
    error_budget_check,
    mc_volume,
    rejection_sample,
)
