"""scikit-learn style wrappers.

Here ``X`` is a sequence of :class:`~unionvol.bodies.Body` objects rather
than a feature matrix, which lets the estimators sit in a
:class:`sklearn.pipeline.Pipeline` behind :class:`WeakVolumeCalibrator`::

    Pipeline([("calibrate", WeakVolumeCalibrator(eps_v=1e-3)),
              ("union", UnionVolumeEstimator(eps=0.2))]).fit(bodies)
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .bodies import OracleErrors
from .intersection import approx_intersection
from .union import EstimatorParams, amplify, approx_union
from .validation import as_generator, check_bodies
from .weak_oracles import MembershipBody, calibrate

__all__ = ["UnionVolumeEstimator", "IntersectionVolumeEstimator", "WeakVolumeCalibrator"]


class UnionVolumeEstimator(BaseEstimator):
    """Estimate the volume of the union of the bodies passed to :meth:`fit`.

    Parameters
    ----------
    eps : float
        Target relative error.
    eps_p, eps_v, eps_s : float
        Oracle error ratios to assume at least; each body's declared errors
        are folded in by taking maxima.
    delta : float or None
        When set, amplify to failure probability ``delta`` with a median of runs.
    method : {"batched", "stepwise"}
    threads : int
        Worker threads for amplified runs; does not change the result.
    random_state : int
        Seed of the root stream.

    Attributes
    ----------
    volume_ : float
    report_ : EstimateReport
    n_bodies_, dim_ : int
    """

    def __init__(self, eps=0.1, eps_p=0.0, eps_v=0.0, eps_s=0.0, delta=None, method="batched",
                 threads=1, random_state=0):
        self.eps = eps
        self.eps_p = eps_p
        self.eps_v = eps_v
        self.eps_s = eps_s
        self.delta = delta
        self.method = method
        self.threads = threads
        self.random_state = random_state

    def _params(self):
        seed = 0 if self.random_state is None else self.random_state
        return EstimatorParams(self.eps, OracleErrors(self.eps_p, self.eps_v, self.eps_s), seed)

    def fit(self, X, y=None):
        bodies, dim = check_bodies(X)
        params = self._params()
        if self.delta is None:
            report = approx_union(bodies, params, method=self.method)
        else:
            report = amplify(bodies, params, self.delta, threads=self.threads, method=self.method)
        self.report_ = report
        self.volume_ = report.estimate
        self.constants_ = report.constants
        self.n_bodies_ = len(bodies)
        self.dim_ = dim
        return self

    def predict(self, X=None):
        """The fitted volume estimate (``X`` is ignored)."""
        check_is_fitted(self, "volume_")
        return self.volume_


class IntersectionVolumeEstimator(BaseEstimator):
    """Additive estimate of the volume of the intersection of the fitted bodies.

    The error is relative to ``v_min_``, the smallest body volume.
    """

    def __init__(self, eps=0.05, random_state=0):
        self.eps = eps
        self.random_state = random_state

    def fit(self, X, y=None):
        bodies, dim = check_bodies(X)
        seed = 0 if self.random_state is None else self.random_state
        report = approx_intersection(bodies, self.eps, seed=seed)
        self.report_ = report
        self.volume_ = report.estimate
        self.v_min_ = report.v_min
        self.n_bodies_ = len(bodies)
        self.dim_ = dim
        return self

    def predict(self, X=None):
        check_is_fitted(self, "volume_")
        return self.volume_


class WeakVolumeCalibrator(TransformerMixin, BaseEstimator):
    """Give every membership-only body a Monte-Carlo volume oracle.

    :meth:`transform` returns the bodies with each :class:`MembershipBody`
    replaced by its calibrated copy; exact bodies pass through. ``delta``
    defaults to ``1 / (100 n)`` for ``n`` bodies.
    """

    def __init__(self, eps_v=1e-3, delta=None, random_state=0):
        self.eps_v = eps_v
        self.delta = delta
        self.random_state = random_state

    def fit(self, X, y=None):
        bodies, _ = check_bodies(X)
        delta = self.delta if self.delta is not None else 1.0 / (100 * len(bodies))
        streams = as_generator(0 if self.random_state is None else self.random_state).spawn(len(bodies))
        self.calibrated_ = [
            calibrate(b, self.eps_v, delta, rng) if isinstance(b, MembershipBody) else b
            for b, rng in zip(bodies, streams)
        ]
        self.delta_ = delta
        return self

    def transform(self, X):
        check_is_fitted(self, "calibrated_")
        bodies, _ = check_bodies(X)
        if len(bodies) != len(self.calibrated_) or any(
            b is not c and not isinstance(b, MembershipBody) for b, c in zip(bodies, self.calibrated_)
        ):
            raise ValueError("transform must receive the bodies the calibrator was fitted on")
        return list(self.calibrated_)
