"""scikit-learn style wrappers so the computations drop into pipelines and grid searches.

Each estimator validates its input with :mod:`discrest.validation`, calls the
functional API, and stores results in trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .energy import energy_bruteforce, energy_hashed
from .expsum import fit_exponent, lp_average_ball, lp_norm_torus_grid
from .pointsets import cap_partition
from .validation import as_pointset, check_scales


class AdditiveEnergy(BaseEstimator):
    """Exact ``E_k`` of the rows of ``X``.

    Parameters
    ----------
    k : int
        Half the tuple length.
    method : {"hashed", "bruteforce"}
    collect_witnesses : bool
        Only honoured by the brute-force route.
    """

    def __init__(self, k=2, method="hashed", collect_witnesses=False):
        self.k = k
        self.method = method
        self.collect_witnesses = collect_witnesses

    def fit(self, X, y=None):
        ps = as_pointset(X)
        if self.method == "bruteforce" or self.collect_witnesses:
            self.report_ = energy_bruteforce(ps, self.k, self.collect_witnesses)
        else:
            self.report_ = energy_hashed(ps, self.k)
        self.energy_ = self.report_.value
        self.nontrivial_count_ = self.report_.nontrivial_count
        self.n_features_in_ = ps.n
        return self


class LpAverage(BaseEstimator):
    """Normalised L^p average of the exponential sum with frequencies ``X``.

    ``fit(X, coefficients)`` estimates the average; ``method="torus"`` uses
    the exact torus grid (integer ``X``), anything else goes to
    :func:`discrest.expsum.lp_average_ball`.
    """

    def __init__(self, p=2.0, R=100.0, method="monte_carlo", samples=100_000, seed=0, center=None):
        self.p = p
        self.R = R
        self.method = method
        self.samples = samples
        self.seed = seed
        self.center = center

    def fit(self, X, coefficients=None):
        ps = as_pointset(X)
        if self.method == "torus":
            est = lp_norm_torus_grid(ps, coefficients, self.p, samples=self.samples, seed=self.seed)
        else:
            est = lp_average_ball(ps, coefficients, self.p, self.R, self.center, self.method, self.samples, self.seed)
        self.estimate_ = est
        self.value_ = est.value
        self.error_ = est.error
        return self


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """Fit ``y ~ C * x**slope`` by least squares in log-log space."""

    def fit(self, X, y):
        x = check_scales(X)
        y = np.asarray(y, dtype=float).ravel()
        self.fit_ = fit_exponent(zip(x, y))
        self.coef_ = self.fit_.slope
        self.intercept_ = self.fit_.intercept
        self.residual_ = self.fit_.residual
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        return self.fit_.predict(check_scales(X))


class CapAssigner(TransformerMixin, BaseEstimator):
    """Map each paraboloid point to the grid index of its cap at scale ``delta``."""

    def __init__(self, delta="1/16"):
        self.delta = delta

    def fit(self, X, y=None):
        ps = as_pointset(X)
        self.caps_ = cap_partition(ps, self.delta)
        self.n_features_in_ = ps.n
        return self

    def transform(self, X):
        check_is_fitted(self, "caps_")
        ps = as_pointset(X, surface="paraboloid")
        out = np.zeros((len(ps), ps.n - 1), dtype=np.int64)
        for cap in cap_partition(ps, self.delta):
            out[cap.members] = cap.index
        return out
