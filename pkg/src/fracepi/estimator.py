"""scikit-learn wrapper around the fractional-order fit.

``X`` holds month offsets (one column of nonnegative integers, month 0 being the
first observation) and ``y`` the observed monthly counts.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .calibration import CaseSeries, fit_alpha, initial_state, model_counts
from .epimodels import Model, ModelParams


class AlphaCalibrator(RegressorMixin, BaseEstimator):
    """Fit the Caputo order of a seasonal SIRS/SEIRS model to monthly counts.

    Parameters
    ----------
    model : {"seirs", "sirs"}
    params : ModelParams, optional
        Fixed epidemiological constants; defaults to the standard SEIRS (or
        SIRS) set. Its ``alpha`` is ignored.
    y0 : array-like, optional
        Initial proportions. Defaults to the mean-system endemic equilibrium.
    population_scale : float
        Persons per unit proportion.
    rescale_initial : bool
        Match the first observation by adjusting the initial infectious share.

    Attributes
    ----------
    best_alpha_ : float
    fit_result_ : FitResult
    y0_ : ndarray
    """

    def __init__(self, model="seirs", params=None, y0=None, population_scale=1.0,
                 alpha_min=0.5, alpha_step=0.005, refine_tol=5e-4, nodes_per_month=17,
                 rescale_initial=False):
        self.model = model
        self.params = params
        self.y0 = y0
        self.population_scale = population_scale
        self.alpha_min = alpha_min
        self.alpha_step = alpha_step
        self.refine_tol = refine_tol
        self.nodes_per_month = nodes_per_month
        self.rescale_initial = rescale_initial

    def _params(self) -> ModelParams:
        if self.params is not None:
            return self.params
        model = Model(self.model)
        return ModelParams.sirs_default() if model is Model.SIRS else ModelParams.seirs_default()

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        months = _month_index(X)
        if not np.array_equal(months, np.arange(months.size)):
            raise ValueError("fit expects consecutive month offsets 0..n-1 in order")
        series = CaseSeries("2000-01", y, self.population_scale)
        params = self._params()
        if self.y0 is None:
            y0 = initial_state(self.model, params, series, self.rescale_initial)
        else:
            y0 = np.asarray(self.y0, dtype=float)
        self.fit_result_ = fit_alpha(self.model, params, y0, series, alpha_min=self.alpha_min,
                                     alpha_step=self.alpha_step, refine_tol=self.refine_tol,
                                     nodes_per_month=self.nodes_per_month)
        self.best_alpha_ = self.fit_result_.best_alpha
        self.y0_ = y0
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "best_alpha_")
        months = _month_index(check_array(X, dtype=float))
        horizon = int(months.max()) + 1
        counts = model_counts(self.model, self._params().replace(alpha=self.best_alpha_),
                              self.y0_, max(horizon, 2), self.population_scale,
                              self.nodes_per_month)
        return counts[months]


def _month_index(X: np.ndarray) -> np.ndarray:
    if X.shape[1] != 1:
        raise ValueError(f"X must have a single column of month offsets, got {X.shape[1]}")
    col = X[:, 0]
    months = np.rint(col).astype(int)
    if np.any(np.abs(col - months) > 1e-9) or np.any(months < 0):
        raise ValueError("month offsets must be nonnegative integers")
    return months
