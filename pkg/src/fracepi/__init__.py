"""Fractional-order seasonal epidemic models with optimal treatment."""

__version__ = "0.1.0"

from .calibration import (CaseSeries, FitResult, fit_alpha, l2_error, load_case_series,
                          relative_error, sample_monthly, synth_series)
from .costeff import (CostEffReport, Strategy, acer, averted, effectiveness, efficacy_series,
                      icer_rank, total_cost)
from .epimodels import (Model, ModelParams, beta_forcing, endemic_equilibrium, lambda_forcing,
                        seirs_controlled_rhs, seirs_rhs, simulate, sirs_rhs)
from .estimator import AlphaCalibrator
from .focp import (ControlWeights, FocpSolution, SweepSettings, objective, projected_control,
                   solve_adjoint, solve_focp)
from .frackernel import Grid, Trajectory, caputo_pece_solve, mittag_leffler, pece_weights

__all__ = [
    "AlphaCalibrator", "CaseSeries", "ControlWeights", "CostEffReport", "FitResult",
    "FocpSolution", "Grid", "Model", "ModelParams", "Strategy", "SweepSettings", "Trajectory",
    "acer", "averted", "beta_forcing", "caputo_pece_solve", "effectiveness", "efficacy_series",
    "endemic_equilibrium", "fit_alpha", "icer_rank", "l2_error", "lambda_forcing",
    "load_case_series", "mittag_leffler", "objective", "pece_weights", "projected_control",
    "relative_error", "sample_monthly", "seirs_controlled_rhs", "seirs_rhs", "simulate",
    "sirs_rhs", "solve_adjoint", "solve_focp", "synth_series", "total_cost",
]
