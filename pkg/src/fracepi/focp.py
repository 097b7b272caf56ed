"""Optimal treatment for the fractional SEIRS model by forward-backward sweep.

Minimizes ``J = int_0^tf (kappa1*I + kappa2*T^2) dt`` subject to the controlled
SEIRS dynamics and ``0 <= T <= T_max``. Each sweep solves the state forward,
the co-state backward, projects the stationarity condition onto the box, and
relaxes the control towards the projection.

The co-state system is a right Riemann-Liouville problem with zero terminal
data. Substituting ``t' = tf - t`` turns it into a left problem with zero
initial data, where Riemann-Liouville and Caputo derivatives agree, so the
same PECE kernel solves it. State, control and forcing inside the reversed
right-hand side are read at the original time ``tf - t'``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .epimodels import ModelParams, beta_forcing, check_state, Model, seirs_controlled_rhs
from .frackernel import DivergenceError, Grid, ParameterDomainError, Trajectory, caputo_pece_solve

log = logging.getLogger(__name__)

CSV_COLUMNS = ("t", "S", "E", "I", "R", "p1", "p2", "p3", "p4", "T")


class SweepFailure(RuntimeError):
    def __init__(self, iteration: int, cause: Exception):
        self.iteration = iteration
        super().__init__(f"sweep iteration {iteration}: {cause}")


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ControlWeights:
    kappa1: float = 1.0
    kappa2: float = 0.001
    T_max: float = 1.0
    C: float = 1.0

    def __post_init__(self):
        if not (self.kappa1 >= 0 and math.isfinite(self.kappa1)):
            raise ParameterDomainError(f"kappa1 must be >= 0, got {self.kappa1}")
        if not (self.kappa2 > 0 and math.isfinite(self.kappa2)):
            raise ParameterDomainError(f"kappa2 must be > 0, got {self.kappa2}")
        if not (self.T_max > 0 and math.isfinite(self.T_max)):
            raise ParameterDomainError(f"T_max must be > 0, got {self.T_max}")
        if not (self.C >= 0 and math.isfinite(self.C)):
            raise ParameterDomainError(f"C must be >= 0, got {self.C}")


@dataclass(frozen=True)
class SweepSettings:
    relaxation: float = 0.5
    tol: float = 1e-4
    max_iter: int = 200

    def __post_init__(self):
        if not 0 < self.relaxation <= 1:
            raise ParameterDomainError(f"relaxation must lie in (0, 1], got {self.relaxation}")
        if not self.tol > 0:
            raise ParameterDomainError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ParameterDomainError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class ControlTrajectory:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.grid.n_steps + 1:
            raise GridMismatchError("control length does not match grid")


@dataclass
class AdjointTrajectory:
    """Co-states ``p1..p4`` stored in original (forward) time."""

    grid: Grid
    values: np.ndarray


@dataclass
class FocpSolution:
    state: Trajectory
    adjoint: AdjointTrajectory
    control: ControlTrajectory
    objective: float
    iterations: int
    residual_history: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else math.nan

    def table(self) -> np.ndarray:
        """Rows ``t, S, E, I, R, p1..p4, T`` per node."""
        return np.column_stack([self.state.times, self.state.values,
                                self.adjoint.values, self.control.values])


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


def objective(state: Trajectory, control: ControlTrajectory, w: ControlWeights) -> float:
    """Trapezoidal value of ``int (kappa1*I + kappa2*T^2) dt``."""
    _same_grid(state.grid, control.grid)
    integrand = w.kappa1 * state[2] + w.kappa2 * control.values**2
    return float(np.trapezoid(integrand, dx=state.grid.h))


def projected_control(p3, p4, I, w: ControlWeights):
    return np.clip((np.asarray(p3) - p4) * I / (2 * w.kappa2), 0.0, w.T_max)


def adjoint_reversed_rhs(t_rev: float, p, state_at_original_time, T_at_original_time: float,
                         params: ModelParams, w: ControlWeights, tf: float) -> np.ndarray:
    """Co-state rates in reversed time ``t' = tf - t``.

    These are minus the right-hand sides of the right-sided co-state system,
    i.e. ``dH/dx`` of the Hamiltonian, with state, control and forcing frozen
    at the original time.
    """
    p1, p2, p3, p4 = p
    S, E, I, R = state_at_original_time
    T = T_at_original_time
    m = params
    b = beta_forcing(tf - t_rev, m)
    return -np.array([
        p1 * (m.mu + b * I) - b * I * p2,
        p2 * (m.mu + m.epsilon) - m.epsilon * p3,
        -w.kappa1 + b * p1 * S - b * p2 * S + p3 * (m.mu + m.nu + T) - p4 * (m.nu + T),
        -m.gamma * p1 + p4 * (m.mu + m.gamma),
    ])


def solve_state(params: ModelParams, y0, control: ControlTrajectory) -> Trajectory:
    grid = control.grid
    T = control.values

    def f(t, y):
        return seirs_controlled_rhs(t, y, T[grid.node_of(t)], params)

    return caputo_pece_solve(f, y0, grid, params.alpha)


def solve_adjoint(state: Trajectory, control: ControlTrajectory, params: ModelParams,
                  w: ControlWeights) -> AdjointTrajectory:
    """Backward co-state solve; the result satisfies ``p(tf) = 0`` exactly."""
    _same_grid(state.grid, control.grid)
    grid = state.grid
    N, tf = grid.n_steps, grid.tf
    X, T = state.values, control.values
    rev_grid = Grid(0.0, tf - grid.t0, N)

    def f(t_rev, p):
        n = N - rev_grid.node_of(t_rev)
        return adjoint_reversed_rhs(t_rev, p, X[n], T[n], params, w, tf)

    rev = caputo_pece_solve(f, np.zeros(4), rev_grid, params.alpha)
    return AdjointTrajectory(grid, rev.values[::-1].copy())


def solve_focp(params: ModelParams, y0, w: ControlWeights, grid: Grid,
               sweep: SweepSettings = SweepSettings(),
               initial_control=None) -> FocpSolution:
    """Forward-backward sweep from the zero control (or ``initial_control``).

    Converges when ``max|T_new - T_old| <= tol * max(1, max|T_new|)``. The
    returned state and co-state are those of the last sweep; if ``max_iter``
    is exhausted the solution is returned with ``converged=False``.
    """
    y0 = check_state(y0, Model.SEIRS)
    T = np.zeros(grid.n_steps + 1) if initial_control is None else \
        np.clip(np.asarray(initial_control, dtype=float), 0.0, w.T_max)
    control = ControlTrajectory(grid, T)
    history: list[float] = []
    converged = False
    for it in range(1, sweep.max_iter + 1):
        try:
            state = solve_state(params, y0, control)
            adjoint = solve_adjoint(state, control, params, w)
        except DivergenceError as exc:
            raise SweepFailure(it, exc) from exc
        proj = projected_control(adjoint.values[:, 2], adjoint.values[:, 3], state[2], w)
        new = (1 - sweep.relaxation) * control.values + sweep.relaxation * proj
        # guard against round-off pushing the convex combination off the box
        new = np.clip(new, 0.0, w.T_max)
        resid = float(np.max(np.abs(new - control.values)))
        history.append(resid)
        control = ControlTrajectory(grid, new)
        if resid <= sweep.tol * max(1.0, float(np.max(np.abs(new)))):
            converged = True
            break
    if not converged:
        log.warning("sweep did not converge in %d iterations (residual %.3g)",
                    sweep.max_iter, history[-1])
    return FocpSolution(state, adjoint, control, objective(state, control, w),
                        it, history, converged)
