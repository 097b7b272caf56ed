"""Seasonal SIRS and SEIRS vector fields of fractional order.

States are population proportions. Transmission and (for SEIRS) recruitment are
1-periodic in time::

    beta(t)   = b0 * (1 + b1 * cos(2*pi*t + phi))
    lambda(t) = mu * (1 + c1 * cos(2*pi*t + phi))
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .frackernel import Grid, ParameterDomainError, Trajectory, caputo_pece_solve, check_alpha


class Model(str, enum.Enum):
    SIRS = "sirs"
    SEIRS = "seirs"

    @property
    def compartments(self) -> tuple[str, ...]:
        return ("S", "I", "R") if self is Model.SIRS else ("S", "E", "I", "R")

    @property
    def infectious_index(self) -> int:
        return self.compartments.index("I")


class NoEndemicEquilibriumError(ValueError):
    """The basic reproduction number does not exceed one."""


class SirsState(NamedTuple):
    S: float
    I: float
    R: float


class SeirsState(NamedTuple):
    S: float
    E: float
    I: float
    R: float


@dataclass(frozen=True)
class ModelParams:
    """Epidemiological constants (rates per year) and the fractional order."""

    mu: float = 0.0113
    nu: float = 36.0
    gamma: float = 1.8
    epsilon: float = 91.0
    b0: float = 88.25
    b1: float = 0.17
    c1: float = 0.17
    phi: float = 7 * math.pi / 5
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("mu", "nu", "gamma", "epsilon", "b0"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ParameterDomainError(f"{name} must be a nonnegative rate, got {v!r}")
        for name in ("b1", "c1"):
            v = getattr(self, name)
            if not (0 <= v < 1):
                raise ParameterDomainError(f"{name} must lie in [0, 1), got {v!r}")
        if not math.isfinite(self.phi):
            raise ParameterDomainError(f"phi must be finite, got {self.phi!r}")
        check_alpha(self.alpha)

    @classmethod
    def sirs_default(cls, **overrides) -> "ModelParams":
        """Default SIRS parameter set (epsilon, c1 unused)."""
        base = dict(mu=0.0113, nu=36.0, gamma=1.8, epsilon=0.0, b0=74.2, b1=0.14,
                    c1=0.0, phi=7 * math.pi / 5)
        return cls(**{**base, **overrides})

    @classmethod
    def seirs_default(cls, **overrides) -> "ModelParams":
        base = dict(mu=0.0113, nu=36.0, gamma=1.8, epsilon=91.0, b0=88.25, b1=0.17,
                    c1=0.17, phi=7 * math.pi / 5)
        return cls(**{**base, **overrides})

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def unforced(self) -> "ModelParams":
        return self.replace(b1=0.0, c1=0.0)

    @property
    def r0(self) -> float:
        """Basic reproduction number of the mean SEIRS system."""
        return self.epsilon * self.b0 / ((self.mu + self.epsilon) * (self.mu + self.nu))


def beta_forcing(t, params: ModelParams):
    return params.b0 * (1 + params.b1 * np.cos(2 * np.pi * t + params.phi))


def lambda_forcing(t, params: ModelParams):
    return params.mu * (1 + params.c1 * np.cos(2 * np.pi * t + params.phi))


def sirs_rhs(t: float, y, params: ModelParams) -> np.ndarray:
    S, I, R = y
    p = params
    inf = beta_forcing(t, p) * S * I
    return np.array([
        p.mu - p.mu * S - inf + p.gamma * R,
        inf - p.nu * I - p.mu * I,
        p.nu * I - p.mu * R - p.gamma * R,
    ])


def seirs_rhs(t: float, y, params: ModelParams) -> np.ndarray:
    return seirs_controlled_rhs(t, y, 0.0, params)


def seirs_controlled_rhs(t: float, y, T: float, params: ModelParams) -> np.ndarray:
    """SEIRS right-hand side with treatment rate ``T`` moving mass from I to R."""
    S, E, I, R = y
    p = params
    inf = beta_forcing(t, p) * S * I
    return np.array([
        lambda_forcing(t, p) - p.mu * S - inf + p.gamma * R,
        inf - p.mu * E - p.epsilon * E,
        p.epsilon * E - p.mu * I - p.nu * I - T * I,
        p.nu * I - p.mu * R - p.gamma * R + T * I,
    ])


def endemic_equilibrium(params: ModelParams, disease_free: bool = False) -> SeirsState:
    """Positive fixed point of the SEIRS system with forcing replaced by its mean.

    Raises :class:`NoEndemicEquilibriumError` when ``R0 <= 1``, unless
    ``disease_free`` is set, in which case ``(1, 0, 0, 0)`` is returned.
    """
    p = params
    r0 = p.r0
    # R0 is formed from products of rates; treat round-off around 1 as threshold
    if not r0 > 1 + 1e-12:
        if disease_free:
            return SeirsState(1.0, 0.0, 0.0, 0.0)
        raise NoEndemicEquilibriumError(f"R0 = {r0:.6g} <= 1: no endemic equilibrium")
    _require_turnover(p)
    S = (p.mu + p.epsilon) * (p.mu + p.nu) / (p.epsilon * p.b0)
    # S-balance: mu(1 - S) = b0*S*I - gamma*R with R = nu*I/(mu+gamma)
    I = p.mu * (1 - S) / (p.b0 * S - p.gamma * p.nu / (p.mu + p.gamma))
    E = (p.mu + p.nu) * I / p.epsilon
    R = p.nu * I / (p.mu + p.gamma)
    return SeirsState(S, E, I, R)


def _require_turnover(p: ModelParams) -> None:
    # without births/deaths every state with the right S is a fixed point
    if not p.mu > 0:
        raise NoEndemicEquilibriumError("mu = 0: the endemic equilibrium is not unique")


def sirs_endemic_equilibrium(params: ModelParams) -> SirsState:
    """Positive fixed point of the mean SIRS system (``epsilon``, ``c1`` ignored)."""
    p = params
    r0 = p.b0 / (p.mu + p.nu)
    if not r0 > 1 + 1e-12:
        raise NoEndemicEquilibriumError(f"R0 = {r0:.6g} <= 1: no endemic equilibrium")
    _require_turnover(p)
    S = (p.mu + p.nu) / p.b0
    I = p.mu * (1 - S) / (p.b0 * S - p.gamma * p.nu / (p.mu + p.gamma))
    return SirsState(S, I, p.nu * I / (p.mu + p.gamma))


def equilibrium(model: Model | str, params: ModelParams):
    if Model(model) is Model.SIRS:
        return sirs_endemic_equilibrium(params)
    return endemic_equilibrium(params)


def check_state(y0, model: Model) -> np.ndarray:
    y0 = np.asarray(y0, dtype=float)
    n = len(model.compartments)
    if y0.shape != (n,):
        raise ParameterDomainError(f"{model.value} state needs {n} components, got shape {y0.shape}")
    if not np.all(np.isfinite(y0)) or np.any(y0 < 0):
        raise ParameterDomainError(f"initial state must be finite and nonnegative, got {y0.tolist()}")
    return y0


def vector_field(model: Model | str, params: ModelParams):
    model = Model(model)
    rhs = sirs_rhs if model is Model.SIRS else seirs_rhs
    return lambda t, y: rhs(t, y, params)


def simulate(model: Model | str, params: ModelParams, y0, grid: Grid) -> Trajectory:
    """Solve the chosen model at order ``params.alpha`` over ``grid``."""
    model = Model(model)
    y0 = check_state(y0, model)
    return caputo_pece_solve(vector_field(model, params), y0, grid, params.alpha)
