"""Caputo fractional IVP solver (fractional Adams-Bashforth-Moulton, PECE form).

Solves ``D^alpha y(t) = f(t, y(t))``, ``y(t0) = y0`` for ``0 < alpha <= 1`` on a
uniform grid. The full history of right-hand-side evaluations is kept, so a
solve over ``n`` nodes costs ``O(n^2)`` vector operations.

The Mittag-Leffler function is included as a reference solution for the
linear test equation ``D^alpha y = -y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

VectorField = Callable[[float, np.ndarray], np.ndarray]


class ParameterDomainError(ValueError):
    """A numerical parameter lies outside its admissible domain."""


class DivergenceError(ArithmeticError):
    """The solver produced a non-finite state."""

    def __init__(self, node: int, t: float):
        self.node = node
        self.t = t
        super().__init__(f"non-finite state at node {node} (t={t:.6g})")


class OracleRangeError(ArithmeticError):
    """Mittag-Leffler series did not converge within the term budget."""


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0) or not math.isfinite(alpha):
        raise ParameterDomainError(f"alpha must lie in (0, 1], got {alpha!r}")
    return alpha


@dataclass(frozen=True)
class Grid:
    """Uniform time grid ``t_k = t0 + k*h`` for ``k = 0..n_steps``."""

    t0: float
    tf: float
    n_steps: int

    def __post_init__(self):
        if isinstance(self.n_steps, bool) or int(self.n_steps) != self.n_steps:
            raise ParameterDomainError(f"n_steps must be an integer, got {self.n_steps!r}")
        if self.n_steps < 1:
            raise ParameterDomainError(f"n_steps must be >= 1, got {self.n_steps}")
        if not (math.isfinite(self.t0) and math.isfinite(self.tf)) or self.tf <= self.t0:
            raise ParameterDomainError(f"need t0 < tf, got t0={self.t0}, tf={self.tf}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def from_step(cls, t0: float, tf: float, h: float) -> "Grid":
        """Grid whose step is as close to ``h`` as an integer node count allows."""
        if h <= 0:
            raise ParameterDomainError(f"h must be positive, got {h}")
        return cls(t0, tf, max(1, int(round((tf - t0) / h))))

    @property
    def h(self) -> float:
        return (self.tf - self.t0) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n_steps + 1)

    def node_of(self, t: float) -> int:
        """Index of the node at time ``t`` (which must be a grid node)."""
        return int(round((t - self.t0) / self.h))


@dataclass
class Trajectory:
    """Samples of a vector-valued solution, one row per grid node."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.values.shape[0] != self.grid.n_steps + 1:
            raise ValueError(
                f"expected {self.grid.n_steps + 1} rows, got {self.values.shape[0]}"
            )

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __getitem__(self, component: int) -> np.ndarray:
        return self.values[:, component]


def pece_weights(n: int, alpha: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Predictor and corrector weights for the step from node ``n`` to ``n+1``.

    Returns ``(b, a)`` with ``b[j] = h^a/a * ((n+1-j)^a - (n-j)^a)`` and the
    unscaled corrector weights ``a[0..n]``. The solver multiplies the predictor
    sum by ``1/Gamma(alpha)`` and the corrector sum by
    ``h^alpha / Gamma(alpha+2)``; the new node enters the corrector with unit
    weight.
    """
    alpha = check_alpha(alpha)
    if n < 0 or int(n) != n:
        raise ParameterDomainError(f"node index must be a nonnegative integer, got {n!r}")
    if not (h > 0) or not math.isfinite(h):
        raise ParameterDomainError(f"h must be positive, got {h!r}")
    n = int(n)
    m = n - np.arange(n + 1, dtype=float)  # m = n - j
    b = (h**alpha / alpha) * ((m + 1) ** alpha - m**alpha)
    a = (m + 2) ** (alpha + 1) + m ** (alpha + 1) - 2 * (m + 1) ** (alpha + 1)
    a[0] = n ** (alpha + 1) - (n - alpha) * (n + 1) ** alpha
    return b, a


def caputo_pece_solve(f: VectorField, y0, grid: Grid, alpha: float) -> Trajectory:
    """Integrate ``D^alpha y = f(t, y)`` over ``grid`` with one corrector pass per step.

    Raises :class:`DivergenceError` as soon as a predicted or corrected state
    contains NaN or Inf.
    """
    alpha = check_alpha(alpha)
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if y0.ndim != 1 or not np.all(np.isfinite(y0)):
        raise ParameterDomainError("y0 must be a finite vector")
    N, h, t0 = grid.n_steps, grid.h, grid.t0
    d = y0.size

    # Weights depend only on m = n - j, so tabulate once and slice per step.
    k = np.arange(N + 2, dtype=float)
    ka = k**alpha
    ka1 = k ** (alpha + 1)
    pred = (h**alpha / alpha) * (ka[1:] - ka[:-1]) / math.gamma(alpha)  # pred[m]
    corr = np.empty(N + 1)
    corr[0] = np.nan  # m = 0 would be the new node, handled separately
    corr[1:] = ka1[2:] + ka1[:-2] - 2 * ka1[1:-1]  # corr[m'] for m' = n-j+1 >= 1
    c = h**alpha / math.gamma(alpha + 2)

    Y = np.empty((N + 1, d))
    F = np.empty((N + 1, d))
    Y[0] = y0
    F[0] = _evaluate(f, t0, y0, d)
    if not np.all(np.isfinite(F[0])):
        raise DivergenceError(0, t0)

    for n in range(N):
        t1 = t0 + (n + 1) * h
        yp = y0 + pred[n::-1] @ F[: n + 1]
        if not np.all(np.isfinite(yp)):
            raise DivergenceError(n + 1, t1)
        fp = _evaluate(f, t1, yp, d)
        hist = (ka1[n] - (n - alpha) * ka[n + 1]) * F[0]
        if n:
            # j = 1..n  ->  m' = n-j+1 runs from n down to 1
            hist = hist + corr[n:0:-1] @ F[1 : n + 1]
        y1 = y0 + c * (fp + hist)
        if not np.all(np.isfinite(y1)):
            raise DivergenceError(n + 1, t1)
        Y[n + 1] = y1
        F[n + 1] = _evaluate(f, t1, y1, d)
        if not np.all(np.isfinite(F[n + 1])):
            raise DivergenceError(n + 1, t1)
    return Trajectory(grid, Y)


def _evaluate(f: VectorField, t: float, y: np.ndarray, d: int) -> np.ndarray:
    out = np.asarray(f(t, y), dtype=float).reshape(-1)
    if out.size != d:
        raise ValueError(f"vector field returned dimension {out.size}, expected {d}")
    return out


def mittag_leffler(alpha: float, beta: float, z: float, max_terms: int = 10_000) -> float:
    """Two-parameter Mittag-Leffler function by direct power series.

    Accurate for moderate ``|z|``; for large negative ``z`` the alternating
    series loses digits to cancellation.
    """
    if alpha <= 0 or beta <= 0:
        raise ParameterDomainError("alpha and beta must be positive")
    if abs(z) > 50:
        raise OracleRangeError(f"|z| = {abs(z)} outside the series range |z| <= 50")
    if z == 0:
        return 1.0 / math.gamma(beta)
    logz = math.log(abs(z))
    total = 0.0
    prev = math.inf
    for k in range(max_terms):
        mag = math.exp(k * logz - math.lgamma(alpha * k + beta))
        term = mag if (z > 0 or k % 2 == 0) else -mag
        total += term
        if mag < prev and mag < 1e-15 * abs(total):
            return total
        prev = mag
    raise OracleRangeError(f"series did not converge in {max_terms} terms (z={z})")
