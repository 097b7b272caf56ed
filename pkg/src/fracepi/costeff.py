"""Efficacy and cost-effectiveness summaries of treatment strategies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frackernel import Trajectory
from .focp import ControlTrajectory, GridMismatchError

REPORT_COLUMNS = ("label", "A", "TC", "ACER", "Fbar", "ICER")


class UndefinedRatioError(ZeroDivisionError):
    pass


class RankingError(ValueError):
    pass


def _infectious(state: Trajectory) -> np.ndarray:
    # SEIRS stores I in column 2, SIRS in column 1
    return state.values[:, 2 if state.dim == 4 else 1]


def _check_I0(I0: float) -> None:
    if not I0 > 0:
        raise ValueError(f"I0 must be positive, got {I0}")


def efficacy_series(state: Trajectory, I0: float) -> np.ndarray:
    _check_I0(I0)
    return 1.0 - _infectious(state) / I0


def averted(state: Trajectory, I0: float) -> float:
    """Cases averted relative to holding ``I`` at ``I0`` over the horizon."""
    _check_I0(I0)
    g = state.grid
    return (g.tf - g.t0) * I0 - float(np.trapezoid(_infectious(state), dx=g.h))


def effectiveness(A: float, I0: float, tf: float) -> float:
    denom = tf * I0
    if not denom > 0:
        raise ZeroDivisionError("tf * I0 must be positive")
    return A / denom


def total_cost(control: ControlTrajectory, state: Trajectory, C: float) -> float:
    if control.grid != state.grid:
        raise GridMismatchError("control and state grids differ")
    return float(np.trapezoid(C * control.values * _infectious(state), dx=state.grid.h))


def acer(TC: float, A: float) -> float:
    if A == 0:
        raise UndefinedRatioError("ACER undefined: no cases averted")
    return TC / A


@dataclass
class Strategy:
    label: str
    state: Trajectory
    control: ControlTrajectory
    I0: float
    C: float = 1.0

    def __post_init__(self):
        if self.state.grid != self.control.grid:
            raise GridMismatchError(f"strategy {self.label!r}: state and control grids differ")
        _check_I0(self.I0)


@dataclass
class CostEffRow:
    label: str
    A: float
    TC: float
    ACER: float
    Fbar: float
    ICER: float = math.nan
    note: str = ""


@dataclass
class CostEffReport:
    rows: list[CostEffRow] = field(default_factory=list)
    population_scale: float | None = None

    def __iter__(self):
        return iter(self.rows)

    def as_records(self) -> list[dict]:
        recs = []
        for r in self.rows:
            rec = {k: getattr(r, k) for k in REPORT_COLUMNS}
            if self.population_scale is not None:
                rec["A_scaled"] = r.A * self.population_scale
                rec["TC_scaled"] = r.TC * self.population_scale
            rec["note"] = r.note
            recs.append(rec)
        return recs


def evaluate_strategy(s: Strategy) -> CostEffRow:
    A = averted(s.state, s.I0)
    TC = total_cost(s.control, s.state, s.C)
    tf = s.state.grid.tf - s.state.grid.t0
    return CostEffRow(s.label, A, TC, acer(TC, A), effectiveness(A, s.I0, tf))


def icer_rank(results, population_scale: float | None = None) -> CostEffReport:
    """Rank by cases averted and attach incremental ratios.

    ``results`` holds :class:`Strategy` or :class:`CostEffRow` items. The least
    effective strategy's ICER is its ACER; every other row is compared with the
    row ranked immediately before it.
    """
    rows = [evaluate_strategy(r) if isinstance(r, Strategy) else r for r in results]
    if len(rows) < 2:
        raise RankingError("need at least two strategies to rank")
    rows = sorted(rows, key=lambda r: r.A)
    for a, b in zip(rows, rows[1:]):
        if a.A == b.A:
            raise RankingError(f"strategies {a.label!r} and {b.label!r} avert equal cases")
    rows = [CostEffRow(**vars(r)) for r in rows]
    rows[0].ICER = rows[0].ACER
    for prev, cur in zip(rows, rows[1:]):
        cur.ICER = (cur.TC - prev.TC) / (cur.A - prev.A)
        if cur.ICER < 0:
            cur.note = f"dominates {prev.label}"
    for r in rows:
        if r.A < 0:
            r.note = (r.note + "; " if r.note else "") + "negative averted cases"
    return CostEffReport(rows, population_scale)
