"""Fitting the fractional order to monthly case counts.

Model proportions are converted to expected monthly counts by a population
scale factor, and the fit criterion is the l2 norm of the residuals. The order
is searched by a descending scan from ``alpha = 1`` followed by a
golden-section refinement around the best probe.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .epimodels import Model, ModelParams, check_state, equilibrium, simulate
from .frackernel import DivergenceError, Grid, ParameterDomainError, Trajectory

log = logging.getLogger(__name__)

_MONTH = re.compile(r"^(\d{4})-(\d{2})$")
_INVPHI = (math.sqrt(5) - 1) / 2


class CaseSeriesError(ValueError):
    """Base class for case-count file problems."""


class MalformedRowError(CaseSeriesError):
    def __init__(self, row: int, reason: str):
        self.row = row
        super().__init__(f"row {row}: {reason}")


class NegativeCountError(CaseSeriesError):
    def __init__(self, row: int, value: float):
        self.row = row
        super().__init__(f"row {row}: negative case count {value}")


class TooFewRowsError(CaseSeriesError):
    pass


class GridAlignmentError(ValueError):
    """Month boundaries do not fall on grid nodes, or the grid is too short."""


class FitFailure(RuntimeError):
    """Every probed order diverged."""


@dataclass
class CaseSeries:
    start_label: str
    counts: np.ndarray
    population_scale: float

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.ndim != 1 or self.counts.size < 2:
            raise TooFewRowsError(f"need at least 2 monthly counts, got {self.counts.size}")
        if np.any(self.counts < 0) or not np.all(np.isfinite(self.counts)):
            raise CaseSeriesError("counts must be finite and nonnegative")
        if not self.population_scale > 0:
            raise ParameterDomainError(f"population_scale must be positive, got {self.population_scale}")

    def __len__(self):
        return self.counts.size

    @property
    def months(self) -> int:
        return self.counts.size

    def labels(self) -> list[str]:
        y, m = (int(x) for x in _MONTH.match(self.start_label).groups())
        out = []
        for k in range(self.months):
            yy, mm = divmod(m - 1 + k, 12)
            out.append(f"{y + yy:04d}-{mm + 1:02d}")
        return out


@dataclass
class FitResult:
    best_alpha: float
    error: float
    relative_error: float
    evaluations: list[tuple[float, float]]
    infeasible: list[float] = field(default_factory=list)


def load_case_series(path, population_scale: float) -> CaseSeries:
    """Read a ``month,cases`` CSV (chronological, no gaps)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"case-count file not found: {path}")
    labels: list[str] = []
    counts: list[float] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TooFewRowsError(f"{path} is empty")
        if [h.strip() for h in header] != ["month", "cases"]:
            raise MalformedRowError(1, f"expected header 'month,cases', got {','.join(header)!r}")
        prev = None
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise MalformedRowError(row_no, f"expected 2 fields, got {len(row)}")
            label, raw = row[0].strip(), row[1].strip()
            m = _MONTH.match(label)
            if not m or not 1 <= int(m.group(2)) <= 12:
                raise MalformedRowError(row_no, f"bad month {label!r} (want YYYY-MM)")
            try:
                value = float(raw)
            except ValueError:
                raise MalformedRowError(row_no, f"cases is not a number: {raw!r}") from None
            if not math.isfinite(value):
                raise MalformedRowError(row_no, f"cases is not finite: {raw!r}")
            if value < 0:
                raise NegativeCountError(row_no, value)
            idx = int(m.group(1)) * 12 + int(m.group(2)) - 1
            if prev is not None and idx != prev + 1:
                raise MalformedRowError(row_no, f"month {label} does not follow the previous row")
            prev = idx
            labels.append(label)
            counts.append(value)
    if len(counts) < 2:
        raise TooFewRowsError(f"{path}: need at least 2 data rows, got {len(counts)}")
    return CaseSeries(labels[0], np.array(counts), population_scale)


def write_case_series(series: CaseSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["month", "cases"])
        for label, c in zip(series.labels(), series.counts):
            w.writerow([label, repr(float(c))])


def calibration_grid(months: int, nodes_per_month: int = 17) -> Grid:
    """Grid on ``[0, months/12]`` years with every month start on a node."""
    if months < 1 or nodes_per_month < 1:
        raise ParameterDomainError("months and nodes_per_month must be positive")
    return Grid(0.0, months / 12.0, months * nodes_per_month)


def sample_monthly(traj: Trajectory, component: int, months: int,
                   population_scale: float) -> np.ndarray:
    """Scaled values of one compartment at ``t = k/12``, ``k = 0..months-1``."""
    grid = traj.grid
    per_month = (1.0 / 12.0) / grid.h
    if grid.t0 != 0 or abs(per_month - round(per_month)) > 1e-9 * max(1.0, per_month):
        raise GridAlignmentError(f"grid step {grid.h:.6g} does not divide one month")
    per_month = int(round(per_month))
    last = (months - 1) * per_month
    if months < 1 or last > grid.n_steps:
        raise GridAlignmentError(
            f"{months} months need {last + 1} nodes, grid has {grid.n_steps + 1}"
        )
    return population_scale * traj.values[: last + 1 : per_month, component]


def l2_error(model_samples, series: CaseSeries | np.ndarray) -> float:
    data = series.counts if isinstance(series, CaseSeries) else np.asarray(series, float)
    model_samples = np.asarray(model_samples, dtype=float)
    if model_samples.shape != data.shape:
        raise ValueError(f"length mismatch: {model_samples.shape} vs {data.shape}")
    return float(np.sqrt(np.sum((model_samples - data) ** 2)))


def relative_error(error: float, series: CaseSeries, years: float) -> float:
    """Percent of the l2 error per year, relative to the population scale."""
    denom = years * series.population_scale
    if not denom > 0:
        raise ZeroDivisionError("years * population_scale must be positive")
    return 100.0 * error / denom


def initial_state(model: Model | str, params: ModelParams, series: CaseSeries | None = None,
                  rescale_to_data: bool = False) -> np.ndarray:
    """Default fitting initial condition: the mean-system endemic equilibrium.

    With ``rescale_to_data`` the infectious proportion is set so the first
    month reproduces the first observation, and S absorbs the difference.
    """
    model = Model(model)
    y = np.array(equilibrium(model, params))
    if rescale_to_data:
        if series is None:
            raise ValueError("rescale_to_data needs a case series")
        i = model.infectious_index
        new_i = series.counts[0] / series.population_scale
        y[0] += y[i] - new_i
        y[i] = new_i
        if y[0] < 0:
            raise ParameterDomainError("first observation exceeds S + I at equilibrium")
    return y


def model_counts(model: Model | str, params: ModelParams, y0, months: int,
                 population_scale: float, nodes_per_month: int = 17) -> np.ndarray:
    model = Model(model)
    traj = simulate(model, params, y0, calibration_grid(months, nodes_per_month))
    return sample_monthly(traj, model.infectious_index, months, population_scale)


def synth_series(model: Model | str, params: ModelParams, y0, months: int,
                 population_scale: float, noise_amplitude: float = 0.0, seed=None,
                 start_label: str = "2011-09", nodes_per_month: int = 17) -> CaseSeries:
    """Monthly model counts plus uniform noise on ``[-a, a]``, clamped at zero."""
    if noise_amplitude < 0:
        raise ParameterDomainError("noise_amplitude must be >= 0")
    counts = model_counts(model, params, y0, months, population_scale, nodes_per_month)
    if noise_amplitude > 0:
        rng = np.random.default_rng(seed)
        counts = counts + rng.uniform(-noise_amplitude, noise_amplitude, size=counts.size)
    return CaseSeries(start_label, np.maximum(counts, 0.0), population_scale)


def fit_alpha(model: Model | str, params: ModelParams, y0, series: CaseSeries,
              alpha_min: float = 0.5, alpha_step: float = 0.005, refine_tol: float = 5e-4,
              nodes_per_month: int = 17, years: float | None = None) -> FitResult:
    """Search the fractional order that minimizes the l2 fitting error.

    Probes ``1, 1-step, 1-2*step, ...`` until the error has risen on two
    consecutive probes (or ``alpha_min`` is passed), then refines by golden
    section inside one step either side of the best probe.
    """
    model = Model(model)
    y0 = check_state(y0, model)
    if not alpha_min > 0 or alpha_min > 1:
        raise ParameterDomainError(f"alpha_min must lie in (0, 1], got {alpha_min}")
    if not alpha_step > 0 or not refine_tol > 0:
        raise ParameterDomainError("alpha_step and refine_tol must be positive")

    evaluations: dict[float, float] = {}
    infeasible: list[float] = []

    def err(alpha: float) -> float:
        alpha = float(alpha)
        if alpha in evaluations:
            return evaluations[alpha]
        if alpha in infeasible:
            return math.inf
        try:
            samples = model_counts(model, params.replace(alpha=alpha), y0, series.months,
                                   series.population_scale, nodes_per_month)
        except DivergenceError as exc:
            log.warning("alpha=%.6g infeasible: %s", alpha, exc)
            infeasible.append(alpha)
            return math.inf
        e = l2_error(samples, series)
        evaluations[alpha] = e
        return e

    scan: list[tuple[float, float]] = []
    k = 0
    while True:
        alpha = round(1.0 - k * alpha_step, 12)
        if alpha < alpha_min:
            break
        scan.append((alpha, err(alpha)))
        if len(scan) >= 3 and scan[-1][1] > scan[-2][1] > scan[-3][1]:
            break
        k += 1

    if not evaluations:
        raise FitFailure("every probed alpha diverged")

    best = _best(evaluations)
    lo = max(alpha_min, best - alpha_step)
    hi = min(1.0, best + alpha_step)
    _golden(err, lo, hi, refine_tol)

    best = _best(evaluations)
    e = evaluations[best]
    yrs = series.months / 12.0 if years is None else years
    return FitResult(best, e, relative_error(e, series, yrs),
                     sorted(evaluations.items(), reverse=True), infeasible)


def _best(evaluations: dict[float, float]) -> float:
    # ties go to the larger alpha
    return min(evaluations, key=lambda a: (evaluations[a], -a))


def _golden(fun, lo: float, hi: float, tol: float) -> None:
    if hi - lo <= tol:
        return
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = fun(c), fun(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = fun(d)
