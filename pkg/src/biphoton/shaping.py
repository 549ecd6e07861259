"""Parameter sweeps over multiplexing geometries and shift optimisation."""

from __future__ import annotations

import csv
import enum
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .multiplex import GeometryFamily, GeometrySpec, ShiftSet, make_shifts
from .params import PhysicalParams, derive
from .schmidt import FrequencyGrid, Scenario

log = logging.getLogger(__name__)

CSV_HEADER = ("param", "S", "K", "warnings", "series")


class SweepScenario(enum.Enum):
    FIG2A = "fig2a"
    FIG2B = "fig2b"
    FIG3A = "fig3a"
    FIG4 = "fig4"
    CUSTOM = "custom"


def _arange(start, stop, step):
    n = int(round((stop - start) / step)) + 1
    return tuple(float(start + i * step) for i in range(n))


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian sweep over families, temperatures, ensemble counts and ``dq``.

    ``axis`` names the swept abscissa (``"dq"`` or ``"n_mp"``); every other
    combination becomes one curve.
    """

    scenario: SweepScenario = SweepScenario.CUSTOM
    families: tuple[GeometryFamily, ...] = (GeometryFamily.ANTI_CORRELATION,)
    dq_values: tuple[float, ...] = (0.0,)
    temperatures: tuple[float, ...] = (300.0,)
    n_mp_values: tuple[int, ...] = (2,)
    axis: str = "dq"
    params: PhysicalParams = field(default_factory=PhysicalParams)

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(GeometryFamily.parse(f) for f in self.families))
        for name in ("families", "dq_values", "temperatures", "n_mp_values"):
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if list(self.dq_values) != sorted(self.dq_values):
            raise ValueError("dq_values must be ascending")
        if self.axis not in ("dq", "n_mp"):
            raise ValueError(f"axis must be 'dq' or 'n_mp', got {self.axis!r}")

    @classmethod
    def preset(cls, scenario: SweepScenario | str, params: PhysicalParams | None = None,
               **overrides) -> "SweepSpec":
        scenario = SweepScenario(scenario)
        params = params or PhysicalParams()
        F = GeometryFamily
        table = {
            SweepScenario.FIG2A: dict(families=(F.ANTI_CORRELATION,), temperatures=(100.0, 300.0, 500.0),
                                      n_mp_values=(2,), dq_values=_arange(0, 200, 5)),
            SweepScenario.FIG2B: dict(families=(F.ANTI_CORRELATION, F.CORRELATION, F.IDLER_AXIS, F.SIGNAL_AXIS),
                                      temperatures=(300.0,), n_mp_values=(2,), dq_values=_arange(0, 200, 5)),
            SweepScenario.FIG3A: dict(families=(F.ANTI_CORRELATION,), temperatures=(300.0,),
                                      n_mp_values=(1, 2, 3, 4, 5, 6), dq_values=(30.0, 60.0, 120.0), axis="n_mp"),
            SweepScenario.FIG4: dict(families=(F.PLUS_FOUR, F.CROSS_FOUR, F.OCTAGON), temperatures=(300.0,),
                                     n_mp_values=(1,), dq_values=_arange(0, 100, 2.5)),
            SweepScenario.CUSTOM: dict(),
        }
        kwargs = {**table[scenario], **overrides}
        return cls(scenario=scenario, params=params, **kwargs)

    def tasks(self) -> list[tuple[str, float, GeometrySpec, PhysicalParams]]:
        """Expand into ``(series, param, geometry, params)`` in output order."""
        out = []
        for fam in self.families:
            counts = (1,) if fam in (GeometryFamily.PLUS_FOUR, GeometryFamily.CROSS_FOUR,
                                     GeometryFamily.OCTAGON) else self.n_mp_values
            for T in self.temperatures:
                pp = self.params.replace(temperature=T)
                if self.axis == "dq":
                    for n in counts:
                        series = _series_label(fam, T, None if len(counts) == 1 and n == 1 else n)
                        for dq in self.dq_values:
                            out.append((series, dq, GeometrySpec(fam, dq, n), pp))
                else:
                    for dq in self.dq_values:
                        series = f"{_series_label(fam, T, None)};dq={dq:g}"
                        for n in counts:
                            out.append((series, float(n), GeometrySpec(fam, dq, n), pp))
        return out


def _series_label(fam, T, n):
    label = f"{fam.value};T={T:g}K"
    return label if n is None else f"{label};n_mp={n}"


@dataclass(frozen=True)
class CurvePoint:
    param: float
    S: float
    K: float
    warnings: tuple[str, ...] = ()
    series: str = ""


def evaluate_geometry(shifts: ShiftSet, params: PhysicalParams, grid: FrequencyGrid) -> CurvePoint:
    result, F = Scenario(shifts, params).solve(grid)
    return CurvePoint(float("nan"), result.entropy_S, result.schmidt_K, tuple(F.warnings))


def run_sweep(spec: SweepSpec, grid: FrequencyGrid, workers: int = 1) -> list[CurvePoint]:
    """Evaluate S and K for every point of ``spec``; results follow spec order.

    Clipping notes are carried in ``CurvePoint.warnings`` rather than
    stopping the sweep.
    """
    tasks = spec.tasks()

    def one(task):
        series, param, geom, pp = task
        pt = evaluate_geometry(make_shifts(geom), pp, grid)
        log.debug("%s %s=%g S=%.6f K=%.6f", series, spec.axis, param, pt.S, pt.K)
        return CurvePoint(param, pt.S, pt.K, pt.warnings, series)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, tasks))
    return [one(t) for t in tasks]


def split_series(points: Sequence[CurvePoint]) -> dict[str, list[CurvePoint]]:
    out: dict[str, list[CurvePoint]] = {}
    for p in points:
        out.setdefault(p.series, []).append(p)
    return out


def curve_csv(points: Sequence[CurvePoint], comments: Sequence[str] = ()) -> str:
    """Render points as CSV text, with optional ``#`` comment lines on top."""
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in points:
        writer.writerow([repr(float(p.param)), repr(float(p.S)), repr(float(p.K)),
                         " | ".join(p.warnings), p.series])
    return buf.getvalue()


class NoInteriorMinimum(ValueError):
    """The smallest sample of a curve lies on its boundary."""


@dataclass(frozen=True)
class Dip:
    param: float
    S: float
    index: int


def find_dip(curve: Sequence[CurvePoint], min_points: int = 20) -> Dip:
    """Locate the interior minimum of S with a three-point parabola.

    Raises:
        ValueError: fewer than ``min_points`` samples.
        NoInteriorMinimum: the discrete minimum is the first or last sample.
    """
    if len(curve) < min_points:
        raise ValueError(f"need at least {min_points} samples, got {len(curve)}")
    x = np.array([p.param for p in curve], dtype=float)
    y = np.array([p.S for p in curve], dtype=float)
    i = int(np.argmin(y))
    if i == 0 or i == len(y) - 1:
        raise NoInteriorMinimum(f"no interior minimum (smallest S at {x[i]:g})")
    a, b, c = np.polyfit(x[i - 1:i + 2], y[i - 1:i + 2], 2)
    if a <= 0:
        return Dip(float(x[i]), float(y[i]), i)
    xv = -b / (2 * a)
    xv = min(max(xv, x[i - 1]), x[i + 1])
    return Dip(float(xv), float(np.polyval([a, b, c], xv)), i)


class Objective(enum.Enum):
    MINIMIZE_S = "min_S"
    MAXIMIZE_K = "max_K"


class Constraint(enum.Enum):
    FREE = "free"
    SYMMETRIC = "symmetric"


_DEFAULT_FAMILY = {4: GeometryFamily.CROSS_FOUR, 8: GeometryFamily.OCTAGON}


@dataclass(frozen=True)
class ShapingProblem:
    """Search for shift placements that lower S or raise K.

    With ``SYMMETRIC`` only the scalar ``dq`` of ``family`` moves and
    ``bounds`` applies to ``dq``; with ``FREE`` every shift coordinate moves
    inside ``bounds``.
    """

    objective: Objective = Objective.MINIMIZE_S
    n_mp: int = 4
    constraint: Constraint = Constraint.FREE
    bounds: tuple[float, float] = (-60.0, 60.0)
    budget: int = 100
    family: GeometryFamily | None = None
    seed: ShiftSet | None = None
    seed_dq: tuple[float, ...] = (20.0, 30.0, 40.0)
    initial_step: float = 8.0
    min_step: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "objective", Objective(self.objective))
        object.__setattr__(self, "constraint", Constraint(self.constraint))
        if self.family is not None:
            object.__setattr__(self, "family", GeometryFamily.parse(self.family))
        if self.budget < 50:
            raise ValueError(f"budget must be >= 50, got {self.budget}")
        if self.n_mp < 1:
            raise ValueError("n_mp must be positive")
        lo, hi = self.bounds
        if not lo < hi:
            raise ValueError("bounds must satisfy lo < hi")

    @property
    def resolved_family(self) -> GeometryFamily:
        return self.family or _DEFAULT_FAMILY.get(self.n_mp, GeometryFamily.ANTI_CORRELATION)

    def check_window(self, grid: FrequencyGrid, params: PhysicalParams):
        """Shifts must leave a Doppler-width margin inside the grid window."""
        margin = 2.0 * derive(params).doppler_width_bar
        limit = grid.half_width - margin
        reach = max(abs(v) for v in self.bounds)
        if self.constraint is Constraint.SYMMETRIC:
            reach /= 2.0
            if self.resolved_family not in (GeometryFamily.PLUS_FOUR, GeometryFamily.CROSS_FOUR,
                                            GeometryFamily.OCTAGON):
                reach *= max(self.n_mp - 1, 1)
        if reach > limit:
            raise ValueError(f"bounds reach {reach:g} beyond window minus Doppler margin ({limit:g})")


@dataclass
class OptimizationResult:
    shifts: ShiftSet
    S: float
    K: float
    trace: list[dict]
    budget_exhausted: bool
    dq: float | None = None

    def to_dict(self) -> dict:
        return {"shifts": self.shifts.to_list(), "S": self.S, "K": self.K, "dq": self.dq,
                "budget_exhausted": self.budget_exhausted, "evaluations": len(self.trace),
                "trace": self.trace}


class _BudgetExhausted(Exception):
    pass


class _Objective:
    """Memoised, budgeted objective that records every fresh evaluation."""

    def __init__(self, problem, grid, params, decode):
        self.problem = problem
        self.grid = grid
        self.params = params
        self.decode = decode
        self.cache: dict[tuple, tuple[float, float, float]] = {}
        self.trace: list[dict] = []

    def __call__(self, x) -> float:
        key = tuple(round(float(v), 9) for v in x)
        if key in self.cache:
            return self.cache[key][0]
        if len(self.trace) >= self.problem.budget:
            raise _BudgetExhausted
        pt = evaluate_geometry(self.decode(key), self.params, self.grid)
        value = pt.S if self.problem.objective is Objective.MINIMIZE_S else -pt.K
        self.cache[key] = (value, pt.S, pt.K)
        self.trace.append({"eval": len(self.trace), "x": list(key), "S": pt.S, "K": pt.K,
                           "objective": value})
        return value


def _pattern_search(f, x0, lo, hi, step, min_step):
    """Compass search with step halving; polls +e_k then -e_k for each k."""
    x = np.array(x0, dtype=float)
    fx = f(x)
    while step >= min_step:
        improved = False
        for k in range(x.size):
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[k] = min(max(trial[k] + sign * step, lo), hi)
                if trial[k] == x[k]:
                    continue
                ft = f(trial)
                if ft < fx:
                    x, fx, improved = trial, ft, True
                    break
        if not improved:
            step /= 2.0
    return x, fx


def optimize_shifts(problem: ShapingProblem, grid: FrequencyGrid,
                    params: PhysicalParams | None = None) -> OptimizationResult:
    """Derivative-free search over shift placements.

    Seeds come from the symmetric families ('+' and 'x' for four ensembles,
    the octagon for eight, the anti-correlation line otherwise) at each
    ``seed_dq``; the best seed starts a compass pattern search. Evaluation
    order is fixed, so equal inputs give equal traces.
    """
    params = params or PhysicalParams()
    problem.check_window(grid, params)
    lo, hi = problem.bounds

    if problem.constraint is Constraint.SYMMETRIC:
        fam = problem.resolved_family

        def decode(key):
            return make_shifts(GeometrySpec(fam, max(key[0], 0.0), problem.n_mp))

        lo = max(lo, 0.0)
        seeds = [np.array([min(max(d, lo), hi)]) for d in problem.seed_dq]
    else:
        def decode(key):
            return ShiftSet.from_pairs(np.reshape(key, (-1, 2)))

        seeds = []
        if problem.seed is not None:
            seeds.append(problem.seed.as_array().ravel())
        else:
            if problem.n_mp == 4:
                fams = (GeometryFamily.PLUS_FOUR, GeometryFamily.CROSS_FOUR)
            elif problem.n_mp == 8:
                fams = (GeometryFamily.OCTAGON,)
            else:
                fams = (GeometryFamily.ANTI_CORRELATION,)
            for fam in fams:
                for d in problem.seed_dq:
                    arr = make_shifts(GeometrySpec(fam, d, problem.n_mp)).as_array().ravel()
                    seeds.append(np.clip(arr, lo, hi))

    f = _Objective(problem, grid, params, decode)
    exhausted = False
    best_x = None
    try:
        values = [f(s) for s in seeds]
        best_x = seeds[int(np.argmin(values))]
        best_x, _ = _pattern_search(f, best_x, lo, hi, problem.initial_step, problem.min_step)
    except _BudgetExhausted:
        exhausted = True
        log.warning("optimisation budget of %d evaluations exhausted", problem.budget)

    key = min(f.cache, key=lambda k: f.cache[k][0])
    _, S, K = f.cache[key]
    dq = key[0] if problem.constraint is Constraint.SYMMETRIC else None
    return OptimizationResult(decode(key), S, K, f.trace, exhausted, dq)
