"""Frequency-shift geometries and the multiplexed spectral function."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .params import DerivedParams, PhysicalParams, derive
from .spectral import (DEFAULT_QUAD_NODES, PropagationScheme, f_doppler_closed,
                       f_doppler_quad)


class GeometryFamily(enum.Enum):
    ANTI_CORRELATION = "anti_correlation"
    CORRELATION = "correlation"
    SIGNAL_AXIS = "signal_axis"
    IDLER_AXIS = "idler_axis"
    PLUS_FOUR = "plus"
    CROSS_FOUR = "cross"
    OCTAGON = "octagon"
    EXPLICIT = "explicit"

    @classmethod
    def parse(cls, value: "GeometryFamily | str") -> "GeometryFamily":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        aliases = {"anti": cls.ANTI_CORRELATION, "anticorrelation": cls.ANTI_CORRELATION,
                   "corr": cls.CORRELATION, "signal": cls.SIGNAL_AXIS,
                   "idler": cls.IDLER_AXIS, "plus_four": cls.PLUS_FOUR,
                   "x": cls.CROSS_FOUR, "cross_four": cls.CROSS_FOUR, "oct": cls.OCTAGON}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown geometry family {value!r}")


# Unit direction (signal, idler) of each line family.
_LINE_DIRECTIONS = {
    GeometryFamily.ANTI_CORRELATION: (1.0, -1.0),
    GeometryFamily.CORRELATION: (1.0, 1.0),
    GeometryFamily.SIGNAL_AXIS: (1.0, 0.0),
    GeometryFamily.IDLER_AXIS: (0.0, 1.0),
}
_FIXED_COUNT = {GeometryFamily.PLUS_FOUR: 4, GeometryFamily.CROSS_FOUR: 4,
                GeometryFamily.OCTAGON: 8}


class GeometryError(ValueError):
    """Raised for an inconsistent geometry description."""


@dataclass(frozen=True)
class ShiftSet:
    """Per-ensemble ``(signal, idler)`` frequency shifts in units of gamma3."""

    shifts: tuple[tuple[float, float], ...]

    def __post_init__(self):
        shifts = tuple((float(a), float(b)) for a, b in self.shifts)
        if not shifts:
            raise GeometryError("a shift set needs at least one ensemble")
        if not all(math.isfinite(a) and math.isfinite(b) for a, b in shifts):
            raise GeometryError("shifts must be finite")
        object.__setattr__(self, "shifts", shifts)

    @property
    def n_mp(self) -> int:
        return len(self.shifts)

    def __len__(self) -> int:
        return len(self.shifts)

    def __iter__(self):
        return iter(self.shifts)

    def __add__(self, other: "ShiftSet") -> "ShiftSet":
        return ShiftSet(self.shifts + other.shifts)

    def offset(self, d_s: float, d_i: float) -> "ShiftSet":
        """Move every ensemble by the same ``(d_s, d_i)``."""
        return ShiftSet(tuple((a + d_s, b + d_i) for a, b in self.shifts))

    def as_array(self) -> np.ndarray:
        return np.array(self.shifts, dtype=float)

    def to_list(self) -> list[list[float]]:
        return [list(p) for p in self.shifts]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "ShiftSet":
        return cls(tuple(tuple(p) for p in pairs))


@dataclass(frozen=True)
class GeometrySpec:
    """A named shift pattern with mutual shift ``dq`` (units of gamma3).

    For the line families ``dq`` is the spacing between neighbouring
    ensembles; for the '+', 'x' and octagon patterns it is the long diagonal.
    """

    family: GeometryFamily = GeometryFamily.ANTI_CORRELATION
    dq: float = 0.0
    n_mp: int = 1
    explicit_shifts: ShiftSet | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", GeometryFamily.parse(self.family))
        errors = self.problems()
        if errors:
            raise GeometryError(errors[0][1])

    def problems(self) -> list[tuple[str, str]]:
        out = []
        if not (isinstance(self.dq, (int, float)) and math.isfinite(self.dq) and self.dq >= 0):
            out.append(("dq", f"must be finite and >= 0, got {self.dq!r}"))
        if not isinstance(self.n_mp, int) or isinstance(self.n_mp, bool) or self.n_mp < 1:
            out.append(("n_mp", f"must be a positive integer, got {self.n_mp!r}"))
        fixed = _FIXED_COUNT.get(self.family)
        if fixed is not None and self.n_mp not in (1, fixed):
            # n_mp=1 is the "unset" default and is overridden by the family.
            out.append(("n_mp", f"{self.family.value} geometry has n_mp={fixed}, got {self.n_mp}"))
        if self.family is GeometryFamily.EXPLICIT and self.explicit_shifts is None:
            out.append(("explicit_shifts", "explicit geometry needs explicit_shifts"))
        return out

    @property
    def count(self) -> int:
        if self.family is GeometryFamily.EXPLICIT:
            return self.explicit_shifts.n_mp
        return _FIXED_COUNT.get(self.family, self.n_mp)

    def to_dict(self) -> dict:
        out = {"family": self.family.value, "dq": self.dq, "n_mp": self.count}
        if self.explicit_shifts is not None:
            out["explicit_shifts"] = self.explicit_shifts.to_list()
        return out


def _line(direction, dq, n):
    c = (n - 1) / 2.0
    return [((m - c) * dq * direction[0], (m - c) * dq * direction[1]) for m in range(n)]


def _ring(radius, angles_deg):
    pts = []
    for a in angles_deg:
        t = math.radians(a)
        # Snap to exact zeros on the axes so symmetric sets stay symmetric.
        c, s = round(math.cos(t), 15), round(math.sin(t), 15)
        pts.append((radius * c, radius * s))
    return pts


def make_shifts(spec: GeometrySpec) -> ShiftSet:
    """Expand a geometry description into explicit per-ensemble shifts.

    Line patterns are centred on the origin. The '+' set sits on the two
    axes, the 'x' set on the two diagonals and the octagon is their union,
    all at distance ``dq/2`` from the origin.
    """
    fam = spec.family
    if fam is GeometryFamily.EXPLICIT:
        if spec.explicit_shifts is None:
            raise GeometryError("explicit geometry needs explicit_shifts")
        return spec.explicit_shifts
    if fam in _LINE_DIRECTIONS:
        return ShiftSet(tuple(_line(_LINE_DIRECTIONS[fam], spec.dq, spec.n_mp)))
    r = spec.dq / 2.0
    plus = _ring(r, (0, 180, 90, 270))
    cross = _ring(r, (45, 225, 135, 315))
    if fam is GeometryFamily.PLUS_FOUR:
        return ShiftSet(tuple(plus))
    if fam is GeometryFamily.CROSS_FOUR:
        return ShiftSet(tuple(cross))
    return ShiftSet(tuple(_ring(r, range(0, 360, 45))))


class Evaluator(enum.Enum):
    CLOSED = "closed"
    QUAD = "quad"

    @classmethod
    def parse(cls, value: "Evaluator | str") -> "Evaluator":
        return value if isinstance(value, cls) else cls(str(value).lower())


def f_multiplexed(d_omega_s, d_omega_i, shifts: ShiftSet, params: PhysicalParams,
                  derived: DerivedParams | None = None,
                  evaluator: Evaluator | str = Evaluator.CLOSED,
                  scheme: PropagationScheme | str = PropagationScheme.CO,
                  nodes: int = DEFAULT_QUAD_NODES):
    """Unnormalised sum of shifted single-ensemble amplitudes.

    Normalisation happens on the sampled matrix (see
    :func:`biphoton.schmidt.build_jsa`), not here.
    """
    d = derived or derive(params)
    evaluator = Evaluator.parse(evaluator)
    scheme = PropagationScheme.parse(scheme)
    if evaluator is Evaluator.CLOSED and scheme is not PropagationScheme.CO:
        raise ValueError("the closed form covers co-propagating excitation only; use evaluator='quad'")
    ws = np.asarray(d_omega_s, dtype=float)
    wi = np.asarray(d_omega_i, dtype=float)
    total = np.zeros(np.broadcast_shapes(ws.shape, wi.shape), dtype=complex)
    for ds, di in shifts:
        if evaluator is Evaluator.CLOSED:
            total += f_doppler_closed(ws + ds, wi + di, params, d)
        else:
            total += f_doppler_quad(ws + ds, wi + di, params, scheme, nodes, d)
    return total
