"""Physical inputs and the dimensionless quantities derived from them.

Every frequency used downstream (detunings, shifts, the superradiant decay
constant) is measured in units of the free-space decay rate ``gamma3`` and
every time in units of ``1/gamma3``. The only place dimensionful SI values
enter is :func:`derive`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

# CODATA 2018, exact since the 2019 SI redefinition.
BOLTZMANN = 1.380649e-23  # J/K
# CODATA 2018 unified atomic mass unit.
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg
# AME2016 isotope masses (Wang et al., Chinese Phys. C 41, 030003).
RB87_MASS = 86.909180531 * ATOMIC_MASS_UNIT  # kg
RB85_MASS = 84.911789738 * ATOMIC_MASS_UNIT  # kg


class ParameterError(ValueError):
    """Raised when a physical parameter is out of its admissible range.

    Attributes:
        field: name of the offending field.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.reason = message


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionful description of one thermal ensemble and its pump pulse.

    Defaults are the rubidium D1 operating point: 795 nm idler, 1.32 um
    telecom signal, ``gamma3 = 2*pi*5.8 MHz``, ``gamma3N/gamma3 = 5``,
    ``gamma3*tau = 0.25``, room temperature, Rb-87 mass.
    """

    lambda_s: float = 1.32e-6
    lambda_i: float = 795e-9
    gamma3: float = 2 * math.pi * 5.8e6
    gamma3N_ratio: float = 5.0
    tau_gamma: float = 0.25
    temperature: float = 300.0
    atomic_mass: float = RB87_MASS

    def __post_init__(self):
        errors = self.problems()
        if errors:
            raise ParameterError(*errors[0])

    def problems(self) -> list[tuple[str, str]]:
        """Return every ``(field, reason)`` violation instead of the first."""
        out = []
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                out.append((f.name, f"expected a number, got {value!r}"))
            elif not math.isfinite(value) or value <= 0:
                out.append((f.name, f"must be finite and > 0, got {value!r}"))
        ratio = self.gamma3N_ratio
        if isinstance(ratio, (int, float)) and 0 < ratio < 1:
            out.append(("gamma3N_ratio", f"must be >= 1, got {ratio!r}"))
        return out

    def replace(self, **changes) -> "PhysicalParams":
        return PhysicalParams(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict | None) -> "PhysicalParams":
        """Build from a (possibly partial) mapping; missing keys keep defaults."""
        data = dict(data or {})
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ParameterError(sorted(unknown)[0], "unknown field")
        return cls(**data)

    @property
    def gamma_n(self) -> float:
        """Superradiant idler decay constant in units of gamma3."""
        return float(self.gamma3N_ratio)

    @property
    def tau(self) -> float:
        """Pulse duration in units of 1/gamma3."""
        return float(self.tau_gamma)


@dataclass(frozen=True)
class DerivedParams:
    """Quantities precomputed from :class:`PhysicalParams`.

    ``k_s``, ``k_i`` and ``k_bar_si`` are in rad/m and ``sigma_v`` in m/s;
    ``doppler_width_s/i`` are ``k*sigma_v/gamma3`` and ``b`` is the
    Doppler/pulse mixing coefficient, both dimensionless.
    """

    k_s: float
    k_i: float
    k_bar_si: float
    sigma_v: float
    b: float
    doppler_width_s: float
    doppler_width_i: float

    @property
    def doppler_width_bar(self) -> float:
        return self.doppler_width_s + self.doppler_width_i

    @property
    def idler_fraction(self) -> float:
        """``k_i / (k_s + k_i)``."""
        return self.k_i / self.k_bar_si

    def to_dict(self) -> dict:
        return asdict(self)


def doppler_mixing(k_bar_sigma: float, tau: float) -> float:
    """Mixing coefficient ``b`` from ``k_bar*sigma/gamma3`` and ``gamma3*tau``.

    Written as ``x/(x+4)`` with ``x = (k_bar*sigma*tau)**2`` so it stays
    accurate when ``sigma*tau`` is tiny and never exceeds one.
    """
    x = (k_bar_sigma * tau) ** 2
    return x / (x + 4.0)


def derive(params: PhysicalParams) -> DerivedParams:
    """Convert dimensionful inputs to the Gamma3-unit quantities used everywhere."""
    errors = params.problems()
    if errors:
        raise ParameterError(*errors[0])
    k_s = 2 * math.pi / params.lambda_s
    k_i = 2 * math.pi / params.lambda_i
    k_bar = k_s + k_i
    sigma_v = math.sqrt(BOLTZMANN * params.temperature / params.atomic_mass)
    width_s = k_s * sigma_v / params.gamma3
    width_i = k_i * sigma_v / params.gamma3
    return DerivedParams(
        k_s=k_s,
        k_i=k_i,
        k_bar_si=k_bar,
        sigma_v=sigma_v,
        b=doppler_mixing(width_s + width_i, params.tau),
        doppler_width_s=width_s,
        doppler_width_i=width_i,
    )
