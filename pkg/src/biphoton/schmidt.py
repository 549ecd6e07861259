"""Discretised joint spectral amplitudes and their Schmidt decomposition.

The amplitude is sampled on a uniform square grid and treated with the
rectangle rule, so a matrix ``F`` normalised to ``sum(|F|**2) * h**2 == 1``
has Schmidt weights equal to the squared singular values of ``F * h``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .multiplex import Evaluator, ShiftSet, f_multiplexed
from .params import PhysicalParams, derive
from .spectral import DEFAULT_QUAD_NODES, PropagationScheme

log = logging.getLogger(__name__)

LAMBDA_CUTOFF = 1e-12
CLIP_TOLERANCE = 1e-3
CLIP_EDGE_ROWS = 2


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid ``[-half_width, half_width]`` with ``n_points`` samples per axis."""

    half_width: float = 400.0
    n_points: int = 1024

    def __post_init__(self):
        if not (isinstance(self.n_points, int) and self.n_points >= 64):
            raise ValueError(f"n_points must be an integer >= 64, got {self.n_points!r}")
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"half_width must be > 0, got {self.half_width!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n_points)

    def refined(self) -> "FrequencyGrid":
        return FrequencyGrid(self.half_width, 2 * self.n_points)

    def widened(self) -> "FrequencyGrid":
        # Doubles the window and the sample count so the spacing is kept.
        return FrequencyGrid(2 * self.half_width, 2 * self.n_points - 1)

    def to_dict(self) -> dict:
        return {"half_width": self.half_width, "n_points": self.n_points,
                "spacing": self.spacing}


@dataclass
class JointSpectralMatrix:
    """Sampled amplitude; rows follow the signal axis, columns the idler axis."""

    values: np.ndarray
    grid: FrequencyGrid
    normalized: bool = False
    edge_fraction: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.spacing**2)

    def density(self) -> np.ndarray:
        """Joint spectral intensity ``|F|**2``."""
        return np.abs(self.values) ** 2


def edge_mass_fraction(values: np.ndarray, rows: int = CLIP_EDGE_ROWS) -> float:
    """Share of ``sum(|values|**2)`` in the outermost ``rows`` rows and columns."""
    p = np.abs(values) ** 2
    total = p.sum()
    if total == 0:
        return 0.0
    inner = p[rows:-rows, rows:-rows].sum()
    return float((total - inner) / total)


def sample_jsa(grid: FrequencyGrid, func: Callable[[np.ndarray, np.ndarray], np.ndarray],
               normalize: bool = True, clip_tol: float = CLIP_TOLERANCE) -> JointSpectralMatrix:
    """Sample ``func(omega_s, omega_i)`` on ``grid`` and optionally normalise."""
    w = grid.points
    values = np.asarray(func(w[:, None], w[None, :]), dtype=complex)
    values = np.broadcast_to(values, (grid.n_points, grid.n_points)).copy()
    frac = edge_mass_fraction(values)
    notes = []
    if frac > clip_tol:
        msg = (f"window clipping: {frac:.2e} of the squared amplitude lies in the "
               f"outer {CLIP_EDGE_ROWS} rows/columns of the +/-{grid.half_width:g} window")
        log.warning(msg)
        notes.append(msg)
    F = JointSpectralMatrix(values, grid, False, frac, notes)
    if normalize:
        norm = math.sqrt(F.norm_sq)
        if norm == 0:
            raise ValueError("amplitude vanishes on the grid")
        F.values /= norm
        F.normalized = True
    return F


def build_jsa(grid: FrequencyGrid, shifts: ShiftSet, params: PhysicalParams,
              evaluator: Evaluator | str = Evaluator.CLOSED,
              scheme: PropagationScheme | str = PropagationScheme.CO,
              nodes: int = DEFAULT_QUAD_NODES,
              clip_tol: float = CLIP_TOLERANCE) -> JointSpectralMatrix:
    """Sample and normalise the multiplexed amplitude on ``grid``.

    A clipping note is attached (and logged) when more than ``clip_tol`` of
    the squared amplitude sits in the two outermost rows or columns.
    """
    derived = derive(params)
    return sample_jsa(
        grid,
        lambda ws, wi: f_multiplexed(ws, wi, shifts, params, derived, evaluator, scheme, nodes),
        clip_tol=clip_tol,
    )


@dataclass(frozen=True)
class SchmidtResult:
    """Schmidt weights, entanglement measures and (optionally) mode functions.

    ``modes_s[n]`` and ``modes_i[n]`` are sampled on ``omega`` and normalised
    so that ``sum(|mode|**2) * spacing == 1``.
    """

    lambdas: np.ndarray
    entropy_S: float
    schmidt_K: float
    omega: np.ndarray | None = None
    modes_s: np.ndarray | None = None
    modes_i: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return int(self.lambdas.size)

    def reconstruct(self) -> np.ndarray:
        """``sum_n sqrt(lambda_n) psi_n(omega_s) phi_n(omega_i)`` on the grid."""
        if self.modes_s is None:
            raise ValueError("result was computed without modes")
        k = self.modes_s.shape[0]
        amp = np.sqrt(self.lambdas[:k])
        return np.einsum("n,nj,nk->jk", amp, self.modes_s, self.modes_i)

    def summary(self, head: int = 10) -> dict:
        return {"S": self.entropy_S, "K": self.schmidt_K,
                "rank": self.rank, "lambdas": self.lambdas[:head].tolist()}


def _check_lambdas(lambdas, tol: float):
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam < -tol):
        raise ValueError("Schmidt weights must be non-negative")
    total = lam.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"Schmidt weights sum to {total!r}, not 1 (tolerance {tol:g})")
    return np.clip(lam, 0.0, None)


def entropy(lambdas, tol: float = 1e-6) -> float:
    """Entanglement entropy in bits, with ``0*log(0) = 0``."""
    lam = _check_lambdas(lambdas, tol)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam)))


def schmidt_number(lambdas, tol: float = 1e-6) -> float:
    """Effective number of Schmidt modes, ``1/sum(lambda**2)``."""
    lam = _check_lambdas(lambdas, tol)
    return float(1.0 / np.sum(lam**2))


def _require_normalized(F: JointSpectralMatrix):
    if not F.normalized:
        raise ValueError("Schmidt decomposition needs a normalised amplitude")


def _fix_phase(psi: np.ndarray, phi: np.ndarray):
    # Largest sample of each signal mode made real positive; idler takes the
    # conjugate rotation so the product is unchanged.
    # Mirror-symmetric modes have twin peaks; take the first within rounding
    # of the maximum so the choice is stable.
    mag = np.abs(psi)
    idx = np.argmax(mag >= mag.max(axis=1, keepdims=True) * (1 - 1e-9), axis=1)
    peak = psi[np.arange(psi.shape[0]), idx]
    rot = np.conj(peak) / np.abs(peak)
    return psi * rot[:, None], phi * np.conj(rot)[:, None]


def schmidt_decompose(F: JointSpectralMatrix, with_modes: bool = True,
                      n_modes: int | None = None,
                      cutoff: float = LAMBDA_CUTOFF) -> SchmidtResult:
    """Schmidt decomposition through the singular values of ``F * h``.

    Keeps every weight above ``cutoff`` (relative to the total). With
    ``with_modes`` the first ``n_modes`` (default: all kept) mode pairs are
    returned as well.
    """
    _require_normalized(F)
    h = F.grid.spacing
    M = F.values * h
    if with_modes:
        U, s, Vh = np.linalg.svd(M, full_matrices=False)
    else:
        s = np.linalg.svd(M, compute_uv=False)
    lam = s**2
    keep = lam > cutoff * lam.sum()
    lam = lam[keep]
    result = dict(lambdas=lam, entropy_S=entropy(lam, 1e-6), schmidt_K=schmidt_number(lam, 1e-6))
    if with_modes:
        k = lam.size if n_modes is None else min(n_modes, lam.size)
        psi = U[:, :k].T / math.sqrt(h)
        phi = Vh[:k, :] / math.sqrt(h)
        psi, phi = _fix_phase(psi, phi)
        result.update(omega=F.grid.points, modes_s=psi, modes_i=phi)
    return SchmidtResult(**result)


def kernels(F: JointSpectralMatrix) -> tuple[np.ndarray, np.ndarray]:
    """One-photon correlation kernels sampled on the grid.

    ``K1[j, j'] = sum_k F[j, k] conj(F[j', k]) h`` (signal) and
    ``K2[k, k'] = sum_j F[j, k] conj(F[j, k']) h`` (idler).
    """
    h = F.grid.spacing
    V = F.values
    K1 = (V @ V.conj().T) * h
    K2 = (V.T @ V.conj()) * h
    return K1, K2


def schmidt_via_kernels(F: JointSpectralMatrix, n_modes: int = 0,
                        cutoff: float = LAMBDA_CUTOFF) -> SchmidtResult:
    """Schmidt weights from the eigenproblems of the two one-photon kernels.

    Independent of :func:`schmidt_decompose`; the signal weights are
    returned, and ``n_modes`` leading eigenfunctions of each kernel when
    requested (their relative phases are not aligned).
    """
    _require_normalized(F)
    h = F.grid.spacing
    K1, K2 = kernels(F)
    # The integral operator on the grid is kernel * h.
    H1 = K1 * h
    lam = np.sort(scipy.linalg.eigvalsh(H1))[::-1]
    lam = lam[lam > cutoff * lam.sum()]
    result = dict(lambdas=lam, entropy_S=entropy(lam, 1e-6), schmidt_K=schmidt_number(lam, 1e-6))
    if n_modes:
        n = F.grid.n_points
        k = min(n_modes, lam.size)
        sub = (n - k, n - 1)
        _, v1 = scipy.linalg.eigh(H1, subset_by_index=sub)
        _, v2 = scipy.linalg.eigh(K2 * h, subset_by_index=sub)
        psi = v1[:, ::-1].T / math.sqrt(h)
        phi = v2[:, ::-1].T / math.sqrt(h)
        result.update(omega=F.grid.points, modes_s=psi, modes_i=phi)
    return SchmidtResult(**result)


def kernel_spectra(F: JointSpectralMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenvalues of both kernel operators."""
    K1, K2 = kernels(F)
    h = F.grid.spacing
    l1 = np.sort(scipy.linalg.eigvalsh(K1 * h))[::-1]
    l2 = np.sort(scipy.linalg.eigvalsh(K2 * h))[::-1]
    return l1, l2


@dataclass(frozen=True)
class Scenario:
    """Everything needed to compute S and K apart from the grid."""

    shifts: ShiftSet
    params: PhysicalParams = field(default_factory=PhysicalParams)
    evaluator: Evaluator = Evaluator.CLOSED
    scheme: PropagationScheme = PropagationScheme.CO
    nodes: int = DEFAULT_QUAD_NODES

    def jsa(self, grid: FrequencyGrid) -> JointSpectralMatrix:
        return build_jsa(grid, self.shifts, self.params, self.evaluator, self.scheme, self.nodes)

    def solve(self, grid: FrequencyGrid, with_modes: bool = False,
              n_modes: int | None = None) -> tuple[SchmidtResult, JointSpectralMatrix]:
        F = self.jsa(grid)
        return schmidt_decompose(F, with_modes=with_modes, n_modes=n_modes), F


@dataclass(frozen=True)
class ConvergenceReport:
    base: tuple[float, float]
    refined: tuple[float, float]
    delta_S: float
    rel_delta_K: float
    passed: bool
    widened: tuple[float, float] | None = None
    window_delta_S: float | None = None
    window_rel_delta_K: float | None = None
    window_passed: bool | None = None
    s_tol: float = 1e-2
    k_tol: float = 1e-2

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def convergence_check(scenario: Scenario, grid: FrequencyGrid, window: bool = False,
                      s_tol: float = 1e-2, k_tol: float = 1e-2) -> ConvergenceReport:
    """Compare S and K on ``grid`` against a grid with twice the samples.

    ``passed`` reflects the resolution test. With ``window=True`` the
    window is also doubled at fixed spacing and judged separately in
    ``window_passed``.
    """
    def sk(g):
        r, _ = scenario.solve(g)
        return r.entropy_S, r.schmidt_K

    base = sk(grid)
    fine = sk(grid.refined())
    dS = abs(fine[0] - base[0])
    dK = abs(fine[1] - base[1]) / base[1]
    extra = {}
    if window:
        wide = sk(grid.widened())
        wdS = abs(wide[0] - base[0])
        wdK = abs(wide[1] - base[1]) / base[1]
        extra = dict(widened=wide, window_delta_S=wdS, window_rel_delta_K=wdK,
                     window_passed=bool(wdS < s_tol and wdK < k_tol))
    return ConvergenceReport(base, fine, dS, dK, bool(dS < s_tol and dK < k_tol),
                             s_tol=s_tol, k_tol=k_tol, **extra)
