"""Figure presets and the files they write.

Each preset writes CSV/JSON data mirroring one figure panel; nothing is
rendered. Every file carries the resolved configuration.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import RunConfig, config_comments, dump_json, species_label, write_text, UNITS
from .multiplex import GeometryFamily, GeometrySpec, make_shifts
from .params import PhysicalParams, derive
from .schmidt import (FrequencyGrid, JointSpectralMatrix, Scenario, SchmidtResult,
                      convergence_check)
from .shaping import (NoInteriorMinimum, SweepScenario, SweepSpec, curve_csv, find_dip,
                      run_sweep, split_series)

log = logging.getLogger(__name__)

PRESETS = ("fig2a", "fig2b", "fig2c", "fig3a", "fig3bcd", "fig4")
SWEEP_GRID = FrequencyGrid(400.0, 512)
GOLDEN_GRID = FrequencyGrid(400.0, 1024)


def preset_config(name: str, params: PhysicalParams, grid: FrequencyGrid, **extra) -> dict:
    cfg = {"preset": name, "physical_params": params.to_dict(),
           "atomic_species": species_label(params.atomic_mass),
           "grid": {"half_width": grid.half_width, "n_points": grid.n_points}}
    cfg.update(extra)
    return cfg


def heatmap_csv(F: JointSpectralMatrix, config: dict) -> str:
    """``|F|**2`` with idler frequencies across the top and signal down the side."""
    buf = io.StringIO()
    for line in config_comments(config):
        buf.write(f"# {line}\n")
    w = F.grid.points
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["omega_s\\omega_i"] + [repr(float(v)) for v in w])
    dens = F.density()
    for j, ws in enumerate(w):
        writer.writerow([repr(float(ws))] + [f"{v:.12e}" for v in dens[j]])
    return buf.getvalue()


def mode_csv(omega: np.ndarray, mode: np.ndarray, config: dict) -> str:
    """One mode function: columns ``omega,re,im,abs2``."""
    buf = io.StringIO()
    for line in config_comments(config):
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["omega", "re", "im", "abs2"])
    for w, m in zip(omega, mode):
        writer.writerow([repr(float(w)), repr(float(m.real)), repr(float(m.imag)), repr(float(abs(m) ** 2))])
    return buf.getvalue()


def write_modes(result: SchmidtResult, out_dir: Path, prefix: str, count: int, config: dict) -> list[Path]:
    paths = []
    for n in range(min(count, result.modes_s.shape[0])):
        for side, modes in (("signal", result.modes_s), ("idler", result.modes_i)):
            cfg = {**config, "mode_index": n, "side": side}
            paths.append(write_text(out_dir / f"{prefix}_{side}_mode{n}.csv",
                                    mode_csv(result.omega, modes[n], cfg)))
    return paths


def schmidt_report(run: RunConfig, result: SchmidtResult, F: JointSpectralMatrix,
                   elapsed: float, head: int = 20) -> dict:
    d = derive(run.physical_params)
    return {
        "config": run.to_dict(),
        "atomic_species": species_label(run.physical_params.atomic_mass),
        "derived": d.to_dict(),
        "shifts": make_shifts(run.geometry).to_list(),
        "grid": F.grid.to_dict(),
        "lambdas": result.lambdas[:head].tolist(),
        "rank": result.rank,
        "S": result.entropy_S,
        "K": result.schmidt_K,
        "warnings": list(F.warnings),
        "edge_fraction": F.edge_fraction,
        "units": UNITS,
        "timing": {"seconds": elapsed},
    }


def _sweep(name, scenario, out_dir, params, grid, workers, **overrides):
    spec = SweepSpec.preset(scenario, params, **overrides)
    t0 = time.perf_counter()
    points = run_sweep(spec, grid, workers)
    cfg = preset_config(name, params, grid, families=[f.value for f in spec.families],
                        temperatures=list(spec.temperatures), n_mp_values=list(spec.n_mp_values),
                        dq_values=list(spec.dq_values), axis=spec.axis)
    path = write_text(out_dir / f"{name}.csv", curve_csv(points, config_comments(cfg)))
    log.info("%s: %d points in %.1fs", name, len(points), time.perf_counter() - t0)
    return points, path, cfg


def _dips(points, params, verify_grid, cfg):
    out = {}
    for series, curve in split_series(points).items():
        try:
            dip = find_dip(curve)
        except (NoInteriorMinimum, ValueError) as exc:
            out[series] = {"error": str(exc)}
            continue
        entry = {"dq": dip.param, "S": dip.S}
        if verify_grid is not None:
            fam = GeometryFamily.parse(series.split(";")[0])
            n_mp = int(series.split("n_mp=")[1]) if "n_mp=" in series else 1
            T = float(series.split("T=")[1].split("K")[0])
            scen = Scenario(make_shifts(GeometrySpec(fam, curve[dip.index].param, n_mp)),
                            params.replace(temperature=T))
            rep = convergence_check(scen, FrequencyGrid(verify_grid.half_width, verify_grid.n_points // 2))
            entry["verification"] = {"dq_sample": curve[dip.index].param, **rep.to_dict()}
        out[series] = entry
    return {"config": cfg, "dips": out, "units": UNITS}


def run_preset(name: str, out_dir: str | Path, params: PhysicalParams | None = None,
               grid: FrequencyGrid | None = None, verify_grid: FrequencyGrid | None = GOLDEN_GRID,
               workers: int = 1, **overrides) -> list[Path]:
    """Compute one figure's data and write it under ``out_dir``.

    Args:
        name: one of :data:`PRESETS`.
        grid: sweep grid (512 points over +/-400 by default).
        verify_grid: grid used to re-check reported optima; ``None`` skips it.
        overrides: forwarded to :meth:`SweepSpec.preset` (e.g. ``dq_values``).

    Returns:
        Paths of the files written.
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    out_dir = Path(out_dir)
    params = params or PhysicalParams()
    grid = grid or SWEEP_GRID
    written: list[Path] = []

    if name in ("fig2a", "fig2b", "fig4"):
        points, path, cfg = _sweep(name, SweepScenario(name), out_dir, params, grid, workers, **overrides)
        written.append(path)
        dips = _dips(points, params, verify_grid if name == "fig4" else None, cfg)
        written.append(write_text(out_dir / f"{name}_dips.json", dump_json(dips)))
    elif name == "fig3a":
        _, path, _ = _sweep(name, SweepScenario.FIG3A, out_dir, params, grid, workers, **overrides)
        written.append(path)
    elif name == "fig2c":
        dq = overrides.get("dq", 120.0)
        for fam in (GeometryFamily.ANTI_CORRELATION, GeometryFamily.CORRELATION,
                    GeometryFamily.IDLER_AXIS, GeometryFamily.SIGNAL_AXIS):
            F = Scenario(make_shifts(GeometrySpec(fam, dq, 2)), params).jsa(grid)
            cfg = preset_config(name, params, grid, family=fam.value, dq=dq, n_mp=2,
                                warnings=list(F.warnings))
            written.append(write_text(out_dir / f"fig2c_{fam.value}.csv", heatmap_csv(F, cfg)))
    elif name == "fig3bcd":
        dq = overrides.get("dq", 120.0)
        counts = overrides.get("n_mp_values", (1, 2, 3, 4, 5, 6))
        mode_counts = overrides.get("mode_n_mp", (2, 3))
        buf = io.StringIO()
        cfg = preset_config(name, params, grid, family="anti_correlation", dq=dq,
                            n_mp_values=list(counts))
        for line in config_comments(cfg):
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n_mp", "index", "lambda"])
        for n in counts:
            scen = Scenario(make_shifts(GeometrySpec(GeometryFamily.ANTI_CORRELATION, dq, n)), params)
            want_modes = n in mode_counts
            result, _ = scen.solve(grid, with_modes=want_modes, n_modes=4 if want_modes else None)
            for k, lam in enumerate(result.lambdas):
                writer.writerow([n, k, repr(float(lam))])
            if want_modes:
                written.append(write_text(out_dir / f"fig3cd_nmp{n}_densities.csv",
                                          _density_table(result, {**cfg, "n_mp": n})))
                written.extend(write_modes(result, out_dir, f"fig3cd_nmp{n}", 4, {**cfg, "n_mp": n}))
        written.insert(0, write_text(out_dir / "fig3b_eigenvalues.csv", buf.getvalue()))
    return written


def _density_table(result: SchmidtResult, config: dict, count: int = 4) -> str:
    buf = io.StringIO()
    for line in config_comments(config):
        buf.write(f"# {line}\n")
    k = min(count, result.modes_s.shape[0])
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["omega"] + [f"psi{n}_abs2" for n in range(k)] + [f"phi{n}_abs2" for n in range(k)])
    ps = np.abs(result.modes_s[:k]) ** 2
    pi = np.abs(result.modes_i[:k]) ** 2
    for j, w in enumerate(result.omega):
        writer.writerow([repr(float(w))] + [repr(float(v)) for v in ps[:, j]]
                        + [repr(float(v)) for v in pi[:, j]])
    return buf.getvalue()


def preset_names() -> Sequence[str]:
    return PRESETS
