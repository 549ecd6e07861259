import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biphoton.multiplex import ShiftSet
from biphoton.schmidt import FrequencyGrid, Scenario
from biphoton.shaping import (CSV_HEADER, CurvePoint, NoInteriorMinimum, ShapingProblem, SweepSpec,
                              curve_csv, find_dip, optimize_shifts, run_sweep, split_series)

SMALL = FrequencyGrid(400.0, 128)


def _curve(xs, ys):
    return [CurvePoint(float(x), float(y), 1.0) for x, y in zip(xs, ys)]


# ---- find_dip ------------------------------------------------------------

@settings(max_examples=100)
@given(st.floats(5, 95), st.floats(0.01, 5), st.floats(-2, 2))
def test_find_dip_recovers_parabola_vertex(x0, a, c):
    xs = np.linspace(0, 100, 41)
    dip = find_dip(_curve(xs, a * (xs - x0) ** 2 + c))
    assert dip.param == pytest.approx(x0, abs=1e-8)
    assert dip.S == pytest.approx(c, abs=1e-8)


@pytest.mark.parametrize("ys", [np.linspace(3, 1, 30), np.linspace(0, 1, 30) ** 2])
def test_find_dip_reports_boundary(ys):
    with pytest.raises(NoInteriorMinimum):
        find_dip(_curve(np.arange(30), ys))


def test_find_dip_needs_enough_points():
    with pytest.raises(ValueError):
        find_dip(_curve(range(10), [(x - 5) ** 2 for x in range(10)]))


def test_find_dip_stays_between_neighbours():
    xs = np.arange(25.0)
    ys = np.abs(xs - 10.2) ** 0.5
    dip = find_dip(_curve(xs, ys))
    assert 9.0 <= dip.param <= 11.0


# ---- sweeps --------------------------------------------------------------

def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(dq_values=(10.0, 5.0))
    with pytest.raises(ValueError):
        SweepSpec(temperatures=())
    with pytest.raises(ValueError):
        SweepSpec(axis="temperature")


def test_presets_cover_figures():
    a = SweepSpec.preset("fig2a")
    assert a.temperatures == (100.0, 300.0, 500.0)
    assert a.dq_values[0] == 0.0 and a.dq_values[-1] == 200.0
    b = SweepSpec.preset("fig2b")
    assert len(b.families) == 4
    f3 = SweepSpec.preset("fig3a")
    assert f3.axis == "n_mp" and f3.n_mp_values == (1, 2, 3, 4, 5, 6)
    f4 = SweepSpec.preset("fig4")
    assert {f.value for f in f4.families} == {"plus", "cross", "octagon"}
    assert len(f4.dq_values) >= 20


def test_tasks_order_and_labels():
    spec = SweepSpec(families=("anti_correlation", "octagon"), dq_values=(0.0, 10.0),
                     temperatures=(100.0, 300.0), n_mp_values=(2,))
    tasks = spec.tasks()
    assert len(tasks) == 8
    assert tasks[0][0] == "anti_correlation;T=100K;n_mp=2"
    assert tasks[-1][0] == "octagon;T=300K"
    assert tasks[-1][2].count == 8
    assert [t[1] for t in tasks[:2]] == [0.0, 10.0]


def test_sweep_bit_identical_and_order_stable():
    spec = SweepSpec(families=("anti_correlation", "cross"), dq_values=(0.0, 20.0, 40.0),
                     temperatures=(300.0,), n_mp_values=(2,))
    a = curve_csv(run_sweep(spec, SMALL), ["config: x"])
    b = curve_csv(run_sweep(spec, SMALL), ["config: x"])
    c = curve_csv(run_sweep(spec, SMALL, workers=3), ["config: x"])
    assert a == b == c


def test_csv_schema():
    spec = SweepSpec(dq_values=(0.0, 600.0), n_mp_values=(2,))
    pts = run_sweep(spec, SMALL)
    text = curve_csv(pts, ["units: {}"])
    lines = text.splitlines()
    assert lines[0] == "# units: {}"
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert tuple(rows[0][:4]) == ("param", "S", "K", "warnings")
    assert tuple(rows[0]) == CSV_HEADER
    assert float(rows[1][0]) == 0.0 and rows[1][3] == ""
    # Lobes pushed to the window edge: warning carried, sweep not aborted.
    assert "clipping" in rows[2][3]
    assert pts[1].warnings


def test_curve_points_are_physical():
    spec = SweepSpec(families=("anti_correlation",), dq_values=tuple(np.arange(0, 100, 20.0)),
                     n_mp_values=(2, 3))
    for p in run_sweep(spec, SMALL):
        assert p.S >= 0 and p.K >= 1


def test_split_series_preserves_order():
    spec = SweepSpec(families=("plus", "cross"), dq_values=(0.0, 10.0, 20.0))
    groups = split_series(run_sweep(spec, SMALL))
    assert list(groups) == ["plus;T=300K", "cross;T=300K"]
    assert [p.param for p in groups["cross;T=300K"]] == [0.0, 10.0, 20.0]


# ---- optimisation --------------------------------------------------------

def test_problem_validation():
    with pytest.raises(ValueError):
        ShapingProblem(budget=49)
    with pytest.raises(ValueError):
        ShapingProblem(bounds=(10.0, -10.0))
    with pytest.raises(ValueError):
        optimize_shifts(ShapingProblem(bounds=(-380.0, 380.0), budget=50), SMALL)


def test_symmetric_octagon_matches_dip(params):
    spec = SweepSpec(families=("octagon",), dq_values=tuple(np.arange(0, 100.1, 2.5)))
    dip = find_dip(run_sweep(spec, SMALL))
    res = optimize_shifts(ShapingProblem(n_mp=8, constraint="symmetric", family="octagon",
                                         bounds=(0.0, 100.0), budget=60, min_step=0.25), SMALL, params)
    assert res.dq == pytest.approx(dip.param, abs=2.5)
    assert res.S == pytest.approx(dip.S, abs=2e-3)
    assert res.S <= dip.S + 1e-3


def test_single_ensemble_objective_is_flat(params):
    # A lone ensemble near the window edge loses a little Lorentzian tail, so
    # flatness is checked on a wide window at the same spacing as SMALL.
    wide = FrequencyGrid(1600.0, 512)
    res = optimize_shifts(ShapingProblem(n_mp=1, bounds=(-40.0, 40.0), budget=50), wide, params)
    S = [t["S"] for t in res.trace]
    assert len(S) > 5
    assert max(S) - min(S) < 1e-3
    single, _ = Scenario(ShiftSet(((0.0, 0.0),)), params).solve(wide)
    assert res.S == pytest.approx(single.entropy_S, abs=1e-3)


def test_single_ensemble_drift_is_a_window_effect(params):
    drift = []
    for W, n in ((400.0, 128), (800.0, 256), (1600.0, 512)):
        g = FrequencyGrid(W, n)
        S = [Scenario(ShiftSet((shift,)), params).solve(g)[0].entropy_S
             for shift in ((0.0, 0.0), (40.0, 40.0), (40.0, 0.0))]
        drift.append(max(S) - min(S))
    assert drift[0] > drift[1] > drift[2]


def test_free_placement_never_worse_than_families(params):
    best = {}
    for fam in ("plus", "cross"):
        best[fam] = optimize_shifts(ShapingProblem(n_mp=4, constraint="symmetric", family=fam,
                                                   bounds=(0.0, 100.0), budget=60), SMALL, params)
    seed = min(best.values(), key=lambda r: r.S)
    free = optimize_shifts(ShapingProblem(n_mp=4, constraint="free", bounds=(-60.0, 60.0),
                                          budget=80, seed=seed.shifts), SMALL, params)
    assert free.S <= min(r.S for r in best.values()) + 1e-3
    assert free.shifts.n_mp == 4


def test_optimizer_deterministic_and_budgeted(params):
    prob = ShapingProblem(n_mp=4, constraint="free", bounds=(-60.0, 60.0), budget=50)
    a = optimize_shifts(prob, SMALL, params)
    b = optimize_shifts(prob, SMALL, params)
    assert a.trace == b.trace
    assert len(a.trace) <= 50
    assert a.budget_exhausted
    assert a.S == min(t["S"] for t in a.trace)


def test_maximise_K(params):
    res = optimize_shifts(ShapingProblem(objective="max_K", n_mp=2, constraint="symmetric",
                                         family="anti_correlation", bounds=(0.0, 150.0),
                                         seed_dq=(20.0, 60.0, 120.0), budget=50), SMALL, params)
    assert res.K == max(t["K"] for t in res.trace)
    assert res.K > 2.0


def test_result_serialises(params):
    res = optimize_shifts(ShapingProblem(n_mp=8, constraint="symmetric", bounds=(0.0, 80.0),
                                         budget=50), SMALL, params)
    d = res.to_dict()
    assert d["evaluations"] == len(d["trace"])
    assert len(d["shifts"]) == 8
    assert math.isfinite(d["S"])
