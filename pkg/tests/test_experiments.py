"""Desk-scale experiment runners on reduced parameter sets."""

from __future__ import annotations

import math

import numpy as np
import pytest

from causal_horizon.errors import DomainError
from causal_horizon.experiments import (
    EXPERIMENT_KINDS,
    ExperimentSpec,
    run_experiment,
    synthetic_two_cluster,
)
from causal_horizon.fields import silverman_bandwidth
from causal_horizon.geometry import required_viscosity


def test_spec_validation():
    with pytest.raises(DomainError):
        run_experiment(ExperimentSpec(kind="warp"))
    with pytest.raises(DomainError):
        ExperimentSpec(kind="scaling", params={"bogus_knob": 1}).resolved()
    with pytest.raises(DomainError):
        ExperimentSpec(kind="scaling", params={"D_sweep": []}).resolved()
    with pytest.raises(DomainError):
        ExperimentSpec(kind="scaling", params={"D_sweep": [4.0, 2.0]}).resolved()
    with pytest.raises(DomainError):
        ExperimentSpec(kind="highdim", params={"n_sweep": [2, 2, 10]}).resolved()
    assert set(EXPERIMENT_KINDS) == {
        "scaling", "curvature", "pareto", "sensitivity", "highdim", "radar",
        "navigate",
    }


def test_defaults_survive_resolution():
    for kind in EXPERIMENT_KINDS:
        resolved = ExperimentSpec(kind=kind).resolved()
        assert resolved  # every kind ships a complete default set


def test_scaling_reduced():
    spec = ExperimentSpec(
        kind="scaling",
        params={"D_sweep": [2.0, 4.0, 8.0], "dt": 1e-3},
    )
    report = run_experiment(spec)
    table = report.tables["sweep"]
    assert table.columns == ["D", "lambda0", "t_c_theory", "t_c_measured"]
    assert len(table.rows) == 3
    # stats must be recomputable from the emitted table
    logD = np.log(table.column("D"))
    logt = np.log(table.column("t_c_measured"))
    slope, intercept = np.polyfit(logD, logt, 1)
    assert report.stats["exponent"] == pytest.approx(float(slope), rel=1e-12)
    assert report.stats["intercept"] == pytest.approx(float(intercept), rel=1e-12)
    assert report.stats["exponent"] == pytest.approx(-1.0, abs=0.1)
    assert report.stats["r_squared"] > 0.99
    # measured collapse may trail theory by at most the integrator bias
    for theory, measured in zip(table.column("t_c_theory"),
                                table.column("t_c_measured")):
        assert measured == pytest.approx(theory, rel=0.05)
    assert report.provenance["master_seed"] == 0
    assert "version" in report.provenance


def test_curvature_reduced():
    spec = ExperimentSpec(
        kind="curvature",
        params={"kappa_sweep": [-0.3, 0.0, 0.3], "dt": 1e-3},
    )
    report = run_experiment(spec)
    table = report.tables["sweep"]
    assert report.stats["all_blew_up"] is True
    assert report.stats["blowup_monotone_in_forcing"] is True
    forcings = table.column("forcing")
    blowups = table.column("blowup_time")
    assert all(f1 < f2 for f1, f2 in zip(forcings, forcings[1:]))
    assert all(t1 < t2 for t1, t2 in zip(blowups, blowups[1:]))
    # the forcing-free middle row is the flat n/lambda0 collapse (first-order
    # integrator bias at this coarse dt is ~1e-2)
    assert blowups[1] == pytest.approx(0.5, abs=0.015)


def test_pareto_reduced():
    spec = ExperimentSpec(
        kind="pareto",
        params={"ensemble": 60, "n_seeds": 2, "dt": 0.01},
        master_seed=5,
    )
    report = run_experiment(spec)
    table = report.tables["ensembles"]
    assert table.columns == [
        "seed_index", "mode", "survival_fraction", "identity_loss", "n_survivors",
    ]
    assert report.stats["epsilon_req"] == pytest.approx(
        required_viscosity(C0=2.0, Delta=1.0, kappa_minus=0.0, D=6.0), rel=1e-12
    )
    by_mode = {}
    for row in table.rows:
        by_mode.setdefault(row[1], []).append(row)
    assert report.stats["ode_survival_max"] == max(r[2] for r in by_mode["ode"])
    assert report.stats["ode_survival_max"] == 0.0
    assert report.stats["sde_survival_min"] == 1.0
    assert report.stats["gacf_survival_min"] == 1.0
    # per-seed identity: the gate strictly beats always-on injection
    for sde_row, gacf_row in zip(by_mode["sde"], by_mode["gacf"]):
        assert gacf_row[3] < sde_row[3]
    ratios = [g[3] / s[3] for g, s in zip(by_mode["gacf"], by_mode["sde"])]
    assert report.stats["loss_ratio_mean"] == pytest.approx(
        float(np.mean(ratios)), rel=1e-12
    )
    assert 0.1 < report.stats["loss_ratio_mean"] < 0.7


def test_sensitivity_reduced():
    spec = ExperimentSpec(
        kind="sensitivity",
        params={"delta_sweep": [0.5, 1.0, 2.6], "n_traj": 4,
                "bisect_iters": 10, "dt": 0.01},
    )
    report = run_experiment(spec)
    table = report.tables["sweep"]
    stars = table.column("epsilon_star")
    assert report.stats["monotone_nondecreasing"] is True
    assert report.stats["n_exceeded_cap"] == 1
    assert stars[-1] is None  # last width is past the affordable cap
    finite = [s for s in stars if s is not None]
    assert finite == sorted(finite)
    assert report.stats["max_epsilon_star"] == max(finite)
    # empirical criticals sit near the overshoot-scaled theory curve
    for row in table.rows:
        delta, width, eps_theory, eps_star, exceeded = row
        if eps_star is None:
            continue
        assert eps_star == pytest.approx(2.0 * eps_theory, rel=0.35)


def test_highdim_reduced():
    report = run_experiment(ExperimentSpec(kind="highdim"))
    table = report.tables["sweep"]
    times = table.column("survival_time")
    assert report.stats["monotone_nonincreasing"] is True
    assert times == sorted(times, reverse=True)
    assert report.stats["t_c_smallest_n"] == times[0]
    assert report.stats["t_c_largest_n"] == times[-1]
    # crowding: a hundred dimensions collapse an order of magnitude sooner
    assert times[-1] < 0.2 * times[0]


def test_radar_reduced():
    spec = ExperimentSpec(kind="radar", params={"n_seeds": 3})
    report = run_experiment(spec)
    table = report.tables["seeds"]
    assert len(table.rows) == 3
    assert report.stats["n_collapsed"] == 3
    assert report.stats["n_false_negative"] == 0
    leads = [r for r in table.column("lead_time") if r is not None]
    assert report.stats["min_lead_time"] == min(leads)
    assert report.stats["mean_lead_time"] == pytest.approx(
        float(np.mean(leads)), rel=1e-12
    )
    for trigger, collapse in zip(table.column("trigger_time"),
                                 table.column("collapse_time")):
        assert trigger is not None and collapse is not None
        assert trigger < collapse  # warning strictly precedes the fold


def test_navigate_defaults():
    report = run_experiment(ExperimentSpec(kind="navigate"))
    table = report.tables["terminals"]
    assert table.columns == [
        "seed_index", "mode", "x0", "x1", "min_cloud_distance", "classification",
    ]
    assert table.rows[0][0] == -1 and table.rows[0][1] == "ode"
    assert all(r[1] == "gacf" for r in table.rows[1:])
    assert len(table.rows) == 6
    for row in table.rows:
        assert row[5] in ("valid", "chimera")
    # ungated transport cuts the void and lands off-manifold; gated does not
    assert report.stats["ode_classification"] == "chimera"
    assert report.stats["gacf_valid_count"] == report.stats["gacf_total"] == 5
    assert report.stats["ode_min_distance"] > report.stats["validity_radius"]
    valid_rows = [r for r in table.rows if r[5] == "valid"]
    assert all(r[4] <= report.stats["validity_radius"] for r in valid_rows)
    # journey actually crossed: terminals sit in the far cluster
    for row in table.rows[1:]:
        assert row[2] > 3.0


def test_navigate_rejects_unlabeled_cloud(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("x0,x1\n0.0,0.0\n1.0,1.0\n-1.0,0.5\n")
    spec = ExperimentSpec(kind="navigate", params={"cloud_path": str(path)})
    with pytest.raises(DomainError):
        run_experiment(spec)


def test_fixture_matches_generator_and_is_bimodal():
    from causal_horizon.experiments import _fixture_cloud

    points, labels = synthetic_two_cluster()
    cloud = _fixture_cloud(bandwidth=None)
    assert np.array_equal(cloud.points, points)  # 17-digit CSV round-trips
    assert cloud.labels == labels
    assert labels.count("A") == labels.count("B") == 250

    # at its own reference bandwidth the cloud has exactly two density modes
    h = silverman_bandwidth(cloud.points)
    assert h == pytest.approx(1.5239317044734009, rel=1e-12)
    from causal_horizon.fields import KdeScoreField, PointCloud

    ref = PointCloud(cloud.points, bandwidth=h)
    field = KdeScoreField(ref, target=np.zeros(2), beta=1.0, D=0.0)
    rng = np.random.default_rng(0)
    modes = []
    for _ in range(20):
        x = cloud.points[rng.integers(0, len(cloud.points))].copy()
        for _ in range(5000):
            u = field.eval(x, 0.0)
            if np.linalg.norm(u) < 1e-10:
                break
            x = x + 0.5 * u
        if not any(np.linalg.norm(x - m) < 0.3 for m in modes):
            modes.append(x)
    assert len(modes) == 2
    xs = sorted(m[0] for m in modes)
    assert xs[0] == pytest.approx(-6.0, abs=0.2)
    assert xs[1] == pytest.approx(6.0, abs=0.2)

    # the inter-cluster void is far wider than the navigation kernel scale
    a = cloud.points[np.asarray(labels) == "A"]
    b = cloud.points[np.asarray(labels) == "B"]
    void = float(np.min(b[:, 0])) - float(np.max(a[:, 0]))
    assert void > 6 * 0.5


def test_scaling_invariance_of_burn_constant():
    # epsilon* of the ramped canyon scales exactly with width^2, which is the
    # contract the sensitivity sweep is built on
    from causal_horizon.experiments import CanyonScenarioField
    from causal_horizon.sampler import SamplerConfig, run_flow
    from causal_horizon.seeding import derive_seed

    def critical_eps(width):
        field = CanyonScenarioField(D=6.0, lambda0=1.5, cap=40.0, width=width)
        seeds = [derive_seed(0, i) for i in range(4)]

        def survives(eps):
            cfg = SamplerConfig(mode="sde", dt=0.01, t_max=1.0,
                                epsilon_fixed=eps, det_floor=1e-6)
            return all(run_flow(field, np.zeros(2), cfg, seed=s).survived
                       for s in seeds)

        lo, hi = 0.0, 1e3
        for _ in range(20):
            mid = 0.5 * (lo + hi)
            if survives(mid):
                hi = mid
            else:
                lo = mid
        return hi

    e1 = critical_eps(0.7)
    e2 = critical_eps(1.4)
    assert e2 / e1 == pytest.approx(4.0, rel=1e-3)
