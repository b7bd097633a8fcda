import math

import numpy as np
import pytest

from fmscatter.kinematics import e_h_system, e_ps_system, positron_h_system
from fmscatter.potentials import ConfigError
from fmscatter.runner import (Settings, channel_label, classify, continuum_angle,
                              ground_threshold, make_problem, open_excited, s_matrix, scan,
                              spin_states, summed_cross_sections, sweep, sweep_summary,
                              thresholds, variational_eigenvalues, worker_count)

FAST = Settings(N=16, lmax=1, theta_deg=7.0)


def test_labels_and_thresholds():
    ph = positron_h_system()
    assert channel_label(ph, 0) == "e++H(1s)"
    assert channel_label(ph, 2) == "p+Ps(1s)"
    assert channel_label(e_ps_system(), 0) == "e-+Ps(1s)"
    assert ground_threshold(e_h_system(), 0) == pytest.approx(-0.5)
    with pytest.raises(ConfigError):
        ground_threshold(e_h_system(), 2)
    assert spin_states(e_h_system()) == [(0, 0.25), (1, 0.75)]
    assert spin_states(ph) == [(None, 1.0)]
    assert open_excited(e_h_system(), [0], -0.1) == ["e-+H(n=2)"]
    assert thresholds(e_ps_system(), [0], 2) == [-0.25, -0.0625, 0.0]


def test_s_matrix_positron_hydrogen_shape():
    prob = make_problem(positron_h_system(), 0, FAST)
    res = s_matrix(prob, -0.18, FAST)
    assert res.A.shape == (2, 2)
    assert res.labels == ["e++H(1s)", "p+Ps(1s)"]
    assert np.all(np.isfinite(res.S))
    assert res.unitarity_defect < 0.2


def test_scan_records_sorted_and_summed():
    recs = scan(e_ps_system(), [-0.15, -0.1], [0], FAST, workers=1)
    assert len(recs) == 4
    keys = [(r["E"], r["spin"]) for r in recs]
    assert keys == sorted(keys)
    tot = summed_cross_sections(recs)
    assert len(tot) == 2
    for t in tot:
        parts = [r["sigma"] for r in recs if r["E"] == t["E"]]
        assert t["sigma"] == pytest.approx(sum(parts))


def test_scan_parallel_matches_serial():
    a = scan(e_ps_system(), [-0.15], [0], FAST, workers=1)
    b = scan(e_ps_system(), [-0.15], [0], FAST, workers=2)
    assert a == b


def test_worker_env(monkeypatch):
    monkeypatch.setenv("FMSCATTER_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("FMSCATTER_WORKERS", "x")
    with pytest.raises(ConfigError):
        worker_count()


def test_sweep_rows_and_summary():
    rows = sweep(e_ps_system(), -0.15, 0, FAST, "theta", [6.0, 8.0], spin=1)
    assert [r["value"] for r in rows] == [6.0, 8.0]
    assert rows[-1]["delta_phase"] == 0.0
    summ = sweep_summary(rows)
    assert 1 in summ or "1" in summ
    with pytest.raises(ConfigError):
        sweep(e_ps_system(), -0.15, 0, FAST, "bogus", [1.0])


def test_classify_synthetic_spectrum():
    th = math.radians(8)
    thr = [-0.5, -0.125, 0.0]
    cont = [-0.5 + r * np.exp(-2j * th) for r in (0.2, 0.3, 0.5)]
    vals = [-0.527 + 0j] + cont + [0.1 - 0.3j]
    lines = classify(vals, thr, th)
    assert [l.kind for l in lines] == ["bound", "continuum", "continuum", "continuum", "other"]
    assert continuum_angle(cont + [-0.11 - 0.2j], -0.5, -0.125) == pytest.approx(-16.0)


def test_variational_oracle_hydrogen_ion():
    prob = make_problem(e_h_system(), 0, Settings(N=16, lmax=1, hy=1.0), 0)
    e = variational_eigenvalues(prob, 2)
    # a bound H- level lies below the H(1s) threshold, above the exact -0.52775
    assert -0.5278 < e[0] < -0.5
