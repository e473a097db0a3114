import math
from datetime import datetime, timezone

import numpy as np
import pytest

from oracles import naive_acc, naive_pcc, naive_std
from windcorr.errors import DegenerateDataError, ValidationError
from windcorr.stats import (
    CorrelationReport,
    acc,
    acc_spread,
    analyze,
    learnability_rank,
    pcc,
    pcc_heatmap,
)
from windcorr.windgrid import GridSpec, WindFieldSeries, synth_field

T0 = datetime(2021, 1, 1, tzinfo=timezone.utc)


def test_acc_worked_example():
    r = acc([1, 2, 3, 4], max_lag=1).acc
    assert r[0] == 1.0
    assert r[1] == pytest.approx(0.25, abs=1e-15)


def test_pcc_worked_example():
    assert pcc([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-15)


def test_acc_matches_oracle_small():
    rng = np.random.default_rng(1)
    y = rng.normal(size=300).cumsum()
    assert np.allclose(acc(y, 24).acc, naive_acc(y.tolist(), 24), atol=1e-12, rtol=0)


def test_white_noise_acc_small():
    y = np.random.default_rng(2).standard_normal(10000)
    assert abs(acc(y, 5).acc[5]) < 0.05


def test_acc_degenerate():
    with pytest.raises(DegenerateDataError):
        acc(np.ones(10), 2)
    with pytest.raises(ValidationError):
        acc([1.0, 2.0], 5)


def test_pcc_affine_invariance():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=200), rng.normal(size=200) + 0.3 * np.arange(200)
    base = pcc(a, b)
    assert pcc(3.0 * a + 7.0, b) == pytest.approx(base, abs=1e-12)
    assert pcc(-2.0 * a, b) == pytest.approx(-base, abs=1e-12)
    assert pcc(a, b) == pytest.approx(naive_pcc(a.tolist(), b.tolist()), abs=1e-12)


def test_pcc_degenerate():
    with pytest.raises(DegenerateDataError):
        pcc([1, 1, 1], [1, 2, 3])


def _field(u, v=None):
    u = np.asarray(u, dtype=np.float64)
    v = u.copy() if v is None else np.asarray(v, dtype=np.float64)
    n = u.shape[1]
    return WindFieldSeries(GridSpec.centered(n, u.shape[2]), T0, u, v)


def test_uniform_field_has_zero_spread():
    t = np.sin(np.arange(100) / 3.0)
    u = np.broadcast_to(t[:, None, None], (100, 3, 3)).copy()
    sp = acc_spread(_field(u), "u", 10)
    assert sp.max_std == pytest.approx(0.0, abs=1e-12)
    assert sp.skipped == []


def test_two_point_spread():
    # 1x2 grid: two points whose lag-k ACCs differ by 0.2 -> population std 0.1
    y1 = np.array([1.0, 2.0, 3.0, 4.0])  # lag 1 acc 0.25
    y2 = np.array([1.0, 3.0, 2.0, 4.0])  # lag 1 acc: d=[-1.5,.5,-.5,1.5], num=-.75-.25-.75=-1.75, den 5 -> -0.35
    u = np.stack([y1, y2], axis=1)[:, None, :]
    sp = acc_spread(_field(u), "u", 1)
    r1, r2 = naive_acc(y1.tolist(), 1)[1], naive_acc(y2.tolist(), 1)[1]
    assert (r1, r2) == pytest.approx((0.25, -0.35))
    assert sp.std[1] == pytest.approx(naive_std([r1, r2]), abs=1e-15)
    assert sp.std[1] == pytest.approx(0.3, abs=1e-15)
    assert sp.mean[1] == pytest.approx(-0.05)


def test_spread_skips_constant_points():
    rng = np.random.default_rng(4)
    u = rng.normal(size=(60, 3, 3))
    u[:, 0, 2] = 5.0
    sp = acc_spread(_field(u), "u", 3)
    assert sp.skipped == [(0, 2)]
    expect = [naive_std([naive_acc(u[:, i, j].tolist(), 3)[2] for i in range(3) for j in range(3)
                         if (i, j) != (0, 2)])]
    assert sp.std[2] == pytest.approx(expect[0], abs=1e-12)


def test_spread_is_permutation_invariant():
    rng = np.random.default_rng(5)
    u = rng.normal(size=(80, 3, 4)).cumsum(axis=0)
    perm = rng.permutation(12)
    shuffled = u.reshape(80, -1)[:, perm].reshape(80, 3, 4)
    a = acc_spread(_field(u), "u", 6)
    b = acc_spread(_field(shuffled), "u", 6)
    assert np.allclose(a.std, b.std, atol=1e-12)
    assert np.allclose(a.mean, b.mean, atol=1e-12)


def test_heatmap_against_oracle():
    s = synth_field("mixture", GridSpec.centered(7), 200, 1)
    h = pcc_heatmap(s)
    r, c = s.grid.prediction_point
    for (i, j) in [(0, 0), (3, 5), (6, 2)]:
        ref = naive_pcc(s.u[:, i, j].astype(float).tolist(), s.u[:, r, c].astype(float).tolist())
        assert h.pcc_u[i, j] == pytest.approx(ref, abs=1e-12)
    assert h.pcc_u[r, c] == 1.0
    assert sorted(h.avg_by_gridsize) == [3, 5, 7]
    ring = [h.pcc_v[i, j] for i in range(2, 5) for j in range(2, 5) if (i, j) != (r, c)]
    assert h.avg_by_gridsize[3][1] == pytest.approx(np.mean(ring), abs=1e-12)


def test_noise_avg_pcc_falls_with_size():
    s = synth_field("noise", GridSpec.centered(13), 3000, 7)
    avg = pcc_heatmap(s).avg_by_gridsize
    us = [avg[k][0] for k in sorted(avg)]
    assert all(a > b for a, b in zip(us, us[1:]))


def test_report_roundtrip(tmp_path):
    s = synth_field("advective", GridSpec.centered(5), 120, 2)
    rep = analyze(s, "adv", max_lag=6)
    rep.save(tmp_path)
    for name in ("report.json", "pcc_u.csv", "pcc_v.csv", "acc_u.csv", "acc_v.csv"):
        assert (tmp_path / name).is_file()
    back = CorrelationReport.load(tmp_path)
    assert back.max_std_u == pytest.approx(rep.max_std_u)
    assert back.mean_pcc3 == pytest.approx(rep.mean_pcc3)
    assert np.loadtxt(tmp_path / "pcc_u.csv", delimiter=",").shape == (5, 5)


# ---------------------------------------------------------------- ranking


def _reports(values):
    return [CorrelationReport.from_max_std(name, u, v) for name, (u, v) in values.items()]


def test_rank_published_values():
    reps = _reports({"Korea": (0.101, 0.119), "USA": (0.043, 0.033), "UK": (0.023, 0.022)})
    assert learnability_rank(reps) == ["UK", "USA", "Korea"]


def test_rank_is_permutation_invariant():
    vals = {"a": (0.3, 0.1), "b": (0.05, 0.06), "c": (0.2, 0.2), "d": (0.01, 0.5)}
    reps = _reports(vals)
    ref = learnability_rank(reps)
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert learnability_rank([reps[i] for i in rng.permutation(4)]) == ref


def test_rank_tie_breaks():
    reps = [
        CorrelationReport.from_max_std("x", 0.1, 0.2, mean_pcc3=0.5),
        CorrelationReport.from_max_std("y", 0.2, 0.1, mean_pcc3=0.9),
        CorrelationReport.from_max_std("b", 0.15, 0.15),
        CorrelationReport.from_max_std("a", 0.15, 0.15),
    ]
    assert learnability_rank(reps) == ["y", "x", "a", "b"]


def test_rank_needs_two():
    with pytest.raises(ValidationError):
        learnability_rank(_reports({"a": (0.1, 0.1)}))


def test_coherent_site_ranks_first():
    g = GridSpec.centered(9)
    reps = [analyze(synth_field(k, g, 1500, 3), k) for k in ("mixture", "advective")]
    assert learnability_rank(reps) == ["advective", "mixture"]
    assert math.isfinite(reps[0].mean_pcc3)
