import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slotmix.errors import ConfigError, InvalidArgument
from slotmix.harness import (
    RECORD_COLUMNS,
    ExperimentConfig,
    ScalingRecord,
    audit_records,
    export,
    fit_slope,
    mixing_proxy,
    parse_config,
    rate_tradeoff,
    rate_tradeoff_curve,
    read_records,
    run_sweep,
    slot_mixing_time,
)
from slotmix.spectral import WalkMatrix, empirical_mixing_time, second_eigenvalue
from slotmix.topology import build_disk_graph, critical_radius, is_connected
from slotmix.geometry import sample_points

SMALL = """
# small sweep
dimension = 1
n = 60
r_multiples = 2.0, 3.0
seeds = 0, 1, 2
alpha = 4
beta = [1, 4]
"""


def test_slot_mixing_examples():
    assert slot_mixing_time(0, 17) == 0
    assert slot_mixing_time(3, 3) == 9
    with pytest.raises(InvalidArgument):
        slot_mixing_time(-1, 3)


def test_mixing_proxy_examples():
    assert mixing_proxy(1.0, math.e**2, 1.0) == pytest.approx(4.0)
    assert mixing_proxy(0.25, 100, 1.0) == pytest.approx(2 * mixing_proxy(0.5, 100, 1.0))
    with pytest.raises(InvalidArgument):
        mixing_proxy(0.0, 10, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_proxy_dominates_empirical(seed):
    n = 80
    pts = sample_points(n, 1, seed)
    g = build_disk_graph(pts, 3 * critical_radius(n, 1))
    if not is_connected(g):
        pytest.skip("disconnected draw")
    w = WalkMatrix(g)
    gap = 1 - second_eigenvalue(w)
    assert empirical_mixing_time(w, 1 / n) <= mixing_proxy(gap, n, 1.0)


def test_rate_tradeoff_examples():
    assert rate_tradeoff(1.0, 2, 4.0) == pytest.approx(math.exp(0.5))
    assert rate_tradeoff(1e-9, 2, 4.0) > 1e8
    rates, vals = rate_tradeoff_curve(np.linspace(0.05, 8, 1596), 2, 4.0)
    assert rates[np.argmin(vals)] == pytest.approx(2.0, abs=0.01)
    with pytest.raises(InvalidArgument):
        rate_tradeoff(1.0, 2, 2.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.5, 8.0), st.integers(1, 3))
def test_rate_tradeoff_minimum_at_alpha_over_d(ratio, d):
    alpha = ratio * d
    best = alpha / d
    assert rate_tradeoff(best, d, alpha) <= rate_tradeoff(best * 1.01, d, alpha)
    assert rate_tradeoff(best, d, alpha) <= rate_tradeoff(best * 0.99, d, alpha)


def test_fit_examples():
    pts = [{"x": 1, "y": 1}, {"x": 2, "y": 4}, {"x": 4, "y": 16}]
    fit = fit_slope(pts, "x", "y")
    assert fit.exponent == pytest.approx(2.0, abs=1e-12)
    assert fit.n_points == 3
    const = [{"x": x, "y": 3.0} for x in (1, 2, 4)]
    assert fit_slope(const, "x", "y").exponent == 0.0


def test_fit_noisy_power_law():
    rng = np.random.default_rng(1)
    x = np.geomspace(1, 10, 40)
    y = x**1.5 * (1 + rng.uniform(-0.05, 0.05, x.size))
    fit = fit_slope([{"x": a, "y": b} for a, b in zip(x, y)], "x", "y")
    assert fit.exponent == pytest.approx(1.5, abs=0.1)
    lo, hi = fit.interval()
    assert lo < fit.exponent < hi


def test_fit_rejects_degenerate_x():
    with pytest.raises(InvalidArgument):
        fit_slope([{"x": 2, "y": v} for v in (1, 2, 3)], "x", "y")
    with pytest.raises(InvalidArgument):
        fit_slope([{"x": 1, "y": 1}, {"x": 2, "y": 2}], "x", "y")


def test_fit_grouped():
    rows = [{"g": g, "x": x, "y": x**g} for g in (1, 2) for x in (1, 2, 3, 5)]
    fits = fit_slope(rows, "x", "y", group_by="g")
    assert fits[1].exponent == pytest.approx(1.0)
    assert fits[2].exponent == pytest.approx(2.0)


def test_parse_config():
    cfg = parse_config(SMALL)
    assert cfg.dimension == 1
    assert cfg.n == [60]
    assert cfg.r_multiples == [2.0, 3.0]
    assert cfg.beta == [1, 4]
    assert cfg.seeds == [0, 1, 2]
    assert parse_config(SMALL + "seeds = 0..4\n").seeds == [0, 1, 2, 3, 4]


@pytest.mark.parametrize(
    "extra,msg",
    [
        ("r_multiples = 0.9\n", "supercritical"),
        ("alpha = 1\n", "alpha"),
        ("kind = long\ngamma = 1.5\n", "gamma"),
        ("kind = long\n", "gamma"),
        ("bogus = 3\n", "unknown key"),
        ("mixing_mode = fast\n", "mixing_mode"),
    ],
)
def test_config_rejections(extra, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(SMALL + extra)


def test_config_needs_radius():
    with pytest.raises(ConfigError):
        parse_config("dimension = 1\nn = 50\nseeds = 0\n")


def test_empty_seeds_empty_output():
    cfg = parse_config(SMALL)
    cfg.seeds = []
    assert run_sweep(cfg) == []


def test_sweep_cardinality_and_order():
    cfg = parse_config(SMALL)
    cfg.beta = [1.0]
    rows = run_sweep(cfg)
    assert len(rows) == 6
    assert [(round(r.r_over_rc, 6), r.seed) for r in rows] == [
        (2.0, 0), (2.0, 1), (2.0, 2), (3.0, 0), (3.0, 1), (3.0, 2)
    ]


def test_sweep_rows_pass_audit():
    rows = run_sweep(parse_config(SMALL))
    assert len(rows) == 12
    assert audit_records(rows) == []
    for row in rows:
        if row.error is None:
            assert row.slot_mixing_time == row.tmix * row.schedule_length_lattice
            assert row.tmix_mode == "empirical"
            assert row.gamma is None and row.s is None
            assert row.guard_zone_lb <= row.schedule_length_lattice


def test_sweep_bruteforce_cheeger_rows():
    cfg = parse_config("dimension = 2\nn = 18\nr = 0.45\nseeds = 0, 1, 2\ngreedy = false\n")
    rows = run_sweep(cfg)
    assert all(r.h_bruteforce is not None for r in rows if r.error is None)
    assert audit_records(rows) == []


def test_sweep_longrange_rows_carry_gamma():
    cfg = parse_config(
        "dimension = 2\nn = 2000\nr = 0.1\nkind = long\ngamma = 0.5\nseeds = 0\nmixing_mode = proxy\ngreedy = false\n"
    )
    (row,) = run_sweep(cfg)
    assert row.gamma == 0.5
    assert row.s == pytest.approx(0.1**0.5)
    assert row.tmix_mode == "proxy"
    assert audit_records([row]) == []


def test_sweep_records_disconnection_per_row():
    # seed 2 is a disconnected draw just above r_c
    cfg = ExperimentConfig(dimension=1, n=[300], seeds=[1, 2], r_multiples=[1.05], greedy=False)
    cfg.validate()
    rows = run_sweep(cfg)
    assert len(rows) == 2
    assert rows[0].error is None
    assert any(r.error == "disconnected" for r in rows)
    for row in rows:
        assert row.schedule_length_lattice is not None or "schedule" in (row.error or "")


def test_sweep_workers_preserve_order():
    cfg = parse_config(SMALL)
    serial = run_sweep(cfg)
    cfg.workers = 2
    assert [r.as_dict() for r in run_sweep(cfg)] == [r.as_dict() for r in serial]


def test_export_empty_is_header_only(tmp_path):
    path = export([], tmp_path / "e.csv")
    assert path.read_text() == ",".join(RECORD_COLUMNS) + "\n"


def test_export_round_trip_and_determinism(tmp_path):
    rows = run_sweep(parse_config(SMALL))
    a = export(rows, tmp_path / "a.csv", plot=("r", "slot_mixing_time"))
    b = export(run_sweep(parse_config(SMALL)), tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert [r.as_dict() for r in read_records(a)] == [r.as_dict() for r in rows]
    assert (tmp_path / "a.gp").exists()
    assert (tmp_path / "a.csv.meta.json").exists()


def test_export_output_dir_override(tmp_path, monkeypatch):
    monkeypatch.setenv("SLOTMIX_OUTPUT_DIR", str(tmp_path / "out"))
    path = export([], "rel.csv")
    assert path == tmp_path / "out" / "rel.csv"
    assert path.exists()


def test_audit_flags_broken_rows():
    row = ScalingRecord(
        seed=0, n=10, d=1, kind="short", r=0.2, r_over_rc=2.0, gamma=None, s=None, eta=None, rho=None,
        alpha=4.0, beta=1.0, epsilon=0.1, gap=0.5, h_bruteforce=0.1, tmix=3.0,
        schedule_length_lattice=4, guard_zone_lb=5, slot_mixing_time=13.0,
    )
    problems = audit_records([row])
    assert len(problems) == 3
