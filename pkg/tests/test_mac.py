import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slotmix.errors import InvalidArgument
from slotmix.geometry import point_set_from_coords, sample_points, torus_distance
from slotmix.mac import (
    RadioConfig,
    TransmissionSchedule,
    greedy_schedule,
    guard_zone_lower_bound,
    interference_bound,
    lattice_schedule,
    lattice_tile_count,
    min_theta_search,
    read_schedule,
    search_lattice,
    sir,
    slot_interference,
    slot_outcome,
    validate_schedule,
    write_schedule,
)
from slotmix.topology import build_disk_graph, build_longrange_graph, critical_radius, from_neighbor_lists

RADIO = RadioConfig(4.0, 1.0)


def directed_edges(g):
    return {(i, int(j)) for i in range(g.n) for j in g.neighbors(i)}


def naive_outcome(pts, g, slot, radio):
    # per-link SIR evaluation through the public scalar function
    out = set()
    for i in slot:
        for j in g.neighbors(i):
            j = int(j)
            if j in slot:
                continue
            if sir(pts, i, j, [k for k in slot if k != i], radio.alpha) >= radio.beta:
                out.add((i, j))
    return out


def instance(n, d, seed, mult=2.0):
    pts = sample_points(n, d, seed)
    r = min(mult * critical_radius(n, d), 0.5)
    return pts, build_disk_graph(pts, r)


def test_sir_examples():
    pts = point_set_from_coords([0.0, 0.1, 0.5, 0.7])
    assert sir(pts, 0, 1, [], 2.0) == math.inf
    assert sir(pts, 0, 1, [2], 2.0) == pytest.approx(16.0)


def test_sir_symmetric_interferers_halve():
    pts = point_set_from_coords([0.5, 0.55, 0.75, 0.35])
    one = sir(pts, 0, 1, [2], 3.0)
    two = sir(pts, 0, 1, [2, 3], 3.0)
    assert two == pytest.approx(one / 2)


def test_sir_degenerate_cases():
    pts = point_set_from_coords([0.1, 0.1, 0.3, 0.4])
    with pytest.raises(InvalidArgument):
        sir(pts, 0, 0, [], 2.0)
    with pytest.raises(InvalidArgument):
        sir(pts, 0, 1, [], 2.0)
    with pytest.raises(InvalidArgument):
        sir(pts, 2, 3, [2], 2.0)
    assert sir(pts, 2, 0, [1], 2.0) == 0.0


def test_radio_requires_alpha_above_dimension():
    with pytest.raises(InvalidArgument):
        RadioConfig(2.0, 1.0).check_dimension(2)
    with pytest.raises(InvalidArgument):
        RadioConfig(4.0, 0.0)


def test_single_transmitter_reaches_all_neighbours():
    pts, g = instance(200, 2, 0)
    out = slot_outcome(pts, g, [5], RADIO)
    assert out == {(5, int(j)) for j in g.neighbors(5)}


def test_half_duplex():
    pts = point_set_from_coords([0.1, 0.2])
    g = from_neighbor_lists([[1], [0]])
    assert slot_outcome(pts, g, [0, 1], RadioConfig(2.0, 0.001)) == set()


def test_line_reuse_every_third_node():
    # six unit-spaced nodes on a ring; nodes 0 and 3 transmit together
    pts = point_set_from_coords(np.arange(6) / 6)
    g = build_disk_graph(pts, 1 / 6 + 1e-9)
    out = slot_outcome(pts, g, [0, 3], RadioConfig(4.0, 1.0))
    assert out == {(0, 1), (0, 5), (3, 2), (3, 4)}


@pytest.mark.parametrize("seed", range(5))
def test_slot_outcome_matches_scalar_sir(seed):
    pts, g = instance(120, 2, seed)
    rng = np.random.default_rng(seed)
    slot = sorted(rng.choice(120, size=6, replace=False).tolist())
    assert slot_outcome(pts, g, slot, RADIO) == naive_outcome(pts, g, slot, RADIO)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 8))
def test_adding_transmitter_never_helps(seed, k):
    pts, g = instance(60, 2, seed % 1000, mult=2.5)
    rng = np.random.default_rng(seed)
    slot = rng.choice(60, size=k + 1, replace=False).tolist()
    base, extra = slot[:-1], slot[-1]
    for i in base:
        for j in g.neighbors(i):
            j = int(j)
            if j in slot:
                continue
            others = [v for v in base if v != i]
            before = sir(pts, i, j, others, 4.0)
            after = sir(pts, i, j, others + [extra], 4.0)
            assert after <= before


def test_each_alone_is_feasible():
    pts, g = instance(80, 2, 1)
    sched = TransmissionSchedule(80, [(i,) for i in range(80)], RadioConfig(4.0, 100.0))
    assert validate_schedule(pts, g, sched).feasible


def test_empty_schedule_misses_everything():
    pts, g = instance(50, 1, 2)
    rep = validate_schedule(pts, g, TransmissionSchedule(50, [], RADIO))
    assert not rep.feasible
    assert {tuple(e) for e in rep.missing.tolist()} == directed_edges(g)


def test_lattice_tile_count():
    assert lattice_tile_count(1.5, 0.1) == 6
    assert lattice_tile_count(1.01, 0.4) == 2
    with pytest.raises(InvalidArgument):
        lattice_tile_count(2.0, 0.3)


def test_lattice_single_tile():
    pts = point_set_from_coords([[0.01, 0.01], [0.02, 0.015], [0.03, 0.02], [0.015, 0.03]])
    g = build_disk_graph(pts, 0.03)
    sched = lattice_schedule(pts, g, RADIO, 2.0)
    assert sched.length == 4
    assert all(len(s) == 1 for s in sched.slots)


def test_lattice_spatial_reuse():
    # two clusters half a torus apart land in the same parity class
    pts = point_set_from_coords([[0.02, 0.02], [0.04, 0.02], [0.52, 0.02], [0.54, 0.02]])
    g = build_disk_graph(pts, 0.03)
    sched = lattice_schedule(pts, g, RadioConfig(4.0, 0.5), 1.5)
    assert sched.length == 2
    assert all(len(s) == 2 for s in sched.slots)
    assert validate_schedule(pts, g, sched).feasible


@pytest.mark.parametrize("d,seed", [(1, 0), (1, 1), (2, 2), (2, 3)])
def test_lattice_every_vertex_once(d, seed):
    pts, g = instance(400, d, seed)
    sched = lattice_schedule(pts, g, RADIO, 1.5)
    assert np.all(sched.transmit_counts() == 1)


@pytest.mark.parametrize("d,seed,beta", [(1, 0, 1.0), (1, 1, 16.0), (2, 2, 1.0), (2, 3, 4.0)])
def test_theta_search_minimal(d, seed, beta):
    pts, g = instance(300, d, seed)
    radio = RadioConfig(4.0, beta)
    theta, sched = search_lattice(pts, g, radio)
    assert validate_schedule(pts, g, sched).feasible
    assert validate_schedule(pts, g, lattice_schedule(pts, g, radio, theta)).feasible
    if theta > 1.01 + 1e-9:
        below = lattice_schedule(pts, g, radio, round(theta - 0.01, 2))
        assert not validate_schedule(pts, g, below).feasible


def test_theta_monotone_in_beta():
    pts, g = instance(300, 1, 4)
    thetas = [min_theta_search(pts, g, RadioConfig(4.0, b)) for b in (0.25, 1, 4, 16, 64)]
    assert thetas == sorted(thetas)


def test_tiny_beta_hits_floor():
    pts, g = instance(300, 1, 5)
    assert min_theta_search(pts, g, RadioConfig(4.0, 1e-6)) == pytest.approx(1.01)


def test_lattice_interference_within_series_bound():
    pts, g = instance(800, 2, 6)
    _, sched = search_lattice(pts, g, RADIO)
    ell = sched.meta["link_length"]
    theta_eff = sched.meta["side"] / ell
    bound = interference_bound(theta_eff, ell, 4.0, 2)
    for slot in sched.slots:
        assert slot_interference(pts, g, slot, 4.0) <= bound


@pytest.mark.parametrize("d,seed,beta", [(1, 0, 1.0), (2, 1, 1.0), (2, 2, 16.0)])
def test_greedy_feasible(d, seed, beta):
    pts, g = instance(250, d, seed)
    sched = greedy_schedule(pts, g, RadioConfig(4.0, beta), seed=seed)
    assert validate_schedule(pts, g, sched).feasible
    assert np.all(sched.transmit_counts() == 1)


def test_greedy_edgeless_is_empty():
    pts = sample_points(10, 2, 0)
    g = from_neighbor_lists([[] for _ in range(10)])
    assert greedy_schedule(pts, g, RADIO).length == 0


def test_greedy_is_seeded():
    pts, g = instance(200, 2, 3)
    a = greedy_schedule(pts, g, RADIO, seed=9)
    b = greedy_schedule(pts, g, RADIO, seed=9)
    assert a.slots == b.slots


def test_guard_zone_degenerate_radius():
    pts = point_set_from_coords(np.arange(10) / 10)
    g = build_disk_graph(pts, 0.1 + 1e-9)
    assert guard_zone_lower_bound(pts, g, RadioConfig(4.0, 0.5)) == 1


def test_guard_zone_counts_ball_oracle():
    pts, g = instance(300, 2, 7)
    radio = RadioConfig(4.0, 2.0)
    ell = max(torus_distance(pts.coords[i], pts.coords[int(j)]) for i in range(g.n) for j in g.neighbors(i))
    r_min = ell * 0.9 * 2.0**0.25
    dist = np.array([[torus_distance(a, b) for b in pts.coords] for a in pts.coords])
    expected = int((dist <= r_min).sum(axis=1).max())
    assert guard_zone_lower_bound(pts, g, radio) == expected


@pytest.mark.parametrize("d,seed", [(1, 0), (2, 1)])
def test_guard_zone_monotone_and_below_lattice(d, seed):
    pts, g = instance(400, d, seed)
    last = 0
    for beta in (1, 2, 4, 8, 16):
        radio = RadioConfig(4.0, beta)
        lb = guard_zone_lower_bound(pts, g, radio)
        assert lb >= last
        last = lb
        _, sched = search_lattice(pts, g, radio)
        assert lb <= sched.length


def test_guard_zone_rejects_bad_delta():
    pts, g = instance(50, 1, 0)
    with pytest.raises(InvalidArgument):
        guard_zone_lower_bound(pts, g, RADIO, delta2=1.0)


def test_schedule_round_trip(tmp_path):
    pts, g = instance(100, 2, 8)
    theta, sched = search_lattice(pts, g, RADIO)
    path = tmp_path / "s.txt"
    write_schedule(sched, path)
    back = read_schedule(path)
    assert back.slots == sched.slots
    assert back.radio == sched.radio
    assert back.meta["theta"] == theta
    assert validate_schedule(pts, g, back).feasible


def test_longrange_lattice_uses_longest_link():
    pts = sample_points(500, 2, 1)
    g = build_longrange_graph(pts, 0.06, 0.5)
    _, sched = search_lattice(pts, g, RADIO)
    assert sched.meta["link_length"] <= 0.06**0.5 / math.sqrt(2) + 1e-12
    assert validate_schedule(pts, g, sched).feasible
