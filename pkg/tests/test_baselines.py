import numpy as np
import pytest

import support
from airfair import BargainingProblem, Player
from airfair.bargaining import (
    ROLE_GO,
    eql_allocate,
    gnbs_allocate,
    weighted_airtime,
    wtd_allocate,
)


def test_eql_table1_common_share(table1):
    alloc = eql_allocate(table1)
    np.testing.assert_allclose(alloc.broadcast_time, np.full(6, 10.0 / 11.0), atol=1e-9)
    assert weighted_airtime(table1, alloc.broadcast_time) == pytest.approx(10.0, abs=1e-9)


def test_eql_redistributes_around_binding_cap():
    # the GO can only use 0.3s; the freed airtime raises both clients equally
    ps = [
        Player(id="go", data_size=3.0, role=ROLE_GO),
        Player(id="c1", data_size=50.0, upload_rate=10.0),
        Player(id="c2", data_size=50.0, upload_rate=10.0),
    ]
    prob = BargainingProblem(ps, airtime=2.0, broadcast_rate=10.0)
    alloc = eql_allocate(prob)
    np.testing.assert_allclose(alloc.broadcast_time, [0.3, 0.425, 0.425], atol=1e-9)


def test_eql_saturated_gives_caps():
    prob = support.table1_problem(airtime=100.0)
    alloc = eql_allocate(prob)
    np.testing.assert_allclose(alloc.broadcast_time, prob.caps, atol=1e-12)
    assert alloc.saturated


def test_wtd_table1_proportional_to_load(table1):
    alloc = wtd_allocate(table1)
    c = 10.0 / 460.0
    expect = c * np.array([10, 20, 40, 40, 60, 80], dtype=float)
    np.testing.assert_allclose(alloc.broadcast_time, expect, atol=1e-9)
    assert weighted_airtime(table1, alloc.broadcast_time) == pytest.approx(10.0, abs=1e-9)


def test_wtd_closed_form_contended_case():
    # with a uniform broadcast rate the share ratio x_i / cap_i is one common
    # value, so the bisection must land on c = T / sum((1+beta) M)
    ps = [
        Player(id="go", data_size=100.0, role=ROLE_GO),
        Player(id="c", data_size=10.0, upload_rate=1.0, alpha=1.0),
    ]
    prob = BargainingProblem(ps, airtime=5.0, broadcast_rate=10.0)
    alloc = wtd_allocate(prob)
    c = 5.0 / (100.0 + 11.0 * 10.0)
    np.testing.assert_allclose(alloc.broadcast_time, [100.0 * c, 10.0 * c], atol=1e-9)


def test_wtd_saturated_gives_caps():
    prob = support.table1_problem(airtime=100.0)
    alloc = wtd_allocate(prob)
    np.testing.assert_allclose(alloc.broadcast_time, prob.caps, atol=1e-12)


def test_baselines_skip_zero_load_players(table1):
    ps = list(table1.players) + [Player(id="idle", data_size=0.0, upload_rate=11.0)]
    prob = BargainingProblem(ps, airtime=10.0, broadcast_rate=11.0)
    for allocate in (eql_allocate, wtd_allocate, lambda p: gnbs_allocate(p)[0]):
        assert allocate(prob).broadcast_time[6] == 0.0
