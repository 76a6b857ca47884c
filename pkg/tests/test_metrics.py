import math

import numpy as np
import pytest

import support
from airfair import Allocation, BargainingProblem, Player
from airfair.bargaining import (
    DomainError,
    ROLE_GO,
    dissemination_rate,
    eql_allocate,
    gnbs_allocate,
    kkt_residuals,
    log_nash_welfare,
    nash_product,
    sample_feasible,
    wpf_aggregate,
    wtd_allocate,
)


def test_table1_nash_product_value(table1):
    alloc, _ = gnbs_allocate(table1)
    assert nash_product(table1, alloc) == pytest.approx(0.3357945, abs=1e-6)


def test_policy_ordering_on_table1(table1):
    gsa, _ = gnbs_allocate(table1)
    best = nash_product(table1, gsa)
    assert best > nash_product(table1, eql_allocate(table1))
    assert nash_product(table1, eql_allocate(table1)) > nash_product(table1, wtd_allocate(table1))


def test_log_welfare_matches_product(table1):
    alloc, _ = gnbs_allocate(table1)
    assert math.exp(log_nash_welfare(table1, alloc)) == pytest.approx(nash_product(table1, alloc), rel=1e-9)


def test_log_welfare_sentinel_at_disagreement(table1):
    zero = Allocation(np.zeros(6), np.zeros(6), saturated=False)
    assert log_nash_welfare(table1, zero) == -math.inf
    assert nash_product(table1, zero) == 0.0


def test_wpf_zero_for_budget_tight_alternative(table1):
    # any alternative spending the whole budget scores exactly zero here
    # because utilities are linear in time and weights were normalized
    gsa, _ = gnbs_allocate(table1)
    assert wpf_aggregate(table1, gsa, eql_allocate(table1)) == pytest.approx(0.0, abs=1e-9)
    assert wpf_aggregate(table1, gsa, wtd_allocate(table1)) == pytest.approx(0.0, abs=1e-9)


def test_wpf_negative_when_airtime_unused(table1):
    gsa, _ = gnbs_allocate(table1)
    lazy = Allocation(gsa.broadcast_time * 0.9, gsa.upload_time * 0.9, saturated=False)
    assert wpf_aggregate(table1, gsa, lazy) < -1e-3


def test_wpf_rejects_nonzero_disagreement():
    ps = [
        Player(id="go", data_size=50.0, role=ROLE_GO, disagreement=0.1),
        Player(id="c", data_size=50.0, upload_rate=10.0),
    ]
    prob = BargainingProblem(ps, airtime=5.0, broadcast_rate=10.0)
    alloc, _ = gnbs_allocate(prob)
    with pytest.raises(DomainError):
        wpf_aggregate(prob, alloc, alloc)


def test_wpf_nonpositive_on_sampled_points(table1, rng):
    gsa, _ = gnbs_allocate(table1)
    for x in sample_feasible(table1, 50, rng):
        other = Allocation(x, x * table1.betas, saturated=False)
        assert wpf_aggregate(table1, gsa, other) <= 1e-9


def test_sampled_points_are_feasible(table1, rng):
    for x in sample_feasible(table1, 50, rng):
        assert np.all(x <= table1.caps * (1 + 1e-12))
        assert np.all(x >= 0)
        assert np.sum((1 + table1.betas) * x) <= 10.0 * (1 + 1e-9)


def test_kkt_flags_perturbed_allocation(table1):
    alloc, report = gnbs_allocate(table1)
    assert report.max_residual <= 1e-7
    bumped = alloc.broadcast_time.copy()
    bumped[0] += 0.01
    bumped[1] -= 0.01 * (1 + table1.betas[0]) / (1 + table1.betas[1])
    moved = Allocation(bumped, bumped * table1.betas, saturated=False)
    assert kkt_residuals(table1, moved, report.lam).max_residual > 1e-4


def test_dissemination_rates_table1(table1):
    alloc, _ = gnbs_allocate(table1)
    assert dissemination_rate(table1, alloc, 0) == pytest.approx(5.0 / 7.0 * 11.0 / 10.0, rel=1e-9)
    assert dissemination_rate(table1, alloc, 3) == pytest.approx(20.0 / 7.0 * 11.0 / 10.0, rel=1e-9)
