from fractions import Fraction

import numpy as np
import pytest
from mpmath import mpf

from flatbeam import feedforward as ff
from flatbeam.gevrey import TrajectorySpec, y_derivatives_grid
from flatbeam.paramgen import bending_moment_choice, build_parametrization, flat_choice

SPEC = TrajectorySpec(5.0, 1.1)


def test_least_term_index_rules():
    assert ff.least_term_index([5, 3, 2, 1, 4, 9], 5) == (3, False)
    assert ff.least_term_index([5, 3, 4, 1, 0.5, 9], 5) == (4, False)
    assert ff.least_term_index([5, 4, 3, 2, 1, 0.5], 5) == (5, True)


def test_steady_state_exactness():
    times = [-1.0, 0.0, 5.0, 7.5]
    spec = TrajectorySpec(5.0, 1.1, 0.25, 0.75)
    u = ff.eval_u_least_term(spec, times, K_max=6)
    assert list(u.values) == [0.25, 0.25, 0.75, 0.75]
    uf = ff.eval_u_flat(2, spec, times, ff.SummationPolicy("tail_epsilon", 10))
    assert list(uf.values) == [1.0, 1.0, 3.0, 3.0]
    wf = ff.eval_w_flat(2, spec, Fraction(1, 2), times, ff.SummationPolicy("fixed_K", 10))
    assert list(wf.values) == [0.125, 0.125, 0.375, 0.375]


def test_flat_transition_reaches_input_one():
    spec = TrajectorySpec(5.0, 1.1, 0.0, 0.25)
    res = ff.eval_u_flat(2, spec, [5.0])
    assert res.values[-1] == 1.0


@pytest.mark.parametrize("K", [2, 5, 12, 25])
def test_flat_boundary_condition_termwise(K):
    table = build_parametrization(flat_choice(2, K))
    assert ff.series_coefficients_w(table, 1, 2) == ff.series_coefficients_u(table)
    policy = ff.SummationPolicy("fixed_K", K)
    times = np.linspace(0, 5, 7)
    rows = y_derivatives_grid(SPEC, times, 2 * K)
    u = ff.eval_u(table, SPEC, times, policy, rows=rows)
    w = ff.eval_w(table, SPEC, 1, times, policy, z_derivative=2, rows=rows)
    assert u.values_mp == w.values_mp


def test_clamped_moment_is_y():
    table = build_parametrization(bending_moment_choice(8))
    coeffs = ff.series_coefficients_w(table, 0, 2)
    assert coeffs == [1] + [0] * 8
    times = np.linspace(0, 5, 11)
    w = ff.eval_w_bending(table, SPEC, 0, times, ff.SummationPolicy("fixed_K", 8), z_derivative=2)
    y = [r[0] for r in y_derivatives_grid(SPEC, times, 0)]
    assert [float(v) for v in y] == list(w.values)


def test_flat_series_converges():
    times = np.linspace(0, 5, 21)
    rows = y_derivatives_grid(SPEC, times, 100)
    u30 = ff.eval_u_flat(2, SPEC, times, ff.SummationPolicy("fixed_K", 30), rows=rows)
    u50 = ff.eval_u_flat(2, SPEC, times, ff.SummationPolicy("fixed_K", 50), rows=rows)
    assert np.max(np.abs(u30.values - u50.values)) <= 1e-10 * np.max(np.abs(u50.values))


def test_tail_epsilon_stops_early():
    times = [1.0, 2.0]
    res = ff.eval_u_flat(2, SPEC, times, ff.SummationPolicy("tail_epsilon", 50, eps_tail=1e-20))
    assert np.all(res.n_t < 50) and not res.saturated.any()


def test_least_term_deterministic_and_bounded():
    times = np.linspace(0, 5, 11)
    a = ff.eval_u_least_term(SPEC, times, K_max=20)
    b = ff.eval_u_least_term(SPEC, times, K_max=20)
    assert a.to_csv() == b.to_csv() and a.term_log_csv() == b.term_log_csv()
    assert np.all(a.n_t >= 2) and np.all(a.n_t <= 20)


def test_table_too_small():
    table = build_parametrization(bending_moment_choice(5))
    with pytest.raises(ValueError):
        ff.eval_u(table, SPEC, [1.0], ff.SummationPolicy("least_term", 5))


def test_policy_validation():
    with pytest.raises(ValueError):
        ff.SummationPolicy("random", 10)
    with pytest.raises(ValueError):
        ff.SummationPolicy("fixed_K", 1)
    with pytest.raises(ValueError):
        ff.eval_u_least_term(SPEC, [1.0], K_max=2)


def test_csv_layout():
    res = ff.eval_u_least_term(SPEC, [0.0, 2.5], K_max=4)
    lines = res.to_csv().splitlines()
    assert lines[0] == "t,u,n_t"
    assert len(lines) == 3
    assert res.term_log_csv().splitlines()[0] == "t,k,magnitude"


@pytest.mark.parametrize("frac", [0.2, 0.3, 0.4])
def test_divergence_off_centre(frac):
    rep = ff.divergence_report(SPEC, frac * SPEC.T, K=40)
    assert rep.decreases_then_increases
    assert 2 <= rep.least_term < 40


def test_divergence_at_midpoint_is_degenerate():
    # the odd derivatives of the symmetric bump vanish at the midpoint, so
    # every term with k >= 1 is exactly zero there
    rep = ff.divergence_report(SPEC, SPEC.T / 2, K=12)
    assert all(m == 0 for m in rep.magnitudes[1:])
    assert not rep.decreases_then_increases
    assert rep.least_term == 2 and not rep.saturated


def test_minimum_moves_out_with_longer_T():
    short = ff.divergence_report(TrajectorySpec(5.0, 1.1), 1.5, K=40)
    long_ = ff.divergence_report(TrajectorySpec(10.0, 1.1), 3.0, K=40)
    assert long_.minimum_index > short.minimum_index
    assert "minimum" in short.to_csv()
