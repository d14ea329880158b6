from fractions import Fraction

import mpmath
import numpy as np
import pytest
from mpmath import mpf
from scipy.integrate import quad

from flatbeam import gevrey as gv
from oracles import fd_derivatives, sigma_one_oracle

CTX = gv.PrecisionContext(512)


@pytest.mark.parametrize("tau0", ["0.1", "0.25", "0.5", "0.7"])
@pytest.mark.parametrize("sigma", [1.1, 1.0, 2.0])
def test_jet_matches_finite_differences(tau0, sigma):
    jet = gv.phi_jet(mpf(tau0), sigma, 4, CTX)
    ref = fd_derivatives(lambda x: gv.phi(x, sigma), mpf(tau0), range(1, 5))
    scale = max(abs(r) for r in ref)
    for m, r in zip(range(1, 5), ref):
        got = jet.derivative(m)
        if abs(r) > 1e-3 * scale:
            assert abs(got / r - 1) <= 1e-6
        else:
            # odd orders vanish at the symmetry point
            assert abs(got - r) <= 1e-6 * scale


def test_jet_matches_sigma_one_recurrence():
    M = 40
    with CTX.workprec():
        jet = gv.phi_jet(mpf(3) / 10, 1, M, CTX)
    ref = sigma_one_oracle(Fraction(3, 10), M)
    for n in range(M + 1):
        assert abs(jet.coeffs[n] - ref[n]) <= mpf(10) ** -20 * abs(ref[n])


def test_real_power_against_finite_difference():
    with CTX.workprec():
        tau0 = mpf(1) / 4
        g = gv.Jet(tau0, (tau0 * (1 - tau0), 1 - 2 * tau0, mpf(-1)))
        p = gv.jet_real_power(g, mpf("-1.1"))
    f = lambda x: (x * (1 - x)) ** mpf("-1.1")
    (d2,) = fd_derivatives(f, mpf(1) / 4, [2])
    assert abs(p.derivative(2) / d2 - 1) <= 1e-6


def test_jet_algebra():
    with CTX.workprec():
        x = gv.Jet.variable(mpf("0.3"), 6)
        e = gv.jet_exp(x)
        assert all(abs(e.derivative(m) - mpmath.exp(mpf("0.3"))) < mpf(10) ** -100 for m in range(7))
        sq = gv.jet_mul(x, x)
        assert sq.coeffs[:3] == (mpf("0.3") ** 2, 2 * mpf("0.3"), 1)
        s = gv.jet_add(x, gv.Jet.constant(1, mpf("0.3"), 6))
        assert s.coeffs[0] == mpf("1.3")
    with pytest.raises(ValueError):
        gv.jet_real_power(gv.Jet.constant(-1, 0, 3), 0.5)


def test_phi_jet_outside_support_is_zero():
    for tau in (0, 1, -0.5, 1.2):
        assert all(c == 0 for c in gv.phi_jet(tau, 1.1, 5, CTX).coeffs)


def test_normalization_constant():
    assert float(gv.normalization_constant(1.0)) == pytest.approx(0.00702985840660966, rel=1e-14)
    ref, _ = quad(lambda x: np.exp(-1.0 / (x * (1 - x)) ** 1.1), 0, 1, epsabs=0, epsrel=1e-13, limit=200)
    assert float(gv.normalization_constant(1.1)) == pytest.approx(ref, rel=1e-10)


def test_first_derivative_is_scaled_bump():
    spec = gv.TrajectorySpec(5.0, 1.1, 0.0, 2.0)
    C = gv.normalization_constant(1.1)
    for t in (0.4, 1.7, 3.9):
        d = gv.y_derivatives(spec, t, 1)
        assert float(d[1]) == pytest.approx(2 * float(gv.phi(t / 5, 1.1) / C) / 5, rel=1e-12)


def test_symmetry_and_monotonicity():
    spec = gv.TrajectorySpec(5.0, 1.1, 0.5, 2.0)
    t = np.linspace(0, 5, 101)
    rows = gv.y_derivatives_grid(spec, t, 0)
    y = np.array([float(r[0]) for r in rows])
    assert np.all(np.diff(y) >= 0)
    assert y[0] == 0.5 and y[-1] == 2.0
    np.testing.assert_allclose(y + y[::-1], 2.5, rtol=0, atol=1e-14)


def test_grid_matches_pointwise():
    spec = gv.TrajectorySpec(5.0, 1.1)
    times = [0.3, 1.2, 2.5, 3.3, 4.9]
    rows = gv.y_derivatives_grid(spec, times, 6)
    for t, row in zip(times, rows):
        single = gv.y_derivatives(spec, t, 6)
        for a, b in zip(row, single):
            assert abs(a - b) <= mpf(10) ** -30 * (1 + abs(b))


def test_no_overflow_to_order_80():
    spec = gv.TrajectorySpec(5.0, 1.1)
    rows = gv.y_derivatives_grid(spec, np.linspace(0, 5, 21), 80)
    for row in rows:
        assert all(mpmath.isfinite(v) for v in row)
        assert all(np.isfinite(float(v)) for v in row)


def test_steady_state_outside_interval():
    spec = gv.TrajectorySpec(2.0, 1.1, 1.0, 3.0)
    assert gv.y_derivatives(spec, -1, 3) == [1, 0, 0, 0]
    assert gv.y_derivatives(spec, 2.0, 3) == [3, 0, 0, 0]


def test_invalid_specs():
    with pytest.raises(ValueError):
        gv.TrajectorySpec(0.0, 1.1)
    with pytest.raises(ValueError):
        gv.TrajectorySpec(5.0, 0.0)
    with pytest.raises(ValueError):
        gv.PrecisionContext(32)


def test_gevrey_probe_short():
    spec = gv.TrajectorySpec(5.0, 1.1)
    fit = gv.gevrey_bound_probe(spec, 16, grid=gv.default_probe_grid(5.0, 61))
    assert 1.5 < fit.gamma < 2.3
    fixed = gv.gevrey_bound_probe(spec, 16, grid=gv.default_probe_grid(5.0, 61),
                                  gamma_fixed=spec.gevrey_order)
    assert fixed.gamma == spec.gevrey_order and fixed.R > 0


def test_gevrey_probe_constant_trajectory():
    fit = gv.gevrey_bound_probe(gv.TrajectorySpec(5.0, 1.1, 1.0, 1.0), 6, grid=[1.0, 2.0])
    assert fit.degenerate
