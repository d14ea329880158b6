"""Gevrey-class transition trajectory and its high-order derivatives.

The bump phi(tau) = exp(-1 / (tau (1 - tau))^sigma) is differentiated by
propagating truncated Taylor jets through tau(1 - tau) -> (.)^-sigma -> exp(-.)
in big-float arithmetic (mpmath).  Repeated differentiation of the closed form
blows up combinatorially and finite differences lose all digits long before
order 80, so jets are the only route used here.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mpf

__all__ = [
    "PrecisionContext",
    "Jet",
    "TrajectorySpec",
    "jet_add",
    "jet_mul",
    "jet_real_power",
    "jet_exp",
    "phi_jet",
    "phi",
    "normalization_constant",
    "y_derivatives",
    "y_derivatives_grid",
    "gevrey_bound_probe",
    "GevreyFit",
]

DEFAULT_BITS = 512
# quadrature for the normalization integral runs at this many bits at most
_QUAD_BITS = 160


@dataclass(frozen=True)
class PrecisionContext:
    mantissa_bits: int = DEFAULT_BITS

    def __post_init__(self) -> None:
        if self.mantissa_bits < 64:
            raise ValueError("mantissa_bits must be >= 64")

    def workprec(self):
        return mpmath.workprec(self.mantissa_bits)

    @property
    def digits(self) -> int:
        return int(self.mantissa_bits * 0.30103)


@dataclass(frozen=True)
class Jet:
    """Taylor coefficients a_m = f^(m)(center) / m!, m = 0..order."""

    center: mpf
    coeffs: tuple

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def derivative(self, m: int):
        return self.coeffs[m] * mpmath.factorial(m)

    def derivatives(self) -> list:
        out, fact = [], mpf(1)
        for m, a in enumerate(self.coeffs):
            if m:
                fact *= m
            out.append(a * fact)
        return out

    @classmethod
    def constant(cls, value, center, order: int) -> "Jet":
        return cls(mpf(center), (mpf(value),) + (mpf(0),) * order)

    @classmethod
    def variable(cls, center, order: int) -> "Jet":
        c = (mpf(center), mpf(1)) + (mpf(0),) * (order - 1)
        return cls(mpf(center), c[: order + 1])


def _compatible(*jets: Jet) -> None:
    first = jets[0]
    for j in jets[1:]:
        if j.order != first.order or j.center != first.center:
            raise ValueError("jets must share center and order")


def jet_add(a: Jet, b: Jet) -> Jet:
    _compatible(a, b)
    return Jet(a.center, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))


def jet_mul(a: Jet, b: Jet) -> Jet:
    _compatible(a, b)
    M = a.order
    out = []
    for n in range(M + 1):
        out.append(mpmath.fsum(a.coeffs[j] * b.coeffs[n - j] for j in range(n + 1)))
    return Jet(a.center, tuple(out))


def jet_real_power(g: Jet, a) -> Jet:
    """h = g^a via n g_0 h_n = sum_{j=1}^{n} (a j - (n - j)) g_j h_{n-j}."""
    g0 = g.coeffs[0]
    if not g0 > 0:
        raise ValueError("real_power needs a positive constant term")
    a = mpf(a)
    nz = [(j, gj) for j, gj in enumerate(g.coeffs) if j and gj]
    h = [g0**a]
    for n in range(1, g.order + 1):
        acc = mpf(0)
        for j, gj in nz:
            if j > n:
                break
            acc += (a * j - (n - j)) * gj * h[n - j]
        h.append(acc / (n * g0))
    return Jet(g.center, tuple(h))


def jet_exp(g: Jet) -> Jet:
    """h = exp(g) via n h_n = sum_{j=1}^{n} j g_j h_{n-j}."""
    jg = [j * gj for j, gj in enumerate(g.coeffs)]
    nz = [j for j in range(1, len(jg)) if jg[j]]
    h = [mpmath.exp(g.coeffs[0])]
    for n in range(1, g.order + 1):
        acc = mpmath.fsum(jg[j] * h[n - j] for j in nz if j <= n)
        h.append(acc / n)
    return Jet(g.center, tuple(h))


def _as_mpf(x):
    if isinstance(x, mpf):
        return +x
    return mpmath.mpmathify(x)


def phi(tau, sigma) -> mpf:
    """Bump value exp(-1/(tau(1-tau))^sigma), zero outside (0, 1)."""
    tau = _as_mpf(tau)
    if tau <= 0 or tau >= 1:
        return mpf(0)
    return mpmath.exp(-((tau * (1 - tau)) ** (-_as_mpf(sigma))))


def phi_jet(tau0, sigma, M: int, ctx: PrecisionContext = PrecisionContext()) -> Jet:
    """Taylor jet of the bump at ``tau0``; the zero jet at or beyond 0 and 1."""
    with ctx.workprec():
        tau0 = _as_mpf(tau0)
        if tau0 <= 0 or tau0 >= 1:
            return Jet.constant(0, tau0, M)
        g = (tau0 * (1 - tau0), 1 - 2 * tau0, mpf(-1)) + (mpf(0),) * M
        gj = Jet(tau0, g[: M + 1])
        p = jet_real_power(gj, -_as_mpf(sigma))
        return jet_exp(Jet(tau0, tuple(-x for x in p.coeffs)))


@functools.lru_cache(maxsize=64)
def _normalization(sigma_key: str, bits: int) -> mpf:
    with mpmath.workprec(bits):
        s = mpf(sigma_key)
        return mpmath.quad(lambda x: phi(x, s), [0, mpf(1) / 4, mpf(1) / 2, mpf(3) / 4, 1])


def normalization_constant(sigma, ctx: PrecisionContext = PrecisionContext()) -> mpf:
    """Integral of the bump over [0, 1] (tanh-sinh quadrature)."""
    if not float(sigma) > 0:
        raise ValueError("sigma must be positive")
    bits = min(ctx.mantissa_bits, _QUAD_BITS)
    with ctx.workprec():
        return +_normalization(mpmath.nstr(_as_mpf(sigma), 40), bits)


@dataclass(frozen=True)
class TrajectorySpec:
    """Transition y_start -> y_end over [0, T] along the normalized bump integral."""

    T: float
    sigma: float
    y_start: float = 0.0
    y_end: float = 1.0

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")

    @property
    def gevrey_order(self) -> float:
        return 1.0 + 1.0 / self.sigma


def _phi_integral(a, b, sigma) -> mpf:
    if b <= a:
        return mpf(0)
    # Gauss-Legendre is much cheaper on short interior pieces; tanh-sinh copes
    # with the flat essential singularities at 0 and 1
    short = b - a <= mpf(1) / 50 and a > 0 and b < 1
    method = "gauss-legendre" if short else "tanh-sinh"
    return mpmath.quad(lambda x: phi(x, sigma), [a, b], method=method)


def _Phi(tau, sigma, C) -> mpf:
    if tau <= 0:
        return mpf(0)
    if tau >= 1:
        return mpf(1)
    # integrate over the shorter side of the symmetric bump
    if tau <= mpf(1) / 2:
        return _phi_integral(0, tau, sigma) / C
    return 1 - _phi_integral(tau, 1, sigma) / C


def _derivs_from_jet(spec, jet, C, M, Phi_val):
    T = _as_mpf(spec.T)
    dy = _as_mpf(spec.y_end) - _as_mpf(spec.y_start)
    out = [_as_mpf(spec.y_start) + dy * Phi_val]
    # y^(m) = dy * phi^(m-1)(tau) / (C T^m); jet coefficient a_n = phi^(n)/n!
    fact = mpf(1)
    Tm = T
    for m in range(1, M + 1):
        n = m - 1
        if n:
            fact *= n
        out.append(dy * jet.coeffs[n] * fact / (C * Tm))
        Tm *= T
    return out


def y_derivatives(
    spec: TrajectorySpec, t, M: int, ctx: PrecisionContext = PrecisionContext()
) -> list:
    """[y(t), y'(t), ..., y^(M)(t)] as big floats."""
    if M < 0:
        raise ValueError("M must be >= 0")
    with ctx.workprec():
        t = _as_mpf(t)
        T = _as_mpf(spec.T)
        if t <= 0 or t >= T:
            y = _as_mpf(spec.y_start if t <= 0 else spec.y_end)
            return [y] + [mpf(0)] * M
        tau = t / T
        C = normalization_constant(spec.sigma, ctx)
        jet = phi_jet(tau, spec.sigma, max(M - 1, 0), ctx)
        with mpmath.workprec(min(ctx.mantissa_bits, _QUAD_BITS)):
            Phi_val = _Phi(tau, _as_mpf(spec.sigma), C)
        return _derivs_from_jet(spec, jet, C, M, Phi_val)


def _Phi_grid(taus: Sequence, sigma, C) -> list:
    """Phi on an arbitrary set of points, integrating between sorted neighbours."""
    inside = sorted({tau for tau in taus if 0 < tau < 1})
    left = [tau for tau in inside if tau <= mpf(1) / 2]
    right = [tau for tau in inside if tau > mpf(1) / 2]
    values = {}
    acc, prev = mpf(0), mpf(0)
    for tau in left:
        acc += _phi_integral(prev, tau, sigma)
        values[tau] = acc / C
        prev = tau
    acc, prev = mpf(0), mpf(1)
    for tau in reversed(right):
        acc += _phi_integral(tau, prev, sigma)
        values[tau] = 1 - acc / C
        prev = tau
    out = []
    for tau in taus:
        if tau <= 0:
            out.append(mpf(0))
        elif tau >= 1:
            out.append(mpf(1))
        else:
            out.append(values[tau])
    return out


def y_derivatives_grid(
    spec: TrajectorySpec,
    times: Sequence[float],
    M: int,
    ctx: PrecisionContext = PrecisionContext(),
) -> list[list]:
    """:func:`y_derivatives` over many time points with one cumulative quadrature."""
    if M < 0:
        raise ValueError("M must be >= 0")
    with ctx.workprec():
        T = _as_mpf(spec.T)
        sigma = _as_mpf(spec.sigma)
        C = normalization_constant(spec.sigma, ctx)
        taus = [_as_mpf(t) / T for t in times]
        with mpmath.workprec(min(ctx.mantissa_bits, _QUAD_BITS)):
            Phis = _Phi_grid(taus, sigma, C)
        rows = []
        for tau, P in zip(taus, Phis):
            if tau <= 0 or tau >= 1:
                y = _as_mpf(spec.y_start if tau <= 0 else spec.y_end)
                rows.append([y] + [mpf(0)] * M)
                continue
            jet = phi_jet(tau, spec.sigma, max(M - 1, 0), ctx)
            rows.append(_derivs_from_jet(spec, jet, C, M, +P))
        return rows


@dataclass
class GevreyFit:
    """Fit of log S_m = log M + gamma log m! - m log R (+ p log m).

    S_m is the sampled sup_t |y^(m)(t)|.  ``log_sup`` holds log S_m for the
    fitted orders.
    """

    gamma: float
    M: float
    R: float
    residual: float
    orders: np.ndarray
    log_sup: np.ndarray
    prefactor_power: float = 0.0

    @property
    def degenerate(self) -> bool:
        return not np.isfinite(self.gamma)


def default_probe_grid(T: float, n: int = 201) -> np.ndarray:
    """Uniform grid on [0, T] plus points clustered geometrically near both ends,
    where the suprema of high derivatives sit."""
    edge = np.geomspace(1e-3, 0.25, n // 2)
    tau = np.unique(np.concatenate([np.linspace(0.0, 1.0, n), edge, 1.0 - edge]))
    return tau * T


def _log_abs_derivative(spec, t, m, ctx):
    v = abs(y_derivatives(spec, t, m, ctx)[m])
    return float(mpmath.log(v)) if v else -np.inf


def gevrey_bound_probe(
    spec: TrajectorySpec,
    M: int,
    grid: Sequence[float] | None = None,
    ctx: PrecisionContext = PrecisionContext(),
    m_min: int = 2,
    prefactor: bool = True,
    refine: bool = True,
    gamma_fixed: float | None = None,
) -> GevreyFit:
    """Estimate Gevrey constants of the trajectory from derivative suprema.

    For each order m the supremum of |y^(m)| over ``grid`` is refined by a
    bounded scalar maximisation around the best sample.  With ``prefactor``
    the regression basis is (1, log m!, m, log m): a polynomial factor m^p
    does not change the Gevrey order but biases a fit without it.  A constant
    trajectory has zero suprema and yields a NaN fit.  Passing
    ``gamma_fixed`` (e.g. ``spec.gevrey_order``) fits only M, R (and p).
    """
    from scipy.optimize import minimize_scalar

    if M < 2:
        raise ValueError("M must be >= 2")
    if not 1 <= m_min < M:
        raise ValueError("need 1 <= m_min < M")
    grid = np.asarray(default_probe_grid(spec.T) if grid is None else grid, dtype=float)
    grid = np.unique(grid)
    rows = y_derivatives_grid(spec, grid, M, ctx)
    orders = np.arange(m_min, M + 1)
    log_sup = np.empty(len(orders))
    for idx, m in enumerate(orders):
        with ctx.workprec():
            vals = [abs(r[m]) for r in rows]
        i = int(np.argmax(vals))
        if not vals[i]:
            log_sup[idx] = -np.inf
            continue
        best = float(mpmath.log(vals[i]))
        if refine:
            lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
            res = minimize_scalar(
                lambda t: -_log_abs_derivative(spec, t, m, ctx),
                bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-9 * spec.T},
            )
            best = max(best, -float(res.fun))
        log_sup[idx] = best
    if not np.all(np.isfinite(log_sup)):
        return GevreyFit(float("nan"), 0.0, float("nan"), float("nan"), orders, log_sup)
    logfact = np.array([float(mpmath.loggamma(m + 1)) for m in orders])
    cols = [np.ones(len(orders)), logfact, orders.astype(float)]
    if prefactor:
        cols.append(np.log(orders))
    target = log_sup
    if gamma_fixed is not None:
        target = log_sup - gamma_fixed * logfact
        del cols[1]
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, target, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - target) ** 2)))
    if gamma_fixed is not None:
        coef = np.insert(coef, 1, gamma_fixed)
    return GevreyFit(
        gamma=float(coef[1]),
        M=float(np.exp(coef[0])),
        R=float(np.exp(-coef[2])),
        residual=resid,
        orders=orders,
        log_sup=log_sup,
        prefactor_power=float(coef[3]) if prefactor else 0.0,
    )
