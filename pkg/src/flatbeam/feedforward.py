"""Series evaluation of the input u(t) and deflection w(z, t).

Both series have the shape sum_k a_k y^(2k)(t), with a_k = beta2[k] for the
input and a_k = alpha_2k(z) for the deflection.  Three truncation policies are
supported: a fixed number of terms, a relative tail threshold (for the
convergent flat series) and least-term summation (for divergent series).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mpf

from .gevrey import PrecisionContext, TrajectorySpec, y_derivatives, y_derivatives_grid
from .paramgen import (
    CoefficientTable,
    alpha_polynomial,
    bending_moment_choice,
    build_parametrization,
    flat_choice,
)

__all__ = [
    "SummationPolicy",
    "FeedforwardResult",
    "DivergenceReport",
    "even_derivative_rows",
    "sum_series",
    "series_coefficients_u",
    "series_coefficients_w",
    "eval_u",
    "eval_w",
    "eval_u_flat",
    "eval_w_flat",
    "eval_u_least_term",
    "eval_w_bending",
    "divergence_report",
    "least_term_index",
]

MODES = ("tail_epsilon", "least_term", "fixed_K")


@dataclass(frozen=True)
class SummationPolicy:
    mode: str = "least_term"
    K_max: int = 40
    eps_tail: float = 1e-20

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.K_max < 2:
            raise ValueError("K_max must be >= 2")
        if not self.eps_tail > 0:
            raise ValueError("eps_tail must be positive")


@dataclass
class FeedforwardResult:
    """Truncated series values on a time grid.

    ``term_log[i][k]`` is |a_k y^(2k)(t_i)| for every computed k;
    ``saturated[i]`` marks times where the least-term scan saw no growth up
    to K_max (or the tail rule never fired) and the full K_max sum was used.
    """

    times: np.ndarray
    values: np.ndarray
    n_t: np.ndarray
    term_log: list[list[float]]
    saturated: np.ndarray
    mode: str = "least_term"
    values_mp: list = field(default_factory=list, repr=False)

    @property
    def u_values(self) -> np.ndarray:
        return self.values

    def to_csv(self, digits: int = 17, value_name: str = "u") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", value_name, "n_t"])
        for t, v, n in zip(self.times, self.values, self.n_t):
            w.writerow([_fmt(t, digits), _fmt(v, digits), int(n)])
        return buf.getvalue()

    def term_log_csv(self, digits: int = 17) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "k", "magnitude"])
        for t, mags in zip(self.times, self.term_log):
            for k, m in enumerate(mags):
                w.writerow([_fmt(t, digits), k, _fmt(m, digits)])
        return buf.getvalue()


def _fmt(x: float, digits: int) -> str:
    return format(float(x), f".{digits}g")


def even_derivative_rows(
    spec: TrajectorySpec,
    times: Sequence[float],
    K: int,
    ctx: PrecisionContext = PrecisionContext(),
) -> list[list]:
    """Per time, the even derivatives [y, y'', ..., y^(2K)]."""
    rows = y_derivatives_grid(spec, times, 2 * K, ctx)
    return [r[::2] for r in rows]


def least_term_index(mags: Sequence, K_max: int) -> tuple[int, bool]:
    """Smallest n >= 2 with |term_{n+1}| > |term_n|, else (K_max, True)."""
    for n in range(2, min(K_max, len(mags) - 1)):
        if mags[n + 1] > mags[n]:
            return n, False
    return K_max, True


def sum_series(
    coeffs: Sequence,
    rows: Sequence[Sequence],
    times: Sequence[float],
    policy: SummationPolicy,
    ctx: PrecisionContext = PrecisionContext(),
) -> FeedforwardResult:
    """Evaluate sum_k coeffs[k] * rows[i][k] per time under ``policy``.

    ``rows[i]`` must hold the even derivatives up to index K_max (and K_max+1
    for least-term summation, which compares neighbouring terms).
    """
    K = policy.K_max
    need = K + 2 if policy.mode == "least_term" else K + 1
    if len(coeffs) < need:
        raise ValueError(f"need {need} series coefficients, got {len(coeffs)}")
    values, values_mp, n_ts, logs, sat = [], [], [], [], []
    with ctx.workprec():
        a = [mpf(c.numerator) / c.denominator if isinstance(c, Fraction) else mpf(c)
             for c in coeffs[:need]]
        for row in rows:
            if len(row) < need:
                raise ValueError("derivative row shorter than the series")
            terms = [a[k] * row[k] for k in range(need)]
            mags = [abs(x) for x in terms]
            saturated = False
            if not any(mags[1:]):
                # steady state (or a point where every derivative vanishes)
                n = 2 if policy.mode == "least_term" else 0
            elif policy.mode == "fixed_K":
                n = K
            elif policy.mode == "least_term":
                n, saturated = least_term_index(mags, K)
            else:
                n, saturated = _tail_index(terms, K, policy.eps_tail)
            s = mpmath.fsum(terms[: n + 1])
            values_mp.append(s)
            values.append(float(s))
            n_ts.append(n)
            logs.append([float(m) for m in mags])
            sat.append(saturated)
    return FeedforwardResult(
        times=np.asarray(times, dtype=float),
        values=np.array(values),
        n_t=np.array(n_ts, dtype=int),
        term_log=logs,
        saturated=np.array(sat, dtype=bool),
        mode=policy.mode,
        values_mp=values_mp,
    )


def _tail_index(terms, K, eps) -> tuple[int, bool]:
    partial = mpf(0)
    eps = mpf(eps)
    for k in range(K + 1):
        partial += terms[k]
        # two consecutive small terms guard against isolated zeros of y^(2k)
        if k >= 2 and abs(terms[k]) <= eps * abs(partial) and abs(terms[k - 1]) <= eps * abs(partial):
            return k, False
    return K, True


def series_coefficients_u(table: CoefficientTable) -> list[Fraction]:
    return list(table.beta2)


def series_coefficients_w(table: CoefficientTable, z, z_derivative: int = 0) -> list:
    """alpha_2k^(j)(z) for k = 0..K, exact when ``z`` is rational."""
    z = Fraction(z) if not isinstance(z, float) else Fraction(z).limit_denominator(10**15)
    if not 0 <= z <= 1:
        raise ValueError("z must lie in [0, 1]")
    out = []
    for k in range(table.K + 1):
        p = alpha_polynomial(table, k)
        if z_derivative:
            p = p.derivative(z_derivative)
        out.append(p(z))
    return out


def _grid(times) -> list[float]:
    return [float(t) for t in np.atleast_1d(np.asarray(times, dtype=float))]


def _rows(spec, times, policy, ctx):
    K = policy.K_max + (1 if policy.mode == "least_term" else 0)
    return even_derivative_rows(spec, times, K, ctx)


def _table_for(table: CoefficientTable, policy: SummationPolicy) -> CoefficientTable:
    need = policy.K_max + (1 if policy.mode == "least_term" else 0)
    if table.K < need:
        raise ValueError(f"table order {table.K} too small for K_max={policy.K_max}")
    return table


def eval_u(
    table: CoefficientTable,
    spec: TrajectorySpec,
    grid,
    policy: SummationPolicy,
    ctx: PrecisionContext = PrecisionContext(),
    rows=None,
) -> FeedforwardResult:
    """Input series u(t) = sum_k beta2[k] y^(2k)(t) for an arbitrary table."""
    _table_for(table, policy)
    times = _grid(grid)
    rows = rows if rows is not None else _rows(spec, times, policy, ctx)
    return sum_series(series_coefficients_u(table), rows, times, policy, ctx)


def eval_w(
    table: CoefficientTable,
    spec: TrajectorySpec,
    z,
    grid,
    policy: SummationPolicy,
    ctx: PrecisionContext = PrecisionContext(),
    z_derivative: int = 0,
    rows=None,
) -> FeedforwardResult:
    """Deflection series w(z, t) (or its ``z_derivative``-th z-derivative)."""
    _table_for(table, policy)
    times = _grid(grid)
    rows = rows if rows is not None else _rows(spec, times, policy, ctx)
    coeffs = series_coefficients_w(table, z, z_derivative)
    return sum_series(coeffs, rows, times, policy, ctx)


def _flat_table(c00, policy: SummationPolicy) -> CoefficientTable:
    K = policy.K_max + (1 if policy.mode == "least_term" else 0)
    return build_parametrization(flat_choice(Fraction(c00), K))


def eval_u_flat(
    c00,
    spec: TrajectorySpec,
    grid,
    policy: SummationPolicy = SummationPolicy("tail_epsilon", 50),
    ctx: PrecisionContext = PrecisionContext(),
    rows=None,
) -> FeedforwardResult:
    return eval_u(_flat_table(c00, policy), spec, grid, policy, ctx, rows)


def eval_w_flat(
    c00,
    spec: TrajectorySpec,
    z,
    grid,
    policy: SummationPolicy = SummationPolicy("tail_epsilon", 50),
    ctx: PrecisionContext = PrecisionContext(),
    z_derivative: int = 0,
    rows=None,
) -> FeedforwardResult:
    return eval_w(_flat_table(c00, policy), spec, z, grid, policy, ctx, z_derivative, rows)


def eval_u_least_term(
    spec: TrajectorySpec,
    grid,
    K_max: int = 40,
    ctx: PrecisionContext = PrecisionContext(),
    rows=None,
) -> FeedforwardResult:
    """Least-term summation of the bending-moment input series (beta2 = mu/2)."""
    if K_max < 3:
        raise ValueError("K_max must be >= 3")
    policy = SummationPolicy("least_term", K_max)
    table = build_parametrization(bending_moment_choice(K_max + 1))
    return eval_u(table, spec, grid, policy, ctx, rows)


def eval_w_bending(
    table: CoefficientTable,
    spec: TrajectorySpec,
    z,
    grid,
    policy: SummationPolicy = SummationPolicy("least_term", 40),
    ctx: PrecisionContext = PrecisionContext(),
    z_derivative: int = 0,
    rows=None,
) -> FeedforwardResult:
    return eval_w(table, spec, z, grid, policy, ctx, z_derivative, rows)


@dataclass
class DivergenceReport:
    """Magnitudes |beta2[k] y^(2k)(t)| for k = 0..K.

    ``least_term`` is the least-term index (smallest n >= 2 where the next
    term grows), ``minimum_index`` the index of the smallest magnitude and
    ``increasing_from`` the start of the final strictly increasing run
    (None when the last two magnitudes do not increase).
    """

    t: float
    magnitudes: list
    least_term: int
    saturated: bool
    minimum_index: int
    increasing_from: int | None

    @property
    def decreases_then_increases(self) -> bool:
        m = self.magnitudes
        return (
            self.increasing_from is not None
            and self.minimum_index > 0
            and m[self.minimum_index] < m[0]
        )

    def to_csv(self, digits: int = 17) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "magnitude", "marker"])
        for k, m in enumerate(self.magnitudes):
            marker = []
            if k == self.least_term:
                marker.append("least_term")
            if k == self.minimum_index:
                marker.append("minimum")
            if k == self.increasing_from:
                marker.append("growth_onset")
            w.writerow([k, mpmath.nstr(m, digits), "|".join(marker)])
        return buf.getvalue()


def divergence_report(
    spec: TrajectorySpec,
    t: float,
    K: int = 40,
    ctx: PrecisionContext = PrecisionContext(),
) -> DivergenceReport:
    if K < 5:
        raise ValueError("K must be >= 5")
    table = build_parametrization(bending_moment_choice(K))
    with ctx.workprec():
        d = y_derivatives(spec, t, 2 * K, ctx)
        mags = [abs(mpf(b.numerator) / b.denominator * d[2 * k])
                for k, b in enumerate(table.beta2)]
        if any(mags[1:]):
            n, sat = least_term_index(mags, K)
        else:
            n, sat = 2, False
        k_min = min(range(K + 1), key=lambda k: mags[k])
        start = K
        while start > 0 and mags[start] > mags[start - 1]:
            start -= 1
        increasing_from = start if start < K else None
    return DivergenceReport(float(t), mags, n, sat, k_min, increasing_from)
