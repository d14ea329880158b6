"""Formal differential parametrizations of the clamped-free beam.

A parametrization of order ``K`` is stored as the coefficient table of the
spatial polynomials

    alpha_2k(z) = sum_i c[k][i] z^(4i+2) + d[k][i] z^(4i+3),   0 <= i <= k,

together with the input coefficients ``beta2[k]``, so that

    w(z, t) = sum_k alpha_2k(z) y^(2k)(t),    u(t) = sum_k beta2[k] y^(2k)(t).

The free design parameter is the sequence of z^2 coefficients ``c[k][0]``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping

from .exactseq import (
    RationalSeq,
    convolve,
    eta_recursive,
    format_rational,
    mu_recursive,
    parse_rational,
)

__all__ = [
    "CoefficientTable",
    "SpatialPolynomial",
    "VerificationReport",
    "build_parametrization",
    "recursion_oracle",
    "flat_choice",
    "bending_moment_choice",
    "extract_ck0",
    "alpha_polynomial",
    "verify_formal_solution",
    "flat_closed_form_check",
    "steady_state_profile",
    "normalize_physical",
]


class SpatialPolynomial(dict):
    """Polynomial in z with exact coefficients, stored as ``{power: Fraction}``.

    Zero coefficients are dropped, so the zero polynomial is the empty dict.
    """

    def __init__(self, coeffs: Mapping[int, Fraction] | None = None):
        super().__init__()
        for p, c in (coeffs or {}).items():
            if p < 0:
                raise ValueError("negative power")
            c = Fraction(c)
            if c:
                self[int(p)] = c

    def is_zero(self) -> bool:
        return not self

    def derivative(self, n: int = 1) -> "SpatialPolynomial":
        out = {}
        for p, c in self.items():
            if p >= n:
                out[p - n] = c * math.perm(p, n)
        return SpatialPolynomial(out)

    def __call__(self, z) -> Fraction:
        """Exact evaluation for rational ``z``; float input gives a float."""
        if isinstance(z, float):
            return sum(float(c) * z**p for p, c in self.items())
        z = Fraction(z)
        return sum((c * z**p for p, c in self.items()), Fraction(0))

    def __add__(self, other: "SpatialPolynomial") -> "SpatialPolynomial":
        out = dict(self)
        for p, c in other.items():
            out[p] = out.get(p, Fraction(0)) + c
        return SpatialPolynomial(out)

    def __neg__(self) -> "SpatialPolynomial":
        return SpatialPolynomial({p: -c for p, c in self.items()})

    def __sub__(self, other: "SpatialPolynomial") -> "SpatialPolynomial":
        return self + (-other)

    def scale(self, factor) -> "SpatialPolynomial":
        f = Fraction(factor)
        return SpatialPolynomial({p: f * c for p, c in self.items()})

    def to_json(self) -> dict[str, str]:
        return {str(p): format_rational(c) for p, c in sorted(self.items())}

    @classmethod
    def from_json(cls, data: Mapping[str, str]) -> "SpatialPolynomial":
        return cls({int(p): parse_rational(c) for p, c in data.items()})

    def __repr__(self) -> str:
        if not self:
            return "0"
        return " + ".join(f"({c})*z^{p}" for p, c in sorted(self.items()))


@dataclass(frozen=True)
class CoefficientTable:
    """Triangular coefficient arrays of an order-``K`` parametrization."""

    K: int
    c: tuple[tuple[Fraction, ...], ...]
    d: tuple[tuple[Fraction, ...], ...]
    beta2: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.c) != self.K + 1 or len(self.d) != self.K + 1:
            raise ValueError("table rows do not match order K")
        if len(self.beta2) != self.K + 1:
            raise ValueError("beta2 length does not match order K")
        for k in range(self.K + 1):
            if len(self.c[k]) != k + 1 or len(self.d[k]) != k + 1:
                raise ValueError(f"row {k} is not triangular")

    @classmethod
    def from_lists(cls, c, d, beta2) -> "CoefficientTable":
        return cls(
            K=len(beta2) - 1,
            c=tuple(tuple(Fraction(x) for x in row) for row in c),
            d=tuple(tuple(Fraction(x) for x in row) for row in d),
            beta2=tuple(Fraction(x) for x in beta2),
        )

    def with_entry(self, which: str, k: int, i: int, value) -> "CoefficientTable":
        """Copy of the table with one ``c`` or ``d`` entry replaced."""
        rows = [list(r) for r in getattr(self, which)]
        rows[k][i] = Fraction(value)
        new = tuple(tuple(r) for r in rows)
        return CoefficientTable(
            self.K,
            new if which == "c" else self.c,
            new if which == "d" else self.d,
            self.beta2,
        )

    def scale(self, factor) -> "CoefficientTable":
        f = Fraction(factor)
        return CoefficientTable(
            self.K,
            tuple(tuple(f * x for x in row) for row in self.c),
            tuple(tuple(f * x for x in row) for row in self.d),
            tuple(f * x for x in self.beta2),
        )

    def __add__(self, other: "CoefficientTable") -> "CoefficientTable":
        if other.K != self.K:
            raise ValueError("order mismatch")
        return CoefficientTable(
            self.K,
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.c, other.c)),
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.d, other.d)),
            tuple(a + b for a, b in zip(self.beta2, other.beta2)),
        )

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "c": [[format_rational(x) for x in row] for row in self.c],
            "d": [[format_rational(x) for x in row] for row in self.d],
            "beta2": [format_rational(x) for x in self.beta2],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, data: Mapping) -> "CoefficientTable":
        try:
            K = int(data["K"])
            table = cls(
                K=K,
                c=tuple(tuple(parse_rational(x) for x in row) for row in data["c"]),
                d=tuple(tuple(parse_rational(x) for x in row) for row in data["d"]),
                beta2=tuple(parse_rational(x) for x in data["beta2"]),
            )
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed coefficient table: {exc}") from exc
        return table


def _seq(values: Iterable, meaning: str = "ck0") -> RationalSeq:
    if isinstance(values, RationalSeq):
        return RationalSeq(values.entries, meaning)
    return RationalSeq.of(values, meaning)


def build_parametrization(seq) -> CoefficientTable:
    """Table uniquely determined by the z^2 coefficients ``seq = (c[k][0])``.

    d[k][0] and beta2[k] come from convolving ``seq`` with the eta and mu
    sequences; the higher coefficients follow from

        c[k][i] = (-1)^i 2! / (4i+2)! * c[k-i][0]
        d[k][i] = (-1)^i 3! / (4i+3)! * d[k-i][0]
    """
    ck0 = _seq(seq)
    K = ck0.order
    if K < 0:
        raise ValueError("empty sequence")
    dk0 = convolve(eta_recursive(K), ck0, "dk0")
    beta2 = convolve(mu_recursive(K), ck0, "beta2k")
    c = tuple(
        tuple(
            Fraction((-1) ** i * 2, factorial(4 * i + 2)) * ck0[k - i]
            for i in range(k + 1)
        )
        for k in range(K + 1)
    )
    d = tuple(
        tuple(
            Fraction((-1) ** i * 6, factorial(4 * i + 3)) * dk0[k - i]
            for i in range(k + 1)
        )
        for k in range(K + 1)
    )
    return CoefficientTable(K, c, d, beta2.entries)


def recursion_oracle(beta2) -> CoefficientTable:
    """Level-by-level construction of the table from the input coefficients.

    Independent of :func:`build_parametrization`: each alpha_2k is obtained
    from alpha_2(k-1) and beta2[k] alone, without the eta/mu sequences.
    """
    beta = [Fraction(b) for b in beta2]
    K = len(beta) - 1
    if K < 0:
        raise ValueError("empty beta2 sequence")
    c = [[beta[0] / 2]]
    d = [[Fraction(0)]]
    for k in range(1, K + 1):
        cp, dp = c[k - 1], d[k - 1]
        sc = sum(
            (cp[i] / (4 * i + 4) + dp[i] / (4 * i + 5) for i in range(k)),
            Fraction(0),
        )
        sd = sum(
            (cp[i] / (4 * i + 3) + dp[i] / (4 * i + 4) for i in range(k)),
            Fraction(0),
        )
        ck = [beta[k] / 2 - sc / 2]
        dk = [sd / 6]
        for i in range(1, k + 1):
            ck.append(-cp[i - 1] * Fraction(factorial(4 * i - 2), factorial(4 * i + 2)))
            dk.append(-dp[i - 1] * Fraction(factorial(4 * i - 1), factorial(4 * i + 3)))
        c.append(ck)
        d.append(dk)
    return CoefficientTable.from_lists(c, d, beta)


def flat_choice(c00, K: int) -> RationalSeq:
    """c[k][0] = (-1)^k c00 / (4k)!, the choice giving the flat parametrization."""
    if K < 0:
        raise ValueError("order must be non-negative")
    c00 = Fraction(c00)
    return RationalSeq(
        tuple(Fraction((-1) ** k, factorial(4 * k)) * c00 for k in range(K + 1)),
        "ck0",
    )


def bending_moment_choice(K: int) -> RationalSeq:
    """(1/2, 0, ..., 0): y becomes the bending moment at the clamped end."""
    if K < 0:
        raise ValueError("order must be non-negative")
    return RationalSeq((Fraction(1, 2),) + (Fraction(0),) * K, "ck0")


def extract_ck0(table: CoefficientTable) -> RationalSeq:
    return RationalSeq(tuple(row[0] for row in table.c), "ck0")


def alpha_polynomial(table: CoefficientTable, k: int) -> SpatialPolynomial:
    if not 0 <= k <= table.K:
        raise IndexError(f"index {k} outside 0..{table.K}")
    coeffs: dict[int, Fraction] = {}
    for i in range(k + 1):
        coeffs[4 * i + 2] = table.c[k][i]
        coeffs[4 * i + 3] = table.d[k][i]
    return SpatialPolynomial(coeffs)


@dataclass
class VerificationReport:
    """Exact residuals of the boundary value problems, level by level.

    ``ode[k]`` is alpha_2k'''' + alpha_2(k-1) (for k >= 1, alpha_0'''' for
    k = 0); ``boundary[k]`` holds alpha(0), alpha'(0), alpha''(1) - beta2[k]
    and alpha'''(1).
    """

    K: int
    ode: list[SpatialPolynomial] = field(default_factory=list)
    boundary: list[tuple[Fraction, Fraction, Fraction, Fraction]] = field(
        default_factory=list
    )
    structure: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            all(r.is_zero() for r in self.ode)
            and all(not any(b) for b in self.boundary)
            and not self.structure
        )

    def failing_levels(self) -> list[int]:
        bad = {k for k, r in enumerate(self.ode) if not r.is_zero()}
        bad |= {k for k, b in enumerate(self.boundary) if any(b)}
        return sorted(bad)

    def summary(self) -> str:
        if self.passed:
            return f"K={self.K}: all residuals zero"
        lines = [f"K={self.K}: FAILED"]
        for k in self.failing_levels():
            lines.append(
                f"  level {k}: ode residual {self.ode[k]!r}, "
                f"boundary residuals {[format_rational(b) for b in self.boundary[k]]}"
            )
        lines.extend(f"  {msg}" for msg in self.structure)
        return "\n".join(lines)


def verify_formal_solution(table: CoefficientTable) -> VerificationReport:
    """Check every alpha_2k against its boundary value problem, exactly."""
    report = VerificationReport(table.K)
    for k in range(table.K + 1):
        if table.d[k][k] != 0:
            report.structure.append(f"d[{k}][{k}] = {table.d[k][k]} (expected 0)")
    prev = None
    for k in range(table.K + 1):
        a = alpha_polynomial(table, k)
        d1, d2, d3 = a.derivative(1), a.derivative(2), a.derivative(3)
        ode = a.derivative(4)
        if prev is not None:
            ode = ode + prev
        report.ode.append(ode)
        report.boundary.append((a(0), d1(0), d2(1) - table.beta2[k], d3(1)))
        prev = a
    return report


@dataclass
class ClosedFormReport:
    """Comparison of a recursion-built flat table with printed closed forms.

    ``printed_ratio`` maps ``("c"|"d", k, i)`` to recursion/printed for the
    factor-4 / factor-16 coefficient formulas; ``series_mismatch`` lists
    entries differing from the series form with factors 2 and 8 per unit c00.
    """

    c00: Fraction
    K: int
    printed_ratio: dict[tuple[str, int, int], Fraction]
    series_mismatch: list[tuple[str, int, int]]
    beta_mismatch: list[int]

    @property
    def series_consistent(self) -> bool:
        return not self.series_mismatch and not self.beta_mismatch

    @property
    def printed_consistent(self) -> bool:
        return all(r == 1 for r in self.printed_ratio.values())

    def summary(self) -> str:
        ratios = sorted({r for r in self.printed_ratio.values()})
        return (
            f"flat table c00={self.c00}, K={self.K}: "
            f"series form {'matches' if self.series_consistent else 'DIFFERS'}; "
            f"printed coefficient formulas differ by ratio(s) "
            f"{[format_rational(r) for r in ratios]}"
        )


def flat_closed_form_check(c00, K: int) -> ClosedFormReport:
    c00 = Fraction(c00)
    if K < 1:
        raise ValueError("K must be >= 1")
    table = build_parametrization(flat_choice(c00, K))
    ratios: dict[tuple[str, int, int], Fraction] = {}
    series_bad: list[tuple[str, int, int]] = []
    for k in range(K + 1):
        sign = (-1) ** k
        for i in range(k + 1):
            fk = factorial(4 * (k - i))
            # printed coefficient formulas (factors 4 and -16 times c00)
            pc = Fraction(4 * sign, factorial(4 * i + 2) * fk) * c00
            pd = Fraction(-16 * sign * (k - i), factorial(4 * i + 3) * fk) * c00
            # series form, written for c00 = 2 with factor 4 overall
            sc = Fraction(2 * sign, factorial(4 * i + 2) * fk) * c00
            sd = Fraction(-8 * sign * (k - i), factorial(4 * i + 3) * fk) * c00
            if pc:
                ratios[("c", k, i)] = table.c[k][i] / pc
            if pd:
                ratios[("d", k, i)] = table.d[k][i] / pd
            if table.c[k][i] != sc:
                series_bad.append(("c", k, i))
            if table.d[k][i] != sd:
                series_bad.append(("d", k, i))
    beta_bad = []
    for k in range(K + 1):
        expect = 2 * c00 if k == 0 else Fraction(4**k, factorial(4 * k)) * c00
        if table.beta2[k] != expect:
            beta_bad.append(k)
    return ClosedFormReport(c00, K, ratios, series_bad, beta_bad)


def steady_state_profile(table: CoefficientTable, ybar) -> SpatialPolynomial:
    """Equilibrium deflection alpha_0(z) * ybar = c00 * ybar * z^2."""
    return alpha_polynomial(table, 0).scale(ybar)


def normalize_physical(mu: float, EI: float, L: float) -> tuple[float, float]:
    """Scale factors taking mu w_tt = -EI w_zzzz on [0, L] to the unit beam.

    Returns ``(space_scale, time_scale)`` with z_norm = space_scale * z and
    t_norm = time_scale * t, i.e. ``(1/L, sqrt(EI/mu)/L^2)``.
    """
    for name, v in (("mu", mu), ("EI", EI), ("L", L)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v!r}")
    return 1.0 / L, math.sqrt(EI / mu) / L**2
