"""Exact rational sequences driving the beam parametrizations.

Everything here works on :class:`fractions.Fraction`, which keeps numerator
and denominator coprime with a positive denominator after every operation.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Iterator, Sequence

import mpmath

__all__ = [
    "RationalSeq",
    "eta_recursive",
    "mu_recursive",
    "bernoulli_numbers",
    "euler_numbers",
    "eta_closed_form",
    "mu_closed_form",
    "convolve",
    "to_csv",
]

MEANINGS = frozenset(
    {"eta", "mu", "bernoulli", "euler", "ck0", "dk0", "beta2k", "generic"}
)


@dataclass(frozen=True)
class RationalSeq:
    """Immutable, 0-indexed sequence of exact rationals."""

    entries: tuple[Fraction, ...]
    meaning: str = "generic"

    def __post_init__(self) -> None:
        if self.meaning not in MEANINGS:
            raise ValueError(f"unknown sequence meaning {self.meaning!r}")
        object.__setattr__(
            self, "entries", tuple(Fraction(e) for e in self.entries)
        )

    @classmethod
    def of(cls, values: Iterable, meaning: str = "generic") -> "RationalSeq":
        return cls(tuple(Fraction(v) for v in values), meaning)

    @property
    def order(self) -> int:
        return len(self.entries) - 1

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.entries)

    def scaled(self, factor) -> "RationalSeq":
        f = Fraction(factor)
        return RationalSeq(tuple(f * e for e in self.entries), self.meaning)

    def __add__(self, other: "RationalSeq") -> "RationalSeq":
        if len(other) != len(self):
            raise ValueError("length mismatch")
        return RationalSeq(
            tuple(a + b for a, b in zip(self.entries, other.entries)),
            self.meaning,
        )


def _check_order(K: int) -> None:
    if not isinstance(K, int) or K < 0:
        raise ValueError(f"order must be a non-negative integer, got {K!r}")


def eta_recursive(K: int) -> RationalSeq:
    """eta_0 = 0 and, for k >= 1,
    eta_k = -(-1)^k / (3 (4k-1)!) - sum_{i=1..k} eta_{k-i} (-1)^i / (4i)!
    """
    _check_order(K)
    eta = [Fraction(0)]
    for k in range(1, K + 1):
        acc = Fraction(-((-1) ** k), 3 * factorial(4 * k - 1))
        for i in range(1, k + 1):
            acc -= eta[k - i] * Fraction((-1) ** i, factorial(4 * i))
        eta.append(acc)
    return RationalSeq(tuple(eta), "eta")


def mu_recursive(K: int) -> RationalSeq:
    """mu_0 = 2 and, for k >= 1,
    mu_k = 4^k / (4k)! - sum_{i=1..k} mu_{k-i} (-1)^i / (4i)!
    """
    _check_order(K)
    mu = [Fraction(2)]
    for k in range(1, K + 1):
        acc = Fraction(4**k, factorial(4 * k))
        for i in range(1, k + 1):
            acc -= mu[k - i] * Fraction((-1) ** i, factorial(4 * i))
        mu.append(acc)
    return RationalSeq(tuple(mu), "mu")


def bernoulli_numbers(N: int) -> RationalSeq:
    """B_0..B_N from sum_{j=0}^{n} C(n+1, j) B_j = 0, first kind (B_1 = -1/2)."""
    _check_order(N)
    B = [Fraction(1)]
    for n in range(1, N + 1):
        s = sum((comb(n + 1, j) * B[j] for j in range(n)), Fraction(0))
        B.append(-s / (n + 1))
    return RationalSeq(tuple(B), "bernoulli")


def euler_numbers(N: int) -> RationalSeq:
    """Even-index Euler numbers E_0, E_2, ..., E_{2N}.

    Entry ``n`` holds E_{2n}; odd-index Euler numbers vanish and are not stored.
    """
    _check_order(N)
    E = [Fraction(1)]
    for n in range(1, N + 1):
        s = sum((comb(2 * n, 2 * j) * E[j] for j in range(n)), Fraction(0))
        E.append(-s)
    return RationalSeq(tuple(E), "euler")


def eta_closed_form(K: int) -> RationalSeq:
    """eta_k = 4^{k+1} (1 - 16^k) B_{4k} / (6 (4k)!), evaluated exactly."""
    _check_order(K)
    B = bernoulli_numbers(4 * K)
    out = tuple(
        Fraction(4 ** (k + 1) * (1 - 16**k), 6 * factorial(4 * k)) * B[4 * k]
        for k in range(K + 1)
    )
    return RationalSeq(out, "eta")


def mu_closed_form(K: int) -> RationalSeq:
    """mu_k = 2 / (4^k (4k)!) * sum_{i=0}^{2k} (-1)^i E_{2i} C(4k, 2i)."""
    _check_order(K)
    E = euler_numbers(2 * K)
    out = []
    for k in range(K + 1):
        s = sum(
            ((-1) ** i * E[i] * comb(4 * k, 2 * i) for i in range(2 * k + 1)),
            Fraction(0),
        )
        out.append(Fraction(2, 4**k * factorial(4 * k)) * s)
    return RationalSeq(tuple(out), "mu")


def convolve(
    a: Sequence[Fraction], b: Sequence[Fraction], meaning: str = "generic"
) -> RationalSeq:
    """Discrete convolution out_k = sum_{i=0}^{k} a_{k-i} b_i, truncated to len(a)."""
    if len(a) != len(b):
        raise ValueError(
            f"convolve needs equal lengths, got {len(a)} and {len(b)}"
        )
    n = len(a)
    out = []
    for k in range(n):
        acc = Fraction(0)
        for i in range(k + 1):
            if a[k - i] and b[i]:
                acc += a[k - i] * b[i]
        out.append(acc)
    return RationalSeq(tuple(out), meaning)


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


def format_decimal(x: Fraction, digits: int = 17) -> str:
    """Decimal rendering of an exact rational with ``digits`` significant digits."""
    with mpmath.workdps(digits + 10):
        return mpmath.nstr(
            mpmath.mpf(x.numerator) / x.denominator,
            digits,
            min_fixed=-5,
            max_fixed=digits,
        )


def to_csv(
    seq: RationalSeq,
    fmt: str = "exact",
    digits: int = 17,
    reference: RationalSeq | None = None,
) -> str:
    """Render a sequence as CSV.

    ``fmt="exact"`` writes ``k,numerator,denominator``, ``"fraction"`` writes
    ``k,value`` with ``p/q`` values and ``"decimal"`` writes ``k,value`` at
    ``digits`` significant digits.  When ``reference`` is given (the closed
    form next to the recursion, say), a ``discrepancy`` column holds
    ``seq[k] - reference[k]``.
    """
    if fmt not in ("exact", "fraction", "decimal"):
        raise ValueError(f"unknown format {fmt!r}")
    render = format_rational if fmt != "decimal" else (lambda x: format_decimal(x, digits))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["k", "numerator", "denominator"] if fmt == "exact" else ["k", "value"]
    if reference is not None:
        header.append("discrepancy")
    w.writerow(header)
    for k, x in enumerate(seq):
        row = [k, x.numerator, x.denominator] if fmt == "exact" else [k, render(x)]
        if reference is not None:
            row.append(render(x - reference[k]))
        w.writerow(row)
    return buf.getvalue()
