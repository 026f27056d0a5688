"""Exact rational scalars and the closed-form numbers attached to M(1)_a.

Every scalar in the package is a :class:`fractions.Fraction`; nothing here
ever touches floating point.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

Rational = Fraction

ETA_OFFSET = Fraction(-1, 24)


def as_fraction(x) -> Fraction:
    """Exact conversion of an int, Fraction or other exact rational (e.g. gmpy2 mpq)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, numbers.Rational):
        # Fraction(mpq) would keep mpz parts, which gmpy2 later refuses to mix with
        return Fraction(int(x.numerator), int(x.denominator))
    raise TypeError(f"not an exact rational: {x!r}")


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` or ``"p"`` (sign on the numerator only)."""
    if isinstance(text, numbers.Rational):
        return as_fraction(text)
    s = str(text).strip()
    if not s:
        raise ValueError("empty rational")
    if "/" in s:
        num, _, den = s.partition("/")
        if den.strip().startswith(("-", "+")):
            raise ValueError(f"sign must be on the numerator: {text!r}")
        if not den.strip().isdigit():
            raise ValueError(f"malformed rational: {text!r}")
    try:
        value = Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational: {text!r}") from exc
    if "." in s or "e" in s.lower():
        raise ValueError(f"decimal notation is not accepted: {text!r}")
    return value


def format_rational(q) -> str:
    q = as_fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def central_charge(a) -> Fraction:
    a = as_fraction(a)
    return 1 - 12 * a * a


def lowest_weight(lam, a) -> Fraction:
    """Lowest conformal weight of the Feigin-Fuchs module M(1, lam)_a."""
    lam, a = as_fraction(lam), as_fraction(a)
    return lam * lam / 2 - a * lam


def contragredient_weight_identity(lam, a) -> bool:
    lam, a = as_fraction(lam), as_fraction(a)
    return lowest_weight(2 * a - lam, a) == lowest_weight(lam, a)


@lru_cache(maxsize=None)
def _partition_counts(n: int) -> tuple[int, ...]:
    # Euler's pentagonal number recurrence.
    p = [1] + [0] * n
    for m in range(1, n + 1):
        total = 0
        k = 1
        while True:
            g1 = k * (3 * k - 1) // 2
            if g1 > m:
                break
            sign = 1 if k % 2 else -1
            total += sign * p[m - g1]
            g2 = k * (3 * k + 1) // 2
            if g2 <= m:
                total += sign * p[m - g2]
            k += 1
        p[m] = total
    return tuple(p)


def partition_count(n: int) -> int:
    """p(n), with p(n) = 0 for negative n."""
    if n < 0:
        return 0
    return _partition_counts(n)[n]


@dataclass(frozen=True)
class QSeries:
    """``q**offset * sum(coeffs[n] * q**n)`` truncated after ``len(coeffs)`` terms."""

    offset: Fraction
    coeffs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "offset", as_fraction(self.offset))
        object.__setattr__(self, "coeffs", tuple(as_fraction(c) for c in self.coeffs))

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, level):
        return self.coeffs[level]


def eta_inverse_series(N: int) -> QSeries:
    """q-expansion of 1/eta(tau) through q**(N - 1/24)."""
    if not isinstance(N, int) or N < 0:
        raise ValueError(f"N must be a nonnegative integer, got {N!r}")
    return QSeries(ETA_OFFSET, _partition_counts(N))
