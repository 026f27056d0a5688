"""Truncated series ``sum c[k, j] x**(offset + k) log(x)**j`` with module-vector coefficients.

A series carries the window on which its coefficients are *known exactly*.
Everything outside the window is unknown, so reading there raises
:class:`WindowExceeded` instead of returning zero, and every operation
reports the window on which its own output is still exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from . import _linalg
from .fock import ModuleVector, OmegaSpec, _h_on_dict, _L_on_dict
from .scalar import as_fraction, format_rational, parse_rational

DEFAULT_MAX_LOG = 16


class WindowExceeded(LookupError):
    pass


class IncompatibleOffset(ValueError):
    pass


@dataclass(frozen=True)
class TruncationWindow:
    k_min: int
    k_max: int
    max_log: int = DEFAULT_MAX_LOG

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise ValueError(f"empty window [{self.k_min}, {self.k_max}]")
        if self.max_log < 0:
            raise ValueError("max_log must be nonnegative")

    @classmethod
    def span(cls, n: int, max_log: int = DEFAULT_MAX_LOG) -> "TruncationWindow":
        """Exponents offset-n ... offset+n."""
        if n < 0:
            raise ValueError("span must be nonnegative")
        return cls(-n, n, max_log)

    def contains(self, k: int, j: int) -> bool:
        return self.k_min <= k <= self.k_max and 0 <= j <= self.max_log

    def shifted(self, d: int) -> "TruncationWindow":
        return TruncationWindow(self.k_min + d, self.k_max + d, self.max_log)

    def widened(self, extra: int) -> "TruncationWindow":
        return TruncationWindow(self.k_min - extra, self.k_max + extra, self.max_log)

    def intersect(self, other: "TruncationWindow") -> "TruncationWindow":
        lo, hi = max(self.k_min, other.k_min), min(self.k_max, other.k_max)
        if lo > hi:
            raise WindowExceeded(f"windows {self} and {other} do not overlap")
        return TruncationWindow(lo, hi, min(self.max_log, other.max_log))

    def as_dict(self) -> dict:
        return {"k_min": self.k_min, "k_max": self.k_max, "max_log": self.max_log}


class Mode(NamedTuple):
    """A Heisenberg (``"h"``) or Virasoro (``"L"``) mode."""

    kind: str
    n: int

    def __str__(self):
        return f"{self.kind}({self.n})"


class LogSeries:
    """Immutable truncated log series; coefficients are kept as raw state dicts.

    ``complete`` records that every coefficient outside the window is known to
    be zero (a finite series), which is what the x-shifting operators need.
    """

    __slots__ = ("offset", "window", "_coeffs", "complete")

    def __init__(self, offset, window: TruncationWindow, coeffs=None, complete: bool = False):
        self.offset = parse_rational(offset)
        self.window = window
        self.complete = complete
        clean = {}
        for (k, j), vec in (coeffs or {}).items():
            terms = vec.terms if isinstance(vec, ModuleVector) else vec
            if terms and window.contains(k, j):
                clean[(k, j)] = dict(terms)
        self._coeffs = clean

    @classmethod
    def _raw(cls, offset, window, coeffs, complete: bool = False):
        s = cls.__new__(cls)
        s.offset, s.window, s.complete = offset, window, complete
        s._coeffs = {kj: v for kj, v in coeffs.items() if v and window.contains(*kj)}
        return s

    @classmethod
    def constant(cls, vec: ModuleVector, window: TruncationWindow, offset=0) -> "LogSeries":
        return cls(offset, window, {(0, 0): vec}, complete=window.contains(0, 0))

    @classmethod
    def zero(cls, window: TruncationWindow, offset=0) -> "LogSeries":
        return cls(offset, window, {}, complete=True)

    # ---- access
    @property
    def raw(self) -> dict:
        return self._coeffs

    def keys(self):
        return sorted(self._coeffs)

    def __bool__(self):
        return bool(self._coeffs)

    def coefficient(self, k: int, j: int) -> ModuleVector:
        if not self.window.contains(k, j):
            raise WindowExceeded(f"(k={k}, j={j}) outside {self.window}")
        return ModuleVector._raw(dict(self._coeffs.get((k, j), {})))

    def exponents(self) -> set:
        return {self.offset + k for k, _ in self._coeffs}

    # ---- arithmetic
    def _rebased(self, offset: Fraction):
        d = self.offset - offset
        if d.denominator != 1:
            raise IncompatibleOffset(f"offsets {self.offset} and {offset} differ by a non-integer")
        d = int(d)
        return d, {(k + d, j): v for (k, j), v in self._coeffs.items()}, self.window.shifted(d)

    def __add__(self, other):
        if not isinstance(other, LogSeries):
            return NotImplemented
        return add(self, other)

    def __sub__(self, other):
        if not isinstance(other, LogSeries):
            return NotImplemented
        return add(self, scale(other, -1))

    def __neg__(self):
        return scale(self, -1)

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__

    def restrict(self, window: TruncationWindow) -> "LogSeries":
        return LogSeries._raw(self.offset, self.window.intersect(window), self._coeffs)

    # ---- output
    def to_lines(self) -> list:
        lines = []
        for k, j in self.keys():
            vec = ModuleVector._raw(self._coeffs[(k, j)])
            body = "; ".join(vec.to_lines())
            lines.append(f"x^({format_rational(self.offset)}{k:+d}) log^{j} : {body}")
        return lines

    def to_json(self) -> dict:
        return {
            "offset": format_rational(self.offset),
            "window": self.window.as_dict(),
            "terms": [
                {"k": k, "j": j, "vector": ModuleVector._raw(self._coeffs[(k, j)]).to_lines()}
                for k, j in self.keys()
            ],
        }

    @classmethod
    def from_json(cls, data) -> "LogSeries":
        if isinstance(data, str):
            data = json.loads(data)
        window = TruncationWindow(**data["window"])
        coeffs = {(t["k"], t["j"]): ModuleVector.from_lines(t["vector"]) for t in data["terms"]}
        return cls(data["offset"], window, coeffs)

    def __eq__(self, other):
        if not isinstance(other, LogSeries):
            return NotImplemented
        return (self.offset == other.offset and self.window == other.window
                and self._coeffs == other._coeffs)

    __hash__ = None

    def __repr__(self):
        return f"LogSeries(offset={format_rational(self.offset)}, window={self.window}, terms={len(self._coeffs)})"


def add(s: LogSeries, t: LogSeries) -> LogSeries:
    """Coefficientwise sum on the common window, in the base of ``s``."""
    _, shifted, twin = t._rebased(s.offset)
    window = s.window.intersect(twin)
    out = {kj: dict(v) for kj, v in s._coeffs.items() if window.contains(*kj)}
    for kj, v in shifted.items():
        if not window.contains(*kj):
            continue
        acc = out.setdefault(kj, {})
        _linalg._axpy(acc, 1, v)
    return LogSeries._raw(s.offset, window, out)


def scale(s: LogSeries, c) -> LogSeries:
    c = as_fraction(c)
    if not c:
        return LogSeries._raw(s.offset, s.window, {}, s.complete)
    return LogSeries._raw(s.offset, s.window,
                          {kj: {st: x * c for st, x in v.items()} for kj, v in s._coeffs.items()},
                          s.complete)


def times_power(s: LogSeries, r) -> LogSeries:
    """Multiply by ``x**r``.  Integer ``r`` moves the window, rational ``r`` the offset."""
    r = as_fraction(r)
    if r.denominator == 1:
        d = int(r)
        return LogSeries._raw(s.offset, s.window.shifted(d),
                              {(k + d, j): v for (k, j), v in s._coeffs.items()}, s.complete)
    return LogSeries._raw(s.offset + r, s.window, dict(s._coeffs), s.complete)


def ddx(s: LogSeries) -> LogSeries:
    """d/dx with d/dx log(x) = 1/x.

    The unknown slots just above the window feed the new top slot and the
    unknown log degree above ``max_log`` feeds the new top log slot, so both
    bounds drop by one.
    """
    w = s.window
    if w.max_log == 0:
        raise WindowExceeded("d/dx needs log degree 1 to be known; window has max_log 0")
    window = TruncationWindow(w.k_min - 1, w.k_max - 1, w.max_log - 1)
    out: dict = {}
    for (k, j), v in s._coeffs.items():
        e = s.offset + k
        if e:
            _linalg._axpy(out.setdefault((k - 1, j), {}), e, v)
        if j:
            _linalg._axpy(out.setdefault((k - 1, j - 1), {}), j, v)
    return LogSeries._raw(s.offset, window, out)


def apply_mode(op: Mode, s: LogSeries, omega: OmegaSpec, a=0) -> LogSeries:
    """Apply ``h(n)`` or ``L(n)`` to every coefficient; the window is unchanged."""
    kind, n = op
    a = as_fraction(a)
    if kind == "h":
        f = lambda terms: _h_on_dict(n, terms, omega)  # noqa: E731
    elif kind == "L":
        f = lambda terms: _L_on_dict(n, terms, omega, a)  # noqa: E731
    else:
        raise ValueError(f"unknown mode kind {kind!r}")
    return LogSeries._raw(s.offset, s.window, {kj: f(v) for kj, v in s._coeffs.items()}, s.complete)


def apply_linear(f, s: LogSeries) -> LogSeries:
    """Apply a raw ``dict -> dict`` linear map to every coefficient."""
    return LogSeries._raw(s.offset, s.window, {kj: f(v) for kj, v in s._coeffs.items()})


def depth(s: LogSeries) -> int:
    return max((j for (_, j) in s._coeffs), default=0)


def coefficient(s: LogSeries, k: int, j: int) -> ModuleVector:
    return s.coefficient(k, j)


def first_difference(s: LogSeries, t: LogSeries):
    """First ``(k, j, s_coeff, t_coeff)`` where the two disagree on the common window.

    Returns None when they agree.  Offsets must differ by an integer.
    """
    _, shifted, twin = t._rebased(s.offset)
    window = s.window.intersect(twin)
    keys = {kj for kj in s._coeffs if window.contains(*kj)}
    keys |= {kj for kj in shifted if window.contains(*kj)}
    for kj in sorted(keys):
        a = s._coeffs.get(kj, {})
        b = shifted.get(kj, {})
        if a != b:
            return kj[0], kj[1], ModuleVector._raw(dict(a)), ModuleVector._raw(dict(b))
    return None


def log_derivative(s: LogSeries) -> LogSeries:
    """Formal d/d(log x): ``log**j -> j log**(j-1)``, powers of x untouched."""
    if s.window.max_log == 0:
        raise WindowExceeded("d/dlog needs log degree 1 to be known; window has max_log 0")
    out = {}
    for (k, j), v in s._coeffs.items():
        if j:
            out[(k, j - 1)] = {st: c * j for st, c in v.items()}
    w = s.window
    return LogSeries._raw(s.offset, TruncationWindow(w.k_min, w.k_max, w.max_log - 1), out)
