"""The graded module M(1)_a (x) Omega.

Basis states are ``h(-n1)...h(-nk) 1 (x) e_j`` where the parts ``n1 >= ... >= nk``
form a partition and ``e_j`` (1-based) runs over a Jordan basis of the vacuum
space Omega.  Monomials are *not* normalised, so creation operators act by
inserting a part with coefficient 1 and ``h(n)``, ``n > 0``, removes a part
``n`` with coefficient ``n * multiplicity``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

from . import _linalg
from .scalar import as_fraction, format_rational, lowest_weight, parse_rational

BASIS_ORDER_VERSION = 1


# ---------------------------------------------------------------- partitions

def partition_sort_key(parts) -> tuple:
    """Graded reverse-lexicographic order: by size, then descending lex."""
    return (sum(parts), tuple(-p for p in parts))


@lru_cache(maxsize=None)
def partitions(n: int) -> tuple:
    """All partitions of ``n`` in graded reverse-lex order, as tuples."""
    if n < 0:
        return ()
    if n == 0:
        return ((),)
    out = []

    def rec(remaining, largest, prefix):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for part in range(min(remaining, largest), 0, -1):
            prefix.append(part)
            rec(remaining - part, part, prefix)
            prefix.pop()

    rec(n, n, [])
    return tuple(out)


def _insert_part(parts: tuple, n: int) -> tuple:
    for i, p in enumerate(parts):
        if p <= n:
            return parts[:i] + (n,) + parts[i:]
    return parts + (n,)


def _remove_part(parts: tuple, n: int) -> tuple:
    i = parts.index(n)
    return parts[:i] + parts[i + 1:]


def merge_partitions(left: tuple, right: tuple) -> tuple:
    return tuple(sorted(left + right, reverse=True))


# ---------------------------------------------------------------- Omega

@dataclass(frozen=True)
class OmegaSpec:
    """Finite-dimensional vacuum space with h(0) in Jordan normal form.

    Basis vectors of each block are numbered so that
    ``h(0) e_i = eigenvalue * e_i + e_{i-1}`` inside the block.
    """

    eigenvalue: Fraction
    block_sizes: tuple = (1,)

    def __post_init__(self):
        object.__setattr__(self, "eigenvalue", parse_rational(self.eigenvalue))
        sizes = tuple(int(b) for b in self.block_sizes)
        if not sizes or any(b < 1 for b in sizes):
            raise ValueError(f"block sizes must be positive, got {self.block_sizes!r}")
        object.__setattr__(self, "block_sizes", sizes)

    @classmethod
    def jordan_block(cls, eigenvalue, size: int) -> "OmegaSpec":
        return cls(eigenvalue, (size,))

    @property
    def dim(self) -> int:
        return sum(self.block_sizes)

    @property
    def nilpotent_order(self) -> int:
        return max(self.block_sizes)

    def block_of(self, index: int) -> tuple[int, int]:
        """(first index of the block, 1-based position inside it)."""
        start = 1
        for size in self.block_sizes:
            if index < start + size:
                return start, index - start + 1
            start += size
        raise IndexError(f"omega index {index} out of range 1..{self.dim}")

    def lower(self, index: int, power: int = 1):
        """Index reached by ``power`` applications of the nilpotent part, or None."""
        start, pos = self.block_of(index)
        if pos - power < 1:
            return None
        return index - power

    def h0(self, index: int) -> dict:
        col = {}
        if self.eigenvalue:
            col[index] = self.eigenvalue
        below = self.lower(index)
        if below is not None:
            col[below] = Fraction(1)
        return col

    def matrix(self) -> list:
        """h(0) as a dense list-of-rows (rows/cols 0-based)."""
        n = self.dim
        rows = [[Fraction(0)] * n for _ in range(n)]
        for j in range(1, n + 1):
            for i, c in self.h0(j).items():
                rows[i - 1][j - 1] = c
        return rows

    def fingerprint(self) -> str:
        return f"{format_rational(self.eigenvalue)}:{'.'.join(map(str, self.block_sizes))}"

    def __hash__(self):
        # used as a memo key in every hot loop
        try:
            return self._hash
        except AttributeError:
            h = hash((self.eigenvalue, self.block_sizes))
            object.__setattr__(self, "_hash", h)
            return h


class FockState(NamedTuple):
    partition: tuple
    omega_index: int

    @property
    def level(self) -> int:
        return sum(self.partition)


def state_key(state: FockState) -> tuple:
    return partition_sort_key(state.partition) + (state.omega_index,)


def basis(omega: OmegaSpec, level: int) -> list:
    return [FockState(p, j) for p in partitions(level) for j in range(1, omega.dim + 1)]


# ---------------------------------------------------------------- vectors

def _clean(terms: dict) -> dict:
    return {k: as_fraction(v) for k, v in terms.items() if v}


class ModuleVector:
    """Finite rational combination of :class:`FockState` basis vectors."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        if terms is None:
            terms = {}
        elif not isinstance(terms, dict):
            terms = dict(terms)
        self._terms = {FockState(tuple(k[0]), int(k[1])): as_fraction(v)
                       for k, v in terms.items() if v}

    @classmethod
    def _raw(cls, terms: dict) -> "ModuleVector":
        vec = cls.__new__(cls)
        vec._terms = terms
        return vec

    @classmethod
    def basis_vector(cls, parts=(), omega_index: int = 1, coeff=1) -> "ModuleVector":
        parts = tuple(sorted((int(p) for p in parts), reverse=True))
        if any(p < 1 for p in parts):
            raise ValueError(f"parts must be positive: {parts!r}")
        return cls({FockState(parts, omega_index): as_fraction(coeff)})

    @classmethod
    def vacuum(cls, omega_index: int = 1) -> "ModuleVector":
        return cls.basis_vector((), omega_index)

    @property
    def terms(self) -> dict:
        return self._terms

    def items(self):
        return sorted(self._terms.items(), key=lambda kv: state_key(kv[0]))

    def __iter__(self):
        return iter(self.items())

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, ModuleVector):
            return self._terms == other._terms
        if other == 0:
            return not self._terms
        return NotImplemented

    __hash__ = None

    def __add__(self, other):
        if not isinstance(other, ModuleVector):
            return NotImplemented
        out = dict(self._terms)
        _linalg._axpy(out, 1, other._terms)
        return ModuleVector._raw(out)

    def __sub__(self, other):
        if not isinstance(other, ModuleVector):
            return NotImplemented
        out = dict(self._terms)
        _linalg._axpy(out, -1, other._terms)
        return ModuleVector._raw(out)

    def __neg__(self):
        return ModuleVector._raw({k: -v for k, v in self._terms.items()})

    def __mul__(self, scalar):
        scalar = as_fraction(scalar)
        if not scalar:
            return ModuleVector()
        return ModuleVector._raw({k: v * scalar for k, v in self._terms.items()})

    __rmul__ = __mul__

    def coefficient(self, parts=(), omega_index: int = 1) -> Fraction:
        return self._terms.get(FockState(tuple(parts), omega_index), Fraction(0))

    def levels(self) -> set:
        return {s.level for s in self._terms}

    def omega_indices(self) -> set:
        return {s.omega_index for s in self._terms}

    def leading(self):
        """(state, coefficient) of the first term in basis order, or None."""
        if not self._terms:
            return None
        s = min(self._terms, key=state_key)
        return s, self._terms[s]

    def to_lines(self) -> list:
        lines = []
        for state, c in self.items():
            parts = ",".join(map(str, state.partition)) or "-"
            lines.append(f"{parts} | {state.omega_index} | {format_rational(c)}")
        return lines

    def to_text(self) -> str:
        return "\n".join(self.to_lines())

    @classmethod
    def from_lines(cls, lines) -> "ModuleVector":
        terms = {}
        for raw in lines:
            line = raw.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split("|")]
            if len(fields) != 3:
                raise ValueError(f"malformed vector line: {raw!r}")
            parts = () if fields[0] == "-" else tuple(int(p) for p in fields[0].split(","))
            if list(parts) != sorted(parts, reverse=True) or any(p < 1 for p in parts):
                raise ValueError(f"malformed partition in line: {raw!r}")
            state = FockState(parts, int(fields[1]))
            terms[state] = terms.get(state, 0) + parse_rational(fields[2])
        return cls(terms)

    @classmethod
    def from_text(cls, text: str) -> "ModuleVector":
        return cls.from_lines(text.splitlines())

    def __repr__(self):
        if not self._terms:
            return "ModuleVector(0)"
        return "ModuleVector(" + "; ".join(self.to_lines()) + ")"


# ---------------------------------------------------------------- mode action

def _h_on_dict(n: int, terms: dict, omega: OmegaSpec) -> dict:
    out: dict = {}
    if n < 0:
        for s, c in terms.items():
            t = FockState(_insert_part(s.partition, -n), s.omega_index)
            out[t] = out.get(t, 0) + c
    elif n > 0:
        for s, c in terms.items():
            mult = s.partition.count(n)
            if mult:
                t = FockState(_remove_part(s.partition, n), s.omega_index)
                out[t] = out.get(t, 0) + c * n * mult
    else:
        for s, c in terms.items():
            for i, hc in omega.h0(s.omega_index).items():
                t = FockState(s.partition, i)
                out[t] = out.get(t, 0) + c * hc
    return {k: v for k, v in out.items() if v}


def apply_h(n: int, v: ModuleVector, omega: OmegaSpec) -> ModuleVector:
    return ModuleVector._raw(_h_on_dict(n, v.terms, omega))


@lru_cache(maxsize=200_000)
def _L_on_state(n: int, state: FockState, omega: OmegaSpec, a: Fraction) -> tuple:
    top = max(state.partition[0] if state.partition else 0, 0)
    single = {state: Fraction(1)}
    out: dict = {}
    # 1/2 sum_p :h(p) h(n-p):, each unordered pair once; the larger mode acts
    # first, which is the normal ordering.
    for p in range(-((-n) // 2), top + 1):
        q = n - p
        if q > p:
            continue
        coeff = Fraction(1, 2) if p == q else Fraction(1)
        first = _h_on_dict(p, single, omega)
        if not first:
            continue
        _linalg._axpy(out, coeff, _h_on_dict(q, first, omega))
    if a and n != -1:
        _linalg._axpy(out, -a * (n + 1), _h_on_dict(n, single, omega))
    return tuple(out.items())


def _L_on_dict(n: int, terms: dict, omega: OmegaSpec, a: Fraction) -> dict:
    out: dict = {}
    for s, c in terms.items():
        for t, d in _L_on_state(n, s, omega, a):
            new = out.get(t, 0) + c * d
            if new:
                out[t] = new
            else:
                out.pop(t, None)
    return out


def apply_L(n: int, v: ModuleVector, omega: OmegaSpec, a=0) -> ModuleVector:
    """Virasoro mode L(n) = 1/2 sum_j :h(j)h(n-j): - a(n+1) h(n)."""
    return ModuleVector._raw(_L_on_dict(n, v.terms, omega, as_fraction(a)))


# ---------------------------------------------------------------- gradings

@dataclass(frozen=True)
class WeightInfo:
    homogeneous: bool
    generalized_weight: Fraction | None = None


def weight_info(v: ModuleVector, omega: OmegaSpec, a=0) -> WeightInfo:
    levels = v.levels()
    if len(levels) > 1:
        return WeightInfo(False)
    level = levels.pop() if levels else 0
    return WeightInfo(True, level + lowest_weight(omega.eigenvalue, a))


def level_matrix_columns(op, omega: OmegaSpec, level: int) -> list:
    """Images of the level-``level`` basis under ``op`` (a dict -> dict map)."""
    return [op({s: Fraction(1)}) for s in basis(omega, level)]


def vacuum_space(omega: OmegaSpec, a=0, level_bound: int = 0) -> list:
    """Joint kernel of h(1..level_bound) inside levels 0..level_bound."""
    if level_bound < 0:
        raise ValueError("level_bound must be nonnegative")
    out = []
    for level in range(level_bound + 1):
        states = basis(omega, level)
        columns = []
        for s in states:
            image = {}
            for n in range(1, max(level_bound, 1) + 1):
                for t, c in _h_on_dict(n, {s: Fraction(1)}, omega).items():
                    image[(n, t)] = c
            columns.append(image)
        for combo in _linalg.nullspace(columns):
            out.append(ModuleVector({states[i]: c for i, c in combo.items()}))
    return out


def jordan_structure_L0(omega: OmegaSpec, a=0, level: int = 0) -> list:
    """Jordan type of L(0) on one level, as ``[(eigenvalue, block_sizes)]``."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    a = as_fraction(a)
    states = basis(omega, level)
    # single-eigenvalue Omega: every state at this level has this weight
    h = level + lowest_weight(omega.eigenvalue, a)

    def shifted(terms):
        out = _L_on_dict(0, terms, omega, a)
        _linalg._axpy(out, -h, terms)
        return out

    dim = len(states)
    ranks = [dim]
    cols = [{s: Fraction(1)} for s in states]
    for _ in range(omega.dim):
        cols = [shifted(c) for c in cols]
        ranks.append(_linalg.rank(cols))
        if ranks[-1] == 0:
            break
    # blocks of size >= k: ranks[k-1] - ranks[k]
    at_least = [ranks[k - 1] - ranks[k] for k in range(1, len(ranks))]
    at_least.append(0)
    sizes = []
    for k in range(1, len(at_least)):
        exactly = at_least[k - 1] - at_least[k]
        sizes.extend([k] * exactly)
    return [(h, sorted(sizes, reverse=True))]
