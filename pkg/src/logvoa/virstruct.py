"""Virasoro structure of M(1) (x) Omega at c = 1 and the hidden intertwiner.

Singular vectors ``u^m = P_m(h) 1`` live at weight m**2.  With Omega a nilpotent
Jordan block in the fixed basis ``w_1, w_2, ...`` (``h(0) w_i = w_{i-1}``) the
transpose of h(0) moves ``P_m(h) w_i`` to ``P_m(h) w_{i+1}``; this is how the
subsingular ``u^{2,m}`` and sub-subsingular ``u^{3,m}`` vectors are produced.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

from . import _linalg
from .fock import (FockState, ModuleVector, OmegaSpec, _h_on_dict, _L_on_dict, basis,
                   state_key)
from .intertwiner import (IntertwinerSpec, OperatorSeries, equivariance_defect)
from .logseries import LogSeries, Mode, TruncationWindow, apply_mode, first_difference
from .scalar import (as_fraction, central_charge, eta_inverse_series, format_rational, lowest_weight,
                     parse_rational, partition_count)

TIERS = ("singular", "subsingular", "subsubsingular")

TRIVIAL_OMEGA = OmegaSpec(0, (1,))


class MalformedInput(ValueError):
    pass


# ================================================================ singular vectors

@dataclass(frozen=True)
class SingularVector:
    vector: ModuleVector
    weight: Fraction

    @property
    def level(self) -> int:
        return max(self.vector.levels(), default=0)

    def verify(self, omega: OmegaSpec, a=0) -> bool:
        a = as_fraction(a)
        t = self.vector.terms
        return not _L_on_dict(1, t, omega, a) and not _L_on_dict(2, t, omega, a)


def _level_of_weight(weight, omega: OmegaSpec, a) -> int | None:
    level = parse_rational(weight) - lowest_weight(omega.eigenvalue, a)
    if level < 0 or level.denominator != 1:
        return None
    return int(level)


def singular_basis(weight, omega: OmegaSpec = TRIVIAL_OMEGA, a=0) -> list:
    """Kernel of (L(1), L(2)) on the weight-``weight`` subspace, each vector with
    leading coefficient 1 in the basis order."""
    a = parse_rational(a)
    weight = parse_rational(weight)
    level = _level_of_weight(weight, omega, a)
    if level is None:
        return []
    states = basis(omega, level)
    columns = []
    for s in states:
        single = {s: Fraction(1)}
        image = {(1, t): c for t, c in _L_on_dict(1, single, omega, a).items()}
        image.update({(2, t): c for t, c in _L_on_dict(2, single, omega, a).items()})
        columns.append(image)
    out = []
    for combo in _linalg.nullspace(columns):
        out.append(SingularVector(ModuleVector({states[i]: c for i, c in combo.items()}), weight))
    return out


@lru_cache(maxsize=None)
def _heisenberg_singular(m: int) -> tuple:
    """Terms of u^m = P_m(h) 1 in M(1) at a = 0."""
    found = singular_basis(m * m)
    if len(found) != 1:
        raise ArithmeticError(f"expected a unique singular vector at weight {m * m}, found {len(found)}")
    return tuple(found[0].vector.items())


def singular_vector(m: int, omega: OmegaSpec | None = None, tier: int = 1) -> ModuleVector:
    """``u^m`` (tier 1), ``u^{2,m}`` (tier 2) or ``u^{3,m}`` (tier 3) in M(1) (x) Omega."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    omega = omega or OmegaSpec(0, (tier,))
    if tier > omega.block_sizes[0]:
        raise MalformedInput(f"tier {tier} needs a Jordan block of size >= {tier}")
    v = ModuleVector({FockState(p, 1): c for p, c in
                      ((s.partition, c) for s, c in _heisenberg_singular(m))})
    for _ in range(tier - 1):
        v = lift_chain(v, omega)
    return v


def lift_chain(u, omega: OmegaSpec) -> ModuleVector:
    """``P(h) w_j -> P(h) w_{j+1}``: the transpose of h(0) in the fixed Jordan basis."""
    vec = u.vector if isinstance(u, SingularVector) else u
    idx = vec.omega_indices()
    if len(idx) != 1:
        raise MalformedInput(f"vector must sit on a single Omega index, found {sorted(idx)}")
    j = idx.pop()
    start, pos = omega.block_of(j)
    if pos == omega.block_sizes[_block_number(omega, start)]:
        raise MalformedInput(f"Omega index {j} is already at the top of its block")
    return ModuleVector({FockState(s.partition, j + 1): c for s, c in vec.items()})


def _block_number(omega: OmegaSpec, start: int) -> int:
    acc = 1
    for b, size in enumerate(omega.block_sizes):
        if acc == start:
            return b
        acc += size
    raise IndexError(start)


# ================================================================ submodules

class VirSubmodule:
    """Graded, echelonised span of a Vir-submodule, cut off at a level bound.

    Generators are split into level components, which is harmless because the
    generalised L(0)-weight of a state is its level plus a constant.  Closure
    only ever needs intermediate levels up to the bound: any element of the
    submodule is a sum of words L(-)...L(0)...L(+) applied to generators, and
    such a word never climbs above its final level.
    """

    def __init__(self, omega: OmegaSpec, a, bound: int):
        self.omega = omega
        self.a = parse_rational(a)
        self.bound = bound
        self.levels: dict = {}

    def _echelon(self, level: int) -> _linalg.EchelonBasis:
        if level not in self.levels:
            self.levels[level] = _linalg.EchelonBasis(order=state_key)
        return self.levels[level]

    def add_generators(self, vectors) -> None:
        queue = []
        for v in vectors:
            terms = v.terms if isinstance(v, ModuleVector) else v
            by_level: dict = {}
            for s, c in terms.items():
                by_level.setdefault(s.level, {})[s] = c
            for level, part in by_level.items():
                if level <= self.bound:
                    res = self._echelon(level).add(part)
                    if res:
                        queue.append((level, res))
        while queue:
            level, vec = queue.pop()
            for n in range(level - self.bound, level + 1):
                if n == 0:
                    continue
                image = _L_on_dict(n, vec, self.omega, self.a)
                if not image:
                    continue
                res = self._echelon(level - n).add(image)
                if res:
                    queue.append((level - n, res))
            image = _L_on_dict(0, vec, self.omega, self.a)
            if image:
                res = self._echelon(level).add(image)
                if res:
                    queue.append((level, res))

    def dims(self) -> list:
        return [len(self.levels[l]) if l in self.levels else 0 for l in range(self.bound + 1)]

    def contains(self, v) -> bool:
        terms = v.terms if isinstance(v, ModuleVector) else v
        by_level: dict = {}
        for s, c in terms.items():
            by_level.setdefault(s.level, {})[s] = c
        for level, part in by_level.items():
            if level > self.bound:
                raise ValueError(f"level {level} is above the bound {self.bound}")
            if level not in self.levels or not self.levels[level].contains(part):
                return False
        return True

    __contains__ = contains

    def basis(self, level: int) -> list:
        if level not in self.levels:
            return []
        return [ModuleVector._raw(dict(r)) for r in self.levels[level].basis()]


def vir_submodule(generators, omega: OmegaSpec, weight_bound: int, a=0) -> VirSubmodule:
    sub = VirSubmodule(omega, a, weight_bound)
    sub.add_generators(generators)
    return sub


# ================================================================ Jordan / duality

def check_L0_jordan(n: int, omega: OmegaSpec | None = None) -> bool:
    """L(0) u^{3,n} == n^2 u^{3,n} + 1/2 u^n with both built from the same P_n(h)."""
    omega = omega or OmegaSpec(0, (3,))
    if omega.eigenvalue or omega.block_sizes[0] < 3:
        raise MalformedInput("needs a nilpotent Jordan block of size >= 3")
    u3 = singular_vector(n, omega, 3)
    u1 = singular_vector(n, omega, 1)
    lhs = ModuleVector._raw(_L_on_dict(0, u3.terms, omega, Fraction(0)))
    return lhs == u3 * (n * n) + u1 * Fraction(1, 2)


def _jordan_type(M) -> list:
    """Block sizes of a nilpotent matrix (list of rows) from its rank sequence."""
    n = len(M)
    def apply(col):
        out: dict = {}
        for j, c in col.items():
            for i in range(n):
                if M[i][j]:
                    out[i] = out.get(i, 0) + M[i][j] * c
        return {k: v for k, v in out.items() if v}

    ranks = [n]
    cur = [{j: Fraction(1)} for j in range(n)]
    for _ in range(n):
        cur = [apply(c) for c in cur]
        ranks.append(_linalg.rank(cur))
    at_least = [ranks[k - 1] - ranks[k] for k in range(1, n + 1)] + [0]
    sizes = []
    for k in range(1, n + 1):
        sizes.extend([k] * (at_least[k - 1] - at_least[k]))
    return sorted(sizes, reverse=True)


def dual_block_sizes(omega: OmegaSpec) -> list:
    """Jordan type of the nilpotent part of -h(0)^T on the dual of Omega."""
    H = omega.matrix()
    n = len(H)
    lam = omega.eigenvalue
    dual = [[-(H[j][i] - (lam if i == j else 0)) for j in range(n)] for i in range(n)]
    return _jordan_type(dual)


def check_dual_jordan(omega: OmegaSpec) -> bool:
    return dual_block_sizes(omega) == sorted(omega.block_sizes, reverse=True)


# ================================================================ diagrams

@dataclass
class StructureDiagram:
    nodes: list = field(default_factory=list)     # (tier name, m, weight)
    arrows: list = field(default_factory=list)    # ((tier, m), (tier, m))
    implied: list = field(default_factory=list)   # memberships skipping a tier
    absent: list = field(default_factory=list)    # pairs tested and refuted

    def to_tgf(self) -> str:
        ids = {}
        lines = []
        for k, (tier, m, w) in enumerate(self.nodes, start=1):
            ids[(tier, m)] = k
            lines.append(f"{k} {tier}[m={m}] weight={format_rational(w)}")
        lines.append("#")
        for src, dst in self.arrows:
            lines.append(f"{ids[src]} {ids[dst]}")
        for src, dst in self.implied:
            lines.append(f"{ids[src]} {ids[dst]} implied")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        def name(node):
            return f"{node[0]}:{node[1]}"
        return {
            "nodes": [{"tier": t, "m": m, "weight": format_rational(w)} for t, m, w in self.nodes],
            "arrows": [[name(s), name(d)] for s, d in self.arrows],
            "implied": [[name(s), name(d)] for s, d in self.implied],
        }


def structure_diagram(omega: OmegaSpec, weight_bound: int) -> StructureDiagram:
    """Nodes u^{t,m} with m^2 <= bound; arrow src -> dst iff dst lies in Vir.src."""
    if omega.eigenvalue or len(omega.block_sizes) != 1 or omega.dim not in (1, 2, 3):
        raise MalformedInput("structure diagrams need a single nilpotent block of size at most 3")
    diagram = StructureDiagram()
    ms = [m for m in range(weight_bound + 1) if m * m <= weight_bound]
    vectors = {}
    for t in range(1, omega.dim + 1):
        for m in ms:
            vectors[(TIERS[t - 1], m)] = singular_vector(m, omega, t)
            diagram.nodes.append((TIERS[t - 1], m, Fraction(m * m)))
    for t in range(2, omega.dim + 1):
        for m in ms:
            src = (TIERS[t - 1], m)
            sub = vir_submodule([vectors[src]], omega, weight_bound)
            for t2 in range(1, t):
                for m2 in ms:
                    dst = (TIERS[t2 - 1], m2)
                    if sub.contains(vectors[dst]):
                        (diagram.arrows if t2 == t - 1 else diagram.implied).append((src, dst))
                    else:
                        diagram.absent.append((src, dst))
    return diagram


# ================================================================ VOA vertex operators

def _gbinom(top: int, k: int) -> Fraction:
    """Generalised binomial C(top, k) for integer top and k >= 0."""
    num = 1
    for t in range(k):
        num *= top - t
    return Fraction(num, factorial(k))


def _field_part(n: int, series: dict, omega: OmegaSpec, annihilate: bool,
                k_cap: int, reserve: int) -> dict:
    """One factor of the normal-ordered product: sum_m C(-m-1, n-1) h(m) x^{-m-n}
    over m >= 0 (annihilate) or m < 0 (create)."""
    out: dict = {}
    for k, terms in series.items():
        if annihilate:
            top = max((s.partition[0] for s in terms if s.partition), default=0)
            modes = range(0, top + 1)
        else:
            room = k_cap - reserve - k  # -m - n <= room
            modes = range(-1, -(room + n) - 1, -1)
        for m in modes:
            img = _h_on_dict(m, terms, omega)
            if not img:
                continue
            c = _gbinom(-m - 1, n - 1)
            if not c:
                continue
            _linalg._axpy(out.setdefault(k - m - n, {}), c, img)
    return {k: v for k, v in out.items() if v}


def vertex_operator_apply(v: ModuleVector, w: ModuleVector, window: TruncationWindow,
                          omega: OmegaSpec = TRIVIAL_OMEGA) -> LogSeries:
    """Y(v, x) w for v in M(1) and w in M(1) (x) Omega (no logarithms)."""
    total: dict = {}
    for vs, vc in v.items():
        if vs.omega_index != 1:
            raise MalformedInput("the first argument must lie in M(1)")
        parts = vs.partition
        k = len(parts)
        for mask in range(1 << k):
            ann = [parts[i] for i in range(k) if mask >> i & 1]
            cre = [parts[i] for i in range(k) if not mask >> i & 1]
            cur = {0: dict(w.terms)}
            for n in ann:
                cur = _field_part(n, cur, omega, True, window.k_max, 0)
            for idx, n in enumerate(cre):
                reserve = sum(1 - nn for nn in cre[idx + 1:])
                cur = _field_part(n, cur, omega, False, window.k_max, reserve)
            for kk, terms in cur.items():
                if window.k_min <= kk <= window.k_max:
                    _linalg._axpy(total.setdefault((kk, 0), {}), vc, terms)
    return LogSeries._raw(Fraction(0), window, {kj: t for kj, t in total.items() if t})


# ================================================================ fusion

def predicted_dims(m: int, n: int, bound: int) -> list:
    """Graded dimensions of L(1,(m+n)^2) + ... + L(1,(m-n)^2) at levels 0..bound."""
    ks = range(abs(m - n), m + n + 1, 2)
    return [sum(partition_count(d - k * k) - partition_count(d - k * k - 2 * k - 1) for k in ks)
            for d in range(bound + 1)]


@dataclass
class FusionReport:
    m: int
    n: int
    bound: int
    dims: list
    predicted: list

    @property
    def passed(self) -> bool:
        return self.dims == self.predicted

    def first_mismatch(self):
        for d, (x, y) in enumerate(zip(self.dims, self.predicted)):
            if x != y:
                return {"level": d, "computed": x, "predicted": y}
        return None


def fusion_span_check(m: int, n: int, weight_bound: int) -> FusionReport:
    um = singular_vector(m, TRIVIAL_OMEGA)
    un = singular_vector(n, TRIVIAL_OMEGA)
    base = m * m + n * n
    window = TruncationWindow(-base, weight_bound - base, 0)
    series = vertex_operator_apply(un, um, window)
    sub = vir_submodule([t for t in series.raw.values()], TRIVIAL_OMEGA, weight_bound)
    return FusionReport(m, n, weight_bound, sub.dims(), predicted_dims(m, n, weight_bound))


# ================================================================ hidden intertwiner

HIDDEN_OMEGA2 = OmegaSpec(0, (2,))
HIDDEN_OMEGA3 = OmegaSpec(0, (3,))
# columns: w1(x)w1, w1(x)w2, w2(x)w1, w2(x)w2
HIDDEN_T = (
    (Fraction(1, 2), 0, 0, 0),
    (0, Fraction(1, 2), Fraction(1, 2), 0),
    (0, 0, 0, 1),
)


def hidden_spec(check: bool = True) -> IntertwinerSpec:
    return IntertwinerSpec(0, HIDDEN_OMEGA2, HIDDEN_OMEGA2, HIDDEN_OMEGA3, HIDDEN_T, check=check)


@dataclass
class HiddenReport:
    m: int
    n: int
    equivariant: bool
    depth: int
    log1_witness: list
    log_free_neighbours: bool
    filtration: bool
    filtration_witness: dict | None = None
    image_contained: bool | None = None
    top_generator_reached: bool | None = None

    @property
    def passed(self) -> bool:
        return (self.equivariant and self.depth == 1 and bool(self.log1_witness)
                and self.log_free_neighbours and self.filtration
                and self.image_contained is not False)


def hidden_intertwiner_check(m: int, n: int, weight_bound: int, window: TruncationWindow,
                             image: bool = True) -> HiddenReport:
    spec = hidden_spec(check=False)
    equivariant = equivariance_defect(spec.T, spec.omega1, spec.omega2, spec.omega3) is None
    op = OperatorSeries(spec, window)
    o2, o3 = HIDDEN_OMEGA2, HIDDEN_OMEGA3
    u2m, u2n = singular_vector(m, o2, 2), singular_vector(n, o2, 2)
    um, un = singular_vector(m, o2, 1), singular_vector(n, o2, 1)

    main = op.apply(u2m, u2n, window)
    depth = max((j for (_, j) in main.raw), default=0)
    # Vir-descendants of u^{2,m} inside W_2(1,m^2) stay at depth <= 1
    for d in (ModuleVector._raw(_L_on_dict(-1, u2m.terms, o2, Fraction(0))),
              ModuleVector._raw(_L_on_dict(-2, u2m.terms, o2, Fraction(0)))):
        if d:
            depth = max(depth, max((j for (_, j) in op.apply(d, u2n, window).raw), default=0))
    log1 = sorted(((k, t) for (k, j), t in main.raw.items() if j == 1), key=lambda kt: kt[0])
    witness = [f"k={log1[0][0]}"] + ModuleVector._raw(log1[0][1]).to_lines() if log1 else []

    log_free = True
    for mm in (m - 1, m + 1):
        for nn in (n - 1, n + 1):
            if mm < 0 or nn < 0:
                continue
            s = op.apply(singular_vector(mm, o2, 1), singular_vector(nn, o2, 1), window)
            if any(j for (_, j) in s.raw):
                log_free = False

    lhs = apply_mode(Mode("h", 0), main, o3)
    rhs = op.apply(um, u2n, window) + op.apply(u2m, un, window)
    diff = first_difference(lhs, rhs)
    filt_witness = None
    if diff is not None:
        filt_witness = {"k": diff[0], "j": diff[1], "lhs": diff[2].to_lines(), "rhs": diff[3].to_lines()}

    report = HiddenReport(m, n, equivariant, depth, witness, log_free, diff is None, filt_witness)
    if image:
        coeffs = [t for t in main.raw.values()
                  if max(s.level for s in t) <= weight_bound]
        span = vir_submodule(coeffs, o3, weight_bound)
        gens = [singular_vector(k, o3, 3) for k in range(abs(m - n), m + n + 1, 2)
                if k * k <= weight_bound]
        target = vir_submodule(gens, o3, weight_bound)
        report.image_contained = all(
            target.contains(b) for lvl in range(weight_bound + 1) for b in span.basis(lvl))
        k0 = abs(m - n)
        if k0 * k0 <= weight_bound:
            report.top_generator_reached = span.contains(singular_vector(k0, o3, 3))
    return report


# ================================================================ characters

@dataclass
class CharacterReport:
    a: Fraction
    lam: Fraction
    N: int
    dims: list
    expected: list
    central_charge: Fraction
    lowest_weight: Fraction
    offset: Fraction
    offset_is_eta: bool

    @property
    def passed(self) -> bool:
        return self.dims == self.expected and self.offset_is_eta == (self.lam == self.a)


def character_check(a, lam, N: int) -> CharacterReport:
    """Graded dimensions of M(1, lam)_a and the q-offset lowest_weight - c/24."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    a, lam = parse_rational(a), parse_rational(lam)
    omega = OmegaSpec(lam, (1,))
    dims = [len(basis(omega, n)) for n in range(N + 1)]
    eta = eta_inverse_series(N)
    c = central_charge(a)
    h = lowest_weight(lam, a)
    offset = h - c / 24
    return CharacterReport(a, lam, N, dims, [int(x) for x in eta.coeffs], c, h, offset,
                           offset == eta.offset)
