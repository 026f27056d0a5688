from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from logvoa.fock import ModuleVector, OmegaSpec, apply_h, apply_L, basis, jordan_structure_L0, partitions
from logvoa.intertwiner import IntertwinerSpec, OperatorSeries
from logvoa.logseries import TruncationWindow, ddx, first_difference
from logvoa.scalar import ETA_OFFSET, partition_count
from logvoa.virstruct import (TIERS, TRIVIAL_OMEGA, MalformedInput, check_dual_jordan,
                              check_L0_jordan, character_check, dual_block_sizes,
                              fusion_span_check, hidden_intertwiner_check, hidden_spec, lift_chain,
                              predicted_dims, singular_basis, singular_vector, structure_diagram,
                              vertex_operator_apply, vir_submodule)

TWO = OmegaSpec(0, (2,))
THREE = OmegaSpec(0, (3,))


def vec(parts=(), j=1, c=1):
    return ModuleVector.basis_vector(parts, j, c)


def kernel_dim_oracle(level):
    """Rank-nullity with sympy: dim ker (L(1), L(2)) on level ``level`` of M(1)."""
    import sympy

    states = basis(TRIVIAL_OMEGA, level)
    rows = {}
    cols = []
    for s in states:
        img = {}
        for n in (1, 2):
            for t, c in apply_L(n, vec(s.partition), TRIVIAL_OMEGA, 0).items():
                img[(n, t)] = c
                rows.setdefault((n, t), len(rows))
        cols.append(img)
    M = sympy.zeros(max(len(rows), 1), len(states))
    for j, img in enumerate(cols):
        for key, c in img.items():
            M[rows[key], j] = sympy.Rational(c.numerator, c.denominator)
    return len(states) - M.rank()


# ---------------------------------------------------------------- singular vectors

def test_singular_dimensions_against_rank_oracle():
    for w in range(10):
        found = singular_basis(w)
        assert len(found) == kernel_dim_oracle(w)
        assert len(found) == (1 if w in (0, 1, 4, 9) else 0)
        for sv in found:
            assert sv.verify(TRIVIAL_OMEGA, 0)
            assert sv.vector.leading()[1] == 1


def test_singular_examples():
    assert [s.vector for s in singular_basis(0)] == [vec()]
    assert [s.vector for s in singular_basis(1)] == [vec((1,))]
    assert singular_basis(Fraction(1, 2)) == []
    assert singular_basis(-1) == []


def test_singular_vector_tiers():
    assert singular_vector(1, TWO, 2) == vec((1,), 2)
    assert singular_vector(1, THREE, 3) == vec((1,), 3)
    with pytest.raises(MalformedInput):
        singular_vector(1, TWO, 3)
    with pytest.raises(ValueError):
        singular_vector(-1)


def test_lift_chain():
    assert lift_chain(vec((), 1), TWO) == vec((), 2)
    assert lift_chain(vec((1,), 1), TWO) == vec((1,), 2)
    assert lift_chain(lift_chain(vec((1,), 1), THREE), THREE) == vec((1,), 3)
    with pytest.raises(MalformedInput):
        lift_chain(vec((), 2), TWO)
    with pytest.raises(MalformedInput):
        lift_chain(vec((), 1) + vec((), 2), THREE)


def test_lifted_singulars_satisfy_h0_relation():
    for m in range(3):
        u = singular_vector(m, THREE, 1)
        u2 = singular_vector(m, THREE, 2)
        u3 = singular_vector(m, THREE, 3)
        assert apply_h(0, u3, THREE) == u2
        assert apply_h(0, u2, THREE) == u
        assert not apply_h(0, u, THREE)


# ---------------------------------------------------------------- submodules

def test_vir_submodule_examples():
    # L(-1) kills the vacuum but L(-2), L(-3) do not: the c = 1 vacuum character
    sub = vir_submodule([vec()], TRIVIAL_OMEGA, 6)
    assert sub.dims() == _c1_dims(0, 6) == [1, 0, 1, 1, 2, 2, 4]
    assert not sub.contains(vec((1,)))
    assert vir_submodule([vec((), 2)], TWO, 2).contains(singular_vector(1, TWO, 1))
    sub = vir_submodule([singular_vector(1, TWO, 2)], TWO, 4)
    assert sub.contains(singular_vector(0, TWO, 1))
    assert sub.contains(singular_vector(2, TWO, 1))


def test_submodule_is_closed():
    sub = vir_submodule([singular_vector(1, TWO, 2)], TWO, 4)
    for level in range(5):
        for b in sub.basis(level):
            for n in range(-2, 3):
                img = apply_L(n, b, TWO, 0)
                if img and max(img.levels()) <= 4:
                    assert sub.contains(img)


def test_no_arrow_skipping_two():
    sub = vir_submodule([singular_vector(0, TWO, 2)], TWO, 4)
    assert not sub.contains(singular_vector(2, TWO, 1))


@pytest.mark.parametrize("m", [1, 2])
def test_membership_at_bound_nine(m):
    sub = vir_submodule([singular_vector(m, TWO, 2)], TWO, 9)
    for k in range(4):
        assert sub.contains(singular_vector(k, TWO, 1)) == (abs(k - m) == 1), k


# ---------------------------------------------------------------- Jordan structure

@pytest.mark.parametrize("n", [0, 1, 2])
def test_L0_jordan(n):
    assert check_L0_jordan(n)
    u3 = singular_vector(n, THREE, 3)
    expect = u3 * (n * n) + singular_vector(n, THREE, 1) * Fraction(1, 2)
    assert apply_L(0, u3, THREE, 0) == expect


def test_genuine_block_at_each_level():
    for level in (0, 1, 4):
        [(_, sizes)] = jordan_structure_L0(THREE, 0, level)
        assert max(sizes) >= 2


@pytest.mark.parametrize("sizes", [(1,), (2,), (3,), (2, 1), (3, 3, 1)])
def test_dual_block_sizes(sizes):
    om = OmegaSpec(0, sizes)
    assert dual_block_sizes(om) == sorted(sizes, reverse=True)
    assert check_dual_jordan(om)


# ---------------------------------------------------------------- diagrams

def test_structure_diagram_two():
    d = structure_diagram(TWO, 4)
    s, t = TIERS[0], TIERS[1]
    assert set(d.arrows) == {((t, 0), (s, 1)), ((t, 1), (s, 0)), ((t, 1), (s, 2)), ((t, 2), (s, 1))}
    assert ((t, 0), (s, 2)) in d.absent
    assert len(d.nodes) == 6
    text = d.to_tgf()
    assert text.count("\n#\n") == 1


def test_structure_diagram_three():
    d = structure_diagram(THREE, 4)
    s, t, u = TIERS
    arrows = set(d.arrows)
    assert {((u, 0), (t, 1)), ((u, 1), (t, 0)), ((u, 1), (t, 2))} <= arrows
    assert {((t, 0), (s, 1)), ((t, 1), (s, 0)), ((t, 1), (s, 2))} <= arrows
    assert not any(src[0] == u and dst[0] == s for src, dst in d.arrows)


def test_structure_diagram_trivial_and_errors():
    d = structure_diagram(TWO, 0)
    assert [n[:2] for n in d.nodes] == [(TIERS[0], 0), (TIERS[1], 0)]
    assert structure_diagram(OmegaSpec(0, (1,)), 0).arrows == []
    with pytest.raises(MalformedInput):
        structure_diagram(OmegaSpec(1, (2,)), 4)
    with pytest.raises(MalformedInput):
        structure_diagram(OmegaSpec(0, (4,)), 4)


# ---------------------------------------------------------------- vertex operators

W = TruncationWindow(-6, 4, 0)


def test_vacuum_axiom():
    for w in (vec(), vec((2, 1)), vec((1,), 1, 3)):
        s = vertex_operator_apply(vec(), w, W)
        assert s.keys() == [(0, 0)] and s.coefficient(0, 0) == w


def test_heisenberg_field():
    w = vec((2, 1, 1))
    s = vertex_operator_apply(vec((1,)), w, W)
    for k in range(W.k_min, W.k_max + 1):
        # x^k carries h(n) with -n-1 = k
        assert s.coefficient(k, 0) == apply_h(-k - 1, w, TRIVIAL_OMEGA)


def test_derivative_field():
    w = vec((2, 1))
    lhs = vertex_operator_apply(vec((2,)), w, TruncationWindow(-6, 3, 0))
    rhs = ddx(vertex_operator_apply(vec((1,)), w, TruncationWindow(-5, 4, 1)))
    assert first_difference(lhs, rhs) is None


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.data())
def test_vertex_operator_matches_intertwiner_engine(lv, lw, data):
    """M(1) is a module over itself: the lam = nu = 0, T = 1 intertwiner is Y."""
    one = OmegaSpec(0, (1,))
    spec = IntertwinerSpec(0, one, one, one, ((1,),))
    v = vec(data.draw(st.sampled_from(partitions(lv))))
    w = vec(data.draw(st.sampled_from(partitions(lw))))
    window = TruncationWindow(-5, 3, 0)
    assert vertex_operator_apply(v, w, window) == OperatorSeries(spec).apply(v, w, window)


def test_vertex_operator_rejects_jordan_first_argument():
    with pytest.raises(MalformedInput):
        vertex_operator_apply(vec((), 2), vec(), W, TWO)


# ---------------------------------------------------------------- fusion

def _c1_dims(k, bound):
    """dim L(1, k^2) at relative level d: p(d) - p(d - 2k - 1)."""
    return [partition_count(d) - partition_count(d - 2 * k - 1) for d in range(bound + 1)]


def test_predicted_dims_from_characters():
    # shift each irreducible to its own lowest weight k^2 before adding
    for m, n, bound in ((0, 0, 6), (1, 1, 8), (2, 1, 9)):
        total = [0] * (bound + 1)
        for k in range(abs(m - n), m + n + 1, 2):
            for d, x in enumerate(_c1_dims(k, bound)):
                if d + k * k <= bound:
                    total[d + k * k] += x
        assert predicted_dims(m, n, bound) == total


def test_fusion_examples():
    r = fusion_span_check(0, 0, 6)
    assert r.passed and r.dims == _c1_dims(0, 6)
    assert fusion_span_check(1, 1, 6).passed
    r = fusion_span_check(2, 1, 9)
    assert r.passed and r.first_mismatch() is None


# ---------------------------------------------------------------- hidden intertwiner

def test_hidden_spec_is_equivariant():
    assert hidden_spec().is_equivariant()


@pytest.mark.parametrize("m,n", [(0, 0), (1, 0), (0, 1), (1, 1)])
def test_hidden_intertwiner(m, n):
    rep = hidden_intertwiner_check(m, n, 4, TruncationWindow.span(6))
    assert rep.equivariant and rep.depth == 1 and rep.log1_witness
    assert rep.filtration, rep.filtration_witness
    assert rep.log_free_neighbours
    assert rep.image_contained
    assert rep.top_generator_reached in (True, None)
    assert rep.passed


# ---------------------------------------------------------------- characters

def test_character_examples():
    r = character_check(Fraction(1, 2), Fraction(1, 2), 10)
    assert r.passed and r.offset == ETA_OFFSET
    assert r.central_charge == -2 and r.lowest_weight == Fraction(-1, 8)
    assert r.dims == [partition_count(n) for n in range(11)]
    r = character_check(Fraction(1, 2), 0, 4)
    assert not r.offset_is_eta and r.offset == Fraction(1, 12)
    r = character_check(0, 0, 12)
    assert r.passed and r.dims == r.expected
    assert character_check(0, 0, 0).dims == [1]
    with pytest.raises(ValueError):
        character_check(0, 0, -1)
