"""Slow, direct reference implementations used as test oracles.

Series are plain dicts ``(k, j) -> ModuleVector`` (offset tracked by the caller)
and every operator is spelled out as an explicit sum of modes through
``apply_h``.  Nothing here touches the engine's closed forms or caches.
"""

from fractions import Fraction
from math import factorial

from logvoa.fock import FockState, ModuleVector, apply_h


def _acc(out, key, v):
    total = out.get(key, ModuleVector()) + v
    if total:
        out[key] = total
    else:
        out.pop(key, None)


def top_level(S):
    return max((max(v.levels(), default=0) for v in S.values()), default=0)


def i_plus(S, omega, with_h0=True):
    """h(0) log x + sum_{m>0} h(m) x^{-m} / (-m)."""
    out = {}
    for (k, j), v in S.items():
        if with_h0:
            _acc(out, (k, j + 1), apply_h(0, v, omega))
        for m in range(1, top_level({0: v}) + 1):
            _acc(out, (k - m, j), apply_h(m, v, omega) * Fraction(-1, m))
    return out


def i_minus(S, omega, kmax):
    """sum_{m>0} h(-m) x^m / m, keeping x-powers up to kmax."""
    out = {}
    for (k, j), v in S.items():
        for m in range(1, kmax - k + 1):
            _acc(out, (k + m, j), apply_h(-m, v, omega) * Fraction(1, m))
    return out


def power(op, S, p):
    for _ in range(p):
        S = op(S)
    return {kj: v * Fraction(1, factorial(p)) for kj, v in S.items()}


def exp_op(op, S, lam, max_terms=40):
    """sum_r (lam op)^r / r! applied to S; stops once a term vanishes."""
    out = dict(S)
    cur = S
    for r in range(1, max_terms):
        cur = {kj: v * (Fraction(lam) / r) for kj, v in op(cur).items()}
        if not cur:
            break
        for kj, v in cur.items():
            _acc(out, kj, v)
    return out


def nilpotent(v, omega):
    return apply_h(0, v, omega) - v * omega.eigenvalue


def jordan_exp(S, lam, omega):
    """exp(lam log(x) h_n(0)); the x**(lam h_s(0)) factor is the caller's offset."""
    out = {}
    for (k, j), v in S.items():
        r, cur = 0, v
        while cur:
            _acc(out, (k, j + r), cur * (Fraction(lam) ** r / factorial(r)))
            r += 1
            cur = nilpotent(cur, omega)
    return out


def apply_T(S, spec, p):
    d2 = spec.omega2.dim
    out = {}
    for kj, v in S.items():
        acc = ModuleVector()
        for st, c in v.items():
            col = (p - 1) * d2 + (st.omega_index - 1)
            for r, row in enumerate(spec.T):
                if row[col]:
                    acc = acc + ModuleVector({FockState(st.partition, r + 1): c * row[col]})
        if acc:
            out[kj] = acc
    return out


def canonical(spec, i, w2, kmax):
    """Y(w_i, x) w2 for Omega_1 a single Jordan block, straight from the defining product."""
    assert len(spec.omega1.block_sizes) == 1
    lam = spec.lam
    o2, o3 = spec.omega2, spec.omega3
    out = {}
    base = {(0, 0): w2}
    for l in range(1, i + 1):
        for j in range(0, i - l + 1):
            S = power(lambda s: i_plus(s, o2), base, i - l - j)
            S = jordan_exp(S, lam, o2)
            S = apply_T(S, spec, l)
            S = exp_op(lambda s: i_plus(s, o3, with_h0=False), S, lam)
            S = {kj: v for kj, v in S.items() if kj[0] <= kmax}
            S = exp_op(lambda s: i_minus(s, o3, kmax), S, lam)
            S = power(lambda s: i_minus(s, o3, kmax), S, j)
            for kj, v in S.items():
                _acc(out, kj, v)
    return out


def agrees(series, reference, window):
    """Every in-window slot of ``series`` matches ``reference`` and vice versa."""
    keys = {kj for kj in reference if window.contains(*kj)} | set(series.raw)
    for kj in keys:
        want = reference.get(kj, ModuleVector())
        if series.coefficient(*kj) != want:
            return kj
    return None
