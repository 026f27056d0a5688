"""Sparse Gaussian elimination over Q.

Vectors are plain dicts ``key -> Fraction`` with no stored zeros.  Keys must
be mutually comparable through the ``order`` callable handed to each routine;
the pivot of a reduced row is always its smallest key.
"""

from __future__ import annotations

from fractions import Fraction


def _axpy(target: dict, scale, source: dict) -> None:
    """target += scale * source, dropping cancellations."""
    for key, value in source.items():
        new = target.get(key, 0) + scale * value
        if new:
            target[key] = new
        else:
            target.pop(key, None)


def _inverse(x):
    return Fraction(1, x) if isinstance(x, int) else 1 / x


class EchelonBasis:
    """Incrementally built row-echelon basis of a subspace.

    ``add`` returns the reduced residue (empty when the vector was already in
    the span) so callers can use it both for membership and for growth.
    """

    def __init__(self, order=None):
        self._order = order if order is not None else (lambda k: k)
        self.rows: dict = {}

    def __len__(self):
        return len(self.rows)

    def reduce(self, vec: dict) -> dict:
        v = dict(vec)
        order = self._order
        rows = self.rows
        while True:
            hits = [k for k in v if k in rows]
            if not hits:
                return v
            p = min(hits, key=order)
            _axpy(v, -v[p], rows[p])

    def add(self, vec: dict) -> dict:
        v = self.reduce(vec)
        if v:
            p = min(v, key=self._order)
            inv = _inverse(v[p])
            self.rows[p] = {k: c * inv for k, c in v.items()}
        return v

    def contains(self, vec: dict) -> bool:
        return not self.reduce(vec)

    def basis(self):
        return [self.rows[p] for p in sorted(self.rows, key=self._order)]


def rank(rows) -> int:
    """Rank of a list of sparse rows (column keys must be orderable)."""
    eb = EchelonBasis()
    for r in rows:
        if r:
            eb.add(r)
    return len(eb)


def nullspace(columns, order=None):
    """Basis of ``{c : sum_i c_i * columns[i] = 0}``.

    ``columns`` is a list of sparse dicts (the images of basis vectors).  The
    result is a list of dicts ``column_index -> Fraction`` in reduced form:
    each vector has a distinguished free column with coefficient 1 and the
    free columns of different vectors are distinct.
    """
    # Row-reduce the transpose-free way: eliminate on output keys while
    # tracking column combinations.
    n = len(columns)
    pivots: dict = {}  # output key -> (reduced image, combination)
    kernel = []
    order = order if order is not None else (lambda k: k)
    for idx in range(n):
        image = dict(columns[idx])
        combo = {idx: Fraction(1)}
        while True:
            hits = [k for k in image if k in pivots]
            if not hits:
                break
            p = min(hits, key=order)
            scale = -image[p]
            prow, pcombo = pivots[p]
            _axpy(image, scale, prow)
            _axpy(combo, scale, pcombo)
        if image:
            p = min(image, key=order)
            inv = _inverse(image[p])
            pivots[p] = ({k: c * inv for k, c in image.items()},
                         {k: c * inv for k, c in combo.items()})
        else:
            kernel.append(combo)
    return _rref_rows(kernel, order=lambda i: i)


def _rref_rows(vectors, order):
    """Fully reduced row-echelon form of a list of sparse vectors."""
    eb = EchelonBasis(order)
    for v in vectors:
        eb.add(v)
    piv = sorted(eb.rows, key=order)
    rows = {p: dict(eb.rows[p]) for p in piv}
    # back-substitute so that pivots appear in exactly one row
    for p in reversed(piv):
        for q in piv:
            if q != p and p in rows[q]:
                _axpy(rows[q], -rows[q][p], rows[p])
    return [rows[p] for p in piv]
