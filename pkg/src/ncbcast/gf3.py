"""Arithmetic over GF(3) and incremental reduced row-echelon bases.

Coefficient vectors are plain ``dict[int, int]`` mapping a packet index
(1-based) to a nonzero field element. Zero entries are never stored.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Tuple

CoeffVector = Dict[int, int]

ADD, MUL, NEG, INV = "add", "mul", "neg", "inv"


def add(a: int, b: int) -> int:
    return (a + b) % 3


def mul(a: int, b: int) -> int:
    return (a * b) % 3


def neg(a: int) -> int:
    return (-a) % 3


def inv(a: int) -> int:
    a %= 3
    if a == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse in GF(3)")
    # 1*1 = 1 and 2*2 = 4 = 1, so every nonzero element is its own inverse
    return a


def gf3_arith(a: int, b: int, op: str) -> int:
    if op == ADD:
        return add(a, b)
    if op == MUL:
        return mul(a, b)
    if op == NEG:
        return neg(a)
    if op == INV:
        return inv(a)
    raise ValueError(f"unknown GF(3) operation {op!r}")


def clean(v: Dict[int, int]) -> CoeffVector:
    """Reduce entries mod 3 and drop zeros."""
    return {k: c % 3 for k, c in v.items() if c % 3}


def axpy(alpha: int, x: CoeffVector, y: CoeffVector) -> CoeffVector:
    """Return ``alpha*x + y`` as a new vector."""
    out = clean(y)
    alpha %= 3
    if alpha:
        _axpy_inplace(out, alpha, x)
    return out


def scale(alpha: int, x: CoeffVector) -> CoeffVector:
    alpha %= 3
    if not alpha:
        return {}
    return {k: (alpha * c) % 3 for k, c in x.items()}


def _axpy_inplace(y: CoeffVector, alpha: int, x: CoeffVector) -> None:
    for k, c in x.items():
        s = (y.get(k, 0) + alpha * c) % 3
        if s:
            y[k] = s
        else:
            del y[k]


def unit(p: int, c: int = 1) -> CoeffVector:
    return {p: c % 3} if c % 3 else {}


def format_vector(v: CoeffVector) -> str:
    """Render as ``"i:c|j:c"`` in ascending index order, ``"-"`` if zero."""
    if not v:
        return "-"
    return "|".join(f"{k}:{v[k]}" for k in sorted(v))


class KnowledgeBasis:
    """Reduced row-echelon basis of a subspace of GF(3)^n.

    Pivots are the lowest-index nonzero column of each row and carry
    coefficient 1. Unit rows (decoded packets) are kept implicitly: every
    index up to ``floor`` is decoded, plus the indices in ``_decoded``.
    The remaining rows, each with at least two nonzero entries, live in
    ``_rows`` keyed by pivot.
    """

    __slots__ = ("_floor", "_decoded", "_rows", "rank")

    def __init__(self, vectors: Iterable[CoeffVector] = ()):
        self.rank = 0
        self._floor = 0
        self._decoded: set = set()
        self._rows: Dict[int, CoeffVector] = {}
        for v in vectors:
            self.insert(v)

    def copy(self) -> "KnowledgeBasis":
        other = KnowledgeBasis()
        other.rank = self.rank
        other._floor = self._floor
        other._decoded = set(self._decoded)
        other._rows = {p: dict(r) for p, r in self._rows.items()}
        return other

    @property
    def floor(self) -> int:
        """Largest ``k`` such that every index in ``1..k`` is decoded."""
        return self._floor

    def is_decoded(self, p: int) -> bool:
        return p <= self._floor or p in self._decoded

    def is_seen(self, p: int) -> bool:
        return p in self._rows or self.is_decoded(p)

    def coded_rows(self) -> Dict[int, CoeffVector]:
        """The non-unit rows, keyed by pivot. Do not mutate."""
        return self._rows

    def decoded_above_floor(self) -> set:
        """Decoded indices beyond ``floor``. Do not mutate."""
        return self._decoded

    def rows(self) -> List[CoeffVector]:
        """All rows, unit rows included, sorted by pivot."""
        units = [{p: 1} for p in range(1, self._floor + 1)]
        units += [{p: 1} for p in self._decoded]
        units += [dict(r) for r in self._rows.values()]
        return sorted(units, key=min)

    def reduce(self, v: CoeffVector) -> CoeffVector:
        """Residual of ``v`` after elimination against the basis."""
        w = {k: c % 3 for k, c in v.items() if c % 3 and not self.is_decoded(k)}
        rows = self._rows
        # rows carry no other pivot column, so one pass over w's pivots suffices
        for p in [k for k in w if k in rows]:
            _axpy_inplace(w, 3 - w[p], rows[p])
        return w

    def in_span(self, v: CoeffVector) -> bool:
        return not self.reduce(v)

    def insert(self, v: CoeffVector) -> bool:
        """Add ``v`` to the spanning set; True iff the rank grew."""
        return self.absorb(v)[0]

    def absorb(self, v: CoeffVector) -> Tuple[bool, List[int]]:
        """Insert ``v``; return (grew, indices newly decoded by it)."""
        w = self.reduce(v)
        if not w:
            return False, []
        p = min(w)
        if w[p] != 1:
            w = scale(inv(w[p]), w)
        rows = self._rows
        for row in rows.values():
            a = row.get(p)
            if a:
                _axpy_inplace(row, 3 - a, w)
        rows[p] = w
        self.rank += 1

        newly: List[int] = []
        pending = [q for q, row in rows.items() if len(row) == 1]
        while pending:
            q = pending.pop()
            if q not in rows:
                continue
            del rows[q]
            self._mark_decoded(q)
            newly.append(q)
            for r, row in rows.items():
                if q in row:
                    del row[q]
                    if len(row) == 1:
                        pending.append(r)
        newly.sort()
        return True, newly

    def _mark_decoded(self, q: int) -> None:
        self._decoded.add(q)
        while self._floor + 1 in self._decoded:
            self._floor += 1
            self._decoded.discard(self._floor)

    def check(self) -> List[str]:
        """Structural RREF violations, empty if the basis is well formed."""
        problems = []
        if self.rank != self._floor + len(self._decoded) + len(self._rows):
            problems.append("rank differs from the pivot count")
        for p, row in self._rows.items():
            if len(row) < 2:
                problems.append(f"row {p} is a stored unit row")
            if min(row) != p or row.get(p) != 1:
                problems.append(f"row {p} has wrong pivot or leading coefficient")
            if any(c not in (1, 2) for c in row.values()):
                problems.append(f"row {p} has out-of-field coefficient")
            for k in row:
                if k != p and (k in self._rows or self.is_decoded(k)):
                    problems.append(f"row {p} not reduced at column {k}")
            if self.is_decoded(p):
                problems.append(f"pivot {p} also marked decoded")
        return problems

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeBasis):
            return NotImplemented
        return self.rows() == other.rows()

    def __repr__(self) -> str:
        return f"KnowledgeBasis(rank={self.rank}, floor={self._floor}, rows={self._rows})"


def basis_insert(basis: KnowledgeBasis, v: CoeffVector) -> Tuple[KnowledgeBasis, bool]:
    """Value-semantics insertion: the input basis is left untouched."""
    out = basis.copy()
    grew = out.insert(v)
    return out, grew


def in_span(basis: KnowledgeBasis, v: CoeffVector) -> bool:
    return basis.in_span(v)
