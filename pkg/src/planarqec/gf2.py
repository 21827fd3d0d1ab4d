"""Dense GF(2) matrices with bit-packed row reduction."""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np


def _pack_rows(a: np.ndarray) -> list[int]:
    # bit j of the integer is column j
    weights = [1 << j for j in range(a.shape[1])]
    return [sum(w for w, bit in zip(weights, row) if bit) for row in a.tolist()]


def _eliminate(rows: list[int]) -> tuple[list[int], list[int]]:
    """Reduce packed rows in place; return (independent rows, pivot bits)."""
    basis: list[int] = []
    pivots: list[int] = []
    for r in rows:
        for b, pv in zip(basis, pivots):
            if r & pv:
                r ^= b
        if r:
            pv = r & -r
            # keep the basis fully reduced on pivot columns
            for i, b in enumerate(basis):
                if b & pv:
                    basis[i] = b ^ r
            basis.append(r)
            pivots.append(pv)
    return basis, pivots


class Gf2Matrix:
    """Binary matrix stored densely as uint8, with a sparse row view on demand.

    Instances are treated as immutable: the backing array is marked read-only.
    """

    __slots__ = ("_a", "_packed", "_basis")

    def __init__(self, entries: np.ndarray | Sequence[Sequence[int]], cols: int | None = None):
        a = np.array(entries, dtype=np.uint8) % 2
        if a.ndim == 1 and a.size == 0:
            a = np.zeros((0, cols or 0), dtype=np.uint8)
        if a.ndim != 2:
            raise ValueError("GF(2) matrix must be two-dimensional")
        a.setflags(write=False)
        self._a = a
        self._packed: list[int] | None = None
        self._basis: tuple[list[int], list[int]] | None = None

    @classmethod
    def zeros(cls, rows: int, cols: int) -> Gf2Matrix:
        return cls(np.zeros((rows, cols), dtype=np.uint8))

    @classmethod
    def identity(cls, size: int) -> Gf2Matrix:
        return cls(np.eye(size, dtype=np.uint8))

    @classmethod
    def from_supports(cls, supports: Iterable[Iterable[int]], cols: int) -> Gf2Matrix:
        supports = [list(s) for s in supports]
        a = np.zeros((len(supports), cols), dtype=np.uint8)
        for i, s in enumerate(supports):
            for j in s:
                a[i, j] ^= 1
        return cls(a)

    @property
    def array(self) -> np.ndarray:
        return self._a

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    @property
    def T(self) -> Gf2Matrix:
        return Gf2Matrix(self._a.T)

    def row_supports(self) -> list[list[int]]:
        return [np.flatnonzero(r).tolist() for r in self._a]

    def col_supports(self) -> list[list[int]]:
        return [np.flatnonzero(c).tolist() for c in self._a.T]

    def packed_rows(self) -> list[int]:
        if self._packed is None:
            self._packed = _pack_rows(self._a)
        return self._packed

    def rank(self) -> int:
        return len(self._reduced()[0])

    def rank_by_columns(self) -> int:
        """Rank computed from the column space, used as a cross-check."""
        return len(_eliminate(_pack_rows(self._a.T))[0])

    def _reduced(self) -> tuple[list[int], list[int]]:
        if self._basis is None:
            self._basis = _eliminate(list(self.packed_rows()))
        return self._basis

    def in_rowspace(self, vec: np.ndarray | Sequence[int]) -> bool:
        v = _pack_rows(np.asarray(vec, dtype=np.uint8).reshape(1, -1))[0]
        basis, pivots = self._reduced()
        for b, pv in zip(basis, pivots):
            if v & pv:
                v ^= b
        return v == 0

    def rowspace_basis(self) -> Gf2Matrix:
        basis, _ = self._reduced()
        return Gf2Matrix(_unpack(basis, self.cols))

    def nullspace(self) -> Gf2Matrix:
        """Basis of {x : M x = 0}, one vector per row."""
        basis, pivots = self._reduced()
        pivot_cols = {pv.bit_length() - 1: b for b, pv in zip(basis, pivots)}
        free = [j for j in range(self.cols) if j not in pivot_cols]
        vecs = []
        for f in free:
            v = 1 << f
            for pc, b in pivot_cols.items():
                if (b >> f) & 1:
                    v |= 1 << pc
            vecs.append(v)
        return Gf2Matrix(_unpack(vecs, self.cols))

    def __matmul__(self, other: Gf2Matrix | np.ndarray) -> Gf2Matrix | np.ndarray:
        if isinstance(other, Gf2Matrix):
            return Gf2Matrix(self._a.astype(np.int64) @ other._a.astype(np.int64) % 2)
        return (self._a.astype(np.int64) @ np.asarray(other, dtype=np.int64) % 2).astype(np.uint8)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Gf2Matrix) and np.array_equal(self._a, other._a)

    def __hash__(self) -> int:
        return hash((self._a.shape, self._a.tobytes()))

    def __repr__(self) -> str:
        return f"Gf2Matrix({self.rows}x{self.cols}, rank={self.rank()})"

    def is_zero(self) -> bool:
        return not self._a.any()


def _unpack(packed: list[int], cols: int) -> np.ndarray:
    a = np.zeros((len(packed), cols), dtype=np.uint8)
    for i, v in enumerate(packed):
        j = 0
        while v:
            if v & 1:
                a[i, j] = 1
            v >>= 1
            j += 1
    return a


def gf2_rank(m: Gf2Matrix | np.ndarray) -> int:
    """Rank over GF(2)."""
    if not isinstance(m, Gf2Matrix):
        m = Gf2Matrix(m)
    return m.rank()

