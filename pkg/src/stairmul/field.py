"""Exact arithmetic over prime fields: elements, matrices, Vandermonde solves.

Everything here is integer-exact; no floating point. The modulus is a runtime
parameter so small-field tests and large production runs share one code path.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

DEFAULT_MODULUS = 2147483647  # 2^31 - 1, prime; products fit in 64 bits


class UnderdeterminedSystemError(ValueError):
    """Fewer independent constraints than unknowns."""


class InconsistentSystemError(ValueError):
    """Supplied equations/known entries contradict each other."""


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class PrimeField:
    """Arithmetic mod a prime q. Elements are ints in [0, q)."""

    q: int = DEFAULT_MODULUS

    def __post_init__(self) -> None:
        if not _is_prime(self.q):
            raise ValueError(f"modulus {self.q} is not prime")

    def element(self, v: int) -> int:
        return v % self.q

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def neg(self, a: int) -> int:
        return (-a) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise ZeroDivisionError("no inverse of 0 in a prime field")
        return pow(a, self.q - 2, self.q)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        return pow(a % self.q, e, self.q)

    def rand(self, rng: random.Random) -> int:
        return rng.randrange(self.q)


@dataclass(frozen=True)
class FieldMatrix:
    """Immutable matrix over a prime field, entries row-major in [0, q)."""

    field: PrimeField
    rows: int
    cols: int
    entries: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("matrix dimensions must be positive")
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entry count does not match dimensions")
        q = self.field.q
        if any(not (0 <= e < q) for e in self.entries):
            raise ValueError("entries must be reduced mod q")

    @classmethod
    def from_rows(cls, field: PrimeField, rows: Sequence[Sequence[int]]) -> "FieldMatrix":
        r = len(rows)
        c = len(rows[0])
        flat = tuple(field.element(v) for row in rows for v in row)
        return cls(field, r, c, flat)

    @classmethod
    def zeros(cls, field: PrimeField, rows: int, cols: int) -> "FieldMatrix":
        return cls(field, rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, field: PrimeField, n: int) -> "FieldMatrix":
        return cls(field, n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)))

    @classmethod
    def column(cls, field: PrimeField, values: Sequence[int]) -> "FieldMatrix":
        return cls(field, len(values), 1, tuple(field.element(v) for v in values))

    @classmethod
    def random(cls, field: PrimeField, rows: int, cols: int, rng: random.Random) -> "FieldMatrix":
        return cls(field, rows, cols, tuple(field.rand(rng) for _ in range(rows * cols)))

    def at(self, r: int, c: int) -> int:
        return self.entries[r * self.cols + c]

    def to_rows(self) -> list[list[int]]:
        return [list(self.entries[r * self.cols : (r + 1) * self.cols]) for r in range(self.rows)]

    def _check_same_shape(self, other: "FieldMatrix") -> None:
        if self.field != other.field:
            raise ValueError("mixed moduli")
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError(f"shape mismatch: {self.rows}x{self.cols} vs {other.rows}x{other.cols}")

    def add(self, other: "FieldMatrix") -> "FieldMatrix":
        self._check_same_shape(other)
        q = self.field.q
        return FieldMatrix(
            self.field, self.rows, self.cols,
            tuple((a + b) % q for a, b in zip(self.entries, other.entries)),
        )

    def sub(self, other: "FieldMatrix") -> "FieldMatrix":
        self._check_same_shape(other)
        q = self.field.q
        return FieldMatrix(
            self.field, self.rows, self.cols,
            tuple((a - b) % q for a, b in zip(self.entries, other.entries)),
        )

    def scale(self, s: int) -> "FieldMatrix":
        q = self.field.q
        s %= q
        return FieldMatrix(self.field, self.rows, self.cols, tuple((s * e) % q for e in self.entries))

    def matmul(self, other: "FieldMatrix") -> "FieldMatrix":
        if self.field != other.field:
            raise ValueError("mixed moduli")
        if self.cols != other.rows:
            raise ValueError(f"inner dimensions disagree: {self.cols} vs {other.rows}")
        q = self.field.q
        out = []
        for r in range(self.rows):
            base = r * self.cols
            for c in range(other.cols):
                acc = 0
                for i in range(self.cols):
                    acc += self.entries[base + i] * other.entries[i * other.cols + c]
                out.append(acc % q)
        return FieldMatrix(self.field, self.rows, other.cols, tuple(out))

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        return self.matmul(other)

    def is_zero(self) -> bool:
        return all(e == 0 for e in self.entries)


def vandermonde_row(field: PrimeField, x: int, width: int) -> tuple[int, ...]:
    """Powers [1, x, x^2, ..., x^(width-1)] mod q."""
    if width < 1:
        raise ValueError("width must be >= 1")
    x = field.element(x)
    out = [1]
    for _ in range(width - 1):
        out.append(field.mul(out[-1], x))
    return tuple(out)


def solve_column(
    field: PrimeField,
    equations: Sequence[tuple[int, FieldMatrix]],
    knowns: Sequence[tuple[int, FieldMatrix]],
    height: int,
) -> list[FieldMatrix]:
    """Recover a column c[0..height-1] of equally-shaped blocks.

    Each equation (x, v) asserts sum_j x^j * c[j] == v; each known (row, value)
    pins c[row]. Solves the remaining rows exactly by Gauss-Jordan elimination.
    Raises UnderdeterminedSystemError when the constraints cannot pin every
    row, InconsistentSystemError when redundant constraints disagree.
    """
    if height < 1:
        raise ValueError("height must be >= 1")
    points = [field.element(x) for x, _ in equations]
    if len(set(points)) != len(points):
        raise ValueError("evaluation points must be distinct")
    known_rows = [r for r, _ in knowns]
    if any(not (0 <= r < height) for r in known_rows):
        raise ValueError("known row index out of range")
    if len(set(known_rows)) != len(known_rows):
        raise ValueError("duplicate known rows")
    if len(equations) + len(knowns) < height:
        raise UnderdeterminedSystemError(
            f"{len(equations)} equations + {len(knowns)} knowns < height {height}"
        )

    shapes = {(v.rows, v.cols) for _, v in equations} | {(v.rows, v.cols) for _, v in knowns}
    if len(shapes) > 1:
        raise ValueError("equation/known blocks must share one shape")
    known_map = {r: v for r, v in knowns}
    unknown = [r for r in range(height) if r not in known_map]
    m = len(unknown)
    if len(equations) < m:
        raise UnderdeterminedSystemError(f"need {m} equations for {m} unknown rows, got {len(equations)}")

    # Reduce each equation by the known rows, keep coefficients of unknowns.
    rows: list[tuple[list[int], FieldMatrix]] = []
    for x, v in equations:
        powers = vandermonde_row(field, x, height)
        rhs = v
        for r, kv in known_map.items():
            rhs = rhs.sub(kv.scale(powers[r]))
        rows.append(([powers[r] for r in unknown], rhs))

    for pivot in range(m):
        hit = next((i for i in range(pivot, len(rows)) if rows[i][0][pivot] != 0), None)
        if hit is None:
            raise UnderdeterminedSystemError("singular system: no pivot for an unknown row")
        rows[pivot], rows[hit] = rows[hit], rows[pivot]
        coeffs, rhs = rows[pivot]
        inv = field.inv(coeffs[pivot])
        coeffs = [field.mul(c, inv) for c in coeffs]
        rhs = rhs.scale(inv)
        rows[pivot] = (coeffs, rhs)
        for i in range(len(rows)):
            if i == pivot:
                continue
            ci, vi = rows[i]
            f = ci[pivot]
            if f == 0:
                continue
            ci = [field.sub(a, field.mul(f, b)) for a, b in zip(ci, coeffs)]
            vi = vi.sub(rhs.scale(f))
            rows[i] = (ci, vi)

    for coeffs, rhs in rows[m:]:
        if any(c != 0 for c in coeffs) or not rhs.is_zero():
            raise InconsistentSystemError("redundant equation disagrees with solution")
    if m == 0 and rows:
        for _, rhs in rows:
            if not rhs.is_zero():
                raise InconsistentSystemError("equations disagree with known rows")

    solved = dict(zip(unknown, (rhs for _, rhs in rows[:m])))
    return [known_map[r] if r in known_map else solved[r] for r in range(height)]


def split_row_blocks(m: FieldMatrix, count: int) -> tuple[list[FieldMatrix], int]:
    """Split into `count` equal row blocks, zero-padding the bottom.

    Returns (blocks, original row count) so decoders can truncate padding.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    per = -(-m.rows // count)  # ceil
    padded = per * count
    rows = m.to_rows() + [[0] * m.cols for _ in range(padded - m.rows)]
    blocks = [
        FieldMatrix.from_rows(m.field, rows[i * per : (i + 1) * per]) for i in range(count)
    ]
    return blocks, m.rows


def stack_row_blocks(blocks: Iterable[FieldMatrix], rows: int | None = None) -> FieldMatrix:
    """Vertically concatenate blocks; optionally truncate to `rows` rows."""
    blocks = list(blocks)
    field = blocks[0].field
    out: list[list[int]] = []
    for b in blocks:
        out.extend(b.to_rows())
    if rows is not None:
        out = out[:rows]
    return FieldMatrix.from_rows(field, out)
