"""Classical (n, k) ramp secret sharing with single-share privacy.

A secret matrix is split into k-1 row blocks A_1..A_{k-1}; one uniform key
block R pads them. Worker i receives the evaluation of

    S(x_i) = R + A_1 x_i + ... + A_{k-1} x_i^{k-1}

The key sits on the constant term, so x = 0 is a legal evaluation point and
every single share is uniform regardless of the secret.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .field import FieldMatrix, PrimeField, solve_column, vandermonde_row


@dataclass(frozen=True)
class RampShare:
    worker: int
    point: int
    block: FieldMatrix


def default_ramp_points(field: PrimeField, n: int) -> tuple[int, ...]:
    """Points 0, 1, ..., n-1 (zero is fine: the key is the constant term)."""
    if n >= field.q:
        raise ValueError(f"need n < q for distinct points, got n={n}, q={field.q}")
    return tuple(range(n))


def ss_encode(
    blocks: Sequence[FieldMatrix],
    key: FieldMatrix,
    points: Sequence[int],
) -> list[RampShare]:
    """Encode k-1 secret blocks plus one key block into len(points) shares."""
    field = key.field
    shape = (key.rows, key.cols)
    if any((b.rows, b.cols) != shape or b.field != field for b in blocks):
        raise ValueError("all blocks must match the key block's shape and field")
    pts = [field.element(x) for x in points]
    if len(set(pts)) != len(pts):
        raise ValueError("evaluation points must be distinct")
    shares = []
    for i, x in enumerate(pts):
        powers = vandermonde_row(field, x, len(blocks) + 1)
        acc = key
        for j, b in enumerate(blocks):
            acc = acc.add(b.scale(powers[j + 1]))
        shares.append(RampShare(worker=i + 1, point=x, block=acc))
    return shares


def ss_decode(pairs: Sequence[tuple[int, FieldMatrix]], k: int) -> list[FieldMatrix]:
    """Recover the k-1 secret blocks from any k (point, share) pairs.

    Works equally on per-share products S_i @ x, returning the blocks of A @ x.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(pairs) < k:
        raise ValueError(f"need at least {k} shares, got {len(pairs)}")
    field = pairs[0][1].field
    coeffs = solve_column(field, list(pairs), [], k)
    return coeffs[1:]
