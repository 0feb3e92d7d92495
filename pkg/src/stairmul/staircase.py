"""Staircase secret-sharing code for non-colluding workers.

The secret matrix is cut into (k-1)*alpha row blocks, alpha = lcm{k..n-1}.
They are arranged, together with alpha fresh key blocks and copies of earlier
cells, into an n x alpha pre-code matrix whose column heights descend in
steps ("the staircase"):

  * columns are grouped by height d, from d = n on the left down to d = k
    on the right; group G_d spans columns (beta[d+1], beta[d]] where
    beta[d] = alpha*(k-1)/(d-1) and beta[n+1] = 0;
  * the tall group G_n carries every secret block in rows 1..n-1 and a fresh
    key in row n;
  * each shorter group G_d repeats, in rows 1..d-1, the row-(d+1) cells of
    every taller column (the capacity identity (d-1)*w_d = beta[d+1] makes
    this a perfect fit), puts a fresh key in row d, and zeros below.

Column t is then encoded as an (n, height_t) Vandermonde codeword: worker i's
subshare t is sum_j x_i^(j-1) * M[j, t]. Reading the first beta[d] subshares
from any d workers recovers every secret: short columns decode directly and
their copies seed the taller ones. One fresh key per column, each multiplied
by a nonzero power of x_i, keeps every single worker's view uniform.
"""

from __future__ import annotations

import itertools
import math
import random
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .field import FieldMatrix, PrimeField, solve_column, vandermonde_row


class EnumerationTooLargeError(ValueError):
    """A requested exhaustive audit would enumerate too many cases."""


@dataclass(frozen=True)
class StaircaseParams:
    """Shape parameters of an (n, k) staircase code.

    beta[d] is the per-worker subshare prefix a d-worker decoder reads;
    width[d] the number of columns of height d; frac[d] the read fraction
    (k-1)/(d-1).
    """

    n: int
    k: int
    alpha: int
    beta: dict[int, int]
    width: dict[int, int]
    frac: dict[int, Fraction]

    @property
    def secret_count(self) -> int:
        return (self.k - 1) * self.alpha

    def d_range(self) -> range:
        return range(self.k, self.n + 1)


def sc_params(n: int, k: int) -> StaircaseParams:
    """Compute alpha = lcm{k..n-1} and the per-d read/width tables."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if n <= k:
        raise ValueError("need n > k")
    alpha = math.lcm(*range(k, n))
    beta = {d: alpha * (k - 1) // (d - 1) for d in range(k, n + 1)}
    for d in range(k, n + 1):
        if alpha * (k - 1) % (d - 1):
            raise AssertionError("alpha must clear every denominator")
    width = {d: beta[d] - beta.get(d + 1, 0) for d in range(k, n + 1)}
    frac = {d: Fraction(k - 1, d - 1) for d in range(k, n + 1)}
    return StaircaseParams(n=n, k=k, alpha=alpha, beta=beta, width=width, frac=frac)


# Layout cells. Positions are 0-indexed (row, column) into the n x alpha grid.


@dataclass(frozen=True)
class Secret:
    index: int


@dataclass(frozen=True)
class FreshKey:
    index: int


@dataclass(frozen=True)
class Copy:
    row: int
    col: int


@dataclass(frozen=True)
class Zero:
    pass


Cell = Union[Secret, FreshKey, Copy, Zero]

ZERO = Zero()


@dataclass(frozen=True)
class StaircaseLayout:
    params: StaircaseParams
    heights: tuple[int, ...]  # per column
    cells: tuple[tuple[Cell, ...], ...]  # cells[col][row], full n rows

    def cell(self, row: int, col: int) -> Cell:
        return self.cells[col][row]

    def group_of(self, col: int) -> int:
        return self.heights[col]

    def canonical(self, row: int, col: int) -> tuple[int, int]:
        """Follow copy references to the originating cell."""
        while isinstance(self.cells[col][row], Copy):
            c = self.cells[col][row]
            row, col = c.row, c.col
        return row, col

    def group_columns(self, d: int) -> range:
        return group_columns(self.params, d)


def group_columns(params: StaircaseParams, d: int) -> range:
    """Column span of the height-d group (0-indexed, half-open)."""
    return range(params.beta.get(d + 1, 0), params.beta[d])


def sc_layout(params: StaircaseParams) -> StaircaseLayout:
    """Deterministic cell placement: secrets fill the tall group column-major,
    keys are indexed left to right, copies reference sources column-major."""
    n, k, alpha = params.n, params.k, params.alpha
    heights = tuple(d for d in range(n, k - 1, -1) for _ in range(params.width[d]))
    cols: list[list[Cell]] = [[ZERO] * n for _ in range(alpha)]

    for col in range(params.beta[n]):
        for row in range(n - 1):
            cols[col][row] = Secret(col * (n - 1) + row)
        cols[col][n - 1] = FreshKey(col)

    for d in range(n - 1, k - 1, -1):
        sources = [(d, c) for c in range(params.beta[d + 1])]
        assert len(sources) == (d - 1) * params.width[d]
        it = iter(sources)
        for col in group_columns(params, d):
            for row in range(d - 1):
                src = next(it)
                cols[col][row] = Copy(*src)
            cols[col][d - 1] = FreshKey(col)

    return StaircaseLayout(
        params=params,
        heights=heights,
        cells=tuple(tuple(c) for c in cols),
    )


@dataclass(frozen=True)
class StaircaseShare:
    worker: int
    point: int
    subshares: tuple[FieldMatrix, ...]


def default_staircase_points(field: PrimeField, n: int) -> tuple[int, ...]:
    """Points 1..n; zero is forbidden because key coefficients must not vanish."""
    if n >= field.q:
        raise ValueError(f"need n < q for distinct nonzero points, got n={n}, q={field.q}")
    return tuple(range(1, n + 1))


def _instantiate(
    layout: StaircaseLayout,
    blocks: Sequence[FieldMatrix],
    keys: Sequence[FieldMatrix],
) -> list[list[FieldMatrix]]:
    """Fill the pre-code grid with actual blocks (copies resolved)."""
    field = keys[0].field
    shape = (keys[0].rows, keys[0].cols)
    zero = FieldMatrix.zeros(field, *shape)

    def value(row: int, col: int) -> FieldMatrix:
        row, col = layout.canonical(row, col)
        cell = layout.cell(row, col)
        if isinstance(cell, Secret):
            return blocks[cell.index]
        if isinstance(cell, FreshKey):
            return keys[cell.index]
        return zero

    n = layout.params.n
    return [[value(r, c) for r in range(n)] for c in range(layout.params.alpha)]


def sc_encode(
    blocks: Sequence[FieldMatrix],
    keys: Sequence[FieldMatrix],
    points: Sequence[int],
    layout: StaircaseLayout,
) -> list[StaircaseShare]:
    """Encode secret blocks + fresh keys into n shares of alpha subshares."""
    params = layout.params
    if len(blocks) != params.secret_count:
        raise ValueError(f"expected {params.secret_count} secret blocks, got {len(blocks)}")
    if len(keys) != params.alpha:
        raise ValueError(f"expected {params.alpha} key blocks, got {len(keys)}")
    field = keys[0].field
    shape = (keys[0].rows, keys[0].cols)
    for b in itertools.chain(blocks, keys):
        if (b.rows, b.cols) != shape or b.field != field:
            raise ValueError("all blocks must share one shape and field")
    pts = [field.element(x) for x in points]
    if len(pts) != params.n:
        raise ValueError(f"expected {params.n} points, got {len(pts)}")
    if 0 in pts:
        raise ValueError("evaluation points must be nonzero")
    if len(set(pts)) != len(pts):
        raise ValueError("evaluation points must be distinct")

    grid = _instantiate(layout, blocks, keys)
    shares = []
    for i, x in enumerate(pts):
        powers = vandermonde_row(field, x, params.n)
        subshares = []
        for col in range(params.alpha):
            h = layout.heights[col]
            acc = grid[col][0]
            for row in range(1, h):
                acc = acc.add(grid[col][row].scale(powers[row]))
            subshares.append(acc)
        shares.append(StaircaseShare(worker=i + 1, point=x, subshares=tuple(subshares)))
    return shares


def sc_read_plan(params: StaircaseParams, d: int) -> int:
    """Subshares each of d workers must deliver before decoding is possible."""
    if d not in params.beta:
        raise ValueError(f"d must be in {params.k}..{params.n}, got {d}")
    return params.beta[d]


def _decode_work(params: StaircaseParams, d: int) -> int:
    # Total subshare symbols a d-decoder consumes.
    return d * params.beta[d]


def sc_decodable(
    received: Sequence[int], params: StaircaseParams
) -> tuple[int, tuple[int, ...]] | None:
    """First feasible decoding option, if any.

    `received[i]` counts delivered subshares of worker i+1. Among feasible d
    (at least d workers delivered their beta[d]-prefix), picks the one with
    the least total symbols to process, ties to the smallest d; returns
    (d, worker ids).
    """
    if len(received) != params.n:
        raise ValueError(f"expected {params.n} counts")
    if any(c < 0 or c > params.alpha for c in received):
        raise ValueError("counts must lie in [0, alpha]")
    best: tuple[int, int] | None = None
    for d in params.d_range():
        ready = [i + 1 for i, c in enumerate(received) if c >= params.beta[d]]
        if len(ready) >= d:
            key = (_decode_work(params, d), d)
            if best is None or key < best[0]:
                best = (key, d)  # type: ignore[assignment]
    if best is None:
        return None
    d = best[1]
    ready = [i + 1 for i, c in enumerate(received) if c >= params.beta[d]]
    return d, tuple(ready[:d])


def sc_decode(
    responses: Mapping[int, Sequence[FieldMatrix]],
    d: int,
    layout: StaircaseLayout,
    points: Sequence[int],
) -> list[FieldMatrix]:
    """Recover all secret blocks from the beta[d]-prefixes of d workers.

    Solves column groups bottom-up (heights d, d+1, ..., n). A short column
    decodes outright from the d evaluations; every value it reveals feeds the
    taller columns through the copy structure, so each taller column needs
    only its first d rows solved. Also decodes subshare products (blocks
    replaced by subshare @ x), returning the blocks of A @ x.
    """
    params = layout.params
    if d not in params.beta:
        raise ValueError(f"d must be in {params.k}..{params.n}, got {d}")
    if len(responses) != d:
        raise ValueError(f"expected exactly {d} workers, got {len(responses)}")
    need = params.beta[d]
    field = None
    prefix: dict[int, Sequence[FieldMatrix]] = {}
    for w, subs in responses.items():
        if not (1 <= w <= params.n):
            raise ValueError(f"worker id {w} out of range")
        if len(subs) < need:
            raise ValueError(f"worker {w} delivered {len(subs)} subshares, need the first {need}")
        prefix[w] = subs[:need]
        field = subs[0].field

    assert field is not None
    pts = {i + 1: field.element(x) for i, x in enumerate(points)}
    resolved: dict[tuple[int, int], FieldMatrix] = {}

    for g in range(d, params.n + 1):
        for col in layout.group_columns(g):
            knowns = []
            for row in range(d, g):
                src = layout.canonical(row, col)
                if src not in resolved:
                    raise ValueError("missing prerequisite value; inconsistent layout")
                knowns.append((row, resolved[src]))
            equations = [(pts[w], prefix[w][col]) for w in sorted(prefix)]
            column = solve_column(field, equations, knowns, g)
            for row, val in enumerate(column):
                src = layout.canonical(row, col)
                if src in resolved and resolved[src] != val:
                    raise ValueError("inconsistent responses: conflicting recovered values")
                resolved[src] = val

    out = []
    for col in range(params.beta[params.n]):
        for row in range(params.n - 1):
            out.append(resolved[(row, col)])
    return out


def sc_verify(layout: StaircaseLayout, params: StaircaseParams) -> list[str]:
    """Structural audit; returns a list of violations (empty when sound)."""
    issues: list[str] = []
    n, k, alpha = params.n, params.k, params.alpha

    expected_heights = tuple(d for d in range(n, k - 1, -1) for _ in range(params.width[d]))
    if layout.heights != expected_heights:
        issues.append("group-structure: column heights do not descend in the required steps")

    if sum(params.width[d] for d in params.d_range()) != alpha:
        issues.append("group-structure: widths do not sum to alpha")
    for d in range(k, n):
        if (d - 1) * params.width[d] != params.beta[d + 1]:
            issues.append(f"capacity: (d-1)*w[d] != beta[d+1] at d={d}")

    secrets: list[int] = []
    keys: list[int] = []
    copy_sources: list[tuple[int, int]] = []
    for col in range(alpha):
        h = layout.heights[col]
        key_rows = [r for r in range(n) if isinstance(layout.cell(r, col), FreshKey)]
        if len(key_rows) != 1:
            issues.append(f"privacy-key: column {col} has {len(key_rows)} fresh keys, want 1")
        elif key_rows[0] != h - 1:
            issues.append(f"privacy-key: column {col} key sits at row {key_rows[0]}, want {h - 1}")
        for row in range(n):
            cell = layout.cell(row, col)
            if row >= h:
                if not isinstance(cell, Zero):
                    issues.append(f"zero-fill: non-zero cell below height at ({row}, {col})")
                continue
            if isinstance(cell, Secret):
                secrets.append(cell.index)
                if col >= params.beta[n] or row > n - 2:
                    issues.append(f"secret-placement: secret outside the tall group at ({row}, {col})")
            elif isinstance(cell, FreshKey):
                keys.append(cell.index)
            elif isinstance(cell, Copy):
                copy_sources.append((cell.row, cell.col))
                if col < params.beta[n]:
                    issues.append(f"secret-placement: copy inside the tall group at ({row}, {col})")
            elif isinstance(cell, Zero):
                issues.append(f"zero-fill: zero cell above height at ({row}, {col})")

    want_secrets = sorted(range(params.secret_count))
    if sorted(secrets) != want_secrets:
        issues.append("secret-multiplicity: secret indices are not exactly 0..(k-1)*alpha-1")
    if sorted(keys) != sorted(range(alpha)):
        issues.append("key-multiplicity: key indices are not exactly 0..alpha-1")

    want_sources: list[tuple[int, int]] = []
    for d in range(k, n):
        want_sources.extend((d, c) for c in range(params.beta[d + 1]))
    if sorted(copy_sources) != sorted(want_sources):
        issues.append("copy-structure: copies do not cover each taller column's handoff row exactly once")

    nonzero = len(secrets) + len(keys) + len(copy_sources)
    want_nonzero = params.secret_count + alpha + sum(params.beta[d + 1] for d in range(k, n))
    if nonzero != want_nonzero:
        issues.append("cell-count: non-zero cell count is off")

    return issues


def privacy_rank(
    layout: StaircaseLayout, field: PrimeField, points: Sequence[int]
) -> dict[int, int]:
    """Rank over GF(q) of the keys -> subshares map for each worker.

    Full rank (= alpha) means a worker's view is a bijective function of the
    fresh keys once the secrets are fixed, hence uniform.
    """
    params = layout.params
    shape_field = field
    zero_blocks = [FieldMatrix.zeros(shape_field, 1, 1)] * params.secret_count

    columns_per_worker: dict[int, list[list[int]]] = {w: [] for w in range(1, params.n + 1)}
    for key_idx in range(params.alpha):
        keys = [
            FieldMatrix.from_rows(shape_field, [[1 if i == key_idx else 0]])
            for i in range(params.alpha)
        ]
        shares = sc_encode(zero_blocks, keys, points, layout)
        for sh in shares:
            columns_per_worker[sh.worker].append([s.entries[0] for s in sh.subshares])

    ranks = {}
    for w, cols in columns_per_worker.items():
        matrix = [[cols[c][r] for c in range(params.alpha)] for r in range(params.alpha)]
        ranks[w] = _rank_mod_q(matrix, field)
    return ranks


def _rank_mod_q(matrix: list[list[int]], field: PrimeField) -> int:
    m = [row[:] for row in matrix]
    rank = 0
    n_rows = len(m)
    n_cols = len(m[0]) if m else 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if m[r][col] % field.q != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        inv = field.inv(m[rank][col])
        m[rank] = [field.mul(v, inv) for v in m[rank]]
        for r in range(n_rows):
            if r != rank and m[r][col] % field.q:
                f = m[r][col]
                m[r] = [field.sub(a, field.mul(f, b)) for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class PrivacyAudit:
    """Exhaustive single-worker leakage check over 1x1 blocks."""

    max_tv: float
    per_worker_tv: dict[int, float]
    secrets_enumerated: int
    keys_enumerated: int

    @property
    def leak_free(self) -> bool:
        return self.max_tv == 0.0


def privacy_audit(
    params: StaircaseParams,
    field: PrimeField,
    layout: StaircaseLayout | None = None,
    points: Sequence[int] | None = None,
    workers: Sequence[int] | None = None,
    limit: int = 1_000_000,
) -> PrivacyAudit:
    """Enumerate every (secret, key) combination with 1x1 blocks and compare
    each worker's share distribution across secrets by total-variation
    distance. Zero for every pair certifies perfect single-share privacy.
    """
    layout = layout if layout is not None else sc_layout(params)
    points = tuple(points) if points is not None else default_staircase_points(field, params.n)
    workers = tuple(workers) if workers is not None else tuple(range(1, params.n + 1))
    s_count, a_count = params.secret_count, params.alpha
    total = field.q ** s_count * field.q ** a_count
    if total > limit:
        raise EnumerationTooLargeError(
            f"audit would enumerate {total} secret/key combinations (limit {limit})"
        )

    # The encoder is linear, so build each worker's coefficient map once from
    # unit inputs and enumerate with plain integer dot products.
    def unit_encode(secret_vec: Sequence[int], key_vec: Sequence[int]) -> dict[int, tuple[int, ...]]:
        blocks = [FieldMatrix.from_rows(field, [[v]]) for v in secret_vec]
        keys = [FieldMatrix.from_rows(field, [[v]]) for v in key_vec]
        shares = sc_encode(blocks, keys, points, layout)
        return {sh.worker: tuple(s.entries[0] for s in sh.subshares) for sh in shares}

    secret_maps = []
    for i in range(s_count):
        vec = [1 if j == i else 0 for j in range(s_count)]
        secret_maps.append(unit_encode(vec, [0] * a_count))
    key_maps = []
    for i in range(a_count):
        vec = [1 if j == i else 0 for j in range(a_count)]
        key_maps.append(unit_encode([0] * s_count, vec))

    q = field.q
    per_worker: dict[int, float] = {}
    for w in workers:
        s_cols = [secret_maps[i][w] for i in range(s_count)]
        k_cols = [key_maps[i][w] for i in range(a_count)]
        dists = []
        for secret in itertools.product(range(q), repeat=s_count):
            base = [0] * a_count
            for sv, col in zip(secret, s_cols):
                for t in range(a_count):
                    base[t] = (base[t] + sv * col[t]) % q
            counts: dict[tuple[int, ...], int] = {}
            for key in itertools.product(range(q), repeat=a_count):
                view = list(base)
                for kv, col in zip(key, k_cols):
                    for t in range(a_count):
                        view[t] = (view[t] + kv * col[t]) % q
                tview = tuple(view)
                counts[tview] = counts.get(tview, 0) + 1
            dists.append(counts)
        denom = q ** a_count
        worst = 0.0
        for da, db in itertools.combinations(dists, 2):
            support = set(da) | set(db)
            tv = sum(abs(da.get(v, 0) - db.get(v, 0)) for v in support) / (2 * denom)
            worst = max(worst, tv)
        per_worker[w] = worst

    max_tv = max(per_worker.values()) if per_worker else 0.0
    return PrivacyAudit(
        max_tv=max_tv,
        per_worker_tv=per_worker,
        secrets_enumerated=q ** s_count,
        keys_enumerated=q ** a_count,
    )


# Share serialization: 8 big-endian u32 header words
# (n, k, alpha, q, worker, point, block rows, block cols), then the subshare
# entries in index order, row-major, one u32 each. Requires q < 2^32.

_HEADER = struct.Struct(">8I")


def serialize_share(
    worker: int, point: int, blocks: Sequence[FieldMatrix], n: int, k: int
) -> bytes:
    field = blocks[0].field
    if field.q >= 1 << 32:
        raise ValueError("serialization requires q < 2^32")
    rows, cols = blocks[0].rows, blocks[0].cols
    if any((b.rows, b.cols) != (rows, cols) for b in blocks):
        raise ValueError("subshares must share one shape")
    head = _HEADER.pack(n, k, len(blocks), field.q, worker, point, rows, cols)
    body = b"".join(
        struct.pack(">%dI" % (rows * cols), *b.entries) for b in blocks
    )
    return head + body


def deserialize_share(
    data: bytes,
) -> tuple[int, int, list[FieldMatrix], int, int]:
    """Returns (worker, point, blocks, n, k)."""
    if len(data) < _HEADER.size:
        raise ValueError("share data truncated: missing header")
    n, k, alpha, q, worker, point, rows, cols = _HEADER.unpack_from(data)
    field = PrimeField(q)
    want = _HEADER.size + 4 * alpha * rows * cols
    if len(data) != want:
        raise ValueError(f"share data has {len(data)} bytes, expected {want}")
    blocks = []
    off = _HEADER.size
    per = rows * cols
    for _ in range(alpha):
        vals = struct.unpack_from(">%dI" % per, data, off)
        off += 4 * per
        if any(v >= q for v in vals):
            raise ValueError("entry not reduced mod q")
        blocks.append(FieldMatrix(field, rows, cols, tuple(vals)))
    return worker, point, blocks, n, k


def random_blocks(
    field: PrimeField, count: int, rows: int, cols: int, rng: random.Random
) -> list[FieldMatrix]:
    return [FieldMatrix.random(field, rows, cols, rng) for _ in range(count)]


def exhaustive_decode_check(
    params: StaircaseParams,
    field: PrimeField,
    rng: random.Random,
    points: Sequence[int] | None = None,
    block_shape: tuple[int, int] = (1, 1),
) -> None:
    """Round-trip every d and every d-subset of workers; raises on mismatch."""
    layout = sc_layout(params)
    points = tuple(points) if points is not None else default_staircase_points(field, params.n)
    blocks = random_blocks(field, params.secret_count, *block_shape, rng)
    keys = random_blocks(field, params.alpha, *block_shape, rng)
    shares = sc_encode(blocks, keys, points, layout)
    by_worker = {sh.worker: sh for sh in shares}
    for d in params.d_range():
        need = params.beta[d]
        for subset in itertools.combinations(range(1, params.n + 1), d):
            responses = {w: by_worker[w].subshares[:need] for w in subset}
            got = sc_decode(responses, d, layout, points)
            if got != blocks:
                raise AssertionError(
                    f"decode mismatch for (n={params.n}, k={params.k}), d={d}, workers={subset}"
                )
