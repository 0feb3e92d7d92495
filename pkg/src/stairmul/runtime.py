"""Master-worker execution: share distribution, streamed products, decoding.

The master encodes its matrix once and hands each worker a share. Per query
it broadcasts the vector x; workers stream back one product per subshare, and
the collector decodes at the first instant the received prefixes are
sufficient. A deterministic virtual-clock simulator drives the same pipeline
for experiments; the socket transport in `net` reuses every piece.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from . import ramp as rmp
from . import staircase as sc
from .delays import DelayModel, WaitingSample, waiting_times_from_delays
from .field import FieldMatrix, PrimeField, split_row_blocks, stack_row_blocks

SCHEME_STAIRCASE = "staircase"
SCHEME_RAMP = "ramp"


class InsufficientWorkersError(RuntimeError):
    """Too few responsive workers to ever reach a decodable state."""


@dataclass(frozen=True)
class Assignment:
    worker: int
    scheme: str
    share: sc.StaircaseShare | rmp.RampShare


@dataclass(frozen=True)
class SubResult:
    worker: int
    index: int  # 1-based subshare index; always 1 for ramp shares
    vector: FieldMatrix
    time: float = 0.0


@dataclass(frozen=True)
class MasterPlan:
    """Everything the master keeps after encoding (keys are discarded)."""

    scheme: str
    field: PrimeField
    n: int
    k: int
    points: tuple[int, ...]
    rows: int  # original row count of A, pre padding
    params: sc.StaircaseParams | None
    layout: sc.StaircaseLayout | None
    assignments: tuple[Assignment, ...]


def master_setup(
    a: FieldMatrix,
    n: int,
    k: int,
    scheme: str,
    key_rng: random.Random,
    points: Sequence[int] | None = None,
) -> MasterPlan:
    """Encode A under the chosen scheme; fresh keys never leave this call."""
    field = a.field
    if scheme == SCHEME_STAIRCASE:
        params = sc.sc_params(n, k)
        layout = sc.sc_layout(params)
        pts = tuple(points) if points is not None else sc.default_staircase_points(field, n)
        blocks, rows = split_row_blocks(a, params.secret_count)
        keys = sc.random_blocks(field, params.alpha, blocks[0].rows, blocks[0].cols, key_rng)
        shares = sc.sc_encode(blocks, keys, pts, layout)
        assignments = tuple(
            Assignment(worker=s.worker, scheme=scheme, share=s) for s in shares
        )
        return MasterPlan(scheme, field, n, k, pts, rows, params, layout, assignments)
    if scheme == SCHEME_RAMP:
        pts = tuple(points) if points is not None else rmp.default_ramp_points(field, n)
        blocks, rows = split_row_blocks(a, k - 1)
        key = FieldMatrix.random(field, blocks[0].rows, blocks[0].cols, key_rng)
        shares = rmp.ss_encode(blocks, key, pts)
        assignments = tuple(
            Assignment(worker=s.worker, scheme=scheme, share=s) for s in shares
        )
        return MasterPlan(scheme, field, n, k, pts, rows, None, None, assignments)
    raise ValueError(f"unknown scheme {scheme!r}")


def worker_compute(assignment: Assignment, x: FieldMatrix) -> list[SubResult]:
    """Multiply each subshare by x, in subshare order."""
    if assignment.scheme == SCHEME_STAIRCASE:
        share = assignment.share
        assert isinstance(share, sc.StaircaseShare)
        if share.subshares[0].cols != x.rows:
            raise ValueError(f"x has {x.rows} rows, share expects {share.subshares[0].cols}")
        return [
            SubResult(worker=assignment.worker, index=i + 1, vector=s @ x)
            for i, s in enumerate(share.subshares)
        ]
    share = assignment.share
    assert isinstance(share, rmp.RampShare)
    if share.block.cols != x.rows:
        raise ValueError(f"x has {x.rows} rows, share expects {share.block.cols}")
    return [SubResult(worker=assignment.worker, index=1, vector=share.block @ x)]


@dataclass
class CollectorState:
    received: dict[int, int]
    decodable: bool = False
    chosen_d: int | None = None
    chosen_workers: tuple[int, ...] | None = None
    decode_time: float | None = None


class StaircaseCollector:
    """Feeds arrivals into the decodability test; monotone once satisfied."""

    def __init__(self, plan: MasterPlan) -> None:
        assert plan.params is not None and plan.layout is not None
        self.plan = plan
        self.state = CollectorState(received={w: 0 for w in range(1, plan.n + 1)})
        self._vectors: dict[int, list[FieldMatrix]] = {w: [] for w in range(1, plan.n + 1)}

    def offer(self, sub: SubResult) -> bool:
        """Record one arrival; returns True once decoding is possible."""
        st = self.state
        if st.decodable:
            return True
        got = st.received[sub.worker]
        if sub.index != got + 1:
            raise ValueError(
                f"worker {sub.worker} sent subshare {sub.index} after {got} (prefix order required)"
            )
        st.received[sub.worker] = sub.index
        self._vectors[sub.worker].append(sub.vector)
        assert self.plan.params is not None
        hit = sc.sc_decodable(
            [st.received[w] for w in range(1, self.plan.n + 1)], self.plan.params
        )
        if hit is not None:
            st.decodable = True
            st.chosen_d, st.chosen_workers = hit
            st.decode_time = sub.time
        return st.decodable

    def decode(self) -> FieldMatrix:
        st = self.state
        if not st.decodable or st.chosen_d is None or st.chosen_workers is None:
            raise InsufficientWorkersError("not enough responses to decode")
        assert self.plan.params is not None and self.plan.layout is not None
        need = self.plan.params.beta[st.chosen_d]
        responses = {w: self._vectors[w][:need] for w in st.chosen_workers}
        blocks = sc.sc_decode(responses, st.chosen_d, self.plan.layout, self.plan.points)
        return stack_row_blocks(blocks, rows=self.plan.rows)


class RampCollector:
    """Waits for k complete responses."""

    def __init__(self, plan: MasterPlan) -> None:
        self.plan = plan
        self.state = CollectorState(received={w: 0 for w in range(1, plan.n + 1)})
        self._pairs: list[tuple[int, FieldMatrix]] = []

    def offer(self, sub: SubResult) -> bool:
        st = self.state
        if st.decodable:
            return True
        if sub.index != 1 or st.received[sub.worker]:
            raise ValueError(f"unexpected ramp subresult index {sub.index} from {sub.worker}")
        st.received[sub.worker] = 1
        self._pairs.append((self.plan.points[sub.worker - 1], sub.vector))
        if len(self._pairs) >= self.plan.k:
            st.decodable = True
            st.chosen_d = self.plan.k
            st.chosen_workers = tuple(w for w, c in st.received.items() if c)
            st.decode_time = sub.time
        return st.decodable

    def decode(self) -> FieldMatrix:
        if not self.state.decodable:
            raise InsufficientWorkersError("not enough responses to decode")
        blocks = rmp.ss_decode(self._pairs[: self.plan.k], self.plan.k)
        return stack_row_blocks(blocks, rows=self.plan.rows)


def make_collector(plan: MasterPlan) -> StaircaseCollector | RampCollector:
    return StaircaseCollector(plan) if plan.scheme == SCHEME_STAIRCASE else RampCollector(plan)


def collect_and_decode(
    results: Iterable[SubResult], plan: MasterPlan
) -> tuple[FieldMatrix, float, int]:
    """Consume arrivals in time order; stop at the first decodable instant.

    Returns (A @ x, decode time, chosen d). Raises InsufficientWorkersError
    when the stream ends before decodability.
    """
    collector = make_collector(plan)
    for sub in results:
        if collector.offer(sub):
            st = collector.state
            assert st.decode_time is not None and st.chosen_d is not None
            return collector.decode(), st.decode_time, st.chosen_d
    raise InsufficientWorkersError("response stream exhausted before decodability")


@dataclass(frozen=True)
class SimResult:
    ax: FieldMatrix
    time: float
    chosen_d: int
    sample: WaitingSample
    trace: tuple[SubResult, ...]


def simulate_run(
    a: FieldMatrix,
    x: FieldMatrix,
    n: int,
    k: int,
    scheme: str,
    model: DelayModel,
    seed: int,
    points: Sequence[int] | None = None,
    unresponsive: Sequence[int] = (),
    times: Sequence[float] | None = None,
) -> SimResult:
    """Full run on a virtual clock.

    Worker i's task takes T_i; its j-th subshare product lands at (j/alpha)*T_i
    (ramp: the single product lands at T_i). Unresponsive workers never
    deliver. `times` overrides the sampled delays for deterministic checks.
    """
    plan = master_setup(a, n, k, scheme, random.Random(seed), points)
    if times is not None:
        if len(times) != n:
            raise ValueError(f"expected {n} delay values")
        sample = waiting_times_from_delays([float(t) for t in times], k)
    else:
        rng = np.random.default_rng((seed, 0xD31A))
        draws = rng.standard_exponential(n) / model.worker_rate(k) + model.shift
        sample = waiting_times_from_delays([float(t) for t in draws], k)

    dead = set(unresponsive)
    events: list[SubResult] = []
    for assignment in plan.assignments:
        w = assignment.worker
        if w in dead:
            continue
        t_w = sample.times[w - 1]
        subs = worker_compute(assignment, x)
        alpha = len(subs)
        for s in subs:
            events.append(replace(s, time=(s.index / alpha) * t_w))
    events.sort(key=lambda s: (s.time, s.worker, s.index))

    collector = make_collector(plan)
    trace: list[SubResult] = []
    for sub in events:
        trace.append(sub)
        if collector.offer(sub):
            st = collector.state
            assert st.decode_time is not None and st.chosen_d is not None
            return SimResult(
                ax=collector.decode(),
                time=st.decode_time,
                chosen_d=st.chosen_d,
                sample=sample,
                trace=tuple(trace),
            )
    raise InsufficientWorkersError(
        f"only {n - len(dead)} responsive workers; decodability never reached"
    )


def load_matrix(path: str) -> FieldMatrix:
    """Read 'rows cols q' then row-major whitespace-separated integers."""
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split()
    if len(tokens) < 3:
        raise ValueError(f"{path}: missing 'rows cols q' header")
    rows, cols, q = (int(t) for t in tokens[:3])
    vals = [int(t) for t in tokens[3:]]
    if len(vals) != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} entries, found {len(vals)}")
    field = PrimeField(q)
    return FieldMatrix(field, rows, cols, tuple(field.element(v) for v in vals))


def save_matrix(path: str, m: FieldMatrix) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{m.rows} {m.cols} {m.field.q}\n")
        for row in m.to_rows():
            fh.write(" ".join(str(v) for v in row) + "\n")
