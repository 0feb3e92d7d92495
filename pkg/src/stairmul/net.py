"""Framed TCP transport between the master and its workers.

Frame layout: 1 tag byte, 4-byte big-endian payload length, payload. All
integers and field elements inside payloads are unsigned 4-byte big-endian
(the field modulus must stay below 2^32).

Tags:
  0x01 SETUP      scheme byte (0 ramp / 1 staircase) + serialized share
  0x02 QUERY      request id, vector length, vector entries
  0x03 SUBRESULT  worker, subshare index, request id, entry count, entries
  0x7F ERROR      4-byte error code

The master opens one connection per worker, sends SETUP then QUERY, and the
worker streams SUBRESULT frames in subshare order.
"""

from __future__ import annotations

import socket
import struct
import threading
import time
from dataclasses import dataclass
from queue import Queue
from typing import Sequence

from . import ramp as rmp
from . import staircase as sc
from .field import FieldMatrix, PrimeField
from .runtime import (
    Assignment,
    MasterPlan,
    SCHEME_RAMP,
    SCHEME_STAIRCASE,
    SubResult,
    make_collector,
    worker_compute,
)

TAG_SETUP = 0x01
TAG_QUERY = 0x02
TAG_SUBRESULT = 0x03
TAG_ERROR = 0x7F

_KNOWN_TAGS = {TAG_SETUP, TAG_QUERY, TAG_SUBRESULT, TAG_ERROR}
_MAX_PAYLOAD = (1 << 32) - 1

ERR_BAD_FRAME = 1
ERR_BAD_STATE = 2
ERR_DIMENSION = 3

_SCHEME_BYTE = {SCHEME_RAMP: 0, SCHEME_STAIRCASE: 1}
_SCHEME_NAME = {0: SCHEME_RAMP, 1: SCHEME_STAIRCASE}


class FrameError(ValueError):
    """Malformed frame: truncated, unknown tag, or oversized payload."""


class RemoteError(RuntimeError):
    """The peer reported an ERROR frame."""


def encode_frame(tag: int, payload: bytes) -> bytes:
    if tag not in _KNOWN_TAGS:
        raise FrameError(f"unknown tag 0x{tag:02x}")
    if len(payload) > _MAX_PAYLOAD:
        raise FrameError("payload length overflows the 4-byte frame header")
    return bytes([tag]) + struct.pack(">I", len(payload)) + payload


def decode_frame(buf: bytes) -> tuple[int, bytes, bytes]:
    """Split one frame off the front of buf; returns (tag, payload, rest)."""
    if len(buf) < 5:
        raise FrameError("truncated frame: missing header")
    tag = buf[0]
    if tag not in _KNOWN_TAGS:
        raise FrameError(f"unknown tag 0x{tag:02x}")
    (length,) = struct.unpack_from(">I", buf, 1)
    if len(buf) < 5 + length:
        raise FrameError("truncated frame: missing payload")
    return tag, buf[5 : 5 + length], buf[5 + length :]


def _recv_exactly(sock: socket.socket, count: int) -> bytes:
    chunks = []
    got = 0
    while got < count:
        chunk = sock.recv(count - got)
        if not chunk:
            raise ConnectionError("peer closed the connection mid-frame")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> tuple[int, bytes]:
    head = _recv_exactly(sock, 5)
    tag = head[0]
    if tag not in _KNOWN_TAGS:
        raise FrameError(f"unknown tag 0x{tag:02x}")
    (length,) = struct.unpack(">I", head[1:])
    return tag, _recv_exactly(sock, length)


# Payload codecs ------------------------------------------------------------


def encode_setup(assignment: Assignment, n: int, k: int) -> bytes:
    if assignment.scheme == SCHEME_STAIRCASE:
        share = assignment.share
        assert isinstance(share, sc.StaircaseShare)
        body = sc.serialize_share(share.worker, share.point, list(share.subshares), n, k)
    else:
        share = assignment.share
        assert isinstance(share, rmp.RampShare)
        body = sc.serialize_share(share.worker, share.point, [share.block], n, k)
    return bytes([_SCHEME_BYTE[assignment.scheme]]) + body


def decode_setup(payload: bytes) -> tuple[Assignment, int, int]:
    """Returns (assignment, n, k)."""
    if not payload:
        raise FrameError("empty SETUP payload")
    scheme = _SCHEME_NAME.get(payload[0])
    if scheme is None:
        raise FrameError(f"unknown scheme byte {payload[0]}")
    worker, point, blocks, n, k = sc.deserialize_share(payload[1:])
    if scheme == SCHEME_STAIRCASE:
        share: sc.StaircaseShare | rmp.RampShare = sc.StaircaseShare(
            worker=worker, point=point, subshares=tuple(blocks)
        )
    else:
        if len(blocks) != 1:
            raise FrameError("ramp share must hold exactly one block")
        share = rmp.RampShare(worker=worker, point=point, block=blocks[0])
    return Assignment(worker=worker, scheme=scheme, share=share), n, k


def encode_query(request_id: int, x: FieldMatrix) -> bytes:
    if x.cols != 1:
        raise ValueError("query vector must be a column")
    return struct.pack(">II", request_id, x.rows) + struct.pack(
        ">%dI" % x.rows, *x.entries
    )


def decode_query(payload: bytes, field: PrimeField) -> tuple[int, FieldMatrix]:
    if len(payload) < 8:
        raise FrameError("truncated QUERY payload")
    request_id, length = struct.unpack_from(">II", payload)
    if length == 0:
        raise FrameError("QUERY with an empty vector")
    if len(payload) != 8 + 4 * length:
        raise FrameError("QUERY payload length mismatch")
    vals = struct.unpack_from(">%dI" % length, payload, 8)
    return request_id, FieldMatrix(field, length, 1, tuple(field.element(v) for v in vals))


def encode_subresult(worker: int, index: int, request_id: int, vector: FieldMatrix) -> bytes:
    return struct.pack(">IIII", worker, index, request_id, vector.rows) + struct.pack(
        ">%dI" % vector.rows, *vector.entries
    )


def decode_subresult(payload: bytes, field: PrimeField) -> tuple[int, int, int, FieldMatrix]:
    """Returns (worker, index, request_id, vector)."""
    if len(payload) < 16:
        raise FrameError("truncated SUBRESULT payload")
    worker, index, request_id, length = struct.unpack_from(">IIII", payload)
    if len(payload) != 16 + 4 * length:
        raise FrameError("SUBRESULT payload length mismatch")
    vals = struct.unpack_from(">%dI" % length, payload, 16)
    return worker, index, request_id, FieldMatrix(field, length, 1, tuple(field.element(v) for v in vals))


def encode_error(code: int) -> bytes:
    return struct.pack(">I", code)


def decode_error(payload: bytes) -> int:
    if len(payload) != 4:
        raise FrameError("ERROR payload must be 4 bytes")
    return struct.unpack(">I", payload)[0]


# Worker side ---------------------------------------------------------------


def serve_worker(
    host: str,
    port: int,
    field_q: int = 0,
    ready: threading.Event | None = None,
    max_queries: int | None = None,
) -> None:
    """Accept one master connection; answer SETUP with streamed SUBRESULTs.

    `field_q`, when nonzero, must match the modulus announced in SETUP.
    Returns when the master closes the connection (or after `max_queries`).
    """
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind((host, port))
        server.listen(1)
        if ready is not None:
            ready.set()
        conn, _ = server.accept()
        with conn:
            _worker_session(conn, field_q, max_queries)


def _worker_session(conn: socket.socket, field_q: int, max_queries: int | None) -> None:
    assignment: Assignment | None = None
    field: PrimeField | None = None
    answered = 0
    while True:
        try:
            tag, payload = read_frame(conn)
        except ConnectionError:
            return
        try:
            if tag == TAG_SETUP:
                assignment, _, _ = decode_setup(payload)
                share = assignment.share
                block = (
                    share.subshares[0]
                    if isinstance(share, sc.StaircaseShare)
                    else share.block
                )
                field = block.field
                if field_q and field.q != field_q:
                    raise ValueError(f"master announced q={field.q}, worker pinned to {field_q}")
            elif tag == TAG_QUERY:
                if assignment is None or field is None:
                    conn.sendall(encode_frame(TAG_ERROR, encode_error(ERR_BAD_STATE)))
                    continue
                request_id, x = decode_query(payload, field)
                for sub in worker_compute(assignment, x):
                    conn.sendall(
                        encode_frame(
                            TAG_SUBRESULT,
                            encode_subresult(sub.worker, sub.index, request_id, sub.vector),
                        )
                    )
                answered += 1
                if max_queries is not None and answered >= max_queries:
                    return
            elif tag == TAG_ERROR:
                return
            else:
                conn.sendall(encode_frame(TAG_ERROR, encode_error(ERR_BAD_FRAME)))
        except FrameError:
            conn.sendall(encode_frame(TAG_ERROR, encode_error(ERR_BAD_FRAME)))
        except ValueError:
            conn.sendall(encode_frame(TAG_ERROR, encode_error(ERR_DIMENSION)))


# Master side ---------------------------------------------------------------


@dataclass(frozen=True)
class NetworkRunResult:
    ax: FieldMatrix
    elapsed: float
    chosen_d: int


def master_run(
    addresses: Sequence[tuple[str, int]],
    plan: MasterPlan,
    x: FieldMatrix,
    request_id: int = 1,
    timeout: float = 30.0,
) -> NetworkRunResult:
    """Distribute shares, broadcast x, decode at the first sufficient prefix.

    `addresses[i]` hosts worker i+1. Arrivals from all connections merge into
    one queue; leftover traffic after decodability is ignored.
    """
    if len(addresses) != plan.n:
        raise ValueError(f"expected {plan.n} worker addresses")
    socks: list[socket.socket] = []
    inbox: Queue = Queue()
    readers: list[threading.Thread] = []
    start = time.monotonic()
    try:
        for addr, assignment in zip(addresses, plan.assignments):
            s = socket.create_connection(addr, timeout=timeout)
            socks.append(s)
            s.sendall(encode_frame(TAG_SETUP, encode_setup(assignment, plan.n, plan.k)))
        query = encode_frame(TAG_QUERY, encode_query(request_id, x))
        for s in socks:
            s.sendall(query)

        def pump(sock: socket.socket) -> None:
            try:
                while True:
                    tag, payload = read_frame(sock)
                    inbox.put((time.monotonic(), tag, payload))
            except (ConnectionError, OSError):
                inbox.put((time.monotonic(), None, b""))

        for s in socks:
            t = threading.Thread(target=pump, args=(s,), daemon=True)
            t.start()
            readers.append(t)

        collector = make_collector(plan)
        closed = 0
        while True:
            stamp, tag, payload = inbox.get(timeout=timeout)
            if tag is None:
                closed += 1
                if closed == len(socks):
                    raise ConnectionError("all workers disconnected before decodability")
                continue
            if tag == TAG_ERROR:
                raise RemoteError(f"worker error code {decode_error(payload)}")
            if tag != TAG_SUBRESULT:
                raise FrameError(f"unexpected tag 0x{tag:02x} from worker")
            worker, index, rid, vector = decode_subresult(payload, plan.field)
            if rid != request_id:
                continue
            if collector.offer(SubResult(worker=worker, index=index, vector=vector, time=stamp)):
                ax = collector.decode()
                st = collector.state
                assert st.chosen_d is not None
                return NetworkRunResult(
                    ax=ax, elapsed=time.monotonic() - start, chosen_d=st.chosen_d
                )
    finally:
        for s in socks:
            try:
                s.close()
            except OSError:
                pass
