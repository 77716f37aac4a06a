"""Framing for the three protocol messages and a byte-stream transport.

Every message travels as one frame::

    magic     4 bytes   b"MPKX"
    version   u8        1
    msg_type  u8        1 = F, 2 = C, 3 = U
    params    8 bytes   Params.digest
    length    u32       payload length, big-endian
    payload   length bytes

Payloads carry field elements only, W = ceil(bitlength(q) / 8) bytes each,
big-endian. F and C list the coefficients of each polynomial in monomial rank
order (degree <= d for F, <= m for C), U lists u_1..u_n. Shapes follow from
the params, so nothing else is sent. FORMAT.md has worked examples.
"""

from __future__ import annotations

import enum
import queue
import socket
import struct
import threading
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import (
    BadMagic,
    ElementOutOfRange,
    LengthMismatch,
    ParamMismatch,
    TrailingData,
    TransportError,
    TruncatedFrame,
    UnknownMessageType,
    VersionUnsupported,
)
from .mpoly import Poly, PolyMap, coeffs_from_bytes, coeffs_to_bytes
from .protocol import (
    Outcome,
    Params,
    Transcript,
    alice_finalize,
    alice_init,
    bob_recover,
    bob_respond,
    party_rng,
)
from .solver import DEFAULT_NODE_LIMIT

MAGIC = b"MPKX"
VERSION = 1
HEADER = struct.Struct(">4sBB8sI")
HEADER_SIZE = HEADER.size  # 18


class MsgType(enum.IntEnum):
    F = 1
    C = 2
    U = 3


_KINDS = {"f": MsgType.F, "c": MsgType.C, "u": MsgType.U}


def _msg_type(kind) -> MsgType:
    if isinstance(kind, MsgType):
        return kind
    try:
        return _KINDS[kind.lower()] if isinstance(kind, str) else MsgType(kind)
    except (KeyError, ValueError):
        raise UnknownMessageType(f"unknown message kind {kind!r}") from None


def _shape(mtype: MsgType, params: Params):
    """(component count, elements per component) for a message type."""
    if mtype is MsgType.F:
        return params.ell, len(params.f_order)
    if mtype is MsgType.C:
        return params.n, len(params.c_order)
    return params.n, 1


def payload_size(kind, params: Params) -> int:
    """Exact payload length in bytes: element count times W."""
    count, per = _shape(_msg_type(kind), params)
    return count * per * params.width


def _poly_payload(msg, params: Params, order, count: int, what: str) -> bytes:
    comps = list(msg)
    if len(comps) != count:
        raise ParamMismatch(f"{what}: {len(comps)} polynomials, params need {count}")
    size = len(order)
    chunks = []
    for g in comps:
        if not isinstance(g, Poly) or g.q != params.q or g.n != params.n:
            raise ParamMismatch(f"{what}: polynomial over the wrong (q, n)")
        if g.degree > order.D:
            raise ParamMismatch(f"{what}: degree {g.degree} exceeds {order.D}")
        coeffs = g.coeffs[:size] + (0,) * (size - len(g.coeffs))
        chunks.append(coeffs_to_bytes(coeffs, params.width))
    return b"".join(chunks)


def encode_payload(kind, msg, params: Params) -> bytes:
    mtype = _msg_type(kind)
    if mtype is MsgType.F:
        return _poly_payload(msg, params, params.f_order, params.ell, "f")
    if mtype is MsgType.C:
        return _poly_payload(msg, params, params.c_order, params.n, "c")
    u = tuple(msg)
    if len(u) != params.n:
        raise ParamMismatch(f"u: {len(u)} elements, params need {params.n}")
    if any(not isinstance(x, int) or not 0 <= x < params.q for x in u):
        raise ParamMismatch("u: element outside [0, q)")
    return coeffs_to_bytes(u, params.width)


def encode_msg(kind, msg, params: Params) -> bytes:
    """Frame ``msg`` (a PolyMap for f and c, a tuple for u)."""
    mtype = _msg_type(kind)
    payload = encode_payload(mtype, msg, params)
    return HEADER.pack(MAGIC, VERSION, mtype, params.digest, len(payload)) + payload


def parse_header(head: bytes, params: Params) -> tuple:
    """Validate an 18-byte header; returns (msg_type, payload length)."""
    if len(head) < HEADER_SIZE:
        raise TruncatedFrame(f"{len(head)} header bytes, need {HEADER_SIZE}")
    magic, version, mtype, digest, length = HEADER.unpack(head[:HEADER_SIZE])
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionUnsupported(f"version {version}, expected {VERSION}")
    try:
        mtype = MsgType(mtype)
    except ValueError:
        raise UnknownMessageType(f"message type {mtype}") from None
    if digest != params.digest:
        raise ParamMismatch(f"params hash {digest.hex()} != {params.digest.hex()}")
    want = payload_size(mtype, params)
    if length != want:
        raise LengthMismatch(f"{mtype.name} payload of {length} bytes, params give {want}")
    return mtype, length


def decode_payload(mtype: MsgType, payload: bytes, params: Params):
    q, w = params.q, params.width
    elems = coeffs_from_bytes(payload, w)
    for i, x in enumerate(elems):
        if x >= q:
            raise ElementOutOfRange(f"element {i} = {x} is not below q = {q}")
    if mtype is MsgType.U:
        return elems
    count, per = _shape(mtype, params)
    order = params.f_order if mtype is MsgType.F else params.c_order
    return PolyMap(Poly(order, elems[i * per : (i + 1) * per], q) for i in range(count))


def decode_msg(data: bytes, params: Params, expect=None):
    """Parse one complete frame; returns (MsgType, message).

    Rejects anything malformed with a named WireError. ``expect`` pins the
    message type.
    """
    data = bytes(data)
    mtype, length = parse_header(data, params)
    if expect is not None and mtype is not _msg_type(expect):
        raise UnknownMessageType(f"got {mtype.name}, expected {_msg_type(expect).name}")
    end = HEADER_SIZE + length
    if len(data) < end:
        raise TruncatedFrame(f"{len(data) - HEADER_SIZE} of {length} payload bytes")
    if len(data) > end:
        raise TrailingData(f"{len(data) - end} bytes after the frame")
    return mtype, decode_payload(mtype, data[HEADER_SIZE:], params)


# --- streams -------------------------------------------------------------


class SocketStream:
    """Blocking byte stream over a connected socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock

    def send(self, data: bytes):
        try:
            self.sock.sendall(data)
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc

    def recv(self, size: int) -> bytes:
        try:
            return self.sock.recv(size)
        except OSError as exc:
            raise TransportError(f"recv failed: {exc}") from exc

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


class ChannelEnd:
    """One end of an in-process duplex byte channel."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue, timeout: Optional[float]):
        self._in = inbox
        self._out = outbox
        self._buf = bytearray()
        self._eof = False
        self.timeout = timeout

    def send(self, data: bytes):
        self._out.put(bytes(data))

    def recv(self, size: int) -> bytes:
        while not self._buf and not self._eof:
            try:
                chunk = self._in.get(timeout=self.timeout)
            except queue.Empty:
                raise TransportError("channel receive timed out") from None
            if chunk is None:
                self._eof = True
            else:
                self._buf += chunk
        out = bytes(self._buf[:size])
        del self._buf[:size]
        return out

    def close(self):
        self._out.put(None)


def duplex_channel(timeout: Optional[float] = 30.0):
    """Two connected in-process stream ends."""
    a, b = queue.Queue(), queue.Queue()
    return ChannelEnd(a, b, timeout), ChannelEnd(b, a, timeout)


def _recv_exact(stream, size: int, got_any: bool) -> bytes:
    buf = bytearray()
    while len(buf) < size:
        chunk = stream.recv(size - len(buf))
        if not chunk:
            if buf or got_any:
                raise TruncatedFrame(f"stream ended after {len(buf)} of {size} bytes")
            raise TransportError("peer closed the connection")
        buf += chunk
    return bytes(buf)


def read_frame(stream, params: Params) -> bytes:
    """Read exactly one frame; the header is validated before the payload is read."""
    head = _recv_exact(stream, HEADER_SIZE, False)
    _, length = parse_header(head, params)
    return head + _recv_exact(stream, length, True)


def recv_msg(stream, params: Params, expect):
    frame = read_frame(stream, params)
    return frame, decode_msg(frame, params, expect)[1]


# --- sessions ------------------------------------------------------------


class Role(str, enum.Enum):
    ALICE = "alice"
    BOB = "bob"


@dataclass
class StreamResult:
    """What one side learned from a session over a stream.

    Alice never hears back from Bob, so her ``outcome`` is None and ``key`` is
    simply her s. Bob's ``key`` is set only on success.
    """

    role: Role
    key: Optional[tuple]
    outcome: Optional[Outcome]
    frames: list = field(default_factory=list)  # f, c, u in protocol order

    @property
    def success(self) -> Optional[bool]:
        return None if self.outcome is None else self.outcome.success

    @property
    def transcript_bytes(self) -> bytes:
        return b"".join(self.frames)

    @property
    def bytes_per_message(self) -> dict:
        return {k: len(fr) for k, fr in zip("fcu", self.frames)}


def session_over_stream(
    role: Union[Role, str],
    stream,
    params: Params,
    seed,
    attempt: int = 0,
    limit: int = DEFAULT_NODE_LIMIT,
) -> StreamResult:
    """Run one attempt of the exchange over ``stream`` (f ->, <- c, u ->)."""
    role = Role(role)
    if role is Role.ALICE:
        alice, f_msg = alice_init(params, party_rng(seed, "alice", attempt))
        f_frame = encode_msg(MsgType.F, f_msg, params)
        stream.send(f_frame)
        c_frame, c_msg = recv_msg(stream, params, MsgType.C)
        u_msg = alice_finalize(alice, c_msg)
        u_frame = encode_msg(MsgType.U, u_msg, params)
        stream.send(u_frame)
        return StreamResult(role, alice.s, None, [f_frame, c_frame, u_frame])
    f_frame, f_msg = recv_msg(stream, params, MsgType.F)
    bob, c_msg = bob_respond(params, f_msg, party_rng(seed, "bob", attempt))
    c_frame = encode_msg(MsgType.C, c_msg, params)
    stream.send(c_frame)
    u_frame, u_msg = recv_msg(stream, params, MsgType.U)
    outcome = bob_recover(bob, f_msg, u_msg, limit)
    return StreamResult(role, outcome.key, outcome, [f_frame, c_frame, u_frame])


def run_in_process(params: Params, seed, attempt: int = 0, limit: int = DEFAULT_NODE_LIMIT):
    """Both roles on two threads joined by a duplex channel; returns (alice, bob)."""
    a_end, b_end = duplex_channel()
    results, errors = {}, []

    def side(role, end):
        try:
            results[role] = session_over_stream(role, end, params, seed, attempt, limit)
        except BaseException as exc:  # surfaced below
            errors.append(exc)
        finally:
            end.close()

    threads = [
        threading.Thread(target=side, args=(Role.ALICE, a_end)),
        threading.Thread(target=side, args=(Role.BOB, b_end)),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return results[Role.ALICE], results[Role.BOB]


def parse_address(text: str) -> tuple:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must be host:port, got {text!r}")
    return host or "127.0.0.1", int(port)


def listen(host: str, port: int) -> socket.socket:
    try:
        return socket.create_server((host, port))
    except OSError as exc:
        raise TransportError(f"cannot listen on {host}:{port}: {exc}") from exc


def serve_once(server: socket.socket, params: Params, seed, attempt: int = 0,
               limit: int = DEFAULT_NODE_LIMIT, timeout: Optional[float] = 60.0) -> StreamResult:
    """Accept one connection on ``server`` and play Bob on it."""
    server.settimeout(timeout)
    try:
        conn, _ = server.accept()
    except OSError as exc:
        raise TransportError(f"accept failed: {exc}") from exc
    conn.settimeout(timeout)
    stream = SocketStream(conn)
    try:
        return session_over_stream(Role.BOB, stream, params, seed, attempt, limit)
    finally:
        stream.close()


def connect(host: str, port: int, params: Params, seed, attempt: int = 0,
            timeout: Optional[float] = 60.0) -> StreamResult:
    """Dial Bob and play Alice."""
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except OSError as exc:
        raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
    stream = SocketStream(sock)
    try:
        result = session_over_stream(Role.ALICE, stream, params, seed, attempt)
        try:
            sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        return result
    finally:
        stream.close()


def transcript_frames(transcript: Transcript) -> list:
    """The frames an in-process transcript would have put on the wire."""
    p = transcript.params
    return [
        encode_msg(MsgType.F, transcript.f_msg, p),
        encode_msg(MsgType.C, transcript.c_msg, p),
        encode_msg(MsgType.U, transcript.u_msg, p),
    ]
