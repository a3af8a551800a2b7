"""Two-party reconciliation over TCP: Bob serves, Alice connects.

Session flow: HELLO (nonce, resume point) both ways, PARAMS from Alice
(echoed as acknowledgement), then one SYNDROME per block answered by a
RESULT, and BYE. Block data on both sides comes from the channel seed, which
is agreed out of band and never sent. A block's state is committed only
after its whole frame has been read and decoded, so a dropped or garbled
frame leaves the session resumable at the same block.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelParams, quantize
from ..codes.bitapp import AppSource, LLRTable
from ..codes.ldpc import LDPCCode
from ..codes.registry import get_code
from ..errors import MalformedFrame, ProtocolError, ProtocolTimeout, SessionAborted
from . import wire
from .protocol import (
    alice_emit,
    bits_per_photon,
    block_observations,
    bob_reconcile_algebraic,
    bob_reconcile_soft,
    new_nonce,
    photons_per_block,
    raw_word,
)
from .wire import MsgType, Status

log = logging.getLogger(__name__)


@dataclass
class BobSession:
    nonce: bytes
    next_block: int = 0
    params: ChannelParams | None = None
    code_id: str = ""
    recovered: dict = field(default_factory=dict)
    statuses: dict = field(default_factory=dict)
    closed: bool = False


class _Handler(socketserver.BaseRequestHandler):
    server: "_Server"

    def handle(self):
        sock: socket.socket = self.request
        sock.settimeout(self.server.bob.timeout)
        try:
            self.server.bob._serve_connection(sock)
        except (ProtocolError, ConnectionError, OSError) as exc:
            log.warning("session dropped: %s", exc)
            self.server.bob.errors.append(exc)


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class BobServer:
    """Bob's reconciliation endpoint; keeps per-nonce session state for resumption."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, seed: int = 0,
                 app_mode: str = "exact", timeout: float = 30.0):
        self.seed = seed
        self.app_mode = AppSource(app_mode)
        self.timeout = timeout
        self.sessions: dict[bytes, BobSession] = {}
        self.errors: list[Exception] = []
        self._lock = threading.Lock()
        self._tables: dict = {}
        self._server = _Server((host, port), _Handler)
        self._server.bob = self
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> "BobServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.shutdown()

    # ------------------------------------------------------------ protocol

    def _session(self, nonce: bytes) -> BobSession:
        with self._lock:
            return self.sessions.setdefault(nonce, BobSession(nonce))

    def _table(self, params: ChannelParams):
        if self.app_mode is AppSource.HARD:
            return None
        key = (params, self.app_mode)
        with self._lock:
            if key not in self._tables:
                self._tables[key] = LLRTable.build(params, self.app_mode)
            return self._tables[key]

    def _expect(self, sock, *types) -> wire.Frame:
        frame = wire.read_frame(sock)
        if frame.msg_type not in types:
            raise MalformedFrame(f"unexpected {frame.msg_type.name}, wanted {[t.name for t in types]}")
        return frame

    def _serve_connection(self, sock: socket.socket) -> None:
        nonce, _ = wire.unpack_hello(self._expect(sock, MsgType.HELLO).payload)
        sess = self._session(nonce)
        wire.write_frame(sock, MsgType.HELLO, wire.pack_hello(nonce, sess.next_block))

        n_bins, sigma, code_id = wire.unpack_params(self._expect(sock, MsgType.PARAMS).payload)
        try:
            params = ChannelParams(n_bins, sigma)
            code = get_code(code_id)
            m = bits_per_photon(n_bins)
            photons = photons_per_block(code, m)
        except (KeyError, ValueError) as exc:
            wire.write_frame(sock, MsgType.BYE)
            raise MalformedFrame(f"unusable PARAMS: {exc}") from None
        if sess.params is not None and (sess.params, sess.code_id) != (params, code_id):
            wire.write_frame(sock, MsgType.BYE)
            raise MalformedFrame("resumed session with different parameters")
        sess.params, sess.code_id = params, code_id
        wire.write_frame(sock, MsgType.PARAMS, wire.pack_params(n_bins, sigma, code_id))
        table = self._table(params) if isinstance(code, LDPCCode) else None

        while True:
            frame = self._expect(sock, MsgType.SYNDROME, MsgType.BYE)
            if frame.msg_type is MsgType.BYE:
                sess.closed = True
                wire.write_frame(sock, MsgType.BYE)
                return
            idx, synd = wire.unpack_syndrome(frame.payload, code.syndrome_length, code.symbol_bits)
            if idx != sess.next_block:
                raise MalformedFrame(f"block {idx} out of order, expected {sess.next_block}")
            _, y = block_observations(params, self.seed, idx, photons)
            msg = alice_emit(np.zeros(code.n, dtype=np.int64), code, m, nonce, idx)
            msg = type(msg)(msg.code_id, msg.field_width, synd.astype(msg.syndrome.dtype),
                            msg.frame_count, nonce, idx)
            if isinstance(code, LDPCCode):
                res = bob_reconcile_soft(y, msg, code, params, self.app_mode.value, table=table)
            else:
                res = bob_reconcile_algebraic(raw_word(quantize(y, n_bins), code, m), msg, code)
            status = Status.OK if res.success else Status.FAILED
            with self._lock:
                sess.recovered[idx] = res.recovered_word
                sess.statuses[idx] = status
                sess.next_block = idx + 1
            wire.write_frame(sock, MsgType.RESULT, wire.pack_result(idx, status))


@dataclass
class AliceReport:
    nonce: bytes
    statuses: dict
    words: dict

    @property
    def success_rate(self) -> float:
        if not self.statuses:
            return float("nan")
        return sum(s is Status.OK for s in self.statuses.values()) / len(self.statuses)


def run_alice(host: str, port: int, params: ChannelParams, code_id: str, seed: int, blocks: int,
              nonce: bytes | None = None, timeout: float = 30.0, report: AliceReport | None = None,
              stop_after: int | None = None) -> AliceReport:
    """Stream ``blocks`` syndromes to Bob and collect his per-block verdicts.

    Passing the ``nonce`` (and ``report``) of an aborted session resumes at
    the block Bob last committed. ``stop_after`` drops the connection after
    that many syndromes, for exercising resumption.
    """
    code = get_code(code_id)
    m = bits_per_photon(params.n_bins)
    photons = photons_per_block(code, m)
    nonce = nonce or new_nonce()
    report = report or AliceReport(nonce, {}, {})
    next_block = 0
    sent = 0
    try:
        with socket.create_connection((host, port), timeout=timeout) as sock:
            sock.settimeout(timeout)
            wire.write_frame(sock, MsgType.HELLO, wire.pack_hello(nonce, len(report.statuses)))
            frame = wire.read_frame(sock)
            if frame.msg_type is not MsgType.HELLO:
                raise MalformedFrame("expected HELLO")
            echo, next_block = wire.unpack_hello(frame.payload)
            if echo != nonce:
                raise MalformedFrame("nonce mismatch")
            wire.write_frame(sock, MsgType.PARAMS, wire.pack_params(params.n_bins, params.sigma, code_id))
            frame = wire.read_frame(sock)
            if frame.msg_type is not MsgType.PARAMS:
                raise MalformedFrame(f"Bob refused parameters ({frame.msg_type.name})")
            for idx in range(next_block, blocks):
                if stop_after is not None and sent >= stop_after:
                    sock.shutdown(socket.SHUT_RDWR)
                    raise ConnectionError("connection dropped (requested)")
                a_bins, _ = block_observations(params, seed, idx, photons)
                word = raw_word(a_bins, code, m)
                msg = alice_emit(word, code, m, nonce, idx)
                wire.write_frame(sock, MsgType.SYNDROME,
                                 wire.pack_syndrome(idx, msg.syndrome, code.symbol_bits))
                frame = wire.read_frame(sock)
                if frame.msg_type is not MsgType.RESULT:
                    raise MalformedFrame("expected RESULT")
                ridx, status = wire.unpack_result(frame.payload)
                if ridx != idx:
                    raise MalformedFrame(f"RESULT for block {ridx}, sent {idx}")
                report.statuses[idx] = status
                report.words[idx] = word
                next_block = idx + 1
                sent += 1
            wire.write_frame(sock, MsgType.BYE)
            wire.read_frame(sock)
    except (ConnectionError, OSError, ProtocolTimeout) as exc:
        if isinstance(exc, socket.timeout):
            exc = ProtocolTimeout(str(exc))
        raise SessionAborted(f"session interrupted at block {next_block}: {exc}",
                             nonce=nonce, next_block=next_block) from exc
    return report
