import socket
import struct
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from teqkd.channel import ChannelParams
from teqkd.codes import BCH378_261, RS63_43, get_code
from teqkd.errors import MalformedFrame, SessionAborted, VersionMismatch
from teqkd.reconcile import wire
from teqkd.reconcile.protocol import (
    alice_emit,
    bob_reconcile_algebraic,
    bob_reconcile_soft,
    block_observations,
    key_rate,
    leakage_bits,
    photons_per_block,
    raw_word,
    reconcile_block,
    word_bits,
)
from teqkd.reconcile.transport import BobServer, run_alice
from teqkd.reconcile.wire import MsgType, Status


# ---------------------------------------------------------------- protocol


def test_key_rates_and_leakage():
    assert leakage_bits(RS63_43) == 120
    assert leakage_bits(BCH378_261) == 117
    assert key_rate(RS63_43, 3) == pytest.approx(258 / 126)
    assert key_rate(BCH378_261, 3) == pytest.approx(261 / 126)
    assert key_rate(get_code("ldpc384"), 3) == pytest.approx(2.0)
    assert photons_per_block(RS63_43, 3) == 126
    with pytest.raises(ValueError):
        photons_per_block(RS63_43, 4)


def test_raw_word_packs_gray_labels():
    bins = np.arange(126) % 8
    w = raw_word(bins, RS63_43, 3)
    # symbol 0 holds photons 0 and 1: gray(0)=000, gray(1)=001
    assert w[0] == 0b000001
    assert w[1] == (0b011 << 3) | 0b010  # gray(2)=011, gray(3)=010
    bits = word_bits(w, RS63_43)
    assert bits.size == 378
    bw = raw_word(bins, BCH378_261, 3)
    assert np.array_equal(bw, bits)


def test_alice_message_carries_only_the_syndrome(rng):
    w = rng.integers(0, 64, 63)
    msg = alice_emit(w, RS63_43, 3, b"abcdefgh", 7)
    assert msg.bits_disclosed == 120
    assert msg.syndrome.shape == (20,)
    assert msg.frame_count == 126 and msg.block_index == 7
    with pytest.raises(ValueError):
        alice_emit(w, RS63_43, 3, b"short")


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_rs_reconciliation_exact_within_t(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    alice = rng.integers(0, 64, 63)
    k = data.draw(st.integers(0, 10))
    bob = alice.copy()
    pos = rng.choice(63, k, replace=False)
    bob[pos] ^= rng.integers(1, 64, k)
    res = bob_reconcile_algebraic(bob, alice_emit(alice, RS63_43, 3), RS63_43, alice)
    assert res.success and res.residual_bit_errors == 0
    assert np.array_equal(res.recovered_word, alice)


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_bch_reconciliation_exact_within_t(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    alice = rng.integers(0, 2, 378).astype(np.uint8)
    k = data.draw(st.integers(0, 13))
    bob = alice.copy()
    bob[rng.choice(378, k, replace=False)] ^= 1
    res = bob_reconcile_algebraic(bob, alice_emit(alice, BCH378_261, 3), BCH378_261, alice)
    assert res.success and np.array_equal(res.recovered_word, alice)


def test_algebraic_failure_keeps_bob_word(rng):
    alice = rng.integers(0, 64, 63)
    bob = alice.copy()
    bob[:25] ^= 1
    res = bob_reconcile_algebraic(bob, alice_emit(alice, RS63_43, 3), RS63_43, alice)
    if not res.success:
        assert np.array_equal(res.recovered_word, bob)
    assert res.residual_bit_errors > 0


def test_code_id_mismatch():
    msg = alice_emit(np.zeros(63, dtype=np.int64), RS63_43, 3)
    with pytest.raises(ValueError):
        bob_reconcile_algebraic(np.zeros(378, dtype=np.uint8), msg, BCH378_261)


def test_soft_reconciliation_at_good_snr():
    prm = ChannelParams.from_snr_db(8, 22.0)
    code = get_code("ldpc384")
    a_bins, y = block_observations(prm, 11, 0, 128)
    alice = raw_word(a_bins, code, 3)
    res = bob_reconcile_soft(y, alice_emit(alice, code, 3), code, prm, "exact", alice_bits=alice)
    assert res.success and res.residual_bit_errors == 0 and res.iterations_used >= 1
    with pytest.raises(ValueError):
        bob_reconcile_soft(y[:10], alice_emit(alice, code, 3), code, prm)


def test_block_stream_is_reproducible():
    prm = ChannelParams.from_snr_db(8, 20.0)
    a1, y1 = block_observations(prm, 5, 3, 100)
    a2, y2 = block_observations(prm, 5, 3, 100)
    a3, _ = block_observations(prm, 5, 4, 100)
    assert np.array_equal(a1, a2) and np.array_equal(y1, y2)
    assert not np.array_equal(a1, a3)


# ---------------------------------------------------------------- wire format


@given(st.sampled_from(list(MsgType)), st.binary(max_size=300))
def test_frame_roundtrip(t, payload):
    data = wire.encode_frame(t, payload)
    frame, rest = wire.decode_frame(data + b"xyz")
    assert frame == wire.Frame(t, payload) and rest == b"xyz"


def test_frame_header_layout():
    data = wire.encode_frame(MsgType.RESULT, b"\x00\x00\x00\x05\x01")
    assert data[:4] == b"TEQK" and data[4] == 1 and data[5] == int(MsgType.RESULT)
    assert struct.unpack(">I", data[6:10])[0] == 5


@given(st.integers(1, 12), st.data())
def test_symbol_packing_roundtrip(width, data):
    count = data.draw(st.integers(0, 200))
    syms = np.array(data.draw(st.lists(st.integers(0, (1 << width) - 1), min_size=count, max_size=count)),
                    dtype=np.int64)
    raw = wire.pack_symbols(syms, width)
    assert len(raw) == (count * width + 7) // 8
    assert np.array_equal(wire.unpack_symbols(raw, count, width), syms)


@given(st.binary(min_size=8, max_size=8), st.integers(0, 2**32 - 1), st.integers(2, 255),
       st.floats(1e-9, 10.0), st.text(max_size=40))
def test_payload_roundtrips(nonce, idx, n, sigma, cid):
    assert wire.unpack_hello(wire.pack_hello(nonce, idx)) == (nonce, idx)
    assert wire.unpack_params(wire.pack_params(n, sigma, cid)) == (n, sigma, cid)
    assert wire.unpack_result(wire.pack_result(idx, Status.FAILED)) == (idx, Status.FAILED)


def test_syndrome_payload_roundtrip_for_each_code(rng):
    for code in (RS63_43, BCH378_261, get_code("ldpc384")):
        hi = 1 << code.symbol_bits
        s = rng.integers(0, hi, code.syndrome_length)
        idx, back = wire.unpack_syndrome(wire.pack_syndrome(9, s, code.symbol_bits),
                                         code.syndrome_length, code.symbol_bits)
        assert idx == 9 and np.array_equal(back, s)


@pytest.mark.parametrize("data, exc", [
    (b"XXXX\x01\x00\x00\x00\x00\x00", MalformedFrame),
    (b"TEQK\x02\x00\x00\x00\x00\x00", VersionMismatch),
    (b"TEQK\x01\x09\x00\x00\x00\x00", MalformedFrame),
    (b"TEQK\x01\x00\x00\x00\x00\x05ab", MalformedFrame),
    (b"TEQK\x01\x00\xff\xff\xff\xff", MalformedFrame),
    (b"TEQK\x01", MalformedFrame),
])
def test_malformed_frames(data, exc):
    with pytest.raises(exc):
        wire.decode_frame(data)


def test_malformed_payloads():
    with pytest.raises(MalformedFrame):
        wire.unpack_symbols(b"\xff", 1, 6)  # padding bits set
    with pytest.raises(MalformedFrame):
        wire.unpack_symbols(b"\x00\x00", 1, 6)
    with pytest.raises(MalformedFrame):
        wire.unpack_params(wire.pack_params(8, 0.1, "rs63_43") + b"!")
    with pytest.raises(MalformedFrame):
        wire.unpack_result(b"\x00\x00\x00\x01\x07")
    with pytest.raises(MalformedFrame):
        wire.unpack_hello(b"short")


# ---------------------------------------------------------------- transport


def _wait(pred, timeout=5.0):
    end = time.monotonic() + timeout
    while time.monotonic() < end:
        if pred():
            return True
        time.sleep(0.01)
    return False


@pytest.mark.parametrize("code_id", ["rs63_43", "bch378_261"])
def test_loopback_matches_in_process_reference(code_id):
    prm = ChannelParams.from_snr_db(8, 30.0)
    code = get_code(code_id)
    with BobServer(seed=21) as bob:
        host, port = bob.address
        rep = run_alice(host, port, prm, code_id, seed=21, blocks=12)
        assert _wait(lambda: bob.sessions and next(iter(bob.sessions.values())).closed)
    sess = bob.sessions[rep.nonce]
    for idx in range(12):
        ref = reconcile_block(prm, code, 21, idx)
        assert (rep.statuses[idx] is Status.OK) == ref.success
        assert np.array_equal(sess.recovered[idx], ref.recovered_word)
        if ref.success:
            assert np.array_equal(sess.recovered[idx], rep.words[idx])
    assert rep.success_rate > 0.8


def test_ldpc_session_resumes_after_drop():
    prm = ChannelParams.from_snr_db(8, 22.0)
    with BobServer(seed=4, app_mode="exact") as bob:
        host, port = bob.address
        with pytest.raises(SessionAborted) as info:
            run_alice(host, port, prm, "ldpc384", seed=4, blocks=8, stop_after=3)
        nonce = info.value.nonce
        assert info.value.next_block == 3
        assert _wait(lambda: bob.sessions[nonce].next_block == 3)
        rep = run_alice(host, port, prm, "ldpc384", seed=4, blocks=8, nonce=nonce)
        assert sorted(rep.statuses) == [3, 4, 5, 6, 7]
        assert _wait(lambda: bob.sessions[nonce].closed)
    assert sorted(bob.sessions[nonce].statuses) == list(range(8))


def _handshake(sock, nonce, code_id="rs63_43", sigma=0.01):
    wire.write_frame(sock, MsgType.HELLO, wire.pack_hello(nonce))
    wire.read_frame(sock)
    wire.write_frame(sock, MsgType.PARAMS, wire.pack_params(8, sigma, code_id))
    return wire.read_frame(sock)


def test_garbled_syndrome_leaves_no_partial_state():
    prm = ChannelParams(8, 0.01)
    nonce = b"garbled!"
    with BobServer(seed=1) as bob:
        host, port = bob.address
        with socket.create_connection((host, port), timeout=5) as sock:
            assert _handshake(sock, nonce).msg_type is MsgType.PARAMS
            # header promises 20 bytes, only 7 arrive before the close
            sock.sendall(wire.HEADER.pack(wire.MAGIC, wire.VERSION, int(MsgType.SYNDROME), 20) + b"\x00" * 7)
            sock.shutdown(socket.SHUT_WR)
        assert _wait(lambda: bob.errors)
        assert isinstance(bob.errors[0], MalformedFrame)
        sess = bob.sessions[nonce]
        assert sess.next_block == 0 and not sess.recovered and not sess.statuses
        # the session is still usable from block 0
        rep = run_alice(host, port, prm, "rs63_43", seed=1, blocks=2, nonce=nonce)
        assert sorted(rep.statuses) == [0, 1]


def test_out_of_order_and_version_mismatch_rejected():
    with BobServer(seed=1) as bob:
        host, port = bob.address
        with socket.create_connection((host, port), timeout=5) as sock:
            _handshake(sock, b"ooo-test")
            wire.write_frame(sock, MsgType.SYNDROME, wire.pack_syndrome(5, np.zeros(20, dtype=np.int64), 6))
        assert _wait(lambda: len(bob.errors) == 1)
        assert bob.sessions[b"ooo-test"].next_block == 0
        with socket.create_connection((host, port), timeout=5) as sock:
            sock.sendall(wire.HEADER.pack(wire.MAGIC, 9, int(MsgType.HELLO), 0))
        assert _wait(lambda: len(bob.errors) == 2)
        assert isinstance(bob.errors[1], VersionMismatch)


def test_unknown_code_or_changed_params_are_refused():
    prm = ChannelParams(8, 0.01)
    with BobServer(seed=1) as bob:
        host, port = bob.address
        with socket.create_connection((host, port), timeout=5) as sock:
            assert _handshake(sock, b"badcode!", code_id="nope").msg_type is MsgType.BYE
        rep = run_alice(host, port, prm, "rs63_43", seed=1, blocks=1)
        # a resumed session may not switch codes
        with pytest.raises(MalformedFrame):
            run_alice(host, port, prm, "bch378_261", seed=1, blocks=2, nonce=rep.nonce)
        assert _wait(lambda: len(bob.errors) == 2)
        assert bob.sessions[rep.nonce].code_id == "rs63_43"
