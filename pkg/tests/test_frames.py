import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qeclab.errors import FrameDecodeError, ValidationError
from qeclab.frames import (HEADER, QuantCipherFrame, RealCipherFrame, decode_frame, encode_frame, pack_codes,
                           roundtrip_frame, unpack_codes)
from qeclab.rng import stream


def test_header_layout():
    data = encode_frame(QuantCipherFrame(5, [3], "state", 4))
    assert HEADER.size == 15
    assert data[:2] == b"QC"
    assert data[2] == 1 and data[3] == 0
    assert int.from_bytes(data[4:12], "big") == 5
    assert data[12:14] == b"\x00\x01" and data[14] == 4
    # code 3 = a_0=1,a_1=1 -> wire bits a_3 a_2 a_1 a_0 reversed: 1100 then pad
    assert data[15:] == bytes([0b11000000])


def test_pack_order_known():
    assert pack_codes([0b0001, 0b1000], 4) == bytes([0b10000001])
    assert unpack_codes(bytes([0b10000001]), 2, 4).tolist() == [1, 8]


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 32).flatmap(lambda w: st.tuples(
    st.just(w), st.lists(st.integers(0, 2**w - 1), max_size=40), st.integers(0, 2**64 - 1),
    st.sampled_from(["state", "input"]))))
def test_quant_roundtrip_property(args):
    w, codes, t, kind = args
    f = QuantCipherFrame(t, codes, kind, w)
    data = encode_frame(f)
    assert len(data) == 15 + (len(codes) * w + 7) // 8
    assert decode_frame(data) == f
    assert encode_frame(decode_frame(data)) == data


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(allow_nan=True, allow_infinity=True), max_size=20), st.integers(0, 2**64 - 1))
def test_real_roundtrip_property(values, t):
    f = RealCipherFrame(t, values, "input")
    assert roundtrip_frame(f) == f


def test_fuzz_ten_thousand():
    rng = stream(99)
    for i in range(10000):
        w = int(rng.integers(2, 33))
        n = int(rng.integers(0, 9))
        codes = rng.integers(0, 2**w, size=n, dtype=np.int64) if w < 63 else None
        f = QuantCipherFrame(int(rng.integers(0, 2**63)), codes, ("state", "input")[i % 2], w)
        data = encode_frame(f)
        assert decode_frame(data) == f and encode_frame(decode_frame(data)) == data


@pytest.mark.parametrize("mutate, offset", [
    (lambda d: b"XX" + d[2:], 0),
    (lambda d: d[:2] + b"\x09" + d[3:], 2),
    (lambda d: d[:3] + b"\x07" + d[4:], 3),
    (lambda d: d[:10], 10),
    (lambda d: d[:-1], 15),
    (lambda d: d[:-1] + bytes([d[-1] | 1]), 16),
])
def test_decode_errors_report_offset(mutate, offset):
    data = encode_frame(QuantCipherFrame(1, [1, 2, 3], "state", 5))
    with pytest.raises(FrameDecodeError) as exc:
        decode_frame(mutate(data))
    assert exc.value.offset == offset


def test_bad_w_byte():
    data = bytearray(encode_frame(QuantCipherFrame(1, [1], "state", 4)))
    data[14] = 40
    with pytest.raises(FrameDecodeError):
        decode_frame(bytes(data))


def test_frame_validation():
    with pytest.raises(ValidationError):
        QuantCipherFrame(0, [16], "state", 4)
    with pytest.raises(ValidationError):
        QuantCipherFrame(0, [1], "key", 4)
    with pytest.raises(TypeError):
        encode_frame(object())


def test_real_frame_bitwise_equality():
    assert RealCipherFrame(0, [0.0], "state") != RealCipherFrame(0, [-0.0], "state")
