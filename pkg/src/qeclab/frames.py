"""Binary wire frames for ciphertext traffic.

Header (15 bytes, big-endian)::

    magic  u16  0x5143 ("QC")
    version u8  1
    kind   u8   0 quantized state, 1 quantized input,
                2 real state, 3 real input
    t      u64
    n      u16
    w      u8   bits per element (64 for real payloads)

Quantized payloads pack ``n`` w-bit fields MSB-first (bits a_{w-1} .. a_0 of
each word), zero-padded to a byte boundary. Real payloads are ``n``
big-endian binary64 values.
"""

from dataclasses import dataclass
import struct

import numpy as np

from .core import pack_real, unpack_real
from .errors import FrameDecodeError, ValidationError
from .quantizer import MAX_W, MIN_W, code_values

MAGIC = 0x5143
VERSION = 1
HEADER = struct.Struct(">HBBQHB")

KIND_CODES = {("quantized", "state"): 0, ("quantized", "input"): 1,
              ("real", "state"): 2, ("real", "input"): 3}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}


@dataclass(frozen=True, eq=False)
class QuantCipherFrame:
    """``n`` quantizer words sent at step ``t``."""

    t: int
    codes: np.ndarray
    kind: str
    w: int

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64).reshape(-1)
        if self.kind not in ("state", "input"):
            raise ValidationError(f"frame kind must be 'state' or 'input', got {self.kind!r}")
        if not MIN_W <= self.w <= MAX_W:
            raise ValidationError(f"w must lie in [{MIN_W}, {MAX_W}]")
        if codes.size and (codes.min() < 0 or codes.max() >= 2**self.w):
            raise ValidationError(f"codes do not fit in {self.w} bits")
        object.__setattr__(self, "codes", codes)

    @property
    def n(self):
        return self.codes.size

    @property
    def vals(self):
        return code_values(self.codes, self.w)

    def __eq__(self, other):
        return (isinstance(other, QuantCipherFrame) and (self.t, self.kind, self.w) == (other.t, other.kind, other.w)
                and np.array_equal(self.codes, other.codes))


@dataclass(frozen=True, eq=False)
class RealCipherFrame:
    """``n`` positive reals sent at step ``t`` (unquantized realization)."""

    t: int
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in ("state", "input"):
            raise ValidationError(f"frame kind must be 'state' or 'input', got {self.kind!r}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).reshape(-1))

    @property
    def n(self):
        return self.values.size

    def __eq__(self, other):
        # Bitwise comparison so that -0.0/0.0 and NaN payloads are distinguished.
        return (isinstance(other, RealCipherFrame) and (self.t, self.kind) == (other.t, other.kind)
                and self.values.tobytes() == other.values.tobytes())


def pack_codes(codes, w):
    codes = np.asarray(codes, dtype=np.uint64)
    # Wire order per word is a_{w-1} first, i.e. the code's LSB first.
    bits = ((codes[:, None] >> np.arange(w, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits.reshape(-1)).tobytes()


def unpack_codes(payload, n, w, offset=0):
    need = (n * w + 7) // 8
    if len(payload) != need:
        raise FrameDecodeError(f"payload is {len(payload)} bytes, expected {need}", offset)
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
    if np.any(bits[n * w:]):
        raise FrameDecodeError("nonzero padding bits", offset + (n * w) // 8)
    bits = bits[: n * w].reshape(n, w).astype(np.int64)
    return bits @ (np.int64(1) << np.arange(w, dtype=np.int64))


def encode_frame(frame):
    if isinstance(frame, QuantCipherFrame):
        kind = KIND_CODES[("quantized", frame.kind)]
        payload = pack_codes(frame.codes, frame.w)
        w = frame.w
    elif isinstance(frame, RealCipherFrame):
        kind = KIND_CODES[("real", frame.kind)]
        payload = pack_real(frame.values)
        w = 64
    else:
        raise TypeError(f"cannot encode {type(frame).__name__}")
    if not 0 <= frame.t < 2**64:
        raise ValidationError("step index must fit in u64")
    if frame.n >= 2**16:
        raise ValidationError("frame carries at most 65535 elements")
    return HEADER.pack(MAGIC, VERSION, kind, frame.t, frame.n, w) + payload


def decode_frame(data):
    data = bytes(data)
    if len(data) < HEADER.size:
        raise FrameDecodeError(f"truncated header: {len(data)} of {HEADER.size} bytes", len(data))
    magic, version, kind, t, n, w = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FrameDecodeError(f"bad magic 0x{magic:04x}", 0)
    if version != VERSION:
        raise FrameDecodeError(f"unsupported version {version}", 2)
    if kind not in KIND_NAMES:
        raise FrameDecodeError(f"unknown kind {kind}", 3)
    encoding, role = KIND_NAMES[kind]
    payload = data[HEADER.size:]
    if encoding == "real":
        if w != 64:
            raise FrameDecodeError(f"real frames carry w=64, got {w}", 14)
        if len(payload) != 8 * n:
            raise FrameDecodeError(f"payload is {len(payload)} bytes, expected {8 * n}", HEADER.size)
        return RealCipherFrame(t, unpack_real(payload, n), role)
    if not MIN_W <= w <= MAX_W:
        raise FrameDecodeError(f"w={w} outside [{MIN_W}, {MAX_W}]", 14)
    return QuantCipherFrame(t, unpack_codes(payload, n, w, HEADER.size), role, w)


def roundtrip_frame(frame):
    return decode_frame(encode_frame(frame))
