"""Exponential-logarithmic encrypted control, unquantized.

Sensor:     ct_i = exp(x_i / beta_i)
Controller: cu_i = ct_i ** K_i            (works on ciphertext only)
Actuator:   u    = sum_i beta_i * ln(cu_i)

With identical keys at both ends, ``u == K @ x``. All functions broadcast
over leading batch axes so many trials can run at once.
"""

import struct

import numpy as np

from .errors import RangeError, ValidationError
from .keys import KeyCoefficients

EXP_GUARD = 700.0


def _betas(betas):
    if isinstance(betas, KeyCoefficients):
        return betas.betas
    return np.asarray(betas, dtype=float)


def _positive(ct):
    ct = np.asarray(ct, dtype=float)
    if not np.all(ct > 0) or not np.all(np.isfinite(ct)):
        raise ValidationError("ciphertext entries must be positive and finite")
    return ct


def encrypt(x, betas):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValidationError("state has non-finite entries")
    exponent = x / _betas(betas)
    worst = np.max(np.abs(exponent), initial=0.0)
    if worst > EXP_GUARD:
        raise RangeError(
            f"|x_i/beta_i| = {worst:.4g} exceeds the exp guard {EXP_GUARD}; "
            "state too large for the key range")
    return np.exp(exponent)


def control(K, ct):
    ct = _positive(ct)
    exponent = np.asarray(K, dtype=float) * np.log(ct)
    worst = np.max(np.abs(exponent), initial=0.0)
    if worst > EXP_GUARD:
        raise RangeError(f"|K_i ln ct_i| = {worst:.4g} exceeds the exp guard {EXP_GUARD}")
    return ct ** np.asarray(K, dtype=float)


def decrypt(ct, betas):
    return np.sum(_betas(betas) * np.log(_positive(ct)), axis=-1)


def mismatch_output(x, K, betas_se, betas_ac):
    """Closed form of the decrypted input when keys differ: sum (b_ac/b_se) K x."""
    return np.sum(_betas(betas_ac) / _betas(betas_se) * np.asarray(K) * np.asarray(x), axis=-1)


def pack_real(values):
    """Big-endian binary64 payload, entries in dimension order."""
    values = np.asarray(values, dtype=">f8")
    return values.tobytes()


def unpack_real(data, n):
    if len(data) != 8 * n:
        raise ValidationError(f"expected {8 * n} payload bytes, got {len(data)}")
    return np.array(struct.unpack(f">{n}d", data))
