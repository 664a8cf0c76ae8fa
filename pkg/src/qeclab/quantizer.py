"""Unbiased w-bit stochastic quantizer ``Q_w = h_w o g``.

``g`` folds the ciphertext range [1/2, 2] onto [0, 2] (values below 1 are
mapped through ``2 - 1/v``). ``h_w`` rounds ``y`` to one of its two
neighbours on the grid ``k / 2^(w-1)``, picking the upper one with
probability equal to the fractional part, so ``E[val] = y``.

Words are handled as integer codes ``k = val * 2^(w-1)``. In bit terms
``val = sum_j 2^-j a_j``, so ``a_0`` is the most significant bit of ``k`` and
``a_{w-1}`` its least significant bit. On the wire the bits go out in the
order ``a_{w-1}, ..., a_0``.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import RangeError, ValidationError
from .rng import as_generator

MIN_W = 2
MAX_W = 32


def _check_w(w):
    if not MIN_W <= w <= MAX_W:
        raise ValidationError(f"w must lie in [{MIN_W}, {MAX_W}], got {w}")


def top_value(w):
    """Largest representable value, 2 - 2^-(w-1)."""
    return 2.0 - 2.0 ** -(w - 1)


def g(v):
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise ValidationError("g is defined for v > 0")
    with np.errstate(divide="ignore"):
        out = np.where(v > 1, v, 2 - 1 / v)
    return out if out.ndim else float(out)


def g_inv(y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValidationError("g_inv is defined for y >= 0")
    with np.errstate(divide="ignore"):
        out = np.where(y > 1, y, 1 / (2 - y))
    return out if out.ndim else float(out)


def max_input(w):
    """Largest v accepted by ``quantize`` at width ``w``."""
    return top_value(w)  # top grid value exceeds 1, where g is the identity


@dataclass(frozen=True)
class WWord:
    code: int
    w: int

    def __post_init__(self):
        _check_w(self.w)
        if not 0 <= self.code < 2**self.w:
            raise ValidationError(f"code {self.code} does not fit in {self.w} bits")

    @property
    def val(self):
        return self.code / 2 ** (self.w - 1)

    @property
    def exact_val(self):
        return Fraction(self.code, 2 ** (self.w - 1))

    @property
    def bits(self):
        """(a_{w-1}, ..., a_0)."""
        return tuple((self.code >> k) & 1 for k in range(self.w))

    @classmethod
    def from_bits(cls, bits):
        """Inverse of ``bits``."""
        bits = tuple(bits)
        return cls(sum(b << k for k, b in enumerate(bits)), len(bits))

    def encode(self):
        """The w-bit wire field, read MSB-first: a_{w-1} is the first bit sent."""
        return reverse_bits(self.code, self.w)

    @classmethod
    def decode(cls, field, w):
        return cls(reverse_bits(field, w), w)


def reverse_bits(value, w):
    return int(format(value, f"0{w}b")[::-1], 2)


def _scaled(y, w):
    _check_w(w)
    y = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(y)) or np.any(y < 0) or np.any(y > top_value(w)):
        bad = y[(~np.isfinite(y)) | (y < 0) | (y > top_value(w))].ravel()[0]
        raise RangeError(
            f"quantizer input {bad!r} outside [0, {top_value(w)!r}] for w={w}; "
            "check alpha, xbar and delta")
    return np.ldexp(y, w - 1)  # exact: scaling by a power of two


def h_codes(y, w, rng):
    """Vectorized ``h_w``: integer codes for every entry of ``y``."""
    scaled = _scaled(y, w)
    low = np.floor(scaled)
    frac = scaled - low
    up = as_generator(rng).random(scaled.shape) < frac
    return (low + up).astype(np.int64)


def quantize_codes(v, w, rng):
    return h_codes(g(v), w, rng)


def h_w(y, w, rng):
    return WWord(int(h_codes(float(y), w, rng)), w)


def quantize(v, w, rng):
    return WWord(int(quantize_codes(float(v), w, rng)), w)


def code_values(codes, w):
    return np.ldexp(np.asarray(codes, dtype=float), -(w - 1))


def h_atoms(y, w):
    """Exact law of ``h_w(y)`` as ``[(WWord, Fraction), ...]``."""
    scaled = float(_scaled(float(y), w))
    low = math.floor(scaled)
    frac = Fraction(scaled) - low
    if frac == 0:
        return [(WWord(low, w), Fraction(1))]
    return [(WWord(low, w), 1 - frac), (WWord(low + 1, w), frac)]


def atom_distribution(v, w):
    """Exact law of ``Q_w(v)``: at most two atoms, probabilities summing to 1."""
    return h_atoms(g(float(v)), w)


def atoms_mean(atoms):
    return sum(word.exact_val * p for word, p in atoms)


def atoms_variance(atoms, centre):
    centre = Fraction(centre)
    return sum((word.exact_val - centre) ** 2 * p for word, p in atoms)


def tv_distance(atoms_p, atoms_q):
    """Total variation distance between two finite laws (sup over events)."""
    mass = {}
    for word, p in atoms_p:
        mass[word] = mass.get(word, 0) + p
    for word, q in atoms_q:
        mass[word] = mass.get(word, 0) - q
    return sum(abs(m) for m in mass.values()) / 2
