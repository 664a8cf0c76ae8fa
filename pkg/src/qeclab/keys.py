"""Key coefficients derived from raw key bits.

A group of ``w_b`` bits ``b_{w_b-1} ... b_0`` maps to the nonzero integer

    beta = -(2^(w_b-1) + 1) * b_{w_b-1} + sum_{j<w_b-1} 2^j b_j + 1,

uniform over {-2^(w_b-1), ..., -1, 1, ..., 2^(w_b-1)} when the bits are fair.
The quantized realization pushes every coefficient away from zero by
``xbar / ln(1 + alpha)``, keeping the sign of the integer part.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math
from typing import NamedTuple, Optional

import numpy as np

from .errors import ValidationError

MAX_ENUM_BITS = 24
# E[1/beta^2] stays an exact Fraction up to this width; above it the
# denominators explode and a correctly rounded float is returned.
EXACT_INV_BITS = 10


def _check_bits(bits):
    bits = np.asarray(bits)
    if bits.ndim < 1 or bits.shape[-1] < 1:
        raise ValidationError("a key group needs at least one bit")
    if np.any((bits != 0) & (bits != 1)):
        raise ValidationError("key bits must be 0 or 1")
    return bits.astype(np.int64)


def betas_plain(bits):
    """Vectorized integer coefficients; last axis holds one group, MSB first."""
    bits = _check_bits(bits)
    w_b = bits.shape[-1]
    top = bits[..., 0]
    weights = 2 ** np.arange(w_b - 2, -1, -1, dtype=np.int64)
    low = bits[..., 1:] @ weights if w_b > 1 else np.zeros_like(top)
    return -(2 ** (w_b - 1) + 1) * top + low + 1


def beta_plain(group_bits):
    """Integer coefficient of one group given as ``(b_{w_b-1}, ..., b_0)``."""
    return int(betas_plain(np.asarray(group_bits)))


def _offset(alpha, xbar):
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"alpha must lie in (0, 1], got {alpha}")
    xbar = np.asarray(xbar, dtype=float)
    if np.any(xbar <= 0):
        raise ValidationError("xbar must be positive")
    return xbar / math.log1p(alpha)


def betas_quantized(bits, alpha, xbar):
    """Offset coefficients; ``xbar`` broadcasts against the group axis."""
    bits = _check_bits(bits)
    sign = 1 - 2 * bits[..., 0]
    return betas_plain(bits) + sign * _offset(alpha, xbar)


def beta_quantized(group_bits, alpha, xbar):
    return float(betas_quantized(np.asarray(group_bits), alpha, xbar))


@dataclass(eq=False)
class KeyCoefficients:
    """Per-dimension coefficients for one time step."""

    t: int
    betas: np.ndarray
    variant: str = "plain"
    alpha: Optional[float] = None
    xbar: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.betas = np.asarray(self.betas, dtype=float)
        if self.variant not in ("plain", "quantized"):
            raise ValidationError(f"unknown key variant {self.variant!r}")
        if self.variant == "quantized":
            floor = _offset(self.alpha, self.xbar)
            if np.any(np.abs(self.betas) < floor * (1 - 1e-12)):
                raise ValidationError("quantized coefficients must satisfy |beta| >= xbar/ln(1+alpha)")
        elif np.any(self.betas == 0):
            raise ValidationError("plain coefficients are nonzero integers")

    @classmethod
    def from_bits(cls, t, groups, variant="plain", alpha=None, xbar=None):
        if variant == "plain":
            return cls(t, betas_plain(groups).astype(float))
        return cls(t, betas_quantized(groups, alpha, xbar), "quantized", alpha, np.asarray(xbar, float))


class BetaMoments(NamedTuple):
    mean_sq: Fraction       # E[beta^2]
    mean_inv_sq: object     # E[1/beta^2]: Fraction for w_b <= EXACT_INV_BITS, else float


def beta_moments(w_b):
    """E[beta^2] and E[1/beta^2] of the plain coefficient under fair bits.

    Both come from enumerating all ``2**w_b`` bit patterns.
    """
    if w_b < 1:
        raise ValidationError("w_b must be at least 1")
    if w_b > MAX_ENUM_BITS:
        raise ValidationError(f"enumeration is limited to w_b <= {MAX_ENUM_BITS}")
    patterns = np.arange(2**w_b, dtype=np.int64)
    bits = (patterns[:, None] >> np.arange(w_b - 1, -1, -1)) & 1
    betas = betas_plain(bits)
    total = 2**w_b
    sq = betas * betas  # each < 2**46; chunk so int64 partial sums cannot overflow
    mean_sq = Fraction(sum(int(np.sum(sq[k:k + 2**16])) for k in range(0, total, 2**16)), total)
    if w_b <= EXACT_INV_BITS:
        mean_inv_sq = sum((Fraction(1, int(b) ** 2) for b in betas), Fraction(0)) / total
    else:
        mean_inv_sq = math.fsum(1.0 / (betas.astype(float) ** 2)) / total
    return BetaMoments(mean_sq, mean_inv_sq)
