"""Simulated Bell-pair measurements between the sensor and the actuator.

Each key bit comes from measuring one (possibly imperfect) two-qubit state

    a|00> + b|01> + c|10> + d|11>

in the computational basis, the first qubit at the sensor and the second at
the actuator. The joint outcome law is exact: P(00)=|a|^2, P(01)=|b|^2,
P(10)=|c|^2, P(11)=|d|^2.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ValidationError
from .rng import as_generator

NORM_TOL = 1e-12


@dataclass(frozen=True)
class BellStateSpec:
    """Amplitudes of one shared two-qubit state.

    Amplitudes are complex; only their moduli affect the measurement law.
    """

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, complex(getattr(self, name)))
        norm = sum(abs(z) ** 2 for z in self.amplitudes)
        if not np.isfinite(norm) or abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state is not normalized: |a|^2+|b|^2+|c|^2+|d|^2 = {norm!r}")

    @classmethod
    def perfect(cls):
        s = np.sqrt(0.5)
        return cls(s, 0.0, 0.0, s)

    @classmethod
    def conformant(cls, p):
        """Symmetric state (|a|=|d|, |b|=|c|) with flip probability ``p``.

        Only for these states are flip events independent of the sensor bit,
        which is what the i.i.d.-flip error model downstream assumes.
        """
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"flip probability must lie in [0, 1], got {p}")
        return cls(np.sqrt((1 - p) / 2), np.sqrt(p / 2), np.sqrt(p / 2), np.sqrt((1 - p) / 2))

    @property
    def amplitudes(self):
        return (self.a, self.b, self.c, self.d)

    @property
    def joint_probabilities(self):
        """(P00, P01, P10, P11) as floats."""
        return tuple(abs(z) ** 2 for z in self.amplitudes)

    @property
    def is_symmetric(self):
        pa, pb, pc, pd = self.joint_probabilities
        return abs(pa - pd) <= NORM_TOL and abs(pb - pc) <= NORM_TOL

    @property
    def sensor_marginal(self):
        """P(sensor bit = 1) = |c|^2 + |d|^2."""
        _, _, pc, pd = self.joint_probabilities
        return pc + pd


def error_probability(state):
    """Probability that the sensor and actuator bits disagree, |b|^2 + |c|^2."""
    _, pb, pc, _ = state.joint_probabilities
    return pb + pc


def sample_bits(state, size, rng):
    """Draw sensor/actuator bit arrays of shape ``size`` from the joint law.

    One uniform per bit pair, mapped through the cumulative outcome
    probabilities in the order 00, 01, 10, 11.
    """
    rng = as_generator(rng)
    cum = np.cumsum(state.joint_probabilities)[:3]
    outcome = np.searchsorted(cum, rng.random(size), side="right")
    se = (outcome >= 2).astype(np.uint8)
    ac = (outcome & 1).astype(np.uint8)
    return se, ac


@dataclass(frozen=True, eq=False)
class QuantumKeyPair:
    """Sensor and actuator keys for one step.

    ``q_se`` and ``q_ac`` hold ``n * w_b`` bits; group ``i`` occupies
    positions ``i*w_b .. (i+1)*w_b - 1`` and lists its bits from the most
    significant (``b_{i,w_b-1}``) down to ``b_{i,0}``.
    """

    t: int
    n: int
    w_b: int
    q_se: np.ndarray
    q_ac: np.ndarray

    def __post_init__(self):
        for name in ("q_se", "q_ac"):
            bits = np.asarray(getattr(self, name), dtype=np.uint8)
            if bits.shape != (self.n * self.w_b,):
                raise ValidationError(f"{name} must hold n*w_b = {self.n * self.w_b} bits")
            if np.any(bits > 1):
                raise ValidationError(f"{name} contains non-binary entries")
            object.__setattr__(self, name, bits)

    def __eq__(self, other):
        if not isinstance(other, QuantumKeyPair):
            return NotImplemented
        return ((self.t, self.n, self.w_b) == (other.t, other.n, other.w_b)
                and np.array_equal(self.q_se, other.q_se)
                and np.array_equal(self.q_ac, other.q_ac))

    @property
    def sensor_groups(self):
        """Sensor bits as an ``(n, w_b)`` array, MSB first in each row."""
        return self.q_se.reshape(self.n, self.w_b)

    @property
    def actuator_groups(self):
        return self.q_ac.reshape(self.n, self.w_b)

    def dump(self):
        """One debug line: ``t=<u64> se=<hex> ac=<hex>``."""
        return f"t={self.t} se={_bits_to_hex(self.q_se)} ac={_bits_to_hex(self.q_ac)}"

    @classmethod
    def parse(cls, line, n, w_b):
        try:
            fields = dict(part.split("=", 1) for part in line.split())
            t = int(fields["t"])
            se = _hex_to_bits(fields["se"], n * w_b)
            ac = _hex_to_bits(fields["ac"], n * w_b)
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"malformed key dump line: {line!r}") from exc
        return cls(t, n, w_b, se, ac)


def _bits_to_hex(bits):
    # The bit string read MSB-first as one integer, zero-padded to whole nibbles.
    value = int("".join(map(str, bits.tolist())) or "0", 2)
    return format(value, f"0{(len(bits) + 3) // 4}x")


def _hex_to_bits(text, length):
    value = int(text, 16)
    if value >> length:
        raise ValueError("hex value wider than the key")
    return np.array([(value >> (length - 1 - k)) & 1 for k in range(length)], dtype=np.uint8)


def sample_key_pair(state, n, w_b, rng, t=0):
    """Measure ``n * w_b`` Bell pairs and return the resulting key pair."""
    if n < 1 or w_b < 1:
        raise ValidationError("n and w_b must be at least 1")
    se, ac = sample_bits(state, n * w_b, rng)
    return QuantumKeyPair(t, n, w_b, se, ac)


@dataclass
class BitStatistics:
    n_bits: int
    sensor_frequency: np.ndarray    # P(sensor bit = 1) per position
    actuator_frequency: np.ndarray
    flip_rate: float
    flip_independence_pvalue: float  # flip event vs sensor bit, pooled
    position_independence_pvalues: np.ndarray  # sensor bit k vs k+1

    def flip_rate_ci(self, p, sigmas=4.0):
        """Whether the flip rate lies within ``sigmas`` binomial std of ``p``."""
        sd = np.sqrt(max(p * (1 - p), 1e-300) / self.n_bits)
        return abs(self.flip_rate - p) <= sigmas * sd


def _chi2_pvalue(x, y):
    table = np.array([[np.sum((x == i) & (y == j)) for j in (0, 1)] for i in (0, 1)])
    if np.any(table.sum(axis=0) == 0) or np.any(table.sum(axis=1) == 0):
        return 1.0  # a constant margin cannot show dependence
    return float(stats.chi2_contingency(table, correction=False).pvalue)


def empirical_bit_statistics(pairs):
    """Summarize a sequence of key pairs with identical layout."""
    pairs = list(pairs)
    if not pairs:
        raise ValidationError("no key pairs given")
    se = np.stack([p.q_se for p in pairs])
    ac = np.stack([p.q_ac for p in pairs])
    if se.size < 1000:
        raise ValidationError(f"need at least 1000 bits, got {se.size}")
    flips = se ^ ac
    positions = se.shape[1]
    adjacent = np.array([_chi2_pvalue(se[:, k], se[:, k + 1]) for k in range(positions - 1)])
    return BitStatistics(
        n_bits=int(se.size),
        sensor_frequency=se.mean(axis=0),
        actuator_frequency=ac.mean(axis=0),
        flip_rate=float(flips.mean()),
        flip_independence_pvalue=_chi2_pvalue(se.ravel(), flips.ravel()),
        position_independence_pvalues=adjacent,
    )
