"""Encrypted control over w-bit channels.

Sensor:     v_i = exp(x_i / beta_i),           word_i = Q_w(v_i)
Controller: z_i = g_inv(val_i) ** K_i,          word_i = Q_w(z_i ** (1/delta_i))
Actuator:   u   = sum_i delta_i beta_i ln(g_inv(val_i))

``beta_i`` here are the offset coefficients from ``keys.betas_quantized``.
The ``*_codes`` functions are vectorized over leading trial axes; the
frame-level functions wrap them for a single step.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigError, RangeError, ValidationError
from .frames import QuantCipherFrame
from .keys import KeyCoefficients
from .quantizer import MAX_W, MIN_W, code_values, g_inv, quantize_codes, top_value


def default_delta(K, w):
    return np.maximum(np.abs(np.asarray(K, dtype=float)), 1.0) * (1 + 2.0 ** -(w - 1))


@dataclass(eq=False)
class QuantizedScenario:
    """Globally shared parameters of the quantized realization.

    ``delta`` defaults to ``max(|K_i|, 1) * (1 + 2^-(w-1))``.
    """

    w: int
    w_b: int
    alpha: float
    xbar: np.ndarray
    K: np.ndarray
    delta: np.ndarray = None

    def __post_init__(self):
        self.K = np.asarray(self.K, dtype=float).reshape(-1)
        n = self.K.size
        self.xbar = np.broadcast_to(np.asarray(self.xbar, dtype=float), (n,)).copy()
        if self.delta is None:
            self.delta = default_delta(self.K, self.w)
        self.delta = np.broadcast_to(np.asarray(self.delta, dtype=float), (n,)).copy()
        self.validate()

    @property
    def n(self):
        return self.K.size

    @property
    def offset(self):
        """xbar_i / ln(1 + alpha): the smallest admissible |beta_i|."""
        return self.xbar / math.log1p(self.alpha)

    def validate(self):
        if not MIN_W <= self.w <= MAX_W:
            raise ConfigError(f"w must satisfy {MIN_W} <= w <= {MAX_W}, got {self.w}")
        if self.w_b < 1:
            raise ConfigError(f"w_b must satisfy w_b >= 1, got {self.w_b}")
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must satisfy 0 < alpha <= 1, got {self.alpha}")
        if np.any(self.xbar <= 0):
            raise ConfigError("xbar_i must satisfy xbar_i > 0")
        if np.any(self.delta <= 0) or np.any(self.delta < np.abs(self.K)):
            i = int(np.argmax((self.delta <= 0) | (self.delta < np.abs(self.K))))
            raise ConfigError(f"delta_{i} >= |K_{i}| violated: delta={self.delta[i]}, K={self.K[i]}")
        top = top_value(self.w)
        if 1 + self.alpha > top:
            raise ConfigError(f"1 + alpha <= 2 - 2^-(w-1) violated: 1+alpha={1 + self.alpha}, bound={top}")
        # Controller-side reach: state words lie within one grid step of
        # [1-alpha, 1+alpha]; raising g_inv of those to K_i/delta_i must stay
        # inside the representable range.
        scale = 2.0 ** (self.w - 1)
        lo = math.floor((1 - self.alpha) * scale) / scale
        hi = math.ceil((1 + self.alpha) * scale) / scale
        reach = max(-math.log(g_inv(lo)), math.log(g_inv(hi)))
        ratio = np.abs(self.K) / self.delta
        bad = ratio * reach > math.log(top)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ConfigError(
                f"|K_{i}|/delta_{i} * {reach:.6g} <= ln(2 - 2^-(w-1)) violated: "
                f"controller output unrepresentable; increase delta_{i} or decrease alpha")

    def check_state(self, x):
        x = np.asarray(x, dtype=float)
        bad = ~(np.abs(x) < self.xbar)
        if np.any(bad):
            i = int(np.nonzero(bad.reshape(-1, self.n).any(axis=0))[0][0])
            worst = np.max(np.abs(x[..., i]))
            raise RangeError(f"state bound |x_{i}| < xbar_{i} = {self.xbar[i]} violated (|x_{i}| = {worst!r})")


def _betas(betas):
    return betas.betas if isinstance(betas, KeyCoefficients) else np.asarray(betas, dtype=float)


def encrypt_codes(x, betas, scen, rng):
    scen.check_state(x)
    v = np.exp(np.asarray(x, dtype=float) / _betas(betas))
    return quantize_codes(v, scen.w, rng)


def controller_inputs(K, codes, scen):
    """The values ``z_i ** (1/delta_i)`` the controller quantizes."""
    ratio = np.asarray(K, dtype=float) / scen.delta
    return np.exp(ratio * np.log(g_inv(code_values(codes, scen.w))))


def control_codes(K, codes, scen, rng):
    try:
        return quantize_codes(controller_inputs(K, codes, scen), scen.w, rng)
    except RangeError as exc:
        raise ConfigError(f"controller re-quantization out of range: {exc}") from exc


def decrypt_codes(codes, betas, scen):
    vals = code_values(codes, scen.w)
    return np.sum(scen.delta * _betas(betas) * np.log(g_inv(vals)), axis=-1)


def encrypt_q(x, betas, scen, rng, t=0):
    codes = encrypt_codes(np.asarray(x, dtype=float).reshape(-1), betas, scen, rng)
    return QuantCipherFrame(t, codes, "state", scen.w)


def control_q(K, frame, scen, rng):
    if frame.kind != "state":
        raise ValidationError("the controller consumes state frames")
    return QuantCipherFrame(frame.t, control_codes(K, frame.codes, scen, rng), "input", frame.w)


def decrypt_q(frame, betas, scen):
    if frame.kind != "input":
        raise ValidationError("the actuator consumes input frames")
    return float(decrypt_codes(frame.codes, betas, scen))


def mse_bound(betas, scen):
    """Leading term sum_i 5 (beta_i delta_i)^2 / 2^(2w) of the error bound."""
    b = _betas(betas)
    return np.sum(5.0 * (b * scen.delta) ** 2, axis=-1) / 4.0**scen.w
