"""Quantum-keyed encrypted control: key simulation, encrypted loops,
stability thresholds, privacy accounting, attacks and benchmarks."""

from .channel import BellStateSpec, QuantumKeyPair, sample_key_pair
from .core import control, decrypt, encrypt
from .errors import ConfigError, FrameDecodeError, RangeError, UnstableClosedLoop, ValidationError
from .keys import KeyCoefficients, beta_moments, betas_plain, betas_quantized
from .quantized import QuantizedScenario
from .stability import PlantModel, p_star, star_norm

__version__ = "0.1.0"

__all__ = [
    "BellStateSpec", "QuantumKeyPair", "sample_key_pair", "encrypt", "control", "decrypt",
    "ConfigError", "FrameDecodeError", "RangeError", "UnstableClosedLoop", "ValidationError",
    "KeyCoefficients", "beta_moments", "betas_plain", "betas_quantized", "QuantizedScenario",
    "PlantModel", "p_star", "star_norm",
]
