"""Mean-square stability of the loop under key mismatch.

With mismatched keys the actuator applies ``u = sum_i (1 + lam_i) K_i x_i``
where ``1 + lam_i`` is the ratio of actuator to sensor coefficient. The
vectorized second moment ``V = vec(E[x x^T])`` (column-major) then evolves
linearly, ``V(t+1) = M(p) V(t)``.

Two knobs expose modelling choices:

* ``sign``: coefficient of the ``2p`` cross terms. Flipping each key bit
  with probability ``p`` gives ``E[lam | beta] = -2p``, hence the default
  ``sign=-1``; ``+1`` is available for comparison.
* ``variance_model``: ``"kron"`` charges the mismatch variance as
  ``h M1 (x) M1``, i.e. proportional to ``(Kx)^2``. ``"independent"`` uses
  the per-dimension form ``h sum_i K_i^2 x_i^2 B B^T`` that follows from the
  coefficients being independent across dimensions.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np
import scipy.linalg

from .channel import BellStateSpec, sample_bits
from .core import mismatch_output
from .errors import UnstableClosedLoop, ValidationError
from .keys import beta_moments, betas_plain
from .linalg import spectral_radius
from .rng import as_generator

VARIANTS = ("exact", "paper")
VARIANCE_MODELS = ("kron", "independent")
TREND_SLOPE = 1e-6
MAX_SCALING_STEPS = 60


@dataclass(eq=False)
class PlantModel:
    A: np.ndarray
    B: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValidationError(f"A must be square, got shape {self.A.shape}")
        self.B = np.asarray(self.B, dtype=float).reshape(n, 1)
        self.K = np.asarray(self.K, dtype=float).reshape(1, n)
        for name in ("A", "B", "K"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(f"{name} has non-finite entries")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def M0(self):
        return self.A + self.B @ self.K

    @property
    def M1(self):
        return self.B @ self.K


@dataclass(frozen=True)
class StabilityReport:
    rho_closed: float
    epsilon: float
    star_norm_M0: float
    star_norm_M1: float
    A_const: float
    p_star: float
    variant: str
    sign_convention: int
    gamma: float
    condition: float


def closed_loop_radius(plant):
    return spectral_radius(plant.M0)


def open_loop_radius(plant):
    return spectral_radius(plant.A)


class StarNorm:
    """Induced norm ``||T^-1 X T||_inf`` adapted to a stable matrix ``M0``.

    ``T = U diag(1, g, g^2, ...)`` with ``U`` the unitary factor of a complex
    Schur decomposition of ``M0``. ``g = 2^-k`` for the first ``k`` at which
    ``||M0||_* <= (1 + rho(M0)) / 2``. Matrices of size ``n^2`` are measured
    with ``T (x) T``.
    """

    def __init__(self, M0):
        M0 = np.asarray(M0, dtype=float)
        self.n = M0.shape[0]
        self.rho = spectral_radius(M0)
        if not self.rho < 1:
            raise UnstableClosedLoop(f"star norm needs rho(M0) < 1, got {self.rho!r}")
        _, U = scipy.linalg.schur(M0, output="complex")
        self.U = U
        target = (1 + self.rho) / 2
        for k in range(MAX_SCALING_STEPS + 1):
            gamma = 2.0**-k
            self._set(gamma)
            value = self(M0)
            if value <= target:
                break
        else:
            raise np.linalg.LinAlgError(
                f"no scaling up to 2^-{MAX_SCALING_STEPS} meets the norm contract "
                f"(condition {self.condition:.3g})")
        self.k = k
        self.gamma = gamma
        self.value_M0 = value

    def _set(self, gamma):
        d = gamma ** np.arange(self.n)
        self.T = self.U * d
        self.T_inv = (self.U.conj().T) / d[:, None]
        self.condition = float(d[0] / d[-1])

    def similar(self, X):
        X = np.asarray(X)
        if X.shape == (self.n, self.n):
            return self.T_inv @ X @ self.T
        if X.shape == (self.n**2, self.n**2):
            return np.kron(self.T_inv, self.T_inv) @ X @ np.kron(self.T, self.T)
        raise ValidationError(f"star norm applies to {self.n}x{self.n} or {self.n**2}x{self.n**2} matrices")

    def __call__(self, X):
        return float(np.max(np.sum(np.abs(self.similar(X)), axis=1)))


def star_norm(plant):
    return StarNorm(plant.M0)


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}, got {variant!r}")


def c_const(w_b):
    return 4**w_b + 3 * 2**w_b + 2


def A_const(w_b, variant="exact"):
    """Constant of the mismatch variance: ``h(p) = A (p - p^2)``.

    ``paper``: C / (3 E[beta^2]).  ``exact``: C E[1/beta^2] / 3.
    """
    _check_variant(variant)
    m = beta_moments(w_b)
    C = c_const(w_b)
    if variant == "paper":
        return float(Fraction(C) / (3 * m.mean_sq))
    return float(Fraction(C, 3) * m.mean_inv_sq) if isinstance(m.mean_inv_sq, Fraction) else C / 3 * m.mean_inv_sq


def h_of_p(p, w_b, variant="exact"):
    if not 0 <= p <= 1:
        raise ValidationError(f"p must lie in [0, 1], got {p}")
    return A_const(w_b, variant) * (p - p * p)


def _check_sign(sign):
    if sign not in (1, -1):
        raise ValidationError(f"sign convention must be +1 or -1, got {sign}")


def build_M(plant, p, w_b, variant="exact", sign=-1, variance_model="kron"):
    _check_sign(sign)
    if variance_model not in VARIANCE_MODELS:
        raise ValidationError(f"variance_model must be one of {VARIANCE_MODELS}")
    M0, M1 = plant.M0, plant.M1
    h = h_of_p(p, w_b, variant)
    out = np.kron(M0, M0) + sign * 2 * p * (np.kron(M1, M0) + np.kron(M0, M1))
    if variance_model == "kron":
        return out + (4 * p * p + h) * np.kron(M1, M1)
    n = plant.n
    sel = np.zeros(n * n)
    sel[np.arange(n) * (n + 1)] = plant.K.reshape(-1) ** 2
    bb = (plant.B @ plant.B.T).reshape(-1, order="F")
    return out + 4 * p * p * np.kron(M1, M1) + h * np.outer(bb, sel)


def p_star(plant, w_b, variant="exact", sign=-1, norm=None):
    """Threshold below which the loop is mean-square stable.

    ``p* = eps / max(16 |M1|^2, 16 |M1|, 4 A |M1|^2)`` in the star norm;
    reported as 1.0 when ``M1 = 0``. Returns a :class:`StabilityReport`.
    """
    _check_variant(variant)
    rho = closed_loop_radius(plant)
    if not rho < 1:
        raise UnstableClosedLoop(
            f"rho(A + BK) = {rho:.6g} >= 1: the plaintext loop is not stable, no threshold exists")
    norm = norm or star_norm(plant)
    eps = 1 - rho
    n1 = norm(plant.M1)
    a = A_const(w_b, variant)
    denom = max(16 * n1 * n1, 16 * n1, 4 * a * n1 * n1)
    ps = 1.0 if denom == 0 else min(1.0, eps / denom)
    return StabilityReport(rho, eps, norm.value_M0, n1, a, ps, variant, sign, norm.gamma, norm.condition)


@dataclass(frozen=True)
class MeanSquareTrajectory:
    norms: np.ndarray
    slope: float
    converged: bool
    diverged: bool


def mean_square_recursion(plant, p, w_b, T, V0=None, variant="exact", sign=-1, variance_model="kron"):
    """Iterate ``V(t+1) = M(p) V(t)`` and classify the trend.

    ``norms[t] = ||V(t)||_2`` for ``t = 0..T``. The trend is a least-squares
    slope of ``log ||V||`` over the last quarter of the horizon; renormalizing
    every step keeps long horizons free of overflow.
    """
    if T < 4:
        raise ValidationError("horizon must be at least 4 steps")
    M = build_M(plant, p, w_b, variant, sign, variance_model)
    n = plant.n
    V = np.eye(n).reshape(-1) if V0 is None else np.asarray(V0, dtype=float).reshape(-1, order="F")
    logs = np.empty(T + 1)
    scale = 0.0
    for t in range(T + 1):
        nv = np.linalg.norm(V)
        if nv == 0:
            logs[t:] = -np.inf
            break
        logs[t] = scale + math.log(nv)
        scale += math.log(nv)
        V = M @ (V / nv)
    tail = logs[-max(2, (T + 1) // 4):]
    if np.any(~np.isfinite(tail)):
        slope = -np.inf
    else:
        slope = float(np.polyfit(np.arange(tail.size), tail, 1)[0])
    with np.errstate(over="ignore"):
        norms = np.exp(logs)
    return MeanSquareTrajectory(norms, slope, slope < -TREND_SLOPE, slope > TREND_SLOPE)


def second_moment_recursion(plant, p, w_b, x0, steps, variant="exact", sign=-1, variance_model="kron"):
    """``E[x(t) x(t)^T]`` for ``t = 0..steps`` from a deterministic start."""
    M = build_M(plant, p, w_b, variant, sign, variance_model)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    V = np.outer(x0, x0).reshape(-1, order="F")
    out = [V]
    for _ in range(steps):
        V = M @ V
        out.append(V)
    return np.array([v.reshape(plant.n, plant.n, order="F") for v in out])


def monte_carlo_second_moments(plant, p, w_b, x0, steps, trials, rng=None, chunk=250_000):
    """Simulate the unquantized loop with flipped key bits.

    Sensor bits are fair, each actuator bit disagrees with probability ``p``
    (a conformant Bell state), and the decrypted input is the closed form
    ``sum_i (beta_ac/beta_se) K_i x_i``. Returns per-step sample means and
    standard errors of ``x x^T``.
    """
    rng = as_generator(rng)
    n = plant.n
    state = BellStateSpec.conformant(p)
    A, B, K = plant.A, plant.B.reshape(-1), plant.K.reshape(-1)
    s1 = np.zeros((steps + 1, n, n))
    s2 = np.zeros((steps + 1, n, n))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        x = np.tile(np.asarray(x0, dtype=float), (m, 1))
        for t in range(steps + 1):
            xx = x[:, :, None] * x[:, None, :]
            s1[t] += xx.sum(axis=0)
            s2[t] += (xx * xx).sum(axis=0)
            if t == steps:
                break
            se, ac = sample_bits(state, (m, n, w_b), rng)
            u = mismatch_output(x, K, betas_plain(se), betas_plain(ac))
            x = x @ A.T + u[:, None] * B
        done += m
    mean = s1 / trials
    var = np.maximum(s2 / trials - mean**2, 0.0)
    return mean, np.sqrt(var / trials)


@dataclass(frozen=True)
class SignSelection:
    sign: int
    variance_model: str
    max_z: dict
    matches: dict


def select_sign_convention(plant, p, w_b, x0, checkpoints, trials, rng=None, variant="exact", sigmas=3.0):
    """Compare every (sign, variance model) pair with Monte-Carlo moments.

    ``max_z[(sign, model)]`` is the largest |analytic - MC| / stderr over the
    checkpoints and matrix entries; the winner has the smallest value.
    """
    steps = max(checkpoints)
    mean, se = monte_carlo_second_moments(plant, p, w_b, x0, steps, trials, rng)
    max_z, matches = {}, {}
    for sign in (-1, 1):
        for model in VARIANCE_MODELS:
            V = second_moment_recursion(plant, p, w_b, x0, steps, variant, sign, model)
            z = [np.max(np.abs(V[t] - mean[t]) / np.maximum(se[t], 1e-300)) for t in checkpoints]
            max_z[(sign, model)] = float(max(z))
            matches[(sign, model)] = max_z[(sign, model)] <= sigmas
    best = min(max_z, key=max_z.get)
    return SignSelection(best[0], best[1], max_z, matches)
