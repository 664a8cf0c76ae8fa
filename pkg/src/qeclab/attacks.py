"""Eavesdropper models and role-level timing benchmarks."""

from dataclasses import dataclass
import csv
import io
import math
import random
import time

import numpy as np

from . import baselines as bl
from .core import encrypt
from .errors import ValidationError
from .keys import betas_plain
from .rng import as_generator, stream

NOISE_KINDS = ("none", "gaussian", "uniform", "impulse")
IMPULSE_RATE = 0.01
IMPULSE_GAIN = 10.0
SCHEMES = ("qec", "qec_quantized", "toy_rsa", "toy_paillier", "toy_symmetric")


def kca_guess_probability(w_b):
    if w_b < 1:
        raise ValidationError("w_b must be at least 1")
    return 2.0**-w_b


def all_betas(w_b):
    patterns = np.arange(2**w_b)
    bits = (patterns[:, None] >> np.arange(w_b - 1, -1, -1)) & 1
    return betas_plain(bits).astype(float)


def kca_simulation(w_b, trials, rng=None, strategy="uniform", prior_scale=1.0):
    """Empirical success rate of guessing ``x`` from one ciphertext.

    The attacker enumerates every coefficient value, which yields the
    candidate plaintexts ``beta_j ln(ct)``. ``strategy="uniform"`` picks one
    uniformly; ``"map"`` picks the candidate of highest posterior under a
    known Gaussian prior of scale ``prior_scale`` (density times the
    Jacobian ``|beta_j|``).
    """
    rng = as_generator(rng)
    cands = all_betas(w_b)
    beta = rng.choice(cands, size=trials)
    x = rng.normal(0.0, prior_scale, size=trials)
    log_ct = x / beta
    guesses = log_ct[:, None] * cands[None, :]
    if strategy == "uniform":
        pick = rng.integers(0, cands.size, size=trials)
    elif strategy == "map":
        score = -0.5 * (guesses / prior_scale) ** 2 + np.log(np.abs(cands))[None, :]
        pick = np.argmax(score, axis=1)
    else:
        raise ValidationError(f"unknown strategy {strategy!r}")
    hit = cands[pick] == beta
    return float(hit.mean())


def inject_noise(traj, kind, magnitude, rng=None):
    """Additive i.i.d. noise.

    gaussian: N(0, magnitude^2); uniform: U(-magnitude, magnitude);
    impulse: with probability 1% per entry a spike of +-10 * magnitude.
    """
    if magnitude < 0:
        raise ValidationError("noise magnitude must be nonnegative")
    traj = np.asarray(traj, dtype=float)
    if kind == "none" or magnitude == 0:
        return traj.copy()
    rng = as_generator(rng)
    if kind == "gaussian":
        return traj + rng.normal(0.0, magnitude, traj.shape)
    if kind == "uniform":
        return traj + rng.uniform(-magnitude, magnitude, traj.shape)
    if kind == "impulse":
        mask = rng.random(traj.shape) < IMPULSE_RATE
        signs = rng.choice((-1.0, 1.0), size=traj.shape)
        return traj + mask * signs * IMPULSE_GAIN * magnitude
    raise ValidationError(f"noise kind must be one of {NOISE_KINDS}, got {kind!r}")


@dataclass(frozen=True)
class AttackResult:
    scheme: str
    noise: str
    metric: float
    A_e: np.ndarray
    rank: int


def fit_linear_map(obs):
    """Least-squares ``A_e`` with ``obs[t+1] ~ A_e obs[t]``; also returns rank."""
    obs = np.asarray(obs, dtype=float)
    if obs.ndim != 2 or obs.shape[0] < obs.shape[1] + 1:
        raise ValidationError("need at least n+1 observations of an n-vector")
    X, Y = obs[:-1], obs[1:]
    sol, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    return sol.T, int(rank)


def sysid_attack(obs, truth, x0=None, scheme="none", noise="none"):
    """Fit a linear model to ``obs`` and roll it out from ``x0``.

    The metric is the mean over steps of ``|x_e(t) - x(t)| / |x(t)|`` against
    the true states ``truth``; steps with ``x(t) = 0`` are skipped.
    """
    truth = np.asarray(truth, dtype=float)
    A_e, rank = fit_linear_map(obs)
    x_e = np.empty_like(truth)
    x_e[0] = truth[0] if x0 is None else x0
    for t in range(1, len(truth)):
        x_e[t] = A_e @ x_e[t - 1]
    norms = np.linalg.norm(truth, axis=1)
    ok = norms > 0
    err = np.linalg.norm(x_e - truth, axis=1)[ok] / norms[ok]
    return AttackResult(scheme, noise, float(np.mean(err)), A_e, rank)


def plain_rollout(plant, x0, T):
    M0 = plant.M0
    xs = np.empty((T + 1, plant.n))
    xs[0] = x0
    for t in range(T):
        xs[t + 1] = M0 @ xs[t]
    return xs


def qec_ciphertexts(xs, w_b, rng):
    """Sensor ciphertexts ``exp(x/beta)`` with fresh uniform keys per step."""
    rng = as_generator(rng)
    bits = rng.integers(0, 2, size=xs.shape + (w_b,))
    return encrypt(xs, betas_plain(bits))


def run_attacks(plant, x0, T, w_b=4, noise_level=0.01, seed=0, kinds=NOISE_KINDS):
    """Attack the plaintext and the ciphertext channel under each noise kind.

    Noise magnitude is ``noise_level`` times the RMS of the observed signal.
    """
    xs = plain_rollout(plant, np.asarray(x0, dtype=float), T)
    cts = qec_ciphertexts(xs, w_b, stream(seed, 0))
    results = []
    for k, kind in enumerate(kinds):
        for j, (scheme, obs) in enumerate((("none", xs), ("qec", cts))):
            mag = noise_level * float(np.sqrt(np.mean(obs**2)))
            noisy = inject_noise(obs, kind, mag, stream(seed, 1, k, j))
            results.append(sysid_attack(noisy, xs, xs[0], scheme, kind))
    return results


def attacks_csv(results):
    schemes = sorted({r.scheme for r in results}, key=["none", "qec"].index)
    table = {(r.noise, r.scheme): r.metric for r in results}
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["noise"] + schemes)
    for kind in dict.fromkeys(r.noise for r in results):
        w.writerow([kind] + [repr(table[(kind, s)]) for s in schemes])
    return out.getvalue()


@dataclass(frozen=True)
class BenchResult:
    scheme: str
    sensor: float
    controller: float
    actuator: float

    @property
    def total(self):
        return self.sensor + self.controller + self.actuator


class _Roles:
    """One scheme's sensor / controller / actuator on plain Python scalars."""

    def __init__(self, K, seed):
        self.K = [float(k) for k in K]
        self.rng = random.Random(seed)


class _Qec(_Roles):
    def sensor(self, x, betas):
        return [math.exp(xi / b) for xi, b in zip(x, betas)]

    def controller(self, ct):
        return [c**k for c, k in zip(ct, self.K)]

    def actuator(self, cu, betas):
        return sum(b * math.log(c) for b, c in zip(betas, cu))


class _QecQuantized(_Roles):
    def __init__(self, K, seed, w=10, alpha=0.5, xbar=1.0):
        super().__init__(K, seed)
        self.w = w
        self.scale = 2.0 ** (w - 1)
        self.offset = xbar / math.log1p(alpha)
        self.delta = [max(abs(k), 1.0) * (1 + 1 / self.scale) for k in self.K]

    def _q(self, v):
        y = v if v > 1 else 2 - 1 / v
        s = y * self.scale
        low = math.floor(s)
        return low + (self.rng.random() < s - low)

    def _g_inv(self, code):
        y = code / self.scale
        return y if y > 1 else 1 / (2 - y)

    def shift(self, betas):
        return [b + math.copysign(self.offset, b) for b in betas]

    def sensor(self, x, betas):
        return [self._q(math.exp(xi / b)) for xi, b in zip(x, betas)]

    def controller(self, codes):
        return [self._q(self._g_inv(c) ** (k / d)) for c, k, d in zip(codes, self.K, self.delta)]

    def actuator(self, codes, betas):
        return sum(d * b * math.log(self._g_inv(c)) for d, b, c in zip(self.delta, betas, codes))


class _Rsa(_Roles):
    def __init__(self, K, seed, bits=512):
        super().__init__(K, seed)
        self.key = bl.rsa_keygen(bits, seed)
        self.fp = bl.FixedPoint(self.key.n)
        self.enc_K = [bl.rsa_encrypt(self.key, self.fp.encode(k)) for k in self.K]

    def sensor(self, x, betas):
        return [bl.rsa_encrypt(self.key, self.fp.encode(xi)) for xi in x]

    def controller(self, ct):
        n = self.key.n
        return [c * ek % n for c, ek in zip(ct, self.enc_K)]

    def actuator(self, cu, betas):
        return sum(self.fp.decode(bl.rsa_decrypt(self.key, c), 2) for c in cu)


class _Paillier(_Roles):
    def __init__(self, K, seed, bits=512):
        super().__init__(K, seed)
        self.key = bl.paillier_keygen(bits, seed)
        self.fp = bl.FixedPoint(self.key.n)
        self.K_int = [round(k * self.fp.scale) for k in self.K]

    def sensor(self, x, betas):
        return [bl.paillier_encrypt(self.key, self.fp.encode(xi), self.rng) for xi in x]

    def controller(self, ct):
        n2 = self.key.n2
        acc = 1
        for c, k in zip(ct, self.K_int):
            base = c if k >= 0 else bl.gmpy2.invert(c, n2)
            acc = acc * bl.powmod(base, abs(k), n2) % n2
        return acc

    def actuator(self, cu, betas):
        return self.fp.decode(bl.paillier_decrypt(self.key, cu), 2)


class _Symmetric(_Roles):
    def __init__(self, K, seed):
        super().__init__(K, seed)
        self.sc = bl.KeystreamCipher(random.Random(seed).randbytes(16))
        self.ca = bl.KeystreamCipher(random.Random(seed + 1).randbytes(16))
        self.nonce = 0

    def sensor(self, x, betas):
        self.nonce += 1
        return self.sc.encrypt_reals(self.nonce, x)

    def controller(self, ct):
        x = self.sc.decrypt_reals(self.nonce, ct)
        u = sum(k * xi for k, xi in zip(self.K, x))
        return self.ca.encrypt_reals(self.nonce, [u])

    def actuator(self, cu, betas):
        return self.ca.decrypt_reals(self.nonce, cu)[0]


_ROLE_CLASSES = {"qec": _Qec, "qec_quantized": _QecQuantized, "toy_rsa": _Rsa,
                 "toy_paillier": _Paillier, "toy_symmetric": _Symmetric}


def bench_schemes(plant, schemes=SCHEMES, steps=1000, seed=0, check=True):
    """Mean per-step wall time of each role, one scheme at a time.

    States are drawn uniformly from [-1, 1]^n and key coefficients are drawn
    before timing starts; only the role computations are timed. With
    ``check`` the decrypted input is compared against ``K x``.
    """
    if steps < 1:
        raise ValidationError("steps must be positive")
    K = plant.K.reshape(-1)
    n = K.size
    rng = stream(seed, 0)
    xs = rng.uniform(-1, 1, size=(steps, n)).tolist()
    w_b = 4
    bits = rng.integers(0, 2, size=(steps, n, w_b))
    plain = betas_plain(bits).astype(float)
    out = []
    for name in schemes:
        if name not in _ROLE_CLASSES:
            raise ValidationError(f"unknown scheme {name!r}; choose from {SCHEMES}")
        roles = _ROLE_CLASSES[name](K, seed)
        betas = plain if name != "qec_quantized" else np.array([roles.shift(b) for b in plain])
        betas = betas.tolist()
        ts = tc = ta = 0.0
        worst = sq_err = sq_bound = 0.0
        for x, b in zip(xs, betas):
            t0 = time.perf_counter()
            ct = roles.sensor(x, b)
            t1 = time.perf_counter()
            cu = roles.controller(ct)
            t2 = time.perf_counter()
            u = roles.actuator(cu, b)
            t3 = time.perf_counter()
            ts += t1 - t0
            tc += t2 - t1
            ta += t3 - t2
            if check:
                err = u - sum(k * xi for k, xi in zip(K, x))
                worst = max(worst, abs(err))
                sq_err += err * err
                if name == "qec_quantized":
                    sq_bound += sum(5 * (bi * d) ** 2 for bi, d in zip(b, roles.delta)) / 4.0**roles.w
        if check and name == "qec_quantized":
            if sq_err > 2 * sq_bound:
                raise AssertionError(f"{name}: mean squared error {sq_err / steps:.3g} exceeds twice the bound")
        elif check and worst > 1e-3:
            raise AssertionError(f"{name}: decrypted input off by {worst:.3g}")
        out.append(BenchResult(name, ts / steps, tc / steps, ta / steps))
    return out


def bench_csv(results, unit=1e-5):
    """Table with one row per role and one column per scheme, in ``unit`` seconds."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["role"] + [r.scheme for r in results])
    for role in ("sensor", "controller", "actuator", "total"):
        w.writerow([role] + [repr(getattr(r, role) / unit) for r in results])
    return out.getvalue()
