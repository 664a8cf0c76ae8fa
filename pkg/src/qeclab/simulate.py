"""Closed-loop Monte-Carlo driver.

Each step of each trial draws fresh quantum keys, runs the sensor, the
controller and the actuator with every ciphertext serialized to bytes and
decoded again, and applies the decrypted input to the plant.

Trial ``k`` uses streams ``stream(seed, k, role)`` for role in
(SENSOR, CONTROLLER, CHANNEL), so results do not depend on how trials are
distributed over workers. Aggregates use numpy's pairwise summation over
a trial-indexed array.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import csv
import io
from typing import Optional

import numpy as np

from . import core, quantized
from .channel import sample_key_pair
from .errors import RangeError
from .frames import RealCipherFrame, decode_frame, encode_frame
from .keys import betas_plain, betas_quantized
from .rng import CHANNEL, CONTROLLER, SENSOR, stream
from .stability import TREND_SLOPE

CSV_VERSION = 1
CSV_COLUMNS = ("t", "mse_mean", "state_norm_mean", "alive")


@dataclass(frozen=True)
class TrialResult:
    err_sq: np.ndarray      # (T,), NaN after divergence
    state_norm: np.ndarray  # (T+1,), NaN after divergence
    diverged_at: int        # -1 if the trial stayed bounded
    states: Optional[np.ndarray] = None


@dataclass(frozen=True)
class RunReport:
    mse: np.ndarray          # mean over live trials of (u - Kx)^2, per step
    state_norm: np.ndarray   # mean over live trials of |x(t)|
    alive: np.ndarray        # live trial count per step
    diverged_trials: int
    slope: float             # trend of log mean |x| over the last quarter
    converged: bool
    diverged: bool
    states: Optional[np.ndarray] = None

    def to_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        T = self.mse.size
        for t in range(T + 1):
            mse = repr(float(self.mse[t])) if t < T else ""
            w.writerow((t, mse, repr(float(self.state_norm[t])), int(self.alive[t])))
        return out.getvalue()


def _keys(cfg, groups):
    if cfg.realization == "exact":
        return betas_plain(groups).astype(float)
    scen = cfg.quantized
    return betas_quantized(groups, scen.alpha, scen.xbar)


def _wire(frame):
    return decode_frame(encode_frame(frame))


def step_exact(x, K, b_se, b_ac, t, wire=True):
    ct = RealCipherFrame(t, core.encrypt(x, b_se), "state")
    if wire:
        ct = _wire(ct)
    cu = RealCipherFrame(t, core.control(K, ct.values), "input")
    if wire:
        cu = _wire(cu)
    return float(core.decrypt(cu.values, b_ac))


def step_quantized(x, K, b_se, b_ac, scen, rng_s, rng_c, t, wire=True):
    ct = quantized.encrypt_q(x, b_se, scen, rng_s, t)
    if wire:
        ct = _wire(ct)
    cu = quantized.control_q(K, ct, scen, rng_c)
    if wire:
        cu = _wire(cu)
    return quantized.decrypt_q(cu, b_ac, scen)


def run_trial(cfg, k, record_states=False, wire=True):
    T, n = cfg.horizon, cfg.n
    A, B = cfg.plant.A, cfg.plant.B.reshape(-1)
    K = cfg.plant.K.reshape(-1)
    rs, rc, rch = (stream(cfg.seed, k, role) for role in (SENSOR, CONTROLLER, CHANNEL))
    err = np.full(T, np.nan)
    norms = np.full(T + 1, np.nan)
    states = np.full((T + 1, n), np.nan) if record_states else None
    x = cfg.x0.copy()
    diverged_at = -1
    for t in range(T + 1):
        norms[t] = np.linalg.norm(x)
        if states is not None:
            states[t] = x
        if t == T:
            break
        pair = sample_key_pair(cfg.bell, n, cfg.w_b, rch, t)
        b_se = _keys(cfg, pair.sensor_groups)
        b_ac = _keys(cfg, pair.actuator_groups)
        try:
            if cfg.realization == "exact":
                u = step_exact(x, K, b_se, b_ac, t, wire)
            else:
                u = step_quantized(x, K, b_se, b_ac, cfg.quantized, rs, rc, t, wire)
        except RangeError as exc:
            if cfg.realization == "quantized":
                raise RangeError(f"trial {k}, step {t}: {exc}") from exc
            diverged_at = t  # exp guard hit: the state has left any usable range
            break
        err[t] = (u - K @ x) ** 2
        x = A @ x + B * u
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > cfg.divergence_limit:
            diverged_at = t + 1
            break
    return TrialResult(err, norms, diverged_at, states)


def _run_chunk(args):
    cfg, ks, record_states, wire = args
    return [run_trial(cfg, k, record_states, wire) for k in ks]


def run_trials(cfg, workers=1, record_states=False, wire=True):
    ks = list(range(cfg.trials))
    if workers <= 1:
        return _run_chunk((cfg, ks, record_states, wire))
    chunks = [ks[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(workers) as ex:
        parts = list(ex.map(_run_chunk, [(cfg, c, record_states, wire) for c in chunks]))
    out = [None] * cfg.trials
    for c, res in zip(chunks, parts):
        for k, r in zip(c, res):
            out[k] = r
    return out


def _nanmean_rows(rows):
    alive = np.sum(~np.isnan(rows), axis=0)
    total = np.sum(np.where(np.isnan(rows), 0.0, rows), axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(alive > 0, total / np.maximum(alive, 1), np.nan), alive


def simulate_closed_loop(cfg, workers=1, record_states=False, wire=True):
    trials = run_trials(cfg, workers, record_states, wire)
    mse, _ = _nanmean_rows(np.array([r.err_sq for r in trials]))
    norm, alive = _nanmean_rows(np.array([r.state_norm for r in trials]))
    n_div = sum(r.diverged_at >= 0 for r in trials)
    T = cfg.horizon
    tail = norm[-max(2, (T + 1) // 4):]
    tail = tail[np.isfinite(tail)]
    if n_div:
        slope = np.inf
    elif tail.size >= 2 and np.all(tail > 0):
        slope = float(np.polyfit(np.arange(tail.size), np.log(tail), 1)[0])
    elif tail.size and np.all(tail == 0):
        slope = -np.inf
    else:
        slope = 0.0
    states = np.array([r.states for r in trials]) if record_states else None
    # A noisy stationary floor has a slope near zero of either sign; growth
    # only counts when the tail also sits above the initial norm.
    growing = slope > TREND_SLOPE and (n_div or tail.size == 0 or tail[-1] > norm[0])
    return RunReport(mse, norm, alive, int(n_div), slope, slope < -TREND_SLOPE, bool(growing), states)
