"""JSON scenario files.

Schema (all keys except the plant are optional)::

    {
      "name": "robotarm",
      "plant": {"A": [[...], ...], "B": [...], "K": [...]},   # row-major
      "x0": [...],
      "realization": "exact" | "quantized",
      "w_b": 4,
      "channel": {"p": 0.0} | {"amplitudes": [a, b, c, d]},
      "horizon": 600, "trials": 200, "seed": 0,
      "divergence_limit": 1e6,
      "quantized": {"w": 10, "alpha": 0.5, "xbar": [...], "delta": [...] | null}
    }
"""

from dataclasses import dataclass, field
from importlib import resources
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .channel import BellStateSpec
from .errors import ConfigError, ValidationError
from .quantized import QuantizedScenario
from .stability import PlantModel

TOP_KEYS = {"name", "plant", "x0", "realization", "w_b", "channel", "horizon", "trials", "seed",
            "divergence_limit", "quantized", "description"}
QUANT_KEYS = {"w", "alpha", "xbar", "delta"}
CHANNEL_KEYS = {"p", "amplitudes"}
U64 = 2**64


@dataclass(eq=False)
class ScenarioConfig:
    plant: PlantModel
    x0: np.ndarray
    name: str = "scenario"
    realization: str = "exact"
    w_b: int = 4
    bell: BellStateSpec = field(default_factory=BellStateSpec.perfect)
    horizon: int = 600
    trials: int = 200
    seed: int = 0
    divergence_limit: float = 1e6
    quantized: Optional[QuantizedScenario] = None
    description: str = ""

    @property
    def n(self):
        return self.plant.n

    @property
    def p(self):
        return float(self.bell.joint_probabilities[1] + self.bell.joint_probabilities[2])

    def with_channel(self, p):
        out = ScenarioConfig(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        out.bell = BellStateSpec.conformant(p)
        return out

    def with_overrides(self, **kw):
        out = ScenarioConfig(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        for k, v in kw.items():
            setattr(out, k, v)
        return out


def _matrix(value, name, shape=None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be numeric") from exc
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} has non-finite entries")
    if shape is not None and arr.shape != shape:
        raise ConfigError(f"{name} has shape {arr.shape}, expected {shape}")
    return arr


def _int(value, name, lo, hi=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer")
    if value < lo or (hi is not None and value > hi):
        bound = f"{lo} <= {name}" + (f" <= {hi}" if hi is not None else "")
        raise ConfigError(f"{bound} violated: {name}={value}")
    return value


def _unknown(d, allowed, where):
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def from_dict(d):
    if not isinstance(d, dict):
        raise ConfigError("scenario must be a JSON object")
    _unknown(d, TOP_KEYS, "scenario")
    if "plant" not in d or not isinstance(d["plant"], dict):
        raise ConfigError("scenario needs a 'plant' object with A, B, K")
    pl = d["plant"]
    _unknown(pl, {"A", "B", "K"}, "plant")
    for k in ("A", "B", "K"):
        if k not in pl:
            raise ConfigError(f"plant.{k} missing")
    A = _matrix(pl["A"], "plant.A")
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ConfigError(f"plant.A must be square, got shape {A.shape}")
    n = A.shape[0]
    B = _matrix(pl["B"], "plant.B").reshape(-1)
    K = _matrix(pl["K"], "plant.K").reshape(-1)
    if B.size != n:
        raise ConfigError(f"plant.B needs {n} entries, got {B.size}")
    if K.size != n:
        raise ConfigError(f"plant.K needs {n} entries, got {K.size}")
    plant = PlantModel(A, B, K)
    x0 = _matrix(d.get("x0", [1.0] * n), "x0").reshape(-1)
    if x0.size != n:
        raise ConfigError(f"x0 needs {n} entries, got {x0.size}")

    realization = d.get("realization", "exact")
    if realization not in ("exact", "quantized"):
        raise ConfigError(f"realization must be 'exact' or 'quantized', got {realization!r}")
    w_b = _int(d.get("w_b", 4), "w_b", 1, 24)

    ch = d.get("channel", {"p": 0.0})
    if not isinstance(ch, dict):
        raise ConfigError("channel must be an object")
    _unknown(ch, CHANNEL_KEYS, "channel")
    if len(ch) != 1:
        raise ConfigError("channel needs exactly one of 'p' or 'amplitudes'")
    try:
        if "p" in ch:
            p = float(ch["p"])
            if not 0 <= p <= 1:
                raise ConfigError(f"0 <= channel.p <= 1 violated: p={p}")
            bell = BellStateSpec.conformant(p)
        else:
            amps = [complex(a) if not isinstance(a, (list, tuple)) else complex(*a) for a in ch["amplitudes"]]
            if len(amps) != 4:
                raise ConfigError("channel.amplitudes needs four entries a, b, c, d")
            bell = BellStateSpec(*amps)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc

    horizon = _int(d.get("horizon", 600), "horizon", 1)
    trials = _int(d.get("trials", 200), "trials", 1)
    seed = _int(d.get("seed", 0), "seed", 0, U64 - 1)
    limit = float(d.get("divergence_limit", 1e6))
    if not limit > 0 or math.isinf(limit):
        raise ConfigError("0 < divergence_limit < inf violated")

    scen = None
    if realization == "quantized" or "quantized" in d:
        q = d.get("quantized")
        if not isinstance(q, dict):
            raise ConfigError("quantized realization needs a 'quantized' object")
        _unknown(q, QUANT_KEYS, "quantized")
        for k in ("w", "alpha", "xbar"):
            if k not in q:
                raise ConfigError(f"quantized.{k} missing")
        w = _int(q["w"], "quantized.w", 2, 32)
        xbar = _matrix(q["xbar"], "quantized.xbar").reshape(-1)
        if xbar.size == 1:
            xbar = np.repeat(xbar, n)
        if xbar.size != n:
            raise ConfigError(f"quantized.xbar needs {n} entries")
        delta = q.get("delta")
        if delta is not None:
            delta = _matrix(delta, "quantized.delta").reshape(-1)
            if delta.size == 1:
                delta = np.repeat(delta, n)
            if delta.size != n:
                raise ConfigError(f"quantized.delta needs {n} entries")
        try:
            alpha = float(q["alpha"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("quantized.alpha must be a number") from exc
        scen = QuantizedScenario(w, w_b, alpha, xbar, K, delta)
        if realization == "quantized":
            bad = np.nonzero(~(np.abs(x0) < scen.xbar))[0]
            if bad.size:
                i = int(bad[0])
                raise ConfigError(f"|x0_{i}| < xbar_{i} violated: |x0_{i}|={abs(x0[i])}, xbar_{i}={scen.xbar[i]}")

    return ScenarioConfig(plant, x0, str(d.get("name", "scenario")), realization, w_b, bell, horizon,
                          trials, seed, limit, scen, str(d.get("description", "")))


def bundled_path(name):
    base = resources.files("qeclab") / "configs"
    cand = base / name
    if not cand.is_file() and not name.endswith(".json"):
        cand = base / f"{name}.json"
    return cand if cand.is_file() else None


def bundled_names():
    base = resources.files("qeclab") / "configs"
    return sorted(p.name for p in base.iterdir() if p.name.endswith(".json"))


def load(path):
    """Load a scenario file; a bare name falls back to the bundled configs."""
    p = Path(path)
    if not p.is_file():
        alt = bundled_path(str(path)) if p.parent == Path(".") else None
        if alt is None:
            raise ConfigError(f"config file not found: {path}")
        text = alt.read_text()
    else:
        text = p.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return from_dict(data)
