"""Privacy accounting for the key coefficients under quantization.

The observable is the quantized sensor word ``Q_w(exp(x / beta))``. Two
coefficient matrices that differ in one entry by at most ``zeta`` produce
word distributions whose total-variation distance is bounded by

    Delta = zeta (1 + alpha) ln(1 + alpha)^2 / xbar * 2^(w-1)

provided ``zeta (1 + alpha) ln(1 + alpha)^2 / xbar <= 2^-(w-1)``.

The bound rests on ``|d g(exp(x/beta)) / d beta| <= (1 + alpha) |x| / beta^2``
along a path that keeps the sign of ``beta``; it is only claimed for
same-sign pairs.
"""

from dataclasses import dataclass
import itertools
import math
from typing import Optional, Tuple

import numpy as np

from .errors import ValidationError
from .quantizer import MAX_W, atom_distribution, g, top_value, tv_distance
from .rng import as_generator

ADJACENCY_MODES = ("formula", "prose")
XBAR_AGGREGATORS = ("min", "max")
PARAM_MODES = ("corrected", "literal")


@dataclass(frozen=True)
class AdjacencySpec:
    zeta: float
    i_star: int
    t_star: int

    def __post_init__(self):
        if not self.zeta >= 0:
            raise ValidationError("zeta must be nonnegative")


@dataclass(frozen=True)
class DpReport:
    delta: Optional[float]
    feasible: bool
    alpha_interval: Optional[Tuple[float, float]]
    w_min: Optional[int]
    reason: str = ""


def _pair_condition(b, bp, zeta, w_b, mode):
    gap = abs(b - bp)
    same = b * bp > 0
    if mode == "formula":
        offset = 2.0**w_b * (1 - np.sign(b * bp))
    else:
        offset = 0.0 if same else 2.0**w_b
    return abs(gap - offset) <= zeta


def is_adjacent(E, Ep, zeta, w_b, mode="formula"):
    """True iff ``E`` and ``Ep`` differ in exactly one entry, and that entry
    meets the zeta condition. ``mode="prose"`` uses offset ``2^w_b`` for
    opposite signs instead of ``2^w_b (1 - sgn)``."""
    if mode not in ADJACENCY_MODES:
        raise ValidationError(f"mode must be one of {ADJACENCY_MODES}")
    E = np.asarray(E, dtype=float)
    Ep = np.asarray(Ep, dtype=float)
    if E.shape != Ep.shape:
        raise ValidationError(f"shape mismatch {E.shape} vs {Ep.shape}")
    diff = np.argwhere(E != Ep)
    if len(diff) != 1:
        return False
    idx = tuple(diff[0])
    return bool(_pair_condition(E[idx], Ep[idx], zeta, w_b, mode))


def differing_slot(E, Ep):
    diff = np.argwhere(np.asarray(E) != np.asarray(Ep))
    return tuple(int(i) for i in diff[0]) if len(diff) == 1 else None


def sensitivity(zeta, alpha, xbar):
    """``zeta (1 + alpha) ln(1 + alpha)^2 / xbar``: worst shift of ``g(v)``."""
    return zeta * (1 + alpha) * math.log1p(alpha) ** 2 / xbar


def aggregate_xbar(xbar, how="min"):
    if how not in XBAR_AGGREGATORS:
        raise ValidationError(f"xbar aggregator must be one of {XBAR_AGGREGATORS}")
    xbar = np.asarray(xbar, dtype=float)
    if np.any(xbar <= 0):
        raise ValidationError("xbar must be positive")
    return float(xbar.min() if how == "min" else xbar.max())


def delta_value(zeta, alpha, xbar, w):
    return sensitivity(zeta, alpha, xbar) * 2.0 ** (w - 1)


def delta_bound(zeta, alpha, xbar, w, aggregate="min"):
    """Delta for zeta-adjacent keys, with the hypothesis check reported.

    ``xbar`` may be per dimension; ``aggregate="min"`` gives a bound valid
    for every dimension, ``"max"`` the looser literal form.
    """
    if zeta < 0:
        raise ValidationError("zeta must be nonnegative")
    if not 0 < alpha <= 1:
        raise ValidationError(f"alpha must lie in (0, 1], got {alpha}")
    xa = aggregate_xbar(xbar, aggregate)
    s = sensitivity(zeta, alpha, xa)
    value = s * 2.0 ** (w - 1)
    limit = 2.0 ** -(w - 1)
    if s > limit:
        return DpReport(value, False, None, w,
                        f"hypothesis zeta(1+alpha)ln^2(1+alpha)/xbar = {s:.6g} <= 2^-(w-1) = {limit:.6g} violated")
    return DpReport(value, True, None, w)


@dataclass(frozen=True)
class DpCheck:
    gap: float             # exact TV distance between the two word laws
    g_gap_bound: float     # 2^(w-1) |g(v) - g(v')|
    key_gap_bound: float   # 2^(w-1) |beta - beta'| (1+alpha) ln^2(1+alpha) / xbar
    delta: float           # Delta at the given zeta
    v_gap: float           # |v - v'|, for comparison with |g(v) - g(v')|

    @property
    def chain_holds(self):
        tol = 1e-12
        return (self.gap <= self.g_gap_bound + tol and self.g_gap_bound <= self.key_gap_bound * (1 + 1e-9) + tol
                and self.key_gap_bound <= self.delta * (1 + 1e-9) + tol)


def verify_dp_exact(x, beta, beta_p, scen, i=0, zeta=None):
    """Exact single-element check of the privacy bound for dimension ``i``.

    ``zeta`` defaults to ``|beta - beta_p|``.
    """
    xbar = float(scen.xbar[i])
    if not abs(x) < xbar:
        raise ValidationError(f"|x| < xbar_{i} required")
    if zeta is None:
        zeta = abs(beta - beta_p)
    v = math.exp(x / beta)
    vp = math.exp(x / beta_p)
    p = atom_distribution(v, scen.w)
    q = atom_distribution(vp, scen.w)
    gap = float(tv_distance(p, q))
    scale = 2.0 ** (scen.w - 1)
    return DpCheck(
        gap=gap,
        g_gap_bound=scale * abs(g(v) - g(vp)),
        key_gap_bound=scale * sensitivity(abs(beta - beta_p), scen.alpha, xbar),
        delta=delta_value(zeta, scen.alpha, xbar, scen.w),
        v_gap=abs(v - vp),
    )


def beta_domain(w_b, alpha, xbar):
    """``(c, c + 2^(w_b-1))``: magnitude range of offset coefficients."""
    c = xbar / math.log1p(alpha)
    return c, c + 2.0 ** (w_b - 1)


def opposite_sign_adjacency_possible(zeta, w_b, alpha, xbar, mode="formula"):
    """Whether an opposite-sign pair can be zeta-adjacent in the domain."""
    lo, hi = beta_domain(w_b, alpha, xbar)
    offset = 2.0 ** (w_b + 1) if mode == "formula" else 2.0**w_b
    # |beta - beta'| ranges over [2 lo, 2 hi] for opposite signs.
    return 2 * lo - zeta <= offset <= 2 * hi + zeta


def random_same_sign_pair(rng, w_b, alpha, xbar, zeta):
    """Continuous ``beta`` in the domain and ``beta'`` within ``zeta`` of it."""
    lo, hi = beta_domain(w_b, alpha, xbar)
    sign = rng.choice((-1.0, 1.0))
    m = rng.uniform(lo, hi)
    mp = float(np.clip(m + zeta * rng.uniform(-1, 1), lo, hi))
    return sign * m, sign * mp


def max_measured_gap(zeta, scen, draws, rng=None, i=0):
    """Largest exact TV gap over random same-sign adjacent pairs and states."""
    rng = as_generator(rng)
    worst = 0.0
    xbar = float(scen.xbar[i])
    for _ in range(draws):
        b, bp = random_same_sign_pair(rng, scen.w_b, scen.alpha, xbar, zeta)
        x = rng.uniform(-xbar, xbar)
        worst = max(worst, verify_dp_exact(x, b, bp, scen, i, zeta).gap)
    return worst


def joint_atoms(factors):
    """Product law of independent finite laws ``[(key, prob), ...]``."""
    out = []
    for combo in itertools.product(*factors):
        prob = 1
        for _, p in combo:
            prob *= p
        out.append((tuple(k for k, _ in combo), prob))
    return out


def trajectory_tv(xs, E, Ep, scen):
    """Exact TV distance between the joint laws of all sensor words.

    ``xs``, ``E`` and ``Ep`` have shape (T, n); words are independent given
    the states, so the joint law is a product.
    """
    xs, E, Ep = (np.asarray(a, dtype=float) for a in (xs, E, Ep))
    p = [atom_distribution(math.exp(x / b), scen.w) for x, b in zip(xs.ravel(), E.ravel())]
    q = [atom_distribution(math.exp(x / b), scen.w) for x, b in zip(xs.ravel(), Ep.ravel())]
    return float(tv_distance(joint_atoms(p), joint_atoms(q)))


def worst_case_mse_bound(alpha, w, w_b, xbar, delta):
    """``sum_i 5 (delta_i beta_max,i)^2 / 4^w`` with ``beta_max = 2^(w_b-1) + xbar_i/ln(1+alpha)``."""
    xbar = np.asarray(xbar, dtype=float)
    beta_max = 2.0 ** (w_b - 1) + xbar / math.log1p(alpha)
    return float(np.sum(5.0 * (np.asarray(delta, dtype=float) * beta_max) ** 2) / 4.0**w)


@dataclass(frozen=True)
class TradeoffTerms:
    w_bits: float          # w_b + 1 + log2(sqrt(5n) delta / E_g)
    w_privacy: float       # log2(20 n xbar delta^2 Delta_g / (E_g^2 zeta_g)), literal
    w_privacy_fixed: float  # same with Delta_g/zeta_g inverted
    alpha_lo_literal: float
    alpha_lo_fixed: float
    alpha_hi: float


def _log2(v):
    return math.log2(v) if v > 0 else -math.inf


def bandwidth_terms(E_g, Delta_g, zeta_g, n, delta, xbar, w_b):
    root = math.sqrt(5 * n)
    return (w_b + 1 + _log2(root * delta / E_g),
            _log2(20 * n * xbar * delta**2 * Delta_g / (E_g**2 * zeta_g)),
            _log2(20 * n * xbar * delta**2 * zeta_g / (E_g**2 * Delta_g)))


def tradeoff_terms(E_g, Delta_g, zeta_g, n, delta, xbar, w_b, w):
    """Both bandwidth terms and the alpha interval ends at bandwidth ``w``."""
    lower = 2 * math.sqrt(5 * n) * xbar * delta / (2.0**w * E_g)
    hi_arg = min(xbar / 2.0 ** (w_b - 1), math.sqrt(Delta_g * xbar / (2.0**w * zeta_g)))
    return TradeoffTerms(
        *bandwidth_terms(E_g, Delta_g, zeta_g, n, delta, xbar, w_b),
        alpha_lo_literal=lower,
        alpha_lo_fixed=math.expm1(lower) if lower < 700 else math.inf,
        alpha_hi=math.expm1(hi_arg),
    )


def choose_params(E_g, Delta_g, zeta_g, n, delta, xbar, w_b, mode="corrected"):
    """Smallest bandwidth and the alpha interval meeting error and privacy targets.

    ``mode="literal"`` evaluates the textbook inequalities as printed;
    ``"corrected"`` inverts the privacy ratio in the second bandwidth term and
    uses ``e^L - 1`` as the lower alpha end so that ``ln(1 + alpha) >= L``.
    The interval is capped so that ``1 + alpha`` stays representable.
    """
    if mode not in PARAM_MODES:
        raise ValidationError(f"mode must be one of {PARAM_MODES}")
    for name, val in (("E_g", E_g), ("Delta_g", Delta_g), ("zeta_g", zeta_g), ("n", n),
                      ("delta", delta), ("xbar", xbar), ("w_b", w_b)):
        if not val > 0:
            raise ValidationError(f"{name} must be positive")
    w_bits, w_priv, w_priv_fixed = bandwidth_terms(E_g, Delta_g, zeta_g, n, delta, xbar, w_b)
    need = max(w_bits, w_priv) if mode == "literal" else max(w_bits, w_priv_fixed)
    if not math.isfinite(need):
        return DpReport(None, False, None, None, "bandwidth bound is infinite")
    w = max(2, math.ceil(need - 1e-12))
    if w > MAX_W:
        return DpReport(None, False, None, w, f"required bandwidth w={w} exceeds {MAX_W}")
    t = tradeoff_terms(E_g, Delta_g, zeta_g, n, delta, xbar, w_b, w)
    lo = t.alpha_lo_literal if mode == "literal" else t.alpha_lo_fixed
    hi = min(t.alpha_hi, 1.0, top_value(w) - 1.0)
    if not lo <= hi:
        return DpReport(None, False, (lo, hi), w, f"empty alpha interval [{lo:.6g}, {hi:.6g}] at w={w}")
    report = delta_bound(zeta_g, hi, xbar, w)
    if math.isinf(Delta_g):
        # No privacy target: the hypothesis of the Delta bound is irrelevant.
        return DpReport(None, True, (lo, hi), w, "no privacy target")
    return DpReport(report.delta, report.feasible, (lo, hi), w, report.reason)
