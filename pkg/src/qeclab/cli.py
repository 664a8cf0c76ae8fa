"""Command-line entry point: ``qeclab <subcommand> [options]``.

Exit status: 0 success, 2 invalid or missing configuration, 1 any other
error. CSV goes to stdout, or to ``<out>/<name>_<subcommand>.csv`` with
``--out``.
"""

import argparse
from pathlib import Path
import sys

import numpy as np

from . import attacks, config, privacy, quantizer, simulate, stability
from .channel import empirical_bit_statistics, sample_key_pair
from .errors import ConfigError
from .rng import stream


def _csv_row(values):
    return ",".join(v if isinstance(v, str) else repr(v) for v in values) + "\n"


def _load(args):
    cfg = config.load(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError(f"0 <= seed < 2^64 violated: seed={args.seed}")
        cfg = cfg.with_overrides(seed=args.seed)
    return cfg


def _emit(args, cfg_name, text):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{cfg_name}_{args.command}.csv"
        path.write_text(text)
        if not args.csv:
            print(f"wrote {path}")
    if args.csv or not args.out:
        sys.stdout.write(text)


def cmd_simulate(args):
    cfg = _load(args)
    if args.p is not None:
        cfg = cfg.with_channel(args.p)
    if args.horizon:
        cfg = cfg.with_overrides(horizon=args.horizon)
    if args.trials:
        cfg = cfg.with_overrides(trials=args.trials)
    report = simulate.simulate_closed_loop(cfg, workers=args.workers)
    _emit(args, cfg.name, report.to_csv())
    print(f"# converged={report.converged} diverged={report.diverged} "
          f"diverged_trials={report.diverged_trials}", file=sys.stderr)


def cmd_pstar(args):
    cfg = _load(args)
    r = stability.p_star(cfg.plant, cfg.w_b, args.variant, args.sign)
    text = _csv_row(["plant", "rho_closed", "epsilon", "star_norm_M1", "A_const", "p_star",
                     "variant", "sign_convention"])
    text += _csv_row([cfg.name, r.rho_closed, r.epsilon, r.star_norm_M1, r.A_const, r.p_star,
                      r.variant, str(r.sign_convention)])
    _emit(args, cfg.name, text)


def cmd_privacy(args):
    cfg = _load(args)
    scen = cfg.quantized
    if scen is None:
        raise ConfigError("privacy needs a 'quantized' section (w, alpha, xbar)")
    rep = privacy.delta_bound(args.zeta, scen.alpha, scen.xbar, scen.w, args.aggregate)
    xa = privacy.aggregate_xbar(scen.xbar, args.aggregate)
    i = int(np.argmin(scen.xbar) if args.aggregate == "min" else np.argmax(scen.xbar))
    gap = privacy.max_measured_gap(args.zeta, scen, args.draws, stream(cfg.seed, 0), i)
    text = _csv_row(["zeta", "alpha", "xbar_agg", "w", "delta", "measured_max_gap", "feasible"])
    text += _csv_row([args.zeta, scen.alpha, xa, str(scen.w), rep.delta, gap, str(rep.feasible).lower()])
    _emit(args, cfg.name, text)
    if not rep.feasible:
        print(f"# {rep.reason}", file=sys.stderr)


def cmd_quantize_test(args):
    lines = [_csv_row(["w", "max_mean_error", "max_variance", "variance_bound", "midpoint_variance", "pass"])]
    ok_all = True
    for w in range(args.w_min, args.w_max + 1):
        vs = np.linspace(0.5, quantizer.top_value(w), args.points)
        worst_mean, worst_var = 0.0, 0.0
        for v in vs:
            atoms = quantizer.atom_distribution(v, w)
            y = float(quantizer.g(v))
            worst_mean = max(worst_mean, abs(float(quantizer.atoms_mean(atoms)) - y))
            worst_var = max(worst_var, float(quantizer.atoms_variance(atoms, y)))
        mid = 1 + 2.0**-w  # centre of the cell [1, 1 + 2^-(w-1)]
        mid_atoms = quantizer.h_atoms(mid, w)
        mid_var = float(quantizer.atoms_variance(mid_atoms, mid))
        bound = 4.0**-w
        ok = worst_mean <= 1e-12 and worst_var <= bound and mid_var == bound
        ok_all &= ok
        lines.append(_csv_row([str(w), worst_mean, worst_var, bound, mid_var, str(ok).lower()]))
    _emit(args, "quantizer", "".join(lines))
    return 0 if ok_all else 1


def cmd_attack(args):
    cfg = _load(args)
    res = attacks.run_attacks(cfg.plant, cfg.x0, args.horizon or min(cfg.horizon, 60), cfg.w_b,
                              args.noise_level, cfg.seed)
    _emit(args, cfg.name, attacks.attacks_csv(res))


def cmd_bench(args):
    cfg = _load(args)
    res = attacks.bench_schemes(cfg.plant, steps=args.steps, seed=cfg.seed)
    _emit(args, cfg.name, attacks.bench_csv(res))


def cmd_keygen_sim(args):
    cfg = _load(args)
    rng = stream(cfg.seed, 0)
    pairs = [sample_key_pair(cfg.bell, cfg.n, cfg.w_b, rng, t) for t in range(args.pairs)]
    if args.dump:
        sys.stdout.write("".join(p.dump() + "\n" for p in pairs))
        return
    st = empirical_bit_statistics(pairs)
    text = _csv_row(["n_bits", "p", "flip_rate", "sensor_one_rate", "flip_vs_sensor_pvalue", "min_adjacent_pvalue"])
    text += _csv_row([str(st.n_bits), cfg.p, st.flip_rate, float(np.mean(st.sensor_frequency)),
                      st.flip_independence_pvalue, float(np.min(st.position_independence_pvalues, initial=1.0))])
    _emit(args, cfg.name, text)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file or bundled config name")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help="directory for CSV output")
    common.add_argument("--csv", action="store_true", help="also write CSV to stdout when --out is given")

    parser = argparse.ArgumentParser(prog="qeclab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop Monte-Carlo run")
    p.add_argument("--p", type=float, help="override the flip probability (conformant state)")
    p.add_argument("--horizon", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate, needs_config=True)

    p = sub.add_parser("pstar", parents=[common], help="mean-square stability threshold")
    p.add_argument("--variant", choices=stability.VARIANTS, default="exact")
    p.add_argument("--sign", type=int, choices=(-1, 1), default=-1)
    p.set_defaults(func=cmd_pstar, needs_config=True)

    p = sub.add_parser("privacy", parents=[common], help="privacy bound and measured gap")
    p.add_argument("--zeta", type=float, default=0.01)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--aggregate", choices=privacy.XBAR_AGGREGATORS, default="min")
    p.set_defaults(func=cmd_privacy, needs_config=True)

    p = sub.add_parser("quantize-test", parents=[common], help="exact quantizer law checks")
    p.add_argument("--w-min", type=int, default=2)
    p.add_argument("--w-max", type=int, default=12)
    p.add_argument("--points", type=int, default=100)
    p.set_defaults(func=cmd_quantize_test, needs_config=False)

    p = sub.add_parser("attack", parents=[common], help="system-identification eavesdropper")
    p.add_argument("--horizon", type=int)
    p.add_argument("--noise-level", type=float, default=0.01)
    p.set_defaults(func=cmd_attack, needs_config=True)

    p = sub.add_parser("bench", parents=[common], help="per-role timing against toy baselines")
    p.add_argument("--steps", type=int, default=1000)
    p.set_defaults(func=cmd_bench, needs_config=True)

    p = sub.add_parser("keygen-sim", parents=[common], help="simulate quantum key pairs")
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--dump", action="store_true", help="print one line per key pair")
    p.set_defaults(func=cmd_keygen_sim, needs_config=True)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.needs_config and not args.config:
        print("error: --config is required", file=sys.stderr)
        return 2
    try:
        status = args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported, mapped to exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
