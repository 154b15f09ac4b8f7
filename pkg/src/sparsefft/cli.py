"""Command line interface.

Subcommands:

* ``run``      one experiment, JSON record to stdout
* ``sweep``    a grid of experiments, CSV out
* ``plot``     render a sweep CSV into figure files
* ``fixtures`` dump the worked-example bucket assignments as JSON

Exit codes: 0 success, 2 configuration/spec error, 3 sweep finished but
some cell did not converge (the CSV is still written).  The environment
variable ``SFFT_SEED`` overrides the default seed when ``--seed`` is absent.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ConfigMismatch, InvalidSpec, SchemaError, SparseFFTError
from .frameworks import FRAMEWORKS, AlgorithmConfig
from .harness import (DEFAULT_SNR_DB, SignalSpec, default_grid, peeling_length_near,
                      run_experiment, run_sweep)

ALGO_IDS = ("dense", "one_shot", "voting", "iterative", "peeling")


def _default_seed() -> int:
    return int(os.environ.get("SFFT_SEED", "0"))


def _parse_snr(text: str):
    return None if text == "exact" else float(text)


def _config_for(algo: str, n: int, seed: int, config_json: str | None) -> AlgorithmConfig:
    if config_json is not None:
        text = config_json
        if os.path.exists(config_json):
            with open(config_json) as fh:
                text = fh.read()
        return AlgorithmConfig.from_json(text)
    if algo not in ALGO_IDS:
        raise ConfigMismatch(f"unknown algorithm {algo!r}; choose from {ALGO_IDS}")
    if algo == "peeling":
        _, factors = peeling_length_near(n)
        return AlgorithmConfig(framework="peeling", coprime_factors=factors, seed=seed)
    return AlgorithmConfig(framework=algo, seed=seed)


def _cmd_run(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    cfg = _config_for(args.algo, args.n, seed, args.config)
    cfg.validated()  # reject broken configurations up front (exit code 2)
    n = args.n
    if cfg.framework == "peeling":
        import math
        n = math.prod(cfg.coprime_factors)
    spec = SignalSpec(n=n, k=args.k, snr_db=_parse_snr(args.snr), seed=seed)
    record = run_experiment(cfg, spec, repeats=args.repeats, algorithm_id=args.algo)
    json.dump(record.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_sweep(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    kind = {"n": "n_sweep", "k": "k_sweep", "snr": "snr_sweep"}[args.kind]
    grid = ([_parse_snr(v) if kind == "snr_sweep" else int(v)
             for v in args.grid.split(",")] if args.grid else default_grid(kind))
    base = []
    for algo in args.algo:
        base.append((algo, _config_for(algo, args.n, seed, None)))
    if args.config:
        cfg = _config_for("", args.n, seed, args.config)
        base.append((cfg.framework, cfg))
    if not base:
        base = [(a, _config_for(a, args.n, seed, None)) for a in ALGO_IDS]
    records = run_sweep(kind, grid, base, args.out, n=args.n, k=args.k,
                        snr_db=_parse_snr(args.snr), seed=seed,
                        repeats=args.repeats, workers=args.workers)
    bad = sum(1 for r in records if not r.converged)
    print(f"wrote {len(records)} rows to {args.out} ({bad} not converged)",
          file=sys.stderr)
    return 3 if bad else 0


def _cmd_plot(args) -> int:
    from .plots import emit_plots
    paths = emit_plots(args.csv, args.out)
    print("\n".join(paths), file=sys.stderr)
    return 0


def _cmd_fixtures(args) -> int:
    from .fixtures import fixture_report
    json.dump(fixture_report(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsefft",
                                     description="sparse FFT benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment")
    run_p.add_argument("--n", type=int, default=4096)
    run_p.add_argument("--k", type=int, default=16)
    run_p.add_argument("--snr", default="exact", help='dB value or "exact"')
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--algo", default="iterative", choices=ALGO_IDS)
    run_p.add_argument("--config", default=None, help="AlgorithmConfig JSON (inline or path)")
    run_p.add_argument("--repeats", type=int, default=5)
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a sweep, write CSV")
    sweep_p.add_argument("--kind", choices=("n", "k", "snr"), required=True)
    sweep_p.add_argument("--grid", default=None, help="comma separated values")
    sweep_p.add_argument("--n", type=int, default=1 << 17)
    sweep_p.add_argument("--k", type=int, default=50)
    sweep_p.add_argument("--snr", default=str(DEFAULT_SNR_DB))
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--algo", action="append", default=[], choices=ALGO_IDS)
    sweep_p.add_argument("--config", default=None)
    sweep_p.add_argument("--repeats", type=int, default=5)
    sweep_p.add_argument("--workers", type=int, default=1)
    sweep_p.add_argument("--out", required=True)
    sweep_p.set_defaults(func=_cmd_sweep)

    plot_p = sub.add_parser("plot", help="render a sweep CSV")
    plot_p.add_argument("--csv", required=True)
    plot_p.add_argument("--out", required=True, help="output directory")
    plot_p.set_defaults(func=_cmd_plot)

    fix_p = sub.add_parser("fixtures", help="dump worked-example assignments")
    fix_p.set_defaults(func=_cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigMismatch, InvalidSpec, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SparseFFTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
