"""Command line entry point: ``dephasing-ree {evolve,reproduce,kernel}``."""

from __future__ import annotations

import argparse
import logging
import sys

from .baths import BathSpec
from .experiment import (FIGURES, ConfigError, ExperimentConfig, config_from_header,
                         dump_kernel, load_config_file, reproduce, run)

log = logging.getLogger("dephasing_ree")

# CLI flag -> config key, for flags shared by evolve and reproduce
_SHARED = {
    "eta": "eta", "lambda_cut": "lambda", "kbt": "kbt", "tmax": "tmax", "steps": "steps",
    "kernel_steps": "kernel_steps", "seed": "seed", "ree_terms": "ree_terms",
    "ree_restarts": "ree_restarts", "ree_tol": "ree_tol", "ree_atol": "ree_atol",
    "series_restarts": "series_restarts",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: config error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file; flags override its values")
    p.add_argument("--eta", type=float, help="coupling strength (default 0.1)")
    p.add_argument("--lambda", dest="lambda_cut", type=float, help="cutoff frequency (default 0.01)")
    p.add_argument("--kbt", type=float, help="k_B T in units of omega_0 (default 1/(4 pi))")
    p.add_argument("--tmax", type=float, help="end of the grid in units of 1/gamma_0 (default 5)")
    p.add_argument("--steps", type=int, help="grid intervals; rows = steps + 1 (default 100)")
    p.add_argument("--kernel-steps", type=int, help="kernel table size (default 501)")
    p.add_argument("--seed", type=int, help="solver seed (default 0)")
    p.add_argument("--ree-terms", type=int, help="product terms K (default 32)")
    p.add_argument("--ree-restarts", type=int, help="restarts at the first grid point (default 64)")
    p.add_argument("--ree-tol", type=float, help="relative stopping tolerance (default 1e-7)")
    p.add_argument("--ree-atol", type=float, help="absolute stopping tolerance, nats (default 1e-9)")
    p.add_argument("--series-restarts", type=int, help="fresh restarts per later grid point (default 2)")
    p.add_argument("--no-chain", dest="chain", action="store_false", default=None,
                   help="solve grid points independently (full restarts each) instead of warm-starting")
    p.add_argument("--workers", type=int, default=1, help="processes for --no-chain runs")
    p.add_argument("-v", "--verbose", action="store_true", help="log every grid point")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dephasing-ree",
                     description="REE dynamics of three-qubit states under dephasing baths.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("evolve", help="one state / bath / memory run to CSV")
    ev.add_argument("--state", help="ghz, w, wbar, wwbar, star, werner-ghz:p, werner-w:p, ghzw:p")
    ev.add_argument("--topology", choices=("local", "common"))
    ev.add_argument("--memory", choices=("markov", "non-markov"))
    ev.add_argument("--out", required=True, help="output CSV path")
    ev.add_argument("--rerun", metavar="CSV", help="take the config from a CSV header echo")
    _add_common(ev)

    rp = sub.add_parser("reproduce", help="all curves of one figure panel")
    rp.add_argument("figure", metavar="FIGID", help=", ".join(FIGURES))
    rp.add_argument("--outdir", required=True)
    _add_common(rp)

    kp = sub.add_parser("kernel", help="dump the non-Markov rate kernel to CSV")
    kp.add_argument("--tmax", type=float, default=5.0, help="end time in units of 1/gamma_0")
    kp.add_argument("--steps", type=int, default=501)
    kp.add_argument("--eta", type=float, default=0.1)
    kp.add_argument("--lambda", dest="lambda_cut", type=float, default=1e-2)
    kp.add_argument("--kbt", type=float, default=None)
    kp.add_argument("--out", required=True)
    return parser


def _experiment_config(args, with_state: bool) -> ExperimentConfig:
    values: dict[str, object] = {}
    if getattr(args, "rerun", None):
        values.update(config_from_header(args.rerun).to_mapping())
    if args.config:
        values.update(load_config_file(args.config))
    for attr, key in _SHARED.items():
        v = getattr(args, attr)
        if v is not None:
            values[key] = v
    if args.chain is not None:
        values["chain"] = args.chain
    if with_state:
        for key in ("state", "topology", "memory"):
            v = getattr(args, key)
            if v is not None:
                values[key] = v
        if "state" not in values:
            raise ConfigError("no state given (use --state, --config or --rerun)")
    return ExperimentConfig.from_mapping(values)


def _progress(i: int, g: float, value: float) -> None:
    log.info("  point %d  gamma0_t=%.4g  ree=%.6g", i, g, value)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(message)s")
    try:
        if args.command == "kernel":
            kw = {} if args.kbt is None else {"kbt": args.kbt}
            try:
                bath = BathSpec(eta=args.eta, lambda_cut=args.lambda_cut, **kw)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            print(dump_kernel(args.out, args.tmax, args.steps, bath))
            return 0
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if args.command == "evolve":
            cfg = _experiment_config(args, with_state=True)
            series = run(cfg, args.out, workers=args.workers, progress=_progress)
            bad = int((~series.converged).sum())
            if bad:
                log.warning("%d of %d points did not meet the stopping tolerance", bad, len(series))
            print(args.out)
            return 0
        cfg = _experiment_config(args, with_state=False)
        for path in reproduce(args.figure, args.outdir, cfg, workers=args.workers,
                              progress=lambda msg: log.info("%s", msg)):
            print(path)
        return 0
    except ConfigError as exc:
        print(f"dephasing-ree: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
