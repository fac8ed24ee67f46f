"""Command line interface: ``ntkgauss <subcommand> [flags]``.

Every subcommand reads an optional TOML config (``--config``), applies
flag overrides, writes its outputs into ``--out`` and exits 0. Failures
print one JSON error record to stderr and exit 1 (2 for usage errors).
"""

import argparse
import json
import logging
import sys

from . import __version__, ot
from .errors import ConfigError, NTKGaussError
from .harness import experiments
from .harness.config import PRESETS, load_config

ANCHOR_SAMPLES = 10_000


def _widths(text):
    try:
        widths = [int(w) for w in text.split(",") if w.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")
    if not widths:
        raise argparse.ArgumentTypeError("empty width list")
    return widths


def _run_flags(p):
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--widths", type=_widths, metavar="CSV")
    p.add_argument("--replicas", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--activation")
    p.add_argument("--ack-undersampled", action="store_true", default=None)
    p.add_argument("--workers", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="ntkgauss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ntkgauss {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("train", "train networks and write loss curves"),
        ("gp-moments", "mean, covariance and band of G_t on the test grid"),
        ("bands", "replica networks against the G_t band"),
        ("sweep", "W2 between trained networks and G_t across widths"),
        ("check-assumptions", "evaluate the computable hypotheses"),
        ("rate-envelope", "theorem envelope up to unknown constants"),
    ]:
        p = sub.add_parser(name, help=help_)
        _run_flags(p)
        if name == "rate-envelope":
            p.add_argument("--a1", type=float, default=1.0)
            p.add_argument("--a2", type=float, default=1.0)
            p.add_argument("--r", type=float, default=5.0)
        if name == "check-assumptions":
            p.add_argument("--r", type=float, default=5.0)
    p = sub.add_parser("min-samples", help="sample-size rule for W2 estimates")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--width", type=int)
    g.add_argument("--samples", type=int)
    p.add_argument("--factor", type=float, default=ot.SAMPLE_MARGIN)
    return parser


def _config(args):
    overrides = {
        "preset": args.preset,
        "seed": args.seed,
        "out": args.out,
        "widths": args.widths,
        "replicas": args.replicas,
        "lr": args.lr,
        "steps": args.steps,
        "activation": args.activation,
        "ack_undersampled": args.ack_undersampled,
        "workers": args.workers,
    }
    return load_config(args.config, overrides)


def _min_samples(args):
    if args.width is not None:
        w = args.width
        if w < 2:
            raise ConfigError("--width must be >= 2", field="width")
        print(f"width {w}: (n1 / ln n1)^2 = {ot.min_samples_for_width(w, 1.0)}")
        print(f"required samples with margin factor {args.factor:g}: "
              f"{ot.min_samples_for_width(w, args.factor)}")
    else:
        n = args.samples
        print(f"samples {n}: largest width with (n1 / ln n1)^2 <= N is "
              f"{ot.max_width_for_samples(n, 1.0)}")
        print(f"with margin factor {args.factor:g}: {ot.max_width_for_samples(n, args.factor)}")
    print(f"anchor: N = {ANCHOR_SAMPLES} samples support widths up to about "
          f"{ot.max_width_for_samples(ANCHOR_SAMPLES, 1.0)}")


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


def dispatch(args):
    if args.command == "min-samples":
        _min_samples(args)
        return
    cfg = _config(args)
    if args.command == "train":
        rows = experiments.run_train(cfg)
        print(f"wrote {cfg.out}/train.csv ({len(rows)} rows)")
    elif args.command == "gp-moments":
        experiments.run_gp_moments(cfg)
        print(f"wrote {cfg.out}/gp_moments.csv and gp_cov.csv (t = {cfg.t:.6g})")
    elif args.command == "bands":
        res = experiments.experiment_bands(cfg)
        print(f"width {res.width}, t = {res.t:.6g}, coverage = {res.coverage}")
        if res.undersampled:
            print("note: replica count below the sample-size rule (flagged in meta.json)")
    elif args.command == "sweep":
        res = experiments.experiment_sweep(cfg)
        for r in res.rows:
            flag = "  undersampled" if r.undersampled else ""
            print(f"width {r.width:6d}  W2 {r.w2_hat:.6g}  replicas {r.replicas}{flag}")
        if res.fit is None:
            print("fit skipped (fewer than 3 widths)")
        else:
            print(f"fit: W2 ~ {res.fit.prefactor:.4g} * n1^{res.fit.exponent:.4f}  (r2 {res.fit.r2:.3f})")
    elif args.command == "check-assumptions":
        report = experiments.check_assumptions(cfg, args.r)
        _print_json(report)
        if not report["kinf_positive_definite"]:
            raise NTKGaussError("limiting kernel is not positive definite on the dataset",
                                min_eig=report["lam_min_kinf"])
    elif args.command == "rate-envelope":
        rows = experiments.rate_envelope(cfg, args.a1, args.a2, args.r)
        print("W2^2 envelope, up to unknown constants:")
        for w, t, v in rows:
            print(f"width {w:6d}  t {t:.6g}  {v:.6g}")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        dispatch(args)
    except NTKGaussError as exc:
        print(json.dumps(exc.to_record(), default=str), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
