"""Command-line interface.

Exit codes: 0 success, 1 runtime or validation failure, 2 usage error.
"""

import argparse
import logging
import os
import sys

import numpy as np
import yaml

from . import formats, gradcheck
from .grouping import (
    STRATEGIES,
    GroupingParams,
    GroupingTable,
    group_stats,
    re_meta_loss,
)
from .losses import TclParams
from .numerics import InvalidInputError
from .simlab import (
    DivergenceError,
    SimConfig,
    bin_edges,
    descend,
    histogram,
    init_features,
)

log = logging.getLogger("tclgroup")

LOSS_NAMES = ("tcl", "tcl2", "bce", "focal", "ce")


def _tcl_params(args):
    beta_minus = args.beta_minus
    if beta_minus is not None and len(beta_minus) == 1 and args.c > 2:
        beta_minus = beta_minus * (args.c - 1)
    return TclParams(beta_plus=args.beta_plus, beta_minus=beta_minus,
                     eta=args.eta, gamma=args.gamma, c=args.c)


def _grouping_params(args, strategy=None):
    return GroupingParams(tau=args.tau, epsilon=args.epsilon,
                          strategy=strategy or args.strategy)


def _read_table(path):
    return GroupingTable.default() if path is None else GroupingTable.read(path)


def cmd_loss(args, out):
    scores = formats.read_scores(args.scores)
    g = gradcheck.classification_loss(args.name, scores, _tcl_params(args))
    print(formats.fmt(g.value), file=out)
    if args.gradient:
        print(",".join(formats.fmt(v) for v in g.gradient), file=out)
    return 0


def cmd_grouping(args, out):
    x = formats.read_features(args.features)
    t = _read_table(args.grouping)
    strategies = STRATEGIES if args.all_strategies else (args.strategy,)
    for strategy in strategies:
        value = re_meta_loss(x, t, _grouping_params(args, strategy)).value
        print(f"loss {strategy} {formats.fmt_precise(value)}", file=out)
    print("group,size,u_group,delta_group,w_mean,w_std,w_mean_std", file=out)
    for j, s in enumerate(group_stats(x, t), start=1):
        cells = (s.u_group, s.delta_group, s.w_mean, s.w_std, s.w_mean_std)
        print(f"{j},{s.size}," + ",".join(formats.fmt_precise(v) for v in cells), file=out)
    return 0


def cmd_gradcheck(args, out):
    t = _read_table(args.grouping)
    x, scores = gradcheck.random_instance(args.seed, t)
    if args.features is not None:
        x = formats.read_features(args.features)
    if args.scores is not None:
        scores = formats.read_scores(args.scores)
    params = _tcl_params(args)
    selected = args.loss or ["all"]
    names = []
    for name in selected:
        names.extend([*LOSS_NAMES, *STRATEGIES] if name == "all" else [name])

    ok = True
    for name in dict.fromkeys(names):
        if name in LOSS_NAMES:
            r = gradcheck.check_classification(name, scores, params, args.h, args.corrupt)
        else:
            r = gradcheck.check_grouping(x, t, _grouping_params(args, name), args.h, args.corrupt)
        if r.skipped:
            log.warning("%s: skipped singular point (%s)", name, r.skipped)
            print(f"{name} SKIP {r.skipped}", file=out)
            continue
        status = "PASS" if r.passed(args.tol) else "FAIL"
        ok = ok and status == "PASS"
        print(f"{name} {status} max_rel_err={r.error:.3e}", file=out)
    return 0 if ok else 1


def dispersion(aps, metric):
    aps = np.asarray(aps, dtype=np.float64)
    if aps.size == 0:
        raise InvalidInputError("AP table is empty")
    mean = float(np.mean(aps))
    std = float(np.sqrt(np.mean((aps - mean) ** 2)))
    if metric == "std":
        return std
    if metric == "cv":
        return 100.0 * std / mean
    if metric == "range":
        return float(np.max(aps) - np.min(aps))
    raise InvalidInputError(f"unknown dispersion metric {metric!r}")


def cmd_dispersion(args, out):
    _, aps = formats.read_ap_table(args.ap_file)
    if aps.size == 0:
        raise InvalidInputError(f"{args.ap_file}: AP table is empty")
    metrics = ("std", "cv", "range") if args.metric == "all" else (args.metric,)
    print(f"n {aps.size}", file=out)
    print(f"mean {formats.fmt(np.mean(aps))}", file=out)
    for m in metrics:
        print(f"{m} {formats.fmt(dispersion(aps, m))}", file=out)
    return 0


def load_sim_config(path, parser, overrides):
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise InvalidInputError(f"{path}: expected a mapping of settings")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    grouping = raw.pop("grouping", None)
    if grouping is None:
        table = GroupingTable.default()
    else:
        gpath = os.path.join(os.path.dirname(os.path.abspath(path)), grouping)
        if not os.path.isfile(gpath):
            parser.error(f"grouping file not found: {gpath}")
        table = GroupingTable.read(gpath)
    gp = GroupingParams(tau=float(raw.pop("tau", 1.0)),
                        epsilon=float(raw.pop("epsilon", 0.00005)),
                        strategy=raw.pop("strategy", "S-BEST"))
    bins = int(raw.pop("bins", 20))
    sigma = float(raw.get("init_sigma", 1.0))
    default_range = [-4.0 * sigma, 4.0 * sigma] if sigma > 0 else [-1.0, 1.0]
    value_range = [float(v) for v in raw.pop("range", default_range)]
    known = {"n_categories", "feature_dim", "step_size", "iterations", "seed", "init_sigma"}
    unknown = set(raw) - known
    if unknown:
        raise InvalidInputError(f"{path}: unknown settings {', '.join(sorted(unknown))}")
    cfg = SimConfig(
        grouping=table,
        n_categories=raw.get("n_categories"),
        feature_dim=int(raw.get("feature_dim", 64)),
        grouping_params=gp,
        step_size=float(raw.get("step_size", 1e-2)),
        iterations=int(raw.get("iterations", 500)),
        seed=int(raw.get("seed", 0)),
        init_sigma=sigma,
    )
    return cfg, bins, value_range


def cmd_simulate(args, out, parser):
    overrides = {"seed": args.seed, "iterations": args.steps, "step_size": args.step_size,
                 "bins": args.bins, "range": args.range}
    cfg, bins, value_range = load_sim_config(args.config, parser, overrides)
    trace, final = descend(cfg)
    initial = init_features(cfg)
    edges = bin_edges(bins, value_range)

    os.makedirs(args.out, exist_ok=True)
    files = {
        "trace.csv": formats.format_trace(trace),
        "features_initial.csv": formats.format_features(initial),
        "features_final.csv": formats.format_features(final),
        "hist_initial.csv": formats.format_histogram(
            initial.categories, histogram(initial, bins, value_range), edges),
        "hist_final.csv": formats.format_histogram(
            final.categories, histogram(final, bins, value_range), edges),
    }
    for name, text in files.items():
        with open(os.path.join(args.out, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    first, last = trace[0], trace[-1]
    spread0 = float(np.mean(first.w_mean_std))
    spread1 = float(np.mean(last.w_mean_std))
    print(f"iterations {last.iteration}", file=out)
    print(f"loss {formats.fmt(first.loss)} -> {formats.fmt(last.loss)}", file=out)
    print(f"mean_w_mean_std {formats.fmt(spread0)} -> {formats.fmt(spread1)}", file=out)
    if spread0 > 0:
        print(f"spread_ratio {formats.fmt(spread1 / spread0)}", file=out)
    print(f"min_mean_gap {formats.fmt(first.min_mean_gap)} -> {formats.fmt(last.min_mean_gap)}",
          file=out)
    print(f"min_std_gap {formats.fmt(first.min_std_gap)} -> {formats.fmt(last.min_std_gap)}",
          file=out)
    return 0


def cmd_hist(args, out):
    x = formats.read_features(args.features)
    if args.range is None:
        lo, hi = float(np.min(x.features)), float(np.max(x.features))
        value_range = (lo, hi) if lo < hi else (lo - 0.5, hi + 0.5)
    else:
        value_range = tuple(args.range)
    text = formats.format_histogram(x.categories, histogram(x, args.bins, value_range),
                                    bin_edges(args.bins, value_range))
    if args.out is None:
        out.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


def _add_tcl_flags(p):
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--beta-plus", type=float, default=1.0)
    p.add_argument("--beta-minus", type=float, action="append",
                   help="threshold per false rank; repeat for each rank (default 0.5)")
    p.add_argument("--c", type=int, default=2, help="number of classes C in TCL-C")


def _add_grouping_flags(p):
    p.add_argument("--grouping", help="grouping table file (default: Pascal VOC table)")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.00005)
    p.add_argument("--strategy", choices=STRATEGIES, default="S-BEST")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tclgroup", description="Top-C classification and category grouping losses.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("loss", help="evaluate a classification loss on a scores file")
    p.add_argument("name", choices=LOSS_NAMES)
    p.add_argument("scores")
    p.add_argument("--gradient", action="store_true", help="also print the gradient")
    _add_tcl_flags(p)

    p = sub.add_parser("grouping", help="evaluate the grouping loss on a feature matrix")
    p.add_argument("features")
    _add_grouping_flags(p)
    p.add_argument("--all-strategies", action="store_true")

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    p.add_argument("--features")
    p.add_argument("--scores")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss", action="append", choices=[*LOSS_NAMES, *STRATEGIES, "all"])
    p.add_argument("--h", type=float, default=gradcheck.STEP)
    p.add_argument("--tol", type=float, default=gradcheck.TOLERANCE)
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    _add_tcl_flags(p)
    _add_grouping_flags(p)

    p = sub.add_parser("dispersion", help="spread of per-class APs")
    p.add_argument("ap_file")
    p.add_argument("--metric", choices=("std", "cv", "range", "all"), default="std")

    p = sub.add_parser("simulate", help="gradient descent on synthetic meta-features")
    p.add_argument("config")
    p.add_argument("--out", default="simout")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--step-size", type=float)
    p.add_argument("--bins", type=int)
    p.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"))

    p = sub.add_parser("hist", help="per-category histograms of a feature matrix")
    p.add_argument("features")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--out")
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "loss": cmd_loss,
        "grouping": cmd_grouping,
        "gradcheck": cmd_gradcheck,
        "dispersion": cmd_dispersion,
        "hist": cmd_hist,
    }
    try:
        if args.command == "simulate":
            return cmd_simulate(args, out, parser)
        return handlers[args.command](args, out)
    except (InvalidInputError, DivergenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
