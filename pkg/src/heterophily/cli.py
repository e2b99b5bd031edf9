"""Command line entry point: ``heterophily <group> <command> ...``.

Exit status is 0 on success, 1 for invalid input or configuration, 2 for
numerical failures.
"""
from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import filters, gradcheck, harness, metrics, models, synth
from .errors import ConfigError, NumericError, ValidationError
from .graph import load_graph_dir, save_graph


def _write(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load(args):
    return load_graph_dir(args.graph, features_header=args.features_header,
                          labels_header=args.labels_header)


def _graph_args(p):
    p.add_argument("--graph", required=True,
                   help="directory holding edges.txt, features.csv, labels.csv")
    p.add_argument("--features-header", action="store_true", help="features.csv has a header row")
    p.add_argument("--labels-header", action="store_true", help="labels.csv has a header row")
    p.add_argument("--op", default=filters.DEFAULT_KIND, help="aggregation operator kind")


def parse_grid(spec: str) -> list[float]:
    """``default`` (28 levels), a comma list, or ``start:stop:step`` inclusive."""
    if spec == "default":
        return synth.homophily_grid()
    if ":" in spec:
        try:
            a, b, s = (Fraction(t) for t in spec.split(":"))
        except ValueError:
            raise ConfigError(f"bad grid range {spec!r}")
        if s <= 0 or b < a:
            raise ConfigError(f"bad grid range {spec!r}")
        return [float(a + k * s) for k in range(int((b - a) / s) + 1)]
    try:
        return [float(t) for t in spec.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"bad grid {spec!r}")


# ------------------------------------------------------------------ metrics


def cmd_metrics_report(args):
    g = _load(args)
    rep = metrics.homophily_report(g, args.op)
    width = max(len(k) for k in rep.field_names())
    for k, v in rep.as_dict().items():
        print(f"{k:<{width}}  {v:.6f}")
    if args.csv:
        _write(harness.to_csv([rep.as_dict()], rep.field_names()), args.csv)


def cmd_metrics_estimate(args):
    g = _load(args)
    frac = args.train_frac
    if not 0.0 < frac <= 1.0:
        raise ConfigError("--train-frac must lie in (0, 1]")
    reports = []
    for i in range(args.seeds):
        masks = harness.split(g.n_nodes, (frac, 1.0 - frac, 0.0), harness.derive_seed(args.seed, i))
        reports.append(metrics.estimate_metrics(g, masks.train, args.op))
    full = metrics.homophily_report(g, args.op)
    names = metrics.HomophilyReport.field_names()
    rows = []
    print(f"{'metric':<10}  {'estimate':>18}  {'full graph':>10}")
    for k in names:
        vals = np.array([getattr(r, k) for r in reports])
        rows.append(dict(metric=k, mean=float(vals.mean()), std=float(vals.std()),
                         full=getattr(full, k)))
        print(f"{k:<10}  {vals.mean():.4f} +- {vals.std():.4f}  {getattr(full, k):10.4f}")
    if args.csv:
        _write(harness.to_csv(rows), args.csv)


# ------------------------------------------------------------------ filters


def cmd_filters_dump(args):
    g = _load(args)
    op = filters.operator(g, args.kind)
    lines = [",".join(f"{v:.17g}" for v in row) for row in op.matrix]
    _write("\n".join(lines) + "\n", args.out)


# -------------------------------------------------------------------- synth


def cmd_synth_make(args):
    cfg = synth.SynthConfig(h_target=args.h, classes=args.classes, nodes_per_class=args.per_class,
                            d_intra=args.d_intra, seed=args.seed, feature_mode=args.feature_mode,
                            base_graph=args.base_graph, feature_dim=args.feature_dim,
                            separation=args.separation)
    g = synth.generate(cfg)
    out = save_graph(g, args.out)
    print(f"wrote {g.n_nodes} nodes, {g.n_edges} edges, h_edge={metrics.edge_homophily(g):.4f} to {out}")


def cmd_synth_oracle(args):
    if args.grid != "default":
        raise ConfigError("only --grid default is available")
    rows = [dict(h=h, d=d, c=c, g_closed_form=gc, g_monte_carlo=mc, stderr=se)
            for h, d, c, gc, mc, se in synth.oracle_table(trials=args.trials, seed=args.seed)]
    print(f"{'h':>8} {'d':>3} {'C':>3} {'closed form':>12} {'monte carlo':>12} {'stderr':>10} {'z':>6}")
    for r in rows:
        z = (r["g_monte_carlo"] - r["g_closed_form"]) / r["stderr"] if r["stderr"] else 0.0
        print(f"{r['h']:8.4f} {r['d']:3d} {r['c']:3d} {r['g_closed_form']:12.6f} "
              f"{r['g_monte_carlo']:12.6f} {r['stderr']:10.2e} {z:6.2f}")
    if args.csv:
        _write(harness.to_csv(rows), args.csv)


# ----------------------------------------------------------------------- nn


def cmd_nn_gradcheck(args):
    results = gradcheck.run_suite(args.seed)
    bad = 0
    for name, err, bound in results:
        ok = err < bound
        bad += not ok
        print(f"{name:<32} {err:10.3e}  < {bound:.0e}  {'ok' if ok else 'FAIL'}")
    if args.csv:
        _write(harness.to_csv([dict(check=n, error=e, bound=b) for n, e, b in results]), args.csv)
    if bad:
        raise NumericError(f"{bad} gradient checks exceeded their bound")


# ------------------------------------------------------------------ training


def _model_config(args):
    if args.config:
        return models.ModelConfig.load(args.config)
    return models.preset(args.model)


def cmd_train(args):
    g = _load(args)
    cfg = _model_config(args)
    masks = harness.split(g.n_nodes, harness.DEFAULT_RATIOS, harness.derive_seed(args.seed, 0))
    res = harness.train(cfg, g, masks, args.max_epochs, args.patience, harness.derive_seed(args.seed, 1))
    print(f"model {cfg.model_id}: best val {res.best_val_acc:.4f} at epoch {res.best_epoch}, "
          f"test {res.test_acc:.4f}, {res.epochs_run} epochs")
    if args.timing:
        print(f"{res.wall_time_per_epoch:.3f} ms/epoch")
    if args.csv:
        rows = [dict(epoch=i, loss=res.loss[i], train_acc=res.train_acc[i], val_acc=res.val_acc[i],
                     test_acc=res.test_acc_curve[i]) for i in range(res.epochs_run)]
        _write(harness.to_csv(rows), args.csv)


def _settings(args):
    return harness.SweepSettings(classes=args.classes, nodes_per_class=args.per_class,
                                 d_intra=args.d_intra, max_epochs=args.max_epochs,
                                 patience=args.patience)


def cmd_sweep(args):
    cfgs = [models.preset(m.strip()) for m in args.models.split(",") if m.strip()]
    rows = harness.sweep(parse_grid(args.grid), cfgs, args.repeats, args.seed,
                         _settings(args), args.workers)
    _write(harness.to_csv(rows, harness.SWEEP_COLUMNS), args.out)


def cmd_ablation(args):
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    if args.graph:
        source = _load(args)
    else:
        source = synth.SynthConfig(h_target=args.h, classes=args.classes,
                                   nodes_per_class=args.per_class, d_intra=args.d_intra)
    rows = harness.ablation(families, source, args.repeats, args.seed, args.max_epochs,
                            args.patience, timing=args.timing, workers=args.workers)
    _write(harness.to_csv(rows), args.out)


# ------------------------------------------------------------------- parser


def _train_args(p):
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--patience", type=int, default=40)


def _synth_args(p, per_class=100):
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--per-class", type=int, default=per_class)
    p.add_argument("--d-intra", type=int, default=2)


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors: exit 1, keeping 2 for numeric failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="heterophily", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="group", required=True)

    m = sub.add_parser("metrics", help="homophily metrics").add_subparsers(dest="cmd", required=True)
    p = m.add_parser("report", help="full-graph homophily report")
    _graph_args(p)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_metrics_report)
    p = m.add_parser("estimate", help="metrics from random training-label subsets")
    _graph_args(p)
    p.add_argument("--train-frac", type=float, default=0.6)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_metrics_estimate)

    f = sub.add_parser("filters", help="graph operators").add_subparsers(dest="cmd", required=True)
    p = f.add_parser("dump", help="write an operator matrix as CSV")
    _graph_args(p)
    p.add_argument("--kind", default=filters.DEFAULT_KIND)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_filters_dump)

    s = sub.add_parser("synth", help="synthetic graphs and oracles").add_subparsers(dest="cmd", required=True)
    p = s.add_parser("make", help="generate one synthetic graph")
    p.add_argument("--h", type=float, required=True)
    _synth_args(p, per_class=400)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--feature-mode", default="gaussian_means", choices=("gaussian_means", "from_base_graph"))
    p.add_argument("--base-graph")
    p.add_argument("--feature-dim", type=int, default=16)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_make)
    p = s.add_parser("oracle", help="closed-form vs Monte Carlo similarity gap")
    p.add_argument("--grid", default="default")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_synth_oracle)

    n = sub.add_parser("nn", help="autodiff checks").add_subparsers(dest="cmd", required=True)
    p = n.add_parser("gradcheck", help="finite-difference check of every primitive and model")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_nn_gradcheck)

    p = sub.add_parser("train", help="train one model on a graph")
    _graph_args(p)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--config", help="key=value model config file")
    grp.add_argument("--model", help="model id, e.g. gcn or acm-gcn")
    p.add_argument("--seed", type=int, required=True)
    _train_args(p)
    p.add_argument("--timing", action="store_true", help="also print ms per epoch")
    p.add_argument("--csv", help="per-epoch trajectory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="accuracy across synthetic homophily levels")
    p.add_argument("--grid", default="default")
    p.add_argument("--models", default="sgc-1,gcn")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, required=True)
    _synth_args(p)
    _train_args(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablation", help="channel and mixing ablation")
    p.add_argument("--families", default="sgc,gcn")
    p.add_argument("--graph", help="graph directory; default is a synthetic graph per repeat")
    p.add_argument("--features-header", action="store_true")
    p.add_argument("--labels-header", action="store_true")
    p.add_argument("--h", type=float, default=0.1)
    _synth_args(p)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    _train_args(p)
    p.add_argument("--timing", action="store_true", help="add ms_per_epoch (not reproducible)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_ablation)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        sys.stdout = open(os.devnull, "w")
        return 0
    except (ValidationError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
