"""Splits, training with early stopping, homophily sweeps and channel ablations."""
from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics, models, nn, synth
from .errors import ConfigError, ValidationError
from .graph import Graph

DEFAULT_RATIOS = (0.6, 0.2, 0.2)

SWEEP_COLUMNS = ("h_target", "h_edge", "h_node", "h_class", "h_agg", "h_agg_mod",
                 "model", "mean", "std", "repeats")

# (label, channels, mixing) for the five ablation cells of each family
ABLATION_CELLS = (
    ("LP", ("LP",), "sum"),
    ("LP+HP+mix", ("LP", "HP"), "adaptive"),
    ("LP+I+mix", ("LP", "I"), "adaptive"),
    ("LP+HP+I", ("LP", "HP", "I"), "sum"),
    ("LP+HP+I+mix", ("LP", "HP", "I"), "adaptive"),
)


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from a tuple of nonnegative integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


# ------------------------------------------------------------------- splits


@dataclass(frozen=True, eq=False)
class SplitMasks:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def sizes(self):
        return int(self.train.size), int(self.val.size), int(self.test.size)


def split(n: int, ratios=DEFAULT_RATIOS, seed: int = 0) -> SplitMasks:
    """Uniform random train/val/test partition of ``range(n)`` (sorted index arrays)."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) < 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must be three nonnegative numbers summing to 1, got {ratios}")
    if n < 1:
        raise ConfigError("cannot split an empty node set")
    n_train = int(round(ratios[0] * n))
    n_val = min(int(round(ratios[1] * n)), n - n_train)
    perm = np.random.default_rng(seed).permutation(n)
    return SplitMasks(np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_val]),
                      np.sort(perm[n_train + n_val:]))


# ----------------------------------------------------------------- training


@dataclass
class TrainResult:
    best_val_acc: float
    test_acc: float
    best_epoch: int
    epochs_run: int
    loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)
    test_acc_curve: list = field(default_factory=list)
    mixing_weights: list = field(default_factory=list)
    wall_time_per_epoch: float = 0.0   # milliseconds


def _accuracy(pred, y, idx) -> float:
    if idx.size == 0:
        return 0.0
    return float(np.mean(pred[idx] == y[idx]))


def train(cfg: models.ModelConfig, g: Graph, masks: SplitMasks, max_epochs: int = 1000,
          patience: int = 40, seed: int = 0) -> TrainResult:
    """Full-batch Adam on the mean training cross-entropy plus L2 penalty.

    Stops once validation accuracy has not improved for more than
    ``patience`` consecutive epochs and reports test accuracy at the first
    epoch reaching the best validation accuracy.
    """
    if max_epochs < 1 or patience < 0:
        raise ConfigError("max_epochs must be >= 1 and patience >= 0")
    if masks.train.size == 0:
        raise ValidationError("empty training set")
    model = models.build(cfg, g, seed=derive_seed(seed, 0))
    rng = np.random.default_rng(derive_seed(seed, 1))
    params = model.parameters()
    opt = nn.Adam(params, lr=cfg.lr)
    x, z, y = g.features, g.label_matrix(), g.label_ids
    z_train = z[masks.train]
    inv_n = 1.0 / masks.train.size

    best_val, best_epoch, best_test, bad = -1.0, -1, 0.0, 0
    best_alpha = []
    res = TrainResult(0.0, 0.0, 0, 0)
    elapsed = 0.0
    for epoch in range(max_epochs):
        t0 = time.perf_counter()
        opt.zero_grad()
        tape = nn.Tape()
        with tape:
            logits = model.forward(x, train=True, rng=rng)
            loss = nn.scale(nn.softmax_cross_entropy(nn.rows(logits, masks.train), z_train), inv_n)
            if cfg.weight_decay:
                reg = None
                for p in params:
                    term = nn.squared_norm(p)
                    reg = term if reg is None else nn.add(reg, term)
                loss = nn.add(loss, nn.scale(reg, 0.5 * cfg.weight_decay))
        tape.backward(loss)
        opt.step()
        elapsed += time.perf_counter() - t0

        pred = np.argmax(model.forward(x).value, axis=1)
        tr, va, te = (_accuracy(pred, y, m) for m in (masks.train, masks.val, masks.test))
        res.loss.append(loss.item())
        res.train_acc.append(tr)
        res.val_acc.append(va)
        res.test_acc_curve.append(te)
        if va > best_val:
            best_val, best_epoch, best_test, bad = va, epoch, te, 0
            best_alpha = [a.copy() for a in model.mixing_weights]
        else:
            bad += 1
            if bad > patience:
                break

    res.best_val_acc = best_val
    res.test_acc = best_test
    res.best_epoch = best_epoch
    res.epochs_run = len(res.loss)
    res.mixing_weights = best_alpha
    res.wall_time_per_epoch = 1000.0 * elapsed / res.epochs_run
    return res


# -------------------------------------------------------------------- sweep


@dataclass(frozen=True)
class SweepSettings:
    classes: int = 5
    nodes_per_class: int = 100
    d_intra: int = 2
    feature_mode: str = "gaussian_means"
    base_graph: str | None = None
    max_epochs: int = 1000
    patience: int = 40


def _sweep_cell(args):
    """Train every model on one generated graph. Returns (metrics, accuracies)."""
    h, cfgs, settings, gseed, sseed, tseed = args
    g = synth.generate(synth.SynthConfig(
        h_target=h, classes=settings.classes, nodes_per_class=settings.nodes_per_class,
        d_intra=settings.d_intra, seed=gseed, feature_mode=settings.feature_mode,
        base_graph=settings.base_graph))
    h_agg, h_mod = metrics.aggregation_homophily(g)
    report = (metrics.edge_homophily(g), metrics.node_homophily(g),
              metrics.class_homophily(g), h_agg, h_mod)
    masks = split(g.n_nodes, DEFAULT_RATIOS, sseed)
    accs = [train(c, g, masks, settings.max_epochs, settings.patience, tseed).test_acc
            for c in cfgs]
    return report, accs


def _run_cells(fn, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def sweep(h_grid, model_cfgs, repeats: int, seed0: int, settings: SweepSettings = SweepSettings(),
          workers: int = 1) -> list[dict]:
    """One row per (h, model): mean/std test accuracy over ``repeats`` graphs.

    Every model sees the same graph and split for a given (h, repeat).
    Metric columns average the measured homophily of those graphs.
    """
    h_grid = list(h_grid)
    cfgs = list(model_cfgs)
    if not h_grid or not cfgs:
        raise ConfigError("sweep needs a nonempty grid and model list")
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    jobs = [(h, cfgs, settings, derive_seed(seed0, i, r, 0), derive_seed(seed0, i, r, 1),
             derive_seed(seed0, i, r, 2))
            for i, h in enumerate(h_grid) for r in range(repeats)]
    cells = _run_cells(_sweep_cell, jobs, workers)

    rows = []
    for i, h in enumerate(h_grid):
        block = cells[i * repeats:(i + 1) * repeats]
        rep = np.mean([c[0] for c in block], axis=0)
        for j, cfg in enumerate(cfgs):
            acc = np.array([c[1][j] for c in block])
            rows.append(dict(h_target=h, h_edge=rep[0], h_node=rep[1], h_class=rep[2],
                             h_agg=rep[3], h_agg_mod=rep[4], model=cfg.model_id,
                             mean=float(acc.mean()), std=float(acc.std()), repeats=repeats))
    return rows


# ----------------------------------------------------------------- ablation


ABLATION_COLUMNS = ("family", "cell", "channels", "mixing", "model", "mean", "std", "repeats")


def ablation_configs(family: str):
    """The five channel/mixing cells for ``family`` as (label, config).

    The LP-only cell is the plain model preset; the others start from the
    ACM preset of the same family.
    """
    if family not in ("sgc", "gcn", "snowball"):
        raise ConfigError(f"ablation family must be sgc, gcn or snowball, got {family!r}")
    out = []
    for label, ch, mix in ABLATION_CELLS:
        if ch == ("LP",):
            out.append((label, models.preset(family)))
        else:
            out.append((label, replace(models.preset("acm-" + family), channels=ch, mixing=mix).check()))
    return out


def _ablation_cell(args):
    g, cfgs, masks, max_epochs, patience, tseed = args
    out = []
    for c in cfgs:
        r = train(c, g, masks, max_epochs, patience, tseed)
        out.append((r.test_acc, r.wall_time_per_epoch))
    return out


def ablation(families, graphs, repeats: int, seed: int, max_epochs: int = 1000,
             patience: int = 40, timing: bool = False, workers: int = 1) -> list[dict]:
    """Five channel/mixing cells per family.

    ``graphs`` is either a :class:`Graph` (reused with a new split per repeat)
    or a :class:`~heterophily.synth.SynthConfig` (fresh graph per repeat).
    Per-epoch milliseconds are reported only with ``timing`` since they are
    not reproducible.
    """
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    plan = [(fam, label, cfg) for fam in families for label, cfg in ablation_configs(fam)]
    cfgs = [p[2] for p in plan]
    jobs = []
    for r in range(repeats):
        if isinstance(graphs, synth.SynthConfig):
            g = synth.generate(replace(graphs, seed=derive_seed(seed, r, 0)))
        elif isinstance(graphs, Graph):
            g = graphs
        else:
            raise ConfigError("ablation needs a Graph or a SynthConfig")
        masks = split(g.n_nodes, DEFAULT_RATIOS, derive_seed(seed, r, 1))
        jobs.append((g, cfgs, masks, max_epochs, patience, derive_seed(seed, r, 2)))
    cells = _run_cells(_ablation_cell, jobs, workers)

    rows = []
    for j, (fam, label, cfg) in enumerate(plan):
        acc = np.array([c[j][0] for c in cells])
        row = dict(family=fam, cell=label, channels="+".join(cfg.channels), mixing=cfg.mixing,
                   model=cfg.model_id, mean=float(acc.mean()), std=float(acc.std()),
                   repeats=repeats)
        if timing:
            row["ms_per_epoch"] = float(np.mean([c[j][1] for c in cells]))
        rows.append(row)
    return rows


# ---------------------------------------------------------------------- csv


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(rows, columns=None) -> str:
    if not rows:
        return ""
    columns = list(columns or rows[0].keys())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))
