import numpy as np
import pytest

from heterophily import harness, models, synth
from heterophily.errors import ConfigError
from heterophily.graph import make_graph
from heterophily.harness import SweepSettings, split, train
from heterophily.models import preset

TINY = SweepSettings(classes=3, nodes_per_class=20, max_epochs=30, patience=10)


def test_split_examples():
    assert split(10).sizes() == (6, 2, 2)
    assert split(2000, seed=3).sizes() == (1200, 400, 400)
    a, b = split(50, seed=4), split(50, seed=4)
    for x, y in zip((a.train, a.val, a.test), (b.train, b.val, b.test)):
        assert np.array_equal(x, y)
    assert not np.array_equal(a.train, split(50, seed=5).train)


def test_split_partitions_within_one_node():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 300))
        r = rng.dirichlet(np.ones(3))
        m = split(n, tuple(r), seed=int(rng.integers(1000)))
        both = np.concatenate([m.train, m.val, m.test])
        assert np.array_equal(np.sort(both), np.arange(n))
        for size, ratio in zip(m.sizes(), r):
            assert abs(size - ratio * n) <= 1 + 1e-9


def test_split_errors():
    with pytest.raises(ConfigError):
        split(10, (0.5, 0.2, 0.2))
    with pytest.raises(ConfigError):
        split(10, (1.2, -0.2, 0.0))
    with pytest.raises(ConfigError):
        split(0)


def test_derive_seed_is_stable():
    assert harness.derive_seed(1, 2, 3) == harness.derive_seed(1, 2, 3)
    assert harness.derive_seed(1, 2, 3) != harness.derive_seed(1, 3, 2)
    assert 0 <= harness.derive_seed(0) < 2**32


def test_separable_toy_mlp():
    rng = np.random.default_rng(1)
    y = np.repeat([0, 1], 30)
    x = np.eye(2)[y] + 1e-3 * rng.standard_normal((60, 2))
    edges = [(i, (i + 1) % 60) for i in range(60)]
    g = make_graph(edges, x, y)
    res = train(preset("mlp-1"), g, split(60, seed=2), max_epochs=200, patience=200, seed=3)
    assert res.test_acc == 1.0
    assert res.epochs_run <= 200


def test_bipartite_toy_gcn_is_perfect():
    edges = [(i, j) for i in range(10) for j in range(10, 20)]
    y = [0] * 10 + [1] * 10
    g = make_graph(edges, np.eye(2)[y], y)
    res = train(preset("gcn"), g, split(20, seed=0), max_epochs=200, seed=0)
    assert res.test_acc == 1.0


@pytest.fixture(scope="module")
def small_graph():
    return synth.generate(synth.SynthConfig(0.2, classes=3, nodes_per_class=30, seed=5))


def test_patience_zero_stops_at_first_miss(small_graph):
    res = train(preset("gcn"), small_graph, split(90, seed=1), max_epochs=500, patience=0, seed=1)
    val = res.val_acc
    for i in range(1, res.epochs_run - 1):
        assert val[i] > max(val[:i])
    if res.epochs_run < 500:
        assert val[-1] <= max(val[:-1])


def test_result_bookkeeping(small_graph):
    res = train(preset("acm-gcn"), small_graph, split(90, seed=2), max_epochs=80, patience=20, seed=2)
    first = int(np.argmax(res.val_acc))
    assert res.best_epoch == first
    assert res.best_val_acc == res.val_acc[first]
    assert res.test_acc == res.test_acc_curve[first]
    assert res.epochs_run == len(res.loss) <= 80
    for curve in (res.train_acc, res.val_acc, res.test_acc_curve):
        assert all(0.0 <= a <= 1.0 for a in curve)
    assert len(res.mixing_weights) == 2
    for alpha in res.mixing_weights:
        assert np.abs(alpha.sum(1) - 1).max() <= 1e-10
    assert res.wall_time_per_epoch > 0


def test_train_is_deterministic(small_graph):
    masks = split(90, seed=3)
    a = train(preset("acm-gcn"), small_graph, masks, max_epochs=40, seed=9)
    b = train(preset("acm-gcn"), small_graph, masks, max_epochs=40, seed=9)
    assert a.loss == b.loss and a.val_acc == b.val_acc and a.test_acc == b.test_acc


def test_train_errors(small_graph):
    masks = split(90, seed=3)
    with pytest.raises(ConfigError):
        train(preset("gcn"), small_graph, masks, max_epochs=0)
    with pytest.raises(ConfigError):
        train(preset("gcn"), small_graph, masks, patience=-1)


def test_sweep_rows_and_columns():
    grid = [0.1, 0.5]
    cfgs = [preset("sgc-1"), preset("gcn")]
    rows = harness.sweep(grid, cfgs, repeats=2, seed0=0, settings=TINY)
    assert len(rows) == 4
    assert [r["model"] for r in rows] == ["sgc-1", "gcn", "sgc-1", "gcn"]
    for r in rows:
        assert tuple(r) == harness.SWEEP_COLUMNS
        assert r["repeats"] == 2
    # paired graphs: both models see the same measured homophily
    assert rows[0]["h_edge"] == rows[1]["h_edge"]
    one = harness.sweep([0.3], [preset("gcn")], repeats=1, seed0=0, settings=TINY)
    assert len(one) == 1


def test_sweep_deterministic_and_worker_independent():
    args = ([0.1, 0.3], [preset("sgc-1")], 2, 7)
    a = harness.to_csv(harness.sweep(*args, settings=TINY, workers=1), harness.SWEEP_COLUMNS)
    b = harness.to_csv(harness.sweep(*args, settings=TINY, workers=1), harness.SWEEP_COLUMNS)
    c = harness.to_csv(harness.sweep(*args, settings=TINY, workers=2), harness.SWEEP_COLUMNS)
    assert a == b == c


def test_sweep_errors():
    with pytest.raises(ConfigError):
        harness.sweep([], [preset("gcn")], 1, 0)
    with pytest.raises(ConfigError):
        harness.sweep([0.1], [preset("gcn")], 0, 0)


def test_ablation_configs():
    for fam in ("sgc", "gcn", "snowball"):
        cells = harness.ablation_configs(fam)
        assert [c for c, _ in cells] == [c[0] for c in harness.ABLATION_CELLS]
        assert cells[0][1] == preset(fam)
        assert cells[-1][1].channels == models.CHANNELS and cells[-1][1].mixing == "adaptive"
    with pytest.raises(ConfigError):
        harness.ablation_configs("mlp")


def test_ablation_rows():
    g = synth.generate(synth.SynthConfig(0.2, classes=3, nodes_per_class=15, seed=1))
    rows = harness.ablation(["sgc", "gcn"], g, repeats=2, seed=0, max_epochs=20)
    assert len(rows) == 10
    assert [r["family"] for r in rows] == ["sgc"] * 5 + ["gcn"] * 5
    assert tuple(rows[0]) == harness.ABLATION_COLUMNS
    timed = harness.ablation(["gcn"], g, repeats=1, seed=0, max_epochs=5, timing=True)
    assert all(r["ms_per_epoch"] > 0 for r in timed)
    with pytest.raises(ConfigError):
        harness.ablation(["gcn"], "nope", repeats=1, seed=0)


@pytest.mark.slow
def test_ablation_acm_beats_plain_on_harmful_heterophily():
    cfg = synth.SynthConfig(0.1, classes=5, nodes_per_class=100)
    rows = harness.ablation(["gcn"], cfg, repeats=5, seed=0, timing=True)
    by = {r["cell"]: r for r in rows}
    assert by["LP+HP+I+mix"]["mean"] >= by["LP"]["mean"]
    assert by["LP+HP+I+mix"]["ms_per_epoch"] <= 4 * by["LP"]["ms_per_epoch"]


def test_csv_round_trip():
    rows = [dict(a=0.1, b="x", c=3), dict(a=1 / 3, b="y", c=4)]
    text = harness.to_csv(rows)
    assert text.splitlines()[0] == "a,b,c"
    back = harness.read_csv(text)
    assert float(back[1]["a"]) == 1 / 3 and back[0]["b"] == "x"
    assert harness.to_csv([]) == ""
