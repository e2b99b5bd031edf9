from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heterophily import filters, metrics, synth
from heterophily.errors import DegenerateClassError, IsolatedNodeError, ValidationError
from heterophily.graph import make_graph
from heterophily.harness import split

from helpers import check_against_reference, k33, random_graph, ref_label_similarity, triangle


def test_triangle_classic_metrics():
    g = triangle()
    assert metrics.edge_homophily(g) == pytest.approx(1 / 3, abs=1e-15)
    assert metrics.node_homophily(g) == pytest.approx(1 / 3, abs=1e-15)
    assert metrics.class_homophily(g) == 0.0


def test_uniform_labels():
    g = make_graph([(0, 1), (1, 2)], np.zeros((3, 1)), [0, 0, 0], n_classes=2)
    assert metrics.edge_homophily(g) == 1.0
    assert metrics.node_homophily(g) == 1.0
    one_class = make_graph([(0, 1), (1, 2)], np.zeros((3, 1)), [0, 0, 0])
    with pytest.raises(ValidationError, match="C >= 2"):
        metrics.class_homophily(one_class)
    with pytest.raises(DegenerateClassError):
        metrics.aggregation_homophily(g)


def test_k33_is_harmless_heterophily():
    g = k33()
    assert metrics.edge_homophily(g) == 0.0
    assert metrics.node_homophily(g) == 0.0
    assert metrics.class_homophily(g) == 0.0
    s = metrics.similarity_matrix(filters.affinity(g), g.label_matrix(), "Z").matrix
    same = np.equal.outer(g.label_ids, g.label_ids)
    assert np.array_equal(s[same] * 16, np.full(same.sum(), 10.0))
    assert np.array_equal(s[~same] * 16, np.full((~same).sum(), 6.0))
    assert metrics.aggregation_homophily(g) == (1.0, 1.0)


def test_similarity_matrix_examples():
    g = random_graph(np.random.default_rng(0), 12, c=3, p=0.3)
    z = g.label_matrix()
    s = metrics.similarity_matrix(filters.identity(12), z, "Z")
    assert np.array_equal(s.matrix, z @ z.T)
    zero = metrics.similarity_matrix(filters.affinity(g), np.zeros((12, 4)))
    assert not zero.matrix.any()
    x = metrics.similarity_matrix(filters.affinity(g), g.features)
    assert np.abs(x.matrix - x.matrix.T).max() <= 1e-10
    assert x.operator_kind == "A_rw_renorm" and x.signal_tag == "X"


def test_aggregation_similarity_examples():
    g = random_graph(np.random.default_rng(1), 10, c=3, p=0.3)
    const = np.full((10, 10), 0.3)
    assert metrics.aggregation_similarity(const, g.labels) == 1.0
    z = g.label_matrix()
    s = metrics.similarity_matrix(filters.identity(10), z, "Z")
    assert metrics.aggregation_similarity(s, g.labels) == 1.0


def test_modified_examples():
    assert metrics.modified(1.0) == 1.0
    assert metrics.modified(0.5) == 0.0
    assert metrics.modified(0.75) == 0.5
    assert metrics.modified(0.2) == 0.0


def test_synthetic_high_h_agg():
    g = synth.generate(synth.SynthConfig(0.9, classes=5, nodes_per_class=120, seed=3))
    assert g.n_nodes == 600
    assert metrics.aggregation_homophily(g)[1] > 0.9


def test_dd_two_classes_label_signal():
    rng = np.random.default_rng(2)
    for _ in range(30):
        g = random_graph(rng, int(rng.integers(6, 41)), c=2, p=float(rng.uniform(0.05, 0.5)))
        z = g.label_matrix()
        assert metrics.diversification_distinguishability(filters.affinity(g), z, g.labels) == 1.0


def test_dd_zero_signal_and_limitation():
    g = random_graph(np.random.default_rng(3), 15, c=3, p=0.3)
    assert metrics.diversification_distinguishability(filters.affinity(g), np.zeros((15, 2)), g.labels) == 1.0
    lim = synth.limitation_scenario(3, 5, 50, seed=0)
    assert lim.class_count == 4
    dd = metrics.diversification_distinguishability(filters.affinity(lim), lim.label_matrix(), lim.labels)
    assert dd < 1.0


def test_dd_needs_lowpass():
    g = triangle()
    with pytest.raises(ValidationError):
        metrics.diversification_distinguishability(filters.laplacian(g, "L"), g.features, g.labels)


def test_isolated_nodes_rejected():
    g = make_graph([(0, 1)], np.zeros((3, 1)), [0, 1, 0])
    with pytest.raises(IsolatedNodeError):
        metrics.node_homophily(g)
    with pytest.raises(IsolatedNodeError):
        metrics.class_homophily(g)
    empty = make_graph([], np.zeros((2, 1)), [0, 1])
    with pytest.raises(ValidationError):
        metrics.edge_homophily(empty)


def test_report_fields_and_modified_relation():
    g = synth.generate(synth.SynthConfig(0.2, classes=4, nodes_per_class=30, seed=5))
    rep = metrics.homophily_report(g)
    for v in rep.as_dict().values():
        assert 0.0 <= v <= 1.0
    assert rep.h_agg_mod == max(2 * rep.h_agg - 1, 0.0)
    assert rep.field_names()[0] == "h_edge"


def test_estimate_full_mask_matches_report():
    g = synth.generate(synth.SynthConfig(0.3, classes=3, nodes_per_class=30, seed=6))
    full = metrics.homophily_report(g)
    est = metrics.estimate_metrics(g, np.ones(g.n_nodes, dtype=bool))
    for k in full.field_names():
        assert getattr(est, k) == pytest.approx(getattr(full, k), abs=1e-12)


def test_estimate_degenerate_masks():
    g = synth.generate(synth.SynthConfig(0.3, classes=3, nodes_per_class=30, seed=6))
    with pytest.raises(DegenerateClassError):
        metrics.estimate_metrics(g, np.flatnonzero(g.label_ids == 1))
    with pytest.raises(DegenerateClassError):
        metrics.estimate_metrics(g, np.zeros(g.n_nodes, dtype=bool))


def test_estimate_sixty_percent_masks():
    g = synth.generate(synth.SynthConfig(0.5, classes=5, nodes_per_class=100, seed=11))
    full = metrics.aggregation_homophily(g)[0]
    est = [metrics.estimate_metrics(g, split(g.n_nodes, (0.6, 0.4, 0.0), s).train).h_agg
           for s in range(10)]
    assert abs(np.mean(est) - full) <= 0.05


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 40), st.integers(2, 4), st.floats(0.05, 0.6), st.integers(0, 2**32 - 1))
def test_matches_reference_implementation(n, c, p, seed):
    g = random_graph(np.random.default_rng(seed), n, c=min(c, n), p=p)
    check_against_reference(g)


def test_reference_handles_k33_exactly():
    g = k33()
    s = ref_label_similarity(g)
    assert s[0][1] == Fraction(10, 16) and s[0][3] == Fraction(6, 16)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 30), st.integers(2, 5), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_all_outputs_in_unit_interval(n, c, p, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, c=min(c, n), p=p)
    for v in metrics.homophily_report(g).as_dict().values():
        assert 0.0 <= v <= 1.0


@pytest.mark.parametrize("h", [0.1, 1 / 7, 0.3])
def test_h_agg_at_least_half_in_expectation(h):
    vals = [metrics.aggregation_homophily(
        synth.generate(synth.SynthConfig(h, classes=3, nodes_per_class=30, seed=s)))[0]
        for s in range(50)]
    se = np.std(vals, ddof=1) / np.sqrt(len(vals))
    assert np.mean(vals) >= 0.5 - 2 * se
