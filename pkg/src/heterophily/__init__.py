"""Heterophily analysis for graph neural networks.

Homophily metrics, post-aggregation similarity, low/high-pass filterbanks,
a synthetic graph generator with its expected-similarity oracle, and
adaptive channel mixing GNNs trained on a small dense autodiff engine.
"""
from .errors import (
    ConfigError,
    DegenerateClassError,
    GraphFormatError,
    HeterophilyError,
    IsolatedNodeError,
    NumericError,
    ValidationError,
)
from .graph import Graph, degrees, load_graph, load_graph_dir, make_graph, save_graph, validate

__version__ = "0.1.0"
