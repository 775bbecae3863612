"""LDPC coding over the q-ary multi-bit erasure channel.

Each transmitted GF(2^s) symbol is either received, fully erased, or has
its ``j`` least significant bits erased.  The package provides the channel
model, labelled Tanner graphs, the set-valued message-passing decoder,
density evolution, edge-label design, ML analysis and a simulation harness.
"""

from ._accel import USE_NUMBA, backend_name
from .channel import QmbcParams, capacity, transmit
from .code import DegreeDistribution, LabelDistribution, TannerGraph, read_graph, sample_graph, write_graph
from .decoder import decode, ml_decode
from .density import DEConfig, optimal_label_distribution, region_trace, threshold_scan
from .gf import FieldParams, SubgroupTable, enumerate_subgroups, field_for
from .labeling import optimize_labels, universal_pair
from .ml import ldpc_ml_upper_bound, snbre_failure
from .sim import ExperimentConfig, run_binary_baseline, run_ser_sweep

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA", "backend_name", "QmbcParams", "capacity", "transmit", "DegreeDistribution",
    "LabelDistribution", "TannerGraph", "read_graph", "sample_graph", "write_graph", "decode",
    "ml_decode", "DEConfig", "optimal_label_distribution", "region_trace", "threshold_scan",
    "FieldParams", "SubgroupTable", "enumerate_subgroups", "field_for", "optimize_labels",
    "universal_pair", "ldpc_ml_upper_bound", "snbre_failure", "ExperimentConfig",
    "run_binary_baseline", "run_ser_sweep",
]
