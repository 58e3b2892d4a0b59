"""Edge-dependent label noise for graphs: flip probabilities, injection, calibration, tests."""

from .calibrate import CalibrationResult, calibrate_rho, expected_noise
from .flipprob import (
    Variant,
    flip_prob,
    flip_prob_bruteforce,
    flip_prob_table,
    q_mv,
    r_veto,
    s_seq_pwn,
    s_seq_sln,
)
from .graph import Graph, NodeMask, degree_distribution, generate, load_graph, subgraph_mask
from .injector import NoiseOutcome, NoiseSpec, inject, inject_seq
from .stats import SampleSummary, pooled_t, run_test, t_critical

__all__ = [
    "CalibrationResult",
    "Graph",
    "NodeMask",
    "NoiseOutcome",
    "NoiseSpec",
    "SampleSummary",
    "Variant",
    "calibrate_rho",
    "degree_distribution",
    "expected_noise",
    "flip_prob",
    "flip_prob_bruteforce",
    "flip_prob_table",
    "generate",
    "inject",
    "inject_seq",
    "load_graph",
    "pooled_t",
    "q_mv",
    "r_veto",
    "run_test",
    "s_seq_pwn",
    "s_seq_sln",
    "subgraph_mask",
    "t_critical",
]
