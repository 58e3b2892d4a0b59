import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chi2_contingency

from ednoise.flipprob import flip_prob, r_veto
from ednoise.graph import Graph, erdos_renyi, star_graph, subgraph_mask
from ednoise.injector import (
    VARIANT_NAMES,
    NoiseSpec,
    flip_counts_by_degree,
    inject,
    inject_seq,
    reassign,
    sample_noisy_edges,
    select_nodes,
    simulate,
)


def within_3sigma(hits, trials, p):
    if p in (0.0, 1.0):
        return hits == p * trials
    sigma = math.sqrt(p * (1 - p) / trials)
    return abs(hits / trials - p) <= 3 * sigma


# --- edge sampling ---------------------------------------------------------


def test_edge_sampling_extremes(path3):
    assert len(sample_noisy_edges(path3, 0.0, 3)) == 0
    assert list(sample_noisy_edges(path3, 1.0, 3)) == [0, 1]
    with pytest.raises(ValueError):
        sample_noisy_edges(path3, 1.5, 3)


def test_edge_sampling_deterministic():
    g = erdos_renyi(300, 0.05, 1)
    a = sample_noisy_edges(g, 0.3, 11)
    assert np.array_equal(a, sample_noisy_edges(g, 0.3, 11))
    assert not np.array_equal(a, sample_noisy_edges(g, 0.3, 12))


@pytest.mark.slow
def test_noisy_edge_fraction_over_resamples():
    g = erdos_renyi(1000, 0.01, 7)
    total = 0
    resamples = 100_000
    for lo in range(0, resamples, 2000):
        edge_mask, *_ = simulate(g, NoiseSpec.from_variant("veto-sln", 0.25), np.arange(lo, lo + 2000))
        total += int(edge_mask.sum())
    assert within_3sigma(total, resamples * g.num_edges, 0.25)


# --- selection ---------------------------------------------------------------


def test_select_nodes_path(path3):
    assert list(select_nodes(path3, [0], "mv")) == [0, 1]
    assert list(select_nodes(path3, [0], "veto")) == [0, 1]
    assert list(select_nodes(path3, [], "veto")) == []
    assert list(select_nodes(path3, [0, 1], "mv")) == [0, 1, 2]


def test_select_nodes_star(star4):
    # edge 0 is the spoke (0, 1)
    assert list(select_nodes(star4, [0], "mv")) == [1]
    assert list(select_nodes(star4, [0], "veto")) == [0, 1]
    assert 0 in select_nodes(star4, [0, 1], "mv")


def test_select_nodes_isolated_never_selected():
    g = Graph(3, [(0, 1)], [0, 1, 0], 2)
    assert 2 not in select_nodes(g, [0], "mv")
    assert 2 not in select_nodes(g, [0], "veto")


def test_select_nodes_rejects_bad_input(path3):
    with pytest.raises(ValueError):
        select_nodes(path3, [5], "veto")
    with pytest.raises(ValueError):
        select_nodes(path3, [0], "seq")


# --- reassignment --------------------------------------------------------------


def test_reassign_examples():
    assert list(reassign([2, 1], [0], "pwn", 3, 0)) == [0, 1]
    assert list(reassign([0, 1], [0], "sln", 2, 5)) == [1, 1]
    with pytest.raises(ValueError):
        reassign([0], [0], "sln", 1, 0)
    with pytest.raises(ValueError):
        reassign([0, 3], [0], "sln", 3, 0)


def test_reassign_sln_is_uniform_over_other_classes():
    n = 1_000_000
    out = reassign(np.zeros(n, dtype=np.int64), np.arange(n), "sln", 6, 2024)
    counts = np.bincount(out, minlength=6)
    assert counts[0] == 0
    sigma = math.sqrt(0.2 * 0.8 / n)
    assert np.all(np.abs(counts[1:] / n - 0.2) <= 3 * sigma)


@given(st.integers(2, 9), st.integers(0, 2**32))
def test_reassign_always_changes_label(k, seed):
    labels = np.arange(50) % k
    out = reassign(labels, range(50), "sln", k, seed)
    assert np.all(out != labels)
    assert np.all((out >= 0) & (out < k))


# --- sequential flipping ------------------------------------------------------


def test_seq_unchanged_without_noisy_edges():
    g = star_graph(3, labels=[0, 1, 2, 0], num_classes=3)
    out = inject_seq(g, 0.0, "sln", 3, 9)
    assert np.array_equal(out.noisy_labels, g.labels)


def test_seq_pwn_full_cycle():
    g = star_graph(3, labels=[0, 1, 2, 0], num_classes=3)
    out = inject_seq(g, 1.0, "pwn", 3, 9)
    assert out.noisy_labels[0] == 0
    assert list(out.noisy_labels[1:]) == [2, 0, 1]
    assert list(out.noisy_counts) == [3, 1, 1, 1]


def test_seq_pwn_degree_two_rate():
    g = star_graph(2, num_classes=3)
    spec = NoiseSpec.from_variant("seq-pwn", 0.25)
    flips, trials = flip_counts_by_degree(g, spec, np.arange(1_000_000), nodes=[0])[2]
    assert within_3sigma(flips, trials, 0.4375)


@pytest.mark.parametrize("reassignment", ["sln", "pwn"])
def test_seq_order_invariance(reassignment):
    g = star_graph(5, num_classes=4)
    trials = 100_000
    table = []
    for j, order in enumerate(([0, 1, 2, 3, 4], [4, 2, 0, 3, 1])):
        seeds = np.arange(trials) + j * trials
        spec = NoiseSpec.from_variant(f"seq-{reassignment}", 0.3)
        finals = simulate(g, spec, seeds, edge_order=order)[3][:, 0]
        table.append(np.bincount(finals, minlength=4))
    _, p, _, _ = chi2_contingency(np.array(table))
    assert p > 0.01


def test_edge_order_changes_path_but_not_count():
    g = star_graph(5, num_classes=4)
    a = inject_seq(g, 0.5, "sln", 4, 3)
    b = inject_seq(g, 0.5, "sln", 4, 3, edge_order=[4, 3, 2, 1, 0])
    assert np.array_equal(a.noisy_counts, b.noisy_counts)
    assert np.array_equal(a.noisy_edges, b.noisy_edges)


# --- full injection ------------------------------------------------------------


def test_baseline_zero_rho_is_identity():
    g = erdos_renyi(200, 0.05, 3, k=4)
    for name in ("sln", "pwn"):
        out = inject(g, NoiseSpec.from_variant(name, 0.0), 1)
        assert np.array_equal(out.noisy_labels, g.labels)
        assert out.realized_noise == 0


def test_baseline_sln_realized_noise():
    n = 100_000
    g = Graph(n, [], np.arange(n) % 6, 6)
    out = inject(g, NoiseSpec.from_variant("sln", 0.3), 77)
    assert within_3sigma(int(out.flipped.sum()), n, 0.3)
    assert out.realized_noise == pytest.approx(out.flipped.mean())


def test_baseline_pwn_moves_to_next_class():
    g = Graph(1000, [], np.arange(1000) % 5, 5)
    out = inject(g, NoiseSpec.from_variant("pwn", 0.4), 8)
    moved = out.flipped
    assert np.all(out.noisy_labels[moved] == (g.labels[moved] + 1) % 5)


def test_ccn_baseline_follows_rates():
    n = 100_000
    g = Graph(n, [], np.zeros(n, dtype=int), 3)
    rates = [[0, 0.2, 0.1], [0, 0, 0], [0, 0, 0]]
    out = inject(g, NoiseSpec.from_variant("ccn", ccn_matrix=rates), 4)
    counts = np.bincount(out.noisy_labels, minlength=3)
    for c, p in zip(counts, (0.7, 0.2, 0.1)):
        assert within_3sigma(int(c), n, p)
    ident = inject(g, NoiseSpec.from_variant("ccn", ccn_matrix=np.zeros((3, 3))), 4)
    assert not ident.flipped.any()


def test_star_veto_center_rate():
    g = star_graph(9, num_classes=3)
    spec = NoiseSpec.from_variant("veto-sln", 0.25)
    flips, trials = flip_counts_by_degree(g, spec, np.arange(100_000), nodes=[0])[9]
    assert r_veto(9, 0.25) == pytest.approx(0.924915313720703, abs=1e-15)
    assert within_3sigma(flips, trials, r_veto(9, 0.25))


def test_veto_endpoint_coupling():
    g = erdos_renyi(400, 0.02, 5, k=4)
    out = inject(g, NoiseSpec.from_variant("veto-sln", 0.2), 6)
    assert len(out.noisy_edges) > 0
    ends = g.edges[out.noisy_edges]
    assert set(ends.ravel()) <= set(out.selected_nodes)
    assert np.array_equal(np.flatnonzero(out.flipped), out.selected_nodes)


def test_mv_flipped_equals_selected():
    g = erdos_renyi(400, 0.02, 5, k=4)
    out = inject(g, NoiseSpec.from_variant("mv-pwn", 0.4), 6)
    assert np.array_equal(np.flatnonzero(out.flipped), out.selected_nodes)


@pytest.mark.parametrize("name", VARIANT_NAMES)
def test_determinism_and_worker_invariance(name):
    g = erdos_renyi(500, 0.02, 9, k=5)
    ccn = np.full((5, 5), 0.05) if name == "ccn" else None
    spec = NoiseSpec.from_variant(name, 0.2, ccn_matrix=ccn)
    a = inject(g, spec, 123)
    b = inject(g, spec, 123, workers=4)
    assert np.array_equal(a.noisy_labels, b.noisy_labels)
    assert np.array_equal(a.noisy_edges, b.noisy_edges)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv() == inject(g, spec, 123).to_csv()


@pytest.mark.parametrize("name", VARIANT_NAMES)
def test_mask_respected(name):
    g = erdos_renyi(300, 0.05, 2, k=3)
    mask = subgraph_mask(g, "train", range(0, 300, 3))
    ccn = np.full((3, 3), 0.2) if name == "ccn" else None
    spec = NoiseSpec.from_variant(name, 0.6, ccn_matrix=ccn, target_mask=mask)
    out = inject(g, spec, 1)
    outside = ~mask.as_bool(300)
    assert np.array_equal(out.noisy_labels[outside], g.labels[outside])
    assert out.flipped[mask.members].any()
    assert out.realized_noise == pytest.approx(out.flipped[mask.members].mean())


def test_outputs_are_frozen():
    g = erdos_renyi(50, 0.1, 2)
    out = inject(g, NoiseSpec.from_variant("veto-pwn", 0.2), 1)
    with pytest.raises(ValueError):
        out.noisy_labels[0] = 1


def test_write_csv_and_sidecar(tmp_path):
    g = star_graph(4, labels=[0, 1, 1, 0, 1])
    out = inject(g, NoiseSpec.from_variant("veto-sln", 1.0), 5)
    csv_path, json_path = out.write(tmp_path / "noisy.csv")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "node_id,original_label,noisy_label,flipped"
    assert lines[1] == "0,0,1,1"
    side = json.loads(json_path.read_text())
    assert side == {
        "seed": 5,
        "spec": {"variant": "veto-sln", "rho": 1.0},
        "realized_noise": 1.0,
        "num_noisy_edges": 4,
    }


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec.from_variant("bogus")
    with pytest.raises(ValueError):
        NoiseSpec.from_variant("veto-sln", 1.2)
    with pytest.raises(ValueError):
        NoiseSpec.from_variant("ccn")
    with pytest.raises(ValueError):
        NoiseSpec("baseline", 0.1, "sln", aggregation="mv")
    with pytest.raises(ValueError):
        NoiseSpec("edn", 0.1, "sln", aggregation="mv", reassignment="sln")
    with pytest.raises(ValueError):
        NoiseSpec("other", 0.1)
    assert NoiseSpec.from_variant("seq-pwn", 0.1).with_rho(0.3).rho == 0.3


@pytest.mark.parametrize("name", ["mv-sln", "veto-pwn", "seq-sln", "seq-pwn"])
def test_small_graph_rates_match_closed_forms(name):
    # quick per-degree check on a mixed-degree graph
    g = erdos_renyi(60, 0.08, 3, k=4)
    spec = NoiseSpec.from_variant(name, 0.25)
    tally = flip_counts_by_degree(g, spec, np.arange(20_000))
    for d, (flips, trials) in tally.items():
        p = flip_prob(spec.flip_variant, d, 0.25, 4)
        assert within_3sigma(flips, trials, p)
