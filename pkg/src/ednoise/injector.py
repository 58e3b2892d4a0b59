"""Seeded injection of node-label noise into a graph.

Baselines (SLN, CCN, PWN) corrupt each node independently.  Edge-dependent
noise first marks every edge noisy with probability ``rho``; a node's fate then
depends on its noisy incident edges:

* ``mv``   -- selected iff at least ``ceil(deg/2)`` incident edges are noisy;
* ``veto`` -- selected iff at least one incident edge is noisy;
* ``seq``  -- every noisy incident edge applies one forced step to the label.

Selected nodes always change label: SLN picks uniformly among the other
``K - 1`` classes, PWN moves to ``(label + 1) mod K``.  With these forced
steps, ``m`` noisy edges under ``seq`` reproduce the ``m``-step rows of the
SLN/PWN transition powers once averaged over the edge sampling.

All randomness comes from :mod:`ednoise.rng` keyed draws:

==================  =====================  ==================================
stream              keys                   use
==================  =====================  ==================================
``edge``            edge id                edge is noisy iff ``u < rho``
``reassign``        node id                SLN target for MV/veto/baseline
``seq-step``        node id, edge id       SLN target for one sequential step
``baseline-select`` node id                node corrupted iff ``u < rho``
``ccn``             node id                inverse-CDF draw from the CCN row
==================  =====================  ==================================

so outcomes never depend on chunking or thread count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .flipprob import Variant
from .graph import Graph, NodeMask
from .rng import keyed_uniform
from .transitions import q_ccn

BASELINES = ("sln", "ccn", "pwn")
AGGREGATIONS = ("mv", "veto", "seq")
REASSIGNMENTS = ("sln", "pwn")
VARIANT_NAMES = BASELINES + tuple(f"{a}-{r}" for a in AGGREGATIONS for r in REASSIGNMENTS)


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Which noise model to inject.

    Exactly one family is configured: ``baseline`` uses ``baseline_kind``
    (and ``ccn_matrix`` for CCN); ``edn`` uses ``aggregation`` and
    ``reassignment``.  ``target_mask`` restricts whose labels may change.
    """

    family: str
    rho: float = 0.0
    baseline_kind: str | None = None
    ccn_matrix: np.ndarray | None = None
    aggregation: str | None = None
    reassignment: str | None = None
    target_mask: NodeMask | None = None

    def __post_init__(self):
        if self.family == "baseline":
            if self.baseline_kind not in BASELINES:
                raise ValueError(f"baseline_kind must be one of {BASELINES}")
            if self.aggregation is not None or self.reassignment is not None:
                raise ValueError("a baseline spec cannot set aggregation/reassignment")
            if self.baseline_kind == "ccn":
                if self.ccn_matrix is None:
                    raise ValueError("CCN needs ccn_matrix")
                object.__setattr__(self, "ccn_matrix", q_ccn(self.ccn_matrix).rows)
            elif self.ccn_matrix is not None:
                raise ValueError("ccn_matrix is only valid for the CCN baseline")
        elif self.family == "edn":
            if self.aggregation not in AGGREGATIONS:
                raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
            if self.reassignment not in REASSIGNMENTS:
                raise ValueError(f"reassignment must be one of {REASSIGNMENTS}")
            if self.baseline_kind is not None or self.ccn_matrix is not None:
                raise ValueError("an EDN spec cannot set baseline options")
        else:
            raise ValueError(f"family must be 'baseline' or 'edn', got {self.family!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")

    @classmethod
    def from_variant(
        cls,
        name: str,
        rho: float = 0.0,
        ccn_matrix=None,
        target_mask: NodeMask | None = None,
    ) -> "NoiseSpec":
        """Build a spec from a CLI-style name such as ``veto-sln`` or ``pwn``."""
        name = name.strip().lower()
        if name in BASELINES:
            return cls("baseline", rho, name, ccn_matrix, target_mask=target_mask)
        agg, _, reas = name.partition("-")
        if name not in VARIANT_NAMES:
            raise ValueError(f"unknown noise variant {name!r}; expected one of {VARIANT_NAMES}")
        return cls("edn", rho, aggregation=agg, reassignment=reas, target_mask=target_mask)

    @property
    def name(self) -> str:
        if self.family == "baseline":
            return self.baseline_kind
        return f"{self.aggregation}-{self.reassignment}"

    @property
    def flip_variant(self) -> Variant | None:
        """Closed-form flip-probability family, or ``None`` for degree-independent baselines."""
        if self.family == "baseline":
            return None
        if self.aggregation == "mv":
            return Variant.MV
        if self.aggregation == "veto":
            return Variant.VETO
        return Variant.SEQ_SLN if self.reassignment == "sln" else Variant.SEQ_PWN

    def with_rho(self, rho: float) -> "NoiseSpec":
        return NoiseSpec(
            self.family,
            rho,
            self.baseline_kind,
            self.ccn_matrix,
            self.aggregation,
            self.reassignment,
            self.target_mask,
        )

    def to_dict(self) -> dict:
        out = {"variant": self.name, "rho": self.rho}
        if self.ccn_matrix is not None:
            out["ccn_matrix"] = np.asarray(self.ccn_matrix).tolist()
        if self.target_mask is not None:
            out["target_mask"] = self.target_mask.role
        return out


@dataclass(frozen=True, eq=False)
class NoiseOutcome:
    seed: int
    spec: NoiseSpec
    noisy_edges: np.ndarray
    selected_nodes: np.ndarray
    noisy_counts: np.ndarray | None
    original_labels: np.ndarray
    noisy_labels: np.ndarray
    realized_noise: float
    flipped: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "flipped", self.noisy_labels != self.original_labels)
        for name in ("noisy_edges", "selected_nodes", "noisy_counts", "original_labels",
                     "noisy_labels", "flipped"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)

    def to_csv(self) -> str:
        lines = ["node_id,original_label,noisy_label,flipped"]
        lines += [
            f"{i},{a},{b},{int(a != b)}"
            for i, (a, b) in enumerate(zip(self.original_labels, self.noisy_labels))
        ]
        return "\n".join(lines) + "\n"

    def sidecar(self) -> dict:
        return {
            "seed": int(self.seed),
            "spec": self.spec.to_dict(),
            "realized_noise": float(self.realized_noise),
            "num_noisy_edges": int(len(self.noisy_edges)),
        }

    def write(self, csv_path) -> tuple[Path, Path]:
        """Write the label CSV and its ``.json`` sidecar; returns both paths."""
        csv_path = Path(csv_path)
        json_path = csv_path.with_suffix(".json")
        csv_path.write_text(self.to_csv())
        json_path.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


# --- keyed draws ---------------------------------------------------------


def _uniform(seeds: np.ndarray, stream: str, *keys: np.ndarray, workers: int = 1) -> np.ndarray:
    """Keyed uniforms of shape ``(len(seeds), len(keys[0]))``, optionally computed in chunks."""
    seeds = np.asarray(seeds, dtype=np.uint64)[:, None]
    width = len(keys[0])
    if workers <= 1 or width < 2 * workers:
        return keyed_uniform(seeds, stream, *(k[None, :] for k in keys))
    bounds = np.linspace(0, width, workers + 1).astype(int)

    def part(i):
        lo, hi = bounds[i], bounds[i + 1]
        return keyed_uniform(seeds, stream, *(k[None, lo:hi] for k in keys))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.concatenate(list(pool.map(part, range(workers))), axis=1)


def _edge_mask(g: Graph, rho: float, seeds, workers: int = 1) -> np.ndarray:
    if rho <= 0.0:
        return np.zeros((len(seeds), g.num_edges), dtype=bool)
    if rho >= 1.0:
        return np.ones((len(seeds), g.num_edges), dtype=bool)
    return _uniform(seeds, "edge", np.arange(g.num_edges), workers=workers) < rho


def _noisy_counts(g: Graph, edge_mask: np.ndarray) -> np.ndarray:
    return np.rint(g.incidence.T @ edge_mask.T.astype(np.float64)).T.astype(np.int64)


def _select(counts: np.ndarray, degrees: np.ndarray, aggregation: str) -> np.ndarray:
    if aggregation == "mv":
        return (counts >= (degrees + 1) // 2) & (degrees >= 1)
    if aggregation == "veto":
        return counts >= 1
    raise ValueError(f"aggregation must be 'mv' or 'veto', got {aggregation!r}")


def _sln_offset(u: np.ndarray, k: int) -> np.ndarray:
    """Forced SLN step as a label offset, uniform over ``1..k-1``."""
    return 1 + np.minimum((u * (k - 1)).astype(np.int64), k - 2)


def _reassign(labels, selected, reassignment, k, seeds, workers=1) -> np.ndarray:
    labels = np.broadcast_to(labels, selected.shape)
    if reassignment == "pwn":
        return np.where(selected, (labels + 1) % k, labels)
    if reassignment != "sln":
        raise ValueError(f"reassignment must be 'sln' or 'pwn', got {reassignment!r}")
    u = _uniform(seeds, "reassign", np.arange(labels.shape[1]), workers=workers)
    return np.where(selected, (labels + _sln_offset(u, k)) % k, labels)


def _seq(g, edge_mask, labels, reassignment, k, seeds, edge_order=None, workers=1):
    indptr, incident = g.incident_edges
    if edge_order is not None:
        rank = np.empty(g.num_edges, dtype=np.int64)
        rank[np.asarray(edge_order, dtype=np.int64)] = np.arange(g.num_edges)
        node_of = np.repeat(np.arange(g.num_nodes), g.degrees)
        incident = incident[np.lexsort((rank[incident], node_of))]
    cur = np.array(np.broadcast_to(labels, (len(seeds), g.num_nodes)))
    deg = g.degrees
    for slot in range(int(deg.max()) if g.num_nodes else 0):
        nodes = np.flatnonzero(deg > slot)
        eids = incident[indptr[nodes] + slot]
        noisy = edge_mask[:, eids]
        if reassignment == "pwn":
            step = 1
        else:
            step = _sln_offset(_uniform(seeds, "seq-step", nodes, eids, workers=workers), k)
        cur[:, nodes] = np.where(noisy, (cur[:, nodes] + step) % k, cur[:, nodes])
    return cur


def _baseline(g: Graph, spec: NoiseSpec, seeds, workers=1) -> np.ndarray:
    k = g.num_classes
    nodes = np.arange(g.num_nodes)
    labels = g.labels
    if spec.baseline_kind == "ccn":
        if spec.ccn_matrix.shape != (k, k):
            raise ValueError(f"CCN matrix must be {k}x{k} for this graph")
        cdf = np.cumsum(spec.ccn_matrix, axis=1)[labels]
        u = _uniform(seeds, "ccn", nodes, workers=workers)
        return np.minimum((u[:, :, None] >= cdf[None, :, :]).sum(axis=2), k - 1)
    selected = _uniform(seeds, "baseline-select", nodes, workers=workers) < spec.rho
    return _reassign(labels, selected, spec.baseline_kind, k, seeds, workers)


def simulate(g: Graph, spec: NoiseSpec, seeds, edge_order=None, workers: int = 1):
    """Run ``spec`` once per seed.

    Returns ``(edge_mask, counts, selected, noisy_labels)`` with one row per
    seed; the first three are ``None`` for baselines and ``selected`` is
    ``None`` for the sequential family.  Labels outside the target mask are
    restored to their originals.
    """
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    k = g.num_classes
    edge_mask = counts = selected = None
    if spec.family == "baseline":
        noisy = _baseline(g, spec, seeds, workers)
    else:
        edge_mask = _edge_mask(g, spec.rho, seeds, workers)
        counts = _noisy_counts(g, edge_mask)
        if spec.aggregation == "seq":
            noisy = _seq(g, edge_mask, g.labels, spec.reassignment, k, seeds, edge_order, workers)
        else:
            selected = _select(counts, g.degrees, spec.aggregation)
            noisy = _reassign(g.labels, selected, spec.reassignment, k, seeds, workers)
    if spec.target_mask is not None:
        keep = ~spec.target_mask.as_bool(g.num_nodes)
        noisy[:, keep] = g.labels[keep]
    return edge_mask, counts, selected, noisy


# --- public single-run API ----------------------------------------------


def sample_noisy_edges(g: Graph, rho: float, seed: int) -> np.ndarray:
    """Ids (canonical order) of the edges marked noisy for ``seed``."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    return np.flatnonzero(_edge_mask(g, rho, [seed])[0])


def select_nodes(g: Graph, noisy_edges: Sequence[int], aggregation: str) -> np.ndarray:
    mask = np.zeros((1, g.num_edges), dtype=bool)
    ids = np.asarray(noisy_edges, dtype=np.int64)
    if len(ids) and (ids.min() < 0 or ids.max() >= g.num_edges):
        raise ValueError("noisy edge id out of range")
    mask[0, ids] = True
    return np.flatnonzero(_select(_noisy_counts(g, mask), g.degrees, aggregation)[0])


def reassign(labels, selected, reassignment: str, k: int, seed: int) -> np.ndarray:
    """New labels: each node in ``selected`` is forced to a different class."""
    if k < 2:
        raise ValueError("reassignment needs at least 2 classes")
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in 0..{k - 1}")
    sel = np.zeros((1, len(labels)), dtype=bool)
    sel[0, np.asarray(list(selected), dtype=np.int64)] = True
    return _reassign(labels, sel, reassignment, k, np.array([seed], dtype=np.uint64))[0]


def _outcome(g: Graph, spec: NoiseSpec, seed: int, result) -> NoiseOutcome:
    edge_mask, counts, selected, noisy = result
    noisy = noisy[0].astype(np.int64)
    target = (
        np.arange(g.num_nodes) if spec.target_mask is None else spec.target_mask.members
    )
    realized = float(np.mean(noisy[target] != g.labels[target])) if len(target) else 0.0
    if spec.family == "baseline":
        noisy_edges = np.empty(0, dtype=np.int64)
        sel = np.flatnonzero(noisy != g.labels)
        counts_row = None
    else:
        noisy_edges = np.flatnonzero(edge_mask[0])
        counts_row = counts[0]
        sel = np.flatnonzero(selected[0] if selected is not None else counts_row > 0)
    return NoiseOutcome(
        int(seed), spec, noisy_edges, sel, counts_row, np.array(g.labels), noisy, realized
    )


def inject(g: Graph, spec: NoiseSpec, seed: int, workers: int = 1) -> NoiseOutcome:
    return _outcome(g, spec, seed, simulate(g, spec, [seed], workers=workers))


def inject_seq(
    g: Graph,
    rho: float,
    reassignment: str,
    k: int,
    seed: int,
    edge_order: Sequence[int] | None = None,
    target_mask: NodeMask | None = None,
) -> NoiseOutcome:
    """Sequential flipping; ``edge_order`` permutes the order noisy edges are applied in."""
    if k != g.num_classes:
        g = Graph(g.num_nodes, g.edges, g.labels, k, g.masks)
    spec = NoiseSpec("edn", rho, aggregation="seq", reassignment=reassignment,
                     target_mask=target_mask)
    return _outcome(g, spec, seed, simulate(g, spec, [seed], edge_order=edge_order))


def flip_counts_by_degree(
    g: Graph, spec: NoiseSpec, seeds, chunk: int = 100_000, nodes=None
) -> dict[int, tuple[int, int]]:
    """Monte Carlo tally ``{degree: (flips, node-trials)}`` over the given seeds.

    ``nodes`` restricts the tally to a subset of node ids.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    nodes = np.arange(g.num_nodes) if nodes is None else np.asarray(nodes)
    deg = g.degrees[nodes]
    flips = np.zeros(len(nodes), dtype=np.int64)
    for lo in range(0, len(seeds), chunk):
        noisy = simulate(g, spec, seeds[lo : lo + chunk])[3]
        flips += (noisy[:, nodes] != g.labels[nodes]).sum(axis=0)
    out = {}
    for d in np.unique(deg):
        sel = deg == d
        out[int(d)] = (int(flips[sel].sum()), int(sel.sum()) * len(seeds))
    return out
