"""Undirected labeled graphs: ingestion, synthetic generators, degree statistics."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .rng import generator


class GraphError(ValueError):
    """Raised when a graph, edge file or label file violates the graph invariants."""


@dataclass(frozen=True)
class NodeMask:
    role: str
    members: np.ndarray

    def __post_init__(self):
        members = np.unique(np.asarray(self.members, dtype=np.int64))
        members.setflags(write=False)
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    def as_bool(self, num_nodes: int) -> np.ndarray:
        out = np.zeros(num_nodes, dtype=bool)
        out[self.members] = True
        return out


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph with one class label per node.

    ``edges`` is an ``(E, 2)`` array with ``u < v`` in each row, sorted
    lexicographically; the row index is the canonical edge id.
    """

    num_nodes: int
    edges: np.ndarray
    labels: np.ndarray
    num_classes: int
    masks: Mapping[str, NodeMask] = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.num_nodes)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        labels = np.asarray(self.labels, dtype=np.int64)
        if n < 0:
            raise GraphError("num_nodes must be non-negative")
        if self.num_classes < 2:
            raise GraphError(f"need at least 2 classes, got {self.num_classes}")
        if labels.shape != (n,):
            raise GraphError(f"expected {n} labels, got {labels.shape[0]}")
        if n and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise GraphError(f"labels must lie in 0..{self.num_classes - 1}")
        if len(edges):
            if edges.min() < 0 or edges.max() >= n:
                raise GraphError("edge references a node id outside 0..num_nodes-1")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise GraphError("self-loops are not allowed")
        edges = np.sort(edges, axis=1)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
        if len(edges) > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
            raise GraphError("duplicate edges are not allowed")
        for mask in self.masks.values():
            if len(mask) and (mask.members[0] < 0 or mask.members[-1] >= n):
                raise GraphError(f"mask {mask.role!r} references an invalid node id")
        edges.setflags(write=False)
        labels = labels.copy()
        labels.setflags(write=False)
        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "masks", dict(self.masks))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.bincount(self.edges.ravel(), minlength=self.num_nodes)
        deg.setflags(write=False)
        return deg

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """``(E, N)`` 0/1 matrix; row e has ones at both endpoints of edge e."""
        e = self.num_edges
        rows = np.repeat(np.arange(e), 2)
        return sp.csr_matrix(
            (np.ones(2 * e), (rows, self.edges.ravel())), shape=(e, self.num_nodes)
        )

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        u, v = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * self.num_edges)
        return sp.csr_matrix(
            (data, (np.r_[u, v], np.r_[v, u])), shape=(self.num_nodes, self.num_nodes)
        )

    @cached_property
    def incident_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR layout ``(indptr, edge_ids)`` of each node's incident edges, ids ascending."""
        ends = self.edges.ravel()
        eids = np.repeat(np.arange(self.num_edges), 2)
        order = np.lexsort((eids, ends))
        indptr = np.zeros(self.num_nodes + 1, dtype=np.int64)
        np.cumsum(self.degrees, out=indptr[1:])
        return indptr, eids[order]

    def mask(self, role: str) -> NodeMask:
        if role == "all":
            return NodeMask("all", np.arange(self.num_nodes))
        try:
            return self.masks[role]
        except KeyError:
            raise GraphError(f"graph has no mask named {role!r}") from None

    def with_mask(self, mask: NodeMask) -> "Graph":
        return Graph(
            self.num_nodes,
            self.edges,
            self.labels,
            self.num_classes,
            {**self.masks, mask.role: mask},
        )

    def with_labels(self, labels) -> "Graph":
        return Graph(self.num_nodes, self.edges, labels, self.num_classes, self.masks)


@dataclass(frozen=True)
class DegreeDistribution:
    """Fraction of nodes having each degree."""

    probs: Mapping[int, float]

    def __post_init__(self):
        probs = {int(k): float(v) for k, v in sorted(self.probs.items())}
        if any(k < 0 for k in probs):
            raise ValueError("degrees must be non-negative")
        if any(not 0.0 <= v <= 1.0 for v in probs.values()):
            raise ValueError("fractions must lie in [0, 1]")
        if probs and abs(math.fsum(probs.values()) - 1.0) > 1e-12:
            raise ValueError("fractions must sum to 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_degrees(cls, degrees: Iterable[int]) -> "DegreeDistribution":
        degs, counts = np.unique(np.asarray(list(degrees), dtype=np.int64), return_counts=True)
        total = counts.sum()
        return cls({int(d): int(c) / total for d, c in zip(degs, counts)})

    @property
    def degrees(self) -> np.ndarray:
        return np.fromiter(self.probs.keys(), dtype=np.int64, count=len(self.probs))

    @property
    def weights(self) -> np.ndarray:
        return np.fromiter(self.probs.values(), dtype=np.float64, count=len(self.probs))

    @property
    def max_degree(self) -> int:
        return max(self.probs) if self.probs else 0

    def mean(self) -> float:
        return math.fsum(d * p for d, p in self.probs.items())


def degree_distribution(g: Graph, mask: NodeMask | None = None) -> DegreeDistribution:
    """Degree distribution of ``g``; with ``mask``, over the masked nodes only.

    Degrees are always taken in the full graph.
    """
    degs = g.degrees if mask is None else g.degrees[mask.members]
    return DegreeDistribution.from_degrees(degs)


def subgraph_mask(g: Graph, role: str, ids: Iterable[int]) -> NodeMask:
    ids = np.asarray(list(ids), dtype=np.int64)
    bad = ids[(ids < 0) | (ids >= g.num_nodes)]
    if len(bad):
        raise GraphError(f"mask {role!r}: node id {int(bad[0])} out of range 0..{g.num_nodes - 1}")
    return NodeMask(role, ids)


def random_split(
    g: Graph, train_per_class: int, num_val: int, num_test: int | None, seed: int
) -> dict[str, NodeMask]:
    """Stratified train split plus random val/test (``num_test=None``: all remaining nodes)."""
    rng = generator(seed, "split")
    train = []
    for c in range(g.num_classes):
        members = np.flatnonzero(g.labels == c)
        take = min(train_per_class, len(members))
        train.append(rng.choice(members, size=take, replace=False))
    train = np.concatenate(train) if train else np.empty(0, dtype=np.int64)
    rest = np.setdiff1d(np.arange(g.num_nodes), train)
    rest = rng.permutation(rest)
    val = rest[:num_val]
    test = rest[num_val:] if num_test is None else rest[num_val : num_val + num_test]
    return {
        "train": NodeMask("train", train),
        "val": NodeMask("val", val),
        "test": NodeMask("test", test),
    }


_HEADER = re.compile(r"#\s*nodes\s*[:=]\s*(\d+)", re.IGNORECASE)


def _parse_int(token: str, path, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise GraphError(f"{path}:{lineno}: non-integer token {token!r}") from None
    if value < 0:
        raise GraphError(f"{path}:{lineno}: negative id {value}")
    return value


def read_edge_file(path, directed_arcs: bool = True) -> tuple[list[tuple[int, int]], int | None]:
    """Parse an edge list; returns undirected ``(u, v)`` pairs (u < v) and the header node count.

    With ``directed_arcs`` each line is an arc and both directions of an edge
    may appear; otherwise every unordered pair must appear exactly once.
    """
    seen_arcs: set[tuple[int, int]] = set()
    pairs: dict[tuple[int, int], int] = {}
    header_nodes = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if stripped.startswith("#"):
                m = _HEADER.match(stripped)
                if m:
                    header_nodes = int(m.group(1))
                continue
            if not stripped:
                continue
            tokens = stripped.split()
            if len(tokens) != 2:
                raise GraphError(f"{path}:{lineno}: expected 2 ids, got {len(tokens)}")
            u, v = (_parse_int(t, path, lineno) for t in tokens)
            if u == v:
                raise GraphError(f"{path}:{lineno}: self-loop at line {lineno} ({u} {v})")
            key = (min(u, v), max(u, v))
            if directed_arcs:
                if (u, v) in seen_arcs:
                    raise GraphError(f"{path}:{lineno}: duplicate arc ({u} {v})")
                seen_arcs.add((u, v))
                pairs.setdefault(key, lineno)
            else:
                if key in pairs:
                    raise GraphError(
                        f"{path}:{lineno}: duplicate edge ({u} {v}), first seen at line {pairs[key]}"
                    )
                pairs[key] = lineno
    return list(pairs), header_nodes


def read_label_file(path, one_based: bool = False) -> dict[int, int]:
    labels: dict[int, int] = {}
    first = True
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = [t.strip() for t in stripped.split(",")]
            if len(tokens) != 2:
                raise GraphError(f"{path}:{lineno}: expected 'node_id,label'")
            if first:
                first = False
                if not tokens[0].lstrip("-").isdigit():
                    continue  # header
            node, label = (_parse_int(t, path, lineno) for t in tokens)
            if one_based:
                if label == 0:
                    raise GraphError(f"{path}:{lineno}: label 0 in a 1-based label file")
                label -= 1
            if node in labels:
                raise GraphError(f"{path}:{lineno}: node {node} labeled twice")
            labels[node] = label
    return labels


def load_graph(
    edge_path,
    label_path,
    directed_arcs: bool = True,
    num_classes: int | None = None,
    one_based_labels: bool = False,
) -> Graph:
    """Read an edge list and a ``node_id,label`` CSV into a :class:`Graph`.

    The node count is ``max id + 1`` over both files unless the edge file has a
    ``# nodes: N`` header.  Every node must carry a label.
    """
    pairs, header_nodes = read_edge_file(edge_path, directed_arcs=directed_arcs)
    labels = read_label_file(label_path, one_based=one_based_labels)
    max_id = max(
        max((v for _, v in pairs), default=-1),
        max(labels, default=-1),
    )
    n = header_nodes if header_nodes is not None else max_id + 1
    if max_id >= n:
        raise GraphError(f"node id {max_id} exceeds header node count {n}")
    missing = [i for i in range(n) if i not in labels]
    if missing:
        raise GraphError(f"{label_path}: node {missing[0]} has no label ({len(missing)} unlabeled)")
    label_arr = np.array([labels[i] for i in range(n)], dtype=np.int64)
    k = num_classes if num_classes is not None else int(label_arr.max()) + 1 if n else 2
    return Graph(n, np.array(pairs, dtype=np.int64).reshape(-1, 2), label_arr, k)


def save_graph(g: Graph, edge_path, label_path) -> None:
    """Write ``g`` in the formats read by :func:`load_graph` (one line per undirected edge)."""
    with open(edge_path, "w") as fh:
        fh.write(f"# nodes: {g.num_nodes}\n")
        for u, v in g.edges:
            fh.write(f"{u}\t{v}\n")
    with open(label_path, "w") as fh:
        fh.write("node_id,label\n")
        for i, y in enumerate(g.labels):
            fh.write(f"{i},{y}\n")


# --- synthetic generators -------------------------------------------------


def _random_labels(n: int, k: int, seed: int) -> np.ndarray:
    return generator(seed, "labels").integers(0, k, size=n)


def erdos_renyi(n: int, p: float, seed: int, k: int = 2) -> Graph:
    if n < 1:
        raise GraphError("ER needs n >= 1")
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"ER edge probability must lie in [0, 1], got {p}")
    iu, iv = np.triu_indices(n, k=1)
    keep = generator(seed, "er").random(len(iu)) < p
    return Graph(n, np.column_stack([iu[keep], iv[keep]]), _random_labels(n, k, seed), k)


def barabasi_albert(n: int, m_attach: int, seed: int, k: int = 2) -> Graph:
    """Preferential attachment grown from a complete clique on the first ``m_attach`` nodes.

    Every later node attaches to ``m_attach`` distinct earlier nodes, so the
    edge count is ``C(m_attach, 2) + m_attach * (n - m_attach)``.
    """
    if m_attach < 1 or m_attach >= n:
        raise GraphError(f"BA needs 1 <= m_attach < n, got m_attach={m_attach}, n={n}")
    rng = generator(seed, "ba")
    edges = [(i, j) for i in range(m_attach) for j in range(i + 1, m_attach)]
    # each node appears once per unit of degree
    pool = [v for e in edges for v in e]
    for new in range(m_attach, n):
        targets: set[int] = set()
        while len(targets) < m_attach:
            if pool:
                targets.add(pool[rng.integers(len(pool))])
            else:
                targets.add(int(rng.integers(new)))
        for t in sorted(targets):
            edges.append((t, new))
            pool.extend((t, new))
    return Graph(n, np.array(edges, dtype=np.int64), _random_labels(n, k, seed), k)


def stochastic_block_model(
    sizes: Sequence[int], p_in: float, p_out: float, seed: int
) -> Graph:
    """Planted-partition SBM; node labels are the community indices."""
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise GraphError("SBM needs at least two non-empty communities")
    for name, p in (("intra", p_in), ("inter", p_out)):
        if not 0.0 <= p <= 1.0:
            raise GraphError(f"SBM {name}-community probability must lie in [0, 1], got {p}")
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = len(labels)
    iu, iv = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[iv], p_in, p_out)
    keep = generator(seed, "sbm").random(len(iu)) < prob
    return Graph(n, np.column_stack([iu[keep], iv[keep]]), labels, len(sizes))


def generate(kind: str, params: Mapping, seed: int) -> Graph:
    """Dispatch to a generator: ``er`` (n, p), ``ba`` (n, m_attach), ``sbm`` (sizes, p_in, p_out)."""
    kind = kind.lower()
    try:
        if kind == "er":
            return erdos_renyi(int(params["n"]), float(params["p"]), seed, int(params.get("k", 2)))
        if kind == "ba":
            return barabasi_albert(
                int(params["n"]), int(params["m_attach"]), seed, int(params.get("k", 2))
            )
        if kind == "sbm":
            return stochastic_block_model(
                [int(s) for s in params["sizes"]],
                float(params["p_in"]),
                float(params["p_out"]),
                seed,
            )
    except KeyError as exc:
        raise GraphError(f"{kind}: missing parameter {exc.args[0]!r}") from None
    raise GraphError(f"unknown graph kind {kind!r} (expected er, ba or sbm)")


def path_graph(labels: Sequence[int], num_classes: int | None = None) -> Graph:
    n = len(labels)
    k = num_classes or max(2, max(labels) + 1)
    return Graph(n, [(i, i + 1) for i in range(n - 1)], labels, k)


def star_graph(leaves: int, labels: Sequence[int] | None = None, num_classes: int = 2) -> Graph:
    """Star ``K_{1,leaves}`` with node 0 at the center."""
    labels = [0] * (leaves + 1) if labels is None else labels
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)], labels, num_classes)
