"""Structure-only label propagation and a noise-level degradation sweep.

Stands in for GNN training: the classifier sees the graph and noisy training
labels, and is scored on the clean labels of held-out nodes.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calibrate import calibrate_rho
from .graph import Graph, NodeMask, degree_distribution, random_split
from .injector import NoiseSpec, inject
from .rng import derive_seed


def label_propagation_fit_predict(
    g: Graph, noisy_labels, train_mask: NodeMask, iterations: int = 20
) -> np.ndarray:
    """Iterated neighbour majority vote with training nodes clamped.

    Each round every unclamped node takes the most common label among its
    currently labeled neighbours (ties to the smallest class id).  Nodes never
    reached get the most common training label.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if len(train_mask) == 0:
        raise ValueError("train mask is empty")
    k = g.num_classes
    noisy_labels = np.asarray(noisy_labels, dtype=np.int64)
    train = train_mask.as_bool(g.num_nodes)
    current = np.full(g.num_nodes, -1, dtype=np.int64)
    current[train] = noisy_labels[train]
    adj = g.adjacency
    for _ in range(iterations):
        onehot = np.zeros((g.num_nodes, k))
        known = current >= 0
        onehot[np.flatnonzero(known), current[known]] = 1.0
        votes = adj @ onehot
        has_vote = votes.sum(axis=1) > 0
        update = has_vote & ~train
        nxt = current.copy()
        nxt[update] = np.argmax(votes[update], axis=1)
        if np.array_equal(nxt, current):
            break
        current = nxt
    fallback = int(np.argmax(np.bincount(noisy_labels[train], minlength=k)))
    current[current < 0] = fallback
    return current


def accuracy(pred, truth, mask: NodeMask) -> float:
    if len(mask) == 0:
        raise ValueError("evaluation mask is empty")
    return float(np.mean(np.asarray(pred)[mask.members] == np.asarray(truth)[mask.members]))


@dataclass(frozen=True)
class EvalResult:
    variant: str
    level: float
    rho: float
    seed: int
    runs: int
    accuracies: tuple[float, ...]
    train_role: str = "train"
    test_role: str = "test"

    @property
    def mean(self) -> float:
        return math.fsum(self.accuracies) / len(self.accuracies)

    @property
    def std(self) -> float:
        if len(self.accuracies) < 2:
            return 0.0
        m = self.mean
        return math.sqrt(math.fsum((a - m) ** 2 for a in self.accuracies) / (len(self.accuracies) - 1))


def _masks_for_run(g: Graph, master_seed: int, run: int, train_per_class: int):
    if "train" in g.masks and "test" in g.masks:
        return g.masks["train"], g.masks["test"]
    split = random_split(g, train_per_class, 0, None, derive_seed(master_seed, "split", run))
    return split["train"], split["test"]


def degradation_sweep(
    g: Graph,
    variants: Sequence[str],
    levels: Sequence[float],
    runs: int,
    seed: int,
    train_per_class: int = 20,
    iterations: int = 20,
    workers: int = 1,
) -> list[EvalResult]:
    """Calibrate, inject, fit and score every (variant, level) cell ``runs`` times.

    Noise only touches training nodes.  The split of run ``r`` depends on
    ``(seed, r)`` alone, so all variants share it; the injection seed is derived
    from ``(seed, variant, level, r)``.  Results do not depend on ``workers``.
    """
    dist = degree_distribution(g)
    k = g.num_classes
    cells = []
    for variant in variants:
        for level in levels:
            rho = calibrate_rho(dist, variant, k, level).rho if level > 0 else 0.0
            cells.append((variant, float(level), rho))

    def run_one(job):
        variant, level, rho, r = job
        train, test = _masks_for_run(g, seed, r, train_per_class)
        spec = NoiseSpec.from_variant(variant, rho, target_mask=train)
        noisy = inject(g, spec, derive_seed(seed, variant, repr(level), r)).noisy_labels
        pred = label_propagation_fit_predict(g, noisy, train, iterations)
        return accuracy(pred, g.labels, test)

    jobs = [(v, lvl, rho, r) for v, lvl, rho in cells for r in range(runs)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            accs = list(pool.map(run_one, jobs))
    else:
        accs = [run_one(j) for j in jobs]
    out = []
    for i, (variant, level, rho) in enumerate(cells):
        out.append(
            EvalResult(variant, level, rho, seed, runs, tuple(accs[i * runs : (i + 1) * runs]))
        )
    return out


def sweep_csv(results: Sequence[EvalResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["variant", "level", "rho", "mean_acc", "std_acc", "runs"])
    for r in results:
        writer.writerow([r.variant, repr(r.level), repr(r.rho), repr(r.mean), repr(r.std), r.runs])
    return buf.getvalue()
