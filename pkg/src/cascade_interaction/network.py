"""Interaction network: link indices, key links, vertex strengths, key components."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .quantify import InteractionCounts, InteractionMatrix

__all__ = [
    "InteractionNetwork",
    "LayeredDag",
    "build_network",
    "layered_subgraph",
    "link_index",
    "all_link_indices",
    "key_links",
    "strengths",
    "key_components",
    "propagation_capacity_network",
    "key_link_report",
    "key_component_report",
    "DEFAULT_EPSILON",
]

DEFAULT_EPSILON = 0.15
WEIGHT_MODES = ("total", "gen0")

Link = tuple[int, int]


@dataclass
class InteractionNetwork:
    n: int
    links: list[tuple[int, int, float]]
    out_adj: dict[int, list[tuple[int, float]]] = field(repr=False)
    weights: np.ndarray | None = None
    weight_mode: str | None = None

    def __post_init__(self) -> None:
        self._index = {(i, j): k for k, (i, j, _) in enumerate(self.links)}

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def vertices(self) -> list[int]:
        vs = set()
        for i, j, _ in self.links:
            vs.add(i)
            vs.add(j)
        return sorted(vs)

    def link_position(self, link: Link) -> int:
        try:
            return self._index[(int(link[0]), int(link[1]))]
        except KeyError:
            raise KeyError(f"link {link[0]}->{link[1]} is not in the network") from None

    def prob(self, i: int, j: int) -> float:
        return self.links[self.link_position((i, j))][2]

    def with_weights(self, weights: np.ndarray, mode: str) -> "InteractionNetwork":
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (self.n_links,):
            raise ValueError("one weight per link required")
        return InteractionNetwork(self.n, self.links, self.out_adj, weights, mode)

    def weight_map(self) -> dict[Link, float]:
        if self.weights is None:
            raise ValueError("network has no weights; run all_link_indices first")
        return {(i, j): float(w) for (i, j, _), w in zip(self.links, self.weights)}


def build_network(matrix: InteractionMatrix | Iterable[tuple[int, int, float]], n: int | None = None) -> InteractionNetwork:
    """One link per nonzero off-diagonal entry of ``B``."""
    if isinstance(matrix, InteractionMatrix):
        n = matrix.n
        triples = matrix.links()
    else:
        triples = sorted((int(i), int(j), float(b)) for i, j, b in matrix if b != 0 and i != j)
        if n is None:
            n = 1 + max((max(i, j) for i, j, _ in triples), default=-1)
    out_adj: dict[int, list[tuple[int, float]]] = {}
    for i, j, b in triples:
        out_adj.setdefault(i, []).append((j, b))
    return InteractionNetwork(n=int(n), links=triples, out_adj=out_adj)


@dataclass(frozen=True)
class LayeredDag:
    """Acyclic subgraph rooted at the destination of a link.

    ``flow[c]`` is the expected number of failures of ``c`` per failure of the
    link source; ``tie_breaks`` counts vertices that had several candidate
    parents in the previous level.
    """

    root: int
    excluded: int
    levels: tuple[tuple[int, ...], ...]
    parent: dict[int, int]
    flow: dict[int, float]
    tie_breaks: int

    @property
    def vertices(self) -> list[int]:
        return [v for level in self.levels for v in level]

    def edges(self) -> list[tuple[int, int]]:
        return sorted((p, c) for c, p in self.parent.items())


def layered_subgraph(net: InteractionNetwork, link: Link) -> LayeredDag:
    """Breadth-first levels from the link destination ``j``, never visiting the
    source ``i``.

    Each vertex is placed at its shallowest level; edges pointing back to a
    lower level or within a level are dropped.  When several previous-level
    vertices point at the same child, the parent carrying the largest
    expected flow ``flow[p] * b[p, c]`` is kept, ties going to the smallest id.
    """
    i, j = int(link[0]), int(link[1])
    b_ij = net.prob(i, j)
    levels = [(j,)]
    placed = {j}
    parent: dict[int, int] = {}
    flow = {j: b_ij}
    tie_breaks = 0
    current = (j,)
    while current:
        candidates: dict[int, list[tuple[int, float]]] = {}
        for v in current:
            for c, b in net.out_adj.get(v, ()):
                if c == i or c in placed:
                    continue
                candidates.setdefault(c, []).append((v, b))
        nxt = []
        for c in sorted(candidates):
            options = candidates[c]
            if len(options) > 1:
                tie_breaks += 1
            best_p, best_b = min(options, key=lambda pb: (-flow[pb[0]] * pb[1], pb[0]))
            parent[c] = best_p
            flow[c] = flow[best_p] * best_b
            nxt.append(c)
        placed.update(nxt)
        current = tuple(nxt)
        if current:
            levels.append(current)
    return LayeredDag(root=j, excluded=i, levels=tuple(levels), parent=parent, flow=flow, tie_breaks=tie_breaks)


def _source_failures(counts: InteractionCounts, mode: str) -> np.ndarray:
    if mode == "total":
        return counts.N
    if mode == "gen0":
        return counts.N0
    raise ValueError(f"weight mode must be one of {WEIGHT_MODES}, got {mode!r}")


def link_index(net: InteractionNetwork, counts: InteractionCounts, link: Link, mode: str = "total") -> float:
    """Expected number of failures propagated through ``link``.

    ``mode="total"`` seeds the source with all its failures ``N_i``;
    ``mode="gen0"`` with its generation-0 failures only.
    """
    n_source = float(_source_failures(counts, mode)[int(link[0])])
    dag = layered_subgraph(net, link)
    return n_source * sum(dag.flow.values())


def all_link_indices(net: InteractionNetwork, counts: InteractionCounts, mode: str = "total") -> InteractionNetwork:
    seeds = _source_failures(counts, mode)
    weights = np.zeros(net.n_links)
    for k, (i, j, _) in enumerate(net.links):
        if seeds[i] == 0:
            continue
        dag = layered_subgraph(net, (i, j))
        weights[k] = float(seeds[i]) * sum(dag.flow.values())
    return net.with_weights(weights, mode)


def key_links(weights: Sequence[float] | np.ndarray, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Positions of links whose weight is at least ``epsilon`` times the maximum."""
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise ValueError("no link weights")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return np.flatnonzero(w >= epsilon * w.max())


def strengths(net: InteractionNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex ``(s_out, s_in)``: summed weights of outgoing / incoming links."""
    if net.weights is None:
        raise ValueError("network has no weights; run all_link_indices first")
    s_out = np.zeros(net.n)
    s_in = np.zeros(net.n)
    if net.links:
        src = np.array([i for i, _, _ in net.links])
        dst = np.array([j for _, j, _ in net.links])
        np.add.at(s_out, src, net.weights)
        np.add.at(s_in, dst, net.weights)
    return s_out, s_in


def key_components(s_out: Sequence[float] | np.ndarray, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    s = np.asarray(s_out, dtype=float)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if s.size == 0 or s.max() <= 0:
        raise ValueError("no positive out-strength")
    return np.flatnonzero(s >= epsilon * s.max())


def propagation_capacity_network(gen0_weights: Sequence[float] | np.ndarray, M_u: int) -> float:
    """Summed generation-0-seeded link indices per utilized cascade."""
    if M_u < 1:
        raise ValueError("M_u must be positive")
    return float(np.sum(gen0_weights)) / M_u


def _percent(part: float, whole: float) -> float | None:
    return round(100.0 * part / whole, 2) if whole else None


def key_link_report(net: InteractionNetwork, epsilon: float = DEFAULT_EPSILON, names: Sequence[str] | None = None) -> dict:
    """Key links ranked by weight, with the share of links and of total weight."""
    keys = key_links(net.weights, epsilon)
    order = sorted(keys, key=lambda k: (-net.weights[k], net.links[k][:2]))
    total = float(net.weights.sum())
    key_total = float(net.weights[keys].sum())
    rows = []
    for rank, k in enumerate(order, start=1):
        i, j, b = net.links[k]
        row = {"rank": rank, "source": i, "target": j, "b": b, "weight": float(net.weights[k])}
        if names is not None:
            row["source_name"], row["target_name"] = names[i], names[j]
        rows.append(row)
    return {
        "epsilon": epsilon,
        "weight_mode": net.weight_mode,
        "max_weight": float(net.weights.max()),
        "threshold": epsilon * float(net.weights.max()),
        "n_links": net.n_links,
        "n_key_links": len(rows),
        "key_link_percent": _percent(len(rows), net.n_links),
        "key_weight_percent": _percent(key_total, total),
        "mean_weight": total / net.n_links,
        "key_links": rows,
    }


def key_component_report(net: InteractionNetwork, epsilon: float = DEFAULT_EPSILON, names: Sequence[str] | None = None) -> dict:
    s_out, s_in = strengths(net)
    keys = key_components(s_out, epsilon)
    order = sorted(keys, key=lambda c: (-s_out[c], c))
    involved = len(net.vertices)
    rows = []
    for rank, c in enumerate(order, start=1):
        row = {"rank": rank, "component": int(c), "out_strength": float(s_out[c]), "in_strength": float(s_in[c])}
        if names is not None:
            row["name"] = names[c]
        rows.append(row)
    return {
        "epsilon": epsilon,
        "weight_mode": net.weight_mode,
        "max_out_strength": float(s_out.max()),
        "threshold": epsilon * float(s_out.max()),
        "n_components": net.n,
        "n_involved": involved,
        "n_key_components": len(rows),
        "key_component_percent": _percent(len(rows), net.n),
        "key_component_percent_of_involved": _percent(len(rows), involved),
        "key_out_strength_percent": _percent(float(s_out[keys].sum()), float(s_out.sum())),
        "key_components": rows,
    }
