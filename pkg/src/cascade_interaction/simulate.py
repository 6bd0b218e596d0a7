"""Interaction model: seeded Monte Carlo cascades from ``(B, tau)`` and
link-weakening edits of ``B``."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .cascades import Cascade, CascadeSet
from .network import InteractionNetwork
from .quantify import InteractionMatrix, unconditional_tau

__all__ = [
    "SimConfig",
    "SimulationRun",
    "Propagator",
    "MitigationPlan",
    "simulate_cascade",
    "simulate",
    "run_simulation",
    "stream_seeds",
    "apply_mitigation",
    "random_plan",
    "plan_weight",
]


@dataclass(frozen=True)
class SimConfig:
    m_max: int
    seed: int = 0
    streams: int = 1
    workers: int = 1
    # treat tau as inclusion rates among nonempty cascades (as estimated by quantify)
    tau_given_nonempty: bool = False

    def __post_init__(self) -> None:
        if self.m_max < 1:
            raise ValueError("m_max must be >= 1")
        if self.streams < 1 or self.workers < 1:
            raise ValueError("streams and workers must be >= 1")


class Propagator:
    """Read-only view of ``(B, tau)`` laid out for fast cascade sampling."""

    def __init__(self, matrix: InteractionMatrix):
        B = sp.csr_matrix(matrix.B)
        B.eliminate_zeros()
        B.sort_indices()
        self.n = matrix.n
        self.tau = np.asarray(matrix.tau, dtype=float)
        self.targets = [B.indices[B.indptr[i]:B.indptr[i + 1]].astype(np.int64) for i in range(self.n)]
        self.probs = [B.data[B.indptr[i]:B.indptr[i + 1]].astype(float) for i in range(self.n)]
        self.has_out = np.diff(B.indptr) > 0
        # P(first failed component in generation 0 is k), unnormalized
        survive = np.concatenate(([1.0], np.cumprod(1.0 - self.tau)[:-1]))
        self._first_cdf = np.cumsum(survive * self.tau)
        self.p_nonempty = float(self._first_cdf[-1]) if self.n else 0.0

    def initial(self, rng: np.random.Generator) -> np.ndarray:
        return np.flatnonzero(rng.random(self.n) < self.tau)

    def initial_nonempty(self, rng: np.random.Generator) -> np.ndarray:
        """Generation 0 conditioned on at least one failure.

        Draws the lowest failed id from its exact conditional law, then the
        remaining higher ids independently.
        """
        u = rng.random() * self.p_nonempty
        k = min(int(np.searchsorted(self._first_cdf, u, side="right")), self.n - 1)
        while self.tau[k] == 0.0:  # guard against float round-off landing on a zero-probability id
            k -= 1
        rest = np.flatnonzero(rng.random(self.n - k - 1) < self.tau[k + 1:]) + (k + 1)
        return np.concatenate(([k], rest))

    def propagate(self, gen0: np.ndarray, rng: np.random.Generator) -> Cascade:
        failed = np.zeros(self.n, dtype=bool)
        failed[gen0] = True
        gens = [tuple(gen0.tolist())]
        current = gen0
        targets, probs = self.targets, self.probs
        while True:
            active = current[self.has_out[current]]
            if active.size == 0:
                break
            if active.size == 1:
                t = targets[active[0]]
                p = probs[active[0]]
            else:
                t = np.concatenate([targets[i] for i in active])
                p = np.concatenate([probs[i] for i in active])
            hit = t[rng.random(t.size) < p]
            # columns of failed components are zeroed: they cannot fail again
            hit = hit[~failed[hit]]
            if hit.size == 0:
                break
            hit = np.unique(hit)
            failed[hit] = True
            gens.append(tuple(hit.tolist()))
            current = hit
        return Cascade(tuple(gens))


def simulate_cascade(matrix: InteractionMatrix | Propagator, rng: np.random.Generator) -> Cascade:
    """One cascade; generation 0 may come out empty, giving an empty cascade."""
    prop = matrix if isinstance(matrix, Propagator) else Propagator(matrix)
    gen0 = prop.initial(rng)
    if gen0.size == 0:
        return Cascade(())
    return prop.propagate(gen0, rng)


def stream_seeds(seed: int, streams: int) -> list[np.random.SeedSequence]:
    """Sub-seeds for each parallel stream; a fixed function of ``(seed, streams)``."""
    return np.random.SeedSequence(int(seed)).spawn(int(streams))


def _stream_counts(m_max: int, streams: int) -> list[int]:
    base, extra = divmod(m_max, streams)
    return [base + (1 if s < extra else 0) for s in range(streams)]


def _run_stream(args) -> tuple[list[Cascade], int]:
    matrix, seq, count = args
    prop = matrix if isinstance(matrix, Propagator) else Propagator(matrix)
    init_seq, prop_seq = seq.spawn(2)
    rng_init = np.random.default_rng(init_seq)
    rng_prop = np.random.default_rng(prop_seq)
    # empty generation-0 draws preceding each nonempty one
    discarded = int((rng_init.geometric(prop.p_nonempty, size=count) - 1).sum()) if count else 0
    out = [prop.propagate(prop.initial_nonempty(rng_init), rng_prop) for _ in range(count)]
    return out, discarded


@dataclass(frozen=True)
class SimulationRun:
    cascades: CascadeSet
    discarded: int
    config: SimConfig


def run_simulation(matrix: InteractionMatrix, cfg: SimConfig) -> SimulationRun:
    """Simulate ``cfg.m_max`` cascades with nonempty generation 0.

    Empty generation-0 draws are not counted toward ``m_max``; how many were
    skipped is reported as ``discarded``.  With ``cfg.tau_given_nonempty`` the
    tau vector is first converted by :func:`unconditional_tau`.  Output depends only on
    ``(matrix, seed, streams)``, not on ``workers``.
    """
    if cfg.tau_given_nonempty:
        matrix = InteractionMatrix(B=matrix.B, tau=unconditional_tau(matrix.tau), M_u=matrix.M_u)
    prop = Propagator(matrix)
    if prop.p_nonempty <= 0.0:
        raise ValueError("cannot produce nonempty cascades: tau is zero everywhere")
    jobs = [(prop, seq, count) for seq, count in zip(stream_seeds(cfg.seed, cfg.streams), _stream_counts(cfg.m_max, cfg.streams))]
    if cfg.workers > 1 and cfg.streams > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.streams)) as pool:
            results = list(pool.map(_run_stream, jobs))
    else:
        results = [_run_stream(job) for job in jobs]
    cascades: list[Cascade] = []
    discarded = 0
    for chunk, skipped in results:
        cascades.extend(chunk)
        discarded += skipped
    return SimulationRun(CascadeSet(matrix.n, tuple(cascades)), discarded, cfg)


def simulate(matrix: InteractionMatrix, cfg: SimConfig) -> CascadeSet:
    return run_simulation(matrix, cfg).cascades


@dataclass(frozen=True)
class MitigationPlan:
    """Links of ``B`` to weaken; each chosen ``b_ij`` becomes ``(1 - weaken) * b_ij``."""

    links: tuple[tuple[int, int], ...]
    weaken: float = 0.9

    def __post_init__(self) -> None:
        if not 0.0 <= self.weaken <= 1.0:
            raise ValueError("weaken factor must lie in [0, 1]")
        object.__setattr__(self, "links", tuple(sorted({(int(i), int(j)) for i, j in self.links})))

    @property
    def retain(self) -> float:
        return 1.0 - self.weaken

    def to_json(self) -> dict:
        return {"links": [list(link) for link in self.links], "weaken": self.weaken}

    @classmethod
    def from_json(cls, doc: dict) -> "MitigationPlan":
        if "links" not in doc:
            raise ValueError("mitigation plan needs a 'links' list")
        return cls(tuple(tuple(link) for link in doc["links"]), float(doc.get("weaken", 0.9)))


def apply_mitigation(matrix: InteractionMatrix, plan: MitigationPlan) -> InteractionMatrix:
    """Copy of ``matrix`` with the plan's links weakened; ``tau`` untouched."""
    B = sp.csr_matrix(matrix.B, copy=True)
    B.sort_indices()
    for i, j in plan.links:
        row = slice(B.indptr[i], B.indptr[i + 1])
        pos = np.flatnonzero(B.indices[row] == j)
        if pos.size == 0 or B.data[row][pos[0]] == 0:
            raise KeyError(f"link {i}->{j} is not in B")
        B.data[B.indptr[i] + pos[0]] *= plan.retain
    B.eliminate_zeros()
    return InteractionMatrix(B=B, tau=matrix.tau.copy(), M_u=matrix.M_u)


def random_plan(net: InteractionNetwork, k: int, rng: np.random.Generator, weaken: float = 0.9) -> MitigationPlan:
    """``k`` links drawn uniformly without replacement."""
    if not 0 <= k <= net.n_links:
        raise ValueError(f"k={k} outside [0, {net.n_links}]")
    chosen = rng.choice(net.n_links, size=k, replace=False) if k else []
    return MitigationPlan(tuple(net.links[c][:2] for c in chosen), weaken)


def plan_weight(net: InteractionNetwork, plan: MitigationPlan | Iterable[tuple[int, int]]) -> float:
    """Summed weight of the links a plan weakens."""
    links = plan.links if isinstance(plan, MitigationPlan) else plan
    if net.weights is None:
        raise ValueError("network has no weights")
    return float(sum(net.weights[net.link_position(link)] for link in links))
