"""Synthetic ground truth: original cascades drawn from a known ``(B*, tau*)``.

Stands in for a detailed cascading-failure simulator so the estimator can be
checked against the matrix that actually generated the data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .cascades import CascadeSet
from .quantify import InteractionCounts, InteractionMatrix
from .simulate import SimConfig, run_simulation

__all__ = ["GroundTruthSpec", "GroundTruth", "make_ground_truth", "generate", "recovery_error", "save_ground_truth", "load_ground_truth"]

KINDS = ("chain", "tree", "random-sparse")


@dataclass(frozen=True)
class GroundTruthSpec:
    kind: str = "tree"
    n: int = 20
    b_range: tuple[float, float] = (0.2, 0.8)
    tau_range: tuple[float, float] = (0.01, 0.01)
    density: float = 0.05
    # tree only: attachment weight grows with out-degree ** preferential
    preferential: float = 0.0
    # draw b and tau log-uniformly within their ranges (heavy-tailed link weights)
    log_uniform: bool = False
    seed: int = 0
    max_tries: int = 1000

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "b_range": list(self.b_range),
            "tau_range": list(self.tau_range),
            "density": self.density,
            "preferential": self.preferential,
            "log_uniform": self.log_uniform,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GroundTruthSpec":
        doc = dict(doc)
        for key in ("b_range", "tau_range"):
            if key in doc:
                doc[key] = tuple(float(x) for x in doc[key])
        return cls(**doc)


@dataclass(frozen=True)
class GroundTruth:
    spec: GroundTruthSpec
    matrix: InteractionMatrix

    @property
    def B(self) -> sp.csr_matrix:
        return self.matrix.B

    @property
    def tau(self) -> np.ndarray:
        return self.matrix.tau

    def links(self) -> list[tuple[int, int, float]]:
        return self.matrix.links()


def _uniform(rng: np.random.Generator, lo_hi: tuple[float, float], size: int, log: bool = False) -> np.ndarray:
    lo, hi = lo_hi
    if not 0.0 <= lo <= hi <= 1.0:
        raise ValueError(f"probability range {lo_hi} must satisfy 0 <= lo <= hi <= 1")
    if lo == hi:
        return np.full(size, float(lo))
    if log:
        if lo <= 0:
            raise ValueError("log-uniform ranges need a positive lower bound")
        return np.exp(rng.uniform(np.log(lo), np.log(hi), size))
    return rng.uniform(lo, hi, size)


def _tree_edges(n: int, rng: np.random.Generator, preferential: float) -> list[tuple[int, int]]:
    out_deg = np.zeros(n)
    edges = []
    for child in range(1, n):
        w = (out_deg[:child] + 1.0) ** preferential
        parent = int(rng.choice(child, p=w / w.sum()))
        out_deg[parent] += 1
        edges.append((parent, child))
    return edges


def _sparse_rows(n: int, rng: np.random.Generator, spec: GroundTruthSpec) -> tuple[list[tuple[int, int]], np.ndarray]:
    # rows are independent, so redrawing one row until its sum is below one
    # samples the same law as redrawing the whole matrix
    edges: list[tuple[int, int]] = []
    probs: list[np.ndarray] = []
    others = np.arange(n)
    for i in range(n):
        for _ in range(spec.max_tries):
            mask = rng.random(n) < spec.density
            mask[i] = False
            p = _uniform(rng, spec.b_range, int(mask.sum()), spec.log_uniform)
            if p.sum() < 1.0:
                break
        else:
            raise ValueError(f"could not draw a subcritical row {i} for the random-sparse ground truth")
        edges.extend((i, int(j)) for j in others[mask])
        probs.append(p)
    return edges, np.concatenate(probs) if probs else np.zeros(0)


def make_ground_truth(spec: GroundTruthSpec) -> GroundTruth:
    """Deterministic from ``spec.seed``.

    Chain and tree kinds give every component at most one cause; random-sparse
    rows are redrawn until each row of ``B*`` sums below one.
    """
    if spec.kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if spec.n < 2:
        raise ValueError("need at least 2 components")
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    if spec.kind == "random-sparse":
        edges, probs = _sparse_rows(n, rng, spec)
    else:
        if spec.kind == "chain":
            edges = [(k, k + 1) for k in range(n - 1)]
        else:
            edges = _tree_edges(n, rng, spec.preferential)
        probs = _uniform(rng, spec.b_range, len(edges), spec.log_uniform)
    rows = np.array([e[0] for e in edges], dtype=np.int64)
    cols = np.array([e[1] for e in edges], dtype=np.int64)
    B = sp.csr_matrix((probs, (rows, cols)), shape=(n, n))
    B.sort_indices()
    tau = _uniform(rng, spec.tau_range, n, spec.log_uniform)
    return GroundTruth(spec, InteractionMatrix(B=B, tau=tau, M_u=0))


def generate(gt: GroundTruth, M: int, seed: int, streams: int = 1) -> CascadeSet:
    """``M`` nonempty original cascades from the ground truth."""
    return run_simulation(gt.matrix, SimConfig(m_max=M, seed=seed, streams=streams)).cascades


def recovery_error(B_hat: InteractionMatrix | sp.spmatrix, gt: GroundTruth, counts: InteractionCounts | None = None, min_support: int = 200) -> dict:
    """Compare an estimated ``B`` with the truth.

    Errors use the true links (and any spurious ones) whose source failed at
    least ``min_support`` times; without ``counts`` every link is used.
    Precision/recall compare the nonzero patterns over the same sources.
    """
    Bh = B_hat.B if isinstance(B_hat, InteractionMatrix) else sp.csr_matrix(B_hat)
    Bs = gt.B
    true = {(i, j): b for i, j, b in gt.links()}
    est_coo = sp.coo_matrix(Bh)
    est = {(int(i), int(j)): float(b) for i, j, b in zip(est_coo.row, est_coo.col, est_coo.data) if b != 0}
    if counts is not None:
        supported = {i for i in range(Bs.shape[0]) if counts.N[i] >= min_support}
    else:
        supported = set(range(Bs.shape[0]))
    true_s = {k: v for k, v in true.items() if k[0] in supported}
    est_s = {k: v for k, v in est.items() if k[0] in supported}
    keys = sorted(set(true_s) | set(est_s))
    errs = np.array([abs(est_s.get(k, 0.0) - true_s.get(k, 0.0)) for k in keys])
    hits = len(set(true_s) & set(est_s))
    return {
        "n_links_checked": len(keys),
        "n_supported_sources": len(supported),
        "max_abs_err": float(errs.max()) if errs.size else 0.0,
        "mean_abs_err": float(errs.mean()) if errs.size else 0.0,
        "support_precision": hits / len(est_s) if est_s else 1.0,
        "support_recall": hits / len(true_s) if true_s else 1.0,
    }


def save_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    doc = {
        "spec": gt.spec.to_json(),
        "n": gt.matrix.n,
        "tau": [float(t) for t in gt.tau],
        "links": [[i, j, b] for i, j, b in gt.links()],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_ground_truth(path: str | Path) -> GroundTruth:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    n = int(doc["n"])
    links = doc["links"]
    rows = np.array([l[0] for l in links], dtype=np.int64)
    cols = np.array([l[1] for l in links], dtype=np.int64)
    vals = np.array([l[2] for l in links], dtype=float)
    B = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    B.sort_indices()
    return GroundTruth(GroundTruthSpec.from_json(doc["spec"]), InteractionMatrix(B=B, tau=np.array(doc["tau"], dtype=float), M_u=0))
