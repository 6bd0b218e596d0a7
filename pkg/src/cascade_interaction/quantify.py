"""Quantify interactions between component failures.

Counts consecutive-generation co-failures (``A``), attributes each non-initial
failure to its most probable causes (``A_prime``), and turns the attributed
counts into the empirical interaction matrix ``B`` and the initial-outage
probabilities ``tau``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from .cascades import CascadeSet

__all__ = [
    "InteractionCounts",
    "InteractionMatrix",
    "Quantification",
    "count_pairwise",
    "attribute_causes",
    "build_interaction_matrix",
    "cause_indistinguishable_ratio",
    "quantify",
    "unconditional_tau",
]


def _to_csr(counter: dict[tuple[int, int], int | float], n: int, dtype) -> sp.csr_matrix:
    if counter:
        keys = sorted(counter)
        rows = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
        cols = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
        vals = np.fromiter((counter[k] for k in keys), dtype=dtype, count=len(keys))
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=dtype)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=dtype)
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


@dataclass(frozen=True)
class InteractionCounts:
    A: sp.csr_matrix
    A_prime: sp.csr_matrix
    N: np.ndarray
    N0: np.ndarray
    f0: np.ndarray
    M_u: int

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class InteractionMatrix:
    B: sp.csr_matrix
    tau: np.ndarray
    M_u: int

    def __post_init__(self) -> None:
        n = self.B.shape[0]
        if self.B.shape != (n, n) or self.tau.shape != (n,):
            raise ValueError("B must be n x n and tau length n")
        data = self.B.data
        if data.size and (data.min() < 0 or data.max() > 1):
            raise ValueError("interaction probabilities must lie in [0, 1]")
        if self.B.diagonal().any():
            raise ValueError("B must have a zero diagonal")
        if self.tau.size and (self.tau.min() < 0 or self.tau.max() > 1):
            raise ValueError("tau must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def n_links(self) -> int:
        return int(self.B.count_nonzero())

    @property
    def sparsity(self) -> float:
        """card(L) / n**2."""
        return self.n_links / self.n**2

    def links(self) -> list[tuple[int, int, float]]:
        coo = self.B.tocoo()
        out = [(int(i), int(j), float(b)) for i, j, b in zip(coo.row, coo.col, coo.data) if b != 0]
        out.sort()
        return out


def count_pairwise(cs: CascadeSet) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(A, N, N0, f0)``.

    ``A[i, j]`` counts how often ``i`` failed in the generation right before
    the failure of ``j``.
    """
    n = cs.n_components
    counts: Counter[tuple[int, int]] = Counter()
    N = np.zeros(n, dtype=np.int64)
    N0 = np.zeros(n, dtype=np.int64)
    for cascade in cs:
        gens = cascade.generations
        for c in gens[0]:
            N0[c] += 1
        for g, members in enumerate(gens):
            for c in members:
                N[c] += 1
            if g + 1 < len(gens):
                nxt = gens[g + 1]
                counts.update((i, j) for i in members for j in nxt)
    # a component fails at most once per cascade, so f0 == N0
    f0 = N0.copy()
    return _to_csr(counts, n, np.int64), N, N0, f0


def attribute_causes(cs: CascadeSet, A: sp.csr_matrix) -> sp.csr_matrix:
    """Credit every failure in generation ``k+1`` to the generation-``k``
    members with the largest ``A`` entry; tied causes each get full credit.

    ``A`` is read-only here so the attribution does not depend on cascade order.
    """
    n = cs.n_components
    coo = A.tocoo()
    lookup = dict(zip(zip(coo.row.tolist(), coo.col.tolist()), coo.data.tolist()))
    credits: Counter[tuple[int, int]] = Counter()
    for cascade in cs:
        gens = cascade.generations
        for k in range(len(gens) - 1):
            causes = gens[k]
            for j in gens[k + 1]:
                vals = [lookup.get((i, j), 0) for i in causes]
                best = max(vals)
                credits.update((i, j) for i, v in zip(causes, vals) if v == best)
    return _to_csr(credits, n, np.int64)


def build_interaction_matrix(counts: InteractionCounts) -> InteractionMatrix:
    """``b_ij = A'_ij / N_i`` (zero rows where ``N_i == 0``), ``tau_i = f0_i / M_u``."""
    Ap = counts.A_prime.tocoo()
    denom = counts.N[Ap.row].astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(denom > 0, Ap.data / np.where(denom > 0, denom, 1.0), 0.0)
    B = sp.csr_matrix((vals, (Ap.row, Ap.col)), shape=Ap.shape, dtype=float)
    B.eliminate_zeros()
    B.sort_indices()
    tau = counts.f0 / float(counts.M_u)
    return InteractionMatrix(B=B, tau=tau, M_u=counts.M_u)


def cause_indistinguishable_ratio(A: sp.csr_matrix) -> float:
    """Fraction of caused components whose nonzero causes all share one count."""
    csc = A.tocsc()
    csc.eliminate_zeros()
    caused = 0
    indistinguishable = 0
    for j in range(csc.shape[1]):
        col = csc.data[csc.indptr[j]:csc.indptr[j + 1]]
        if col.size == 0:
            continue
        caused += 1
        if col.size > 1 and col.max() == col.min():
            indistinguishable += 1
    if caused == 0:
        raise ValueError("no caused components")
    return indistinguishable / caused


@dataclass(frozen=True)
class Quantification:
    counts: InteractionCounts
    matrix: InteractionMatrix
    r_id: float | None


def quantify(cs: CascadeSet) -> Quantification:
    A, N, N0, f0 = count_pairwise(cs)
    A_prime = attribute_causes(cs, A)
    counts = InteractionCounts(A=A, A_prime=A_prime, N=N, N0=N0, f0=f0, M_u=cs.M)
    matrix = build_interaction_matrix(counts)
    r_id = cause_indistinguishable_ratio(A) if A.nnz else None
    return Quantification(counts=counts, matrix=matrix, r_id=r_id)


def unconditional_tau(tau_given_nonempty: np.ndarray) -> np.ndarray:
    """Per-draw Bernoulli rates whose inclusion frequencies among nonempty
    draws equal ``tau_given_nonempty``.

    ``f0 / M_u`` is measured on cascades with at least one initial failure, so
    it estimates ``tau_i / p`` with ``p = 1 - prod(1 - tau)``.  Solves
    ``p = 1 - prod(1 - q_i p)`` for ``p`` and returns ``q * p``.  When every
    nonempty cascade has exactly one initial failure the root tends to zero;
    a tiny ``p`` is used, which keeps the single-failure law.
    """
    q = np.asarray(tau_given_nonempty, dtype=float)
    if q.size == 0 or q.sum() == 0:
        return q.copy()
    if q.max() >= 1.0:
        return q.copy()

    def excess(p: float) -> float:
        return -np.expm1(np.sum(np.log1p(-q * p))) - p

    lo = 1e-12
    if excess(lo) <= 0:
        return q * lo
    return q * brentq(excess, lo, 1.0, xtol=1e-15, rtol=1e-13)
