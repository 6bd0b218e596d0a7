"""Validation statistics for original vs simulated cascades."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cascades import CascadeSet

__all__ = [
    "OutageDistribution",
    "SimilarityReport",
    "outage_distribution",
    "initial_distribution",
    "estimate_lambda",
    "normalize_weights",
    "similarity",
    "ccdf_table",
    "compare_distributions",
]

LOG_BIN_START = 32


@dataclass(frozen=True)
class OutageDistribution:
    counts: dict[int, int]
    M: int

    @property
    def probabilities(self) -> dict[int, float]:
        return {k: v / self.M for k, v in sorted(self.counts.items())}

    def prob(self, total: int) -> float:
        return self.counts.get(total, 0) / self.M

    def std_error(self, total: int) -> float:
        p = self.prob(total)
        return math.sqrt(p * (1.0 - p) / self.M)

    def mean(self) -> float:
        return sum(k * v for k, v in self.counts.items()) / self.M

    def samples(self) -> np.ndarray:
        return np.repeat(np.array(sorted(self.counts), dtype=float), [self.counts[k] for k in sorted(self.counts)])


def outage_distribution(cs: CascadeSet) -> OutageDistribution:
    """Distribution of total outages per cascade."""
    return OutageDistribution(dict(Counter(c.total for c in cs)), cs.M)


def initial_distribution(cs: CascadeSet) -> OutageDistribution:
    """Distribution of generation-0 outages per cascade."""
    return OutageDistribution(dict(Counter(c.initial for c in cs)), cs.M)


def estimate_lambda(cs: CascadeSet) -> float:
    """Offspring-mean estimate: failures in generations >= 1 over all failures.

    Every cascade is observed until it dies out, so each failure is a parent
    whose children are all recorded; this is the maximum-likelihood estimate
    for a Galton-Watson process observed to extinction.
    """
    total = 0
    initial = 0
    for c in cs:
        total += c.total
        initial += c.initial
    if total == 0:
        raise ValueError("zero total failures")
    return (total - initial) / total


def normalize_weights(weights, M_from: int, M_to: int):
    """Rescale link weights obtained from ``M_from`` cascades to ``M_to`` cascades."""
    if M_from <= 0 or M_to <= 0:
        raise ValueError("cascade counts must be positive")
    scale = M_to / M_from
    if isinstance(weights, Mapping):
        return {k: v * scale for k, v in weights.items()}
    return np.asarray(weights, dtype=float) * scale


@dataclass(frozen=True)
class SimilarityReport:
    S1: float | None
    S2: float | None
    S3: float | None
    S4: float | None
    S5: float | None
    n_shared: int
    n_original_only: int
    n_simulated_only: int

    def as_dict(self) -> dict:
        return {
            "S1": self.S1,
            "S2": self.S2,
            "S3": self.S3,
            "S4": self.S4,
            "S5": self.S5,
            "card_L1": self.n_shared,
            "card_L2": self.n_original_only,
            "card_L3": self.n_simulated_only,
        }


def _ratio(num: float, den: float) -> float | None:
    return num / den if den != 0 else None


def similarity(w_ori: Mapping, w_sim: Mapping) -> SimilarityReport:
    """Five similarity indices between two link-weight maps.

    Both maps must already be normalized to a common cascade count.  Links are
    split into shared (L1), original-only (L2) and simulated-only (L3); indices
    whose denominator vanishes are ``None``.
    """
    ori = {k: float(v) for k, v in w_ori.items()}
    sim = {k: float(v) for k, v in w_sim.items()}
    shared = sorted(set(ori) & set(sim))
    only_ori = set(ori) - set(sim)
    only_sim = set(sim) - set(ori)

    ori_all = math.fsum(ori.values())
    sim_all = math.fsum(sim.values())
    ori_shared = math.fsum(ori[k] for k in shared)
    sim_shared = math.fsum(sim[k] for k in shared)

    S5 = None
    pair_total = ori_shared + sim_shared
    if shared and pair_total != 0 and all(ori[k] != 0 for k in shared):
        S5 = math.fsum((sim[k] + ori[k]) / pair_total * (sim[k] / ori[k]) for k in shared)
    return SimilarityReport(
        S1=_ratio(sim_all, ori_all),
        S2=_ratio(ori_shared, ori_all),
        S3=_ratio(sim_shared, sim_all),
        S4=_ratio(sim_shared, ori_shared) if shared else None,
        S5=S5,
        n_shared=len(shared),
        n_original_only=len(only_ori),
        n_simulated_only=len(only_sim),
    )


def ccdf_table(values: Sequence[float] | np.ndarray, n_zero: int = 0, log_from: float = LOG_BIN_START) -> list[tuple[float, float]]:
    """Complementary cumulative distribution ``(x, P(X >= x))``.

    Values below ``log_from`` get one row per distinct value.  Larger values are
    grouped in power-of-two bins ``[2^k, 2^(k+1))``; each bin is reported at the
    mean of its members with the probability of reaching the bin's lower edge.
    ``n_zero`` adds that many implicit zeros (e.g. absent links).
    """
    x = np.sort(np.asarray(values, dtype=float))
    total = x.size + n_zero
    if total == 0:
        return []
    if n_zero:
        x = np.concatenate((np.zeros(n_zero), x))
    rows: list[tuple[float, float]] = []
    small = x[x < log_from]
    for v in np.unique(small):
        rows.append((float(v), float(np.count_nonzero(x >= v)) / total))
    big = x[x >= log_from]
    if big.size:
        lo = float(log_from)
        while lo <= big[-1]:
            hi = lo * 2
            members = big[(big >= lo) & (big < hi)]
            if members.size:
                rows.append((float(members.mean()), float(np.count_nonzero(x >= lo)) / total))
            lo = hi
    return rows


def compare_distributions(
    ori: OutageDistribution, sim: OutageDistribution, min_prob: float = 1e-3, n_se: float = 3.0
) -> list[dict]:
    """Bin-by-bin comparison of two outage distributions.

    A bin is checked when either side has probability ``>= min_prob``; it agrees
    when the difference is within ``n_se`` two-sample binomial standard errors.
    """
    rows = []
    for k in sorted(set(ori.counts) | set(sim.counts)):
        p_o, p_s = ori.prob(k), sim.prob(k)
        if max(p_o, p_s) < min_prob:
            continue
        se = math.sqrt(p_o * (1 - p_o) / ori.M + p_s * (1 - p_s) / sim.M)
        diff = p_s - p_o
        rows.append({
            "total": k,
            "p_original": p_o,
            "p_simulated": p_s,
            "std_error": se,
            "z": diff / se if se > 0 else 0.0,
            "agrees": abs(diff) <= n_se * se,
        })
    return rows
