"""Multi-run experiments built from the core modules: round-trip validation,
mitigation comparison and the efficiency ratio."""

from __future__ import annotations

import numpy as np

from .cascades import CascadeSet
from .network import DEFAULT_EPSILON, InteractionNetwork, all_link_indices, build_network, key_links
from .quantify import Quantification, InteractionMatrix
from .simulate import MitigationPlan, SimConfig, apply_mitigation, plan_weight, random_plan, simulate
from .stats import estimate_lambda, outage_distribution

__all__ = [
    "derive_seed",
    "repeat_lambda",
    "key_link_plan",
    "mitigation_comparison",
    "efficiency_ratio",
    "mean_distribution",
]


def derive_seed(seed: int, *path: int) -> int:
    """Child seed for ``path`` under ``seed``; stable across runs and platforms."""
    return int(np.random.SeedSequence([int(seed), *map(int, path)]).generate_state(1, np.uint64)[0])


def repeat_lambda(
    matrix: InteractionMatrix,
    count: int,
    reps: int,
    seed: int,
    streams: int = 1,
    workers: int = 1,
    tau_given_nonempty: bool = True,
) -> tuple[list[float], list[CascadeSet]]:
    """Simulate ``reps`` independent sets of ``count`` cascades and estimate each one's offspring mean.

    ``tau_given_nonempty`` defaults to True because matrices here come from
    quantified cascades.
    """
    lams, sets = [], []
    for r in range(reps):
        cs = simulate(matrix, SimConfig(count, derive_seed(seed, r), streams, workers, tau_given_nonempty))
        lams.append(estimate_lambda(cs))
        sets.append(cs)
    return lams, sets


def mean_distribution(sets: list[CascadeSet]) -> list[dict]:
    """Average total-outage distribution over repeated runs with its spread."""
    dists = [outage_distribution(cs) for cs in sets]
    totals = sorted(set().union(*(d.counts for d in dists)))
    rows = []
    for k in totals:
        ps = np.array([d.prob(k) for d in dists])
        rows.append({"total": k, "mean": float(ps.mean()), "std": float(ps.std(ddof=1)) if ps.size > 1 else 0.0})
    return rows


def key_link_plan(net: InteractionNetwork, epsilon: float = DEFAULT_EPSILON, weaken: float = 0.9) -> MitigationPlan:
    keys = key_links(net.weights, epsilon)
    return MitigationPlan(tuple(net.links[k][:2] for k in keys), weaken)


def _summary(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0, "values": [float(v) for v in arr]}


def mitigation_comparison(
    q: Quantification,
    count: int,
    reps: int = 20,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    weaken: float = 0.9,
    n_random: int | None = None,
    streams: int = 1,
    workers: int = 1,
    keep_sets: bool = False,
) -> dict:
    """Intentional (key-link) vs random weakening of the same number of links.

    The intentional plan is fixed and only the simulation seed changes between
    repetitions; each random repetition draws a fresh plan.
    """
    net = all_link_indices(build_network(q.matrix), q.counts, mode="total")
    plan = key_link_plan(net, epsilon, weaken)
    k = len(plan.links) if n_random is None else n_random

    base_l, base_sets = repeat_lambda(q.matrix, count, reps, derive_seed(seed, 0), streams, workers)
    inten = apply_mitigation(q.matrix, plan)
    int_l, int_sets = repeat_lambda(inten, count, reps, derive_seed(seed, 1), streams, workers)
    rand_l, rand_w, rand_sets = [], [], []
    for r in range(reps):
        rng = np.random.default_rng(derive_seed(seed, 2, r))
        rplan = random_plan(net, k, rng, weaken)
        rand_w.append(plan_weight(net, rplan))
        cs = simulate(apply_mitigation(q.matrix, rplan), SimConfig(count, derive_seed(seed, 3, r), streams, workers, tau_given_nonempty=True))
        rand_l.append(estimate_lambda(cs))
        rand_sets.append(cs)

    int_weight = plan_weight(net, plan)
    report = {
        "epsilon": epsilon,
        "weaken": weaken,
        "count": count,
        "reps": reps,
        "n_links": net.n_links,
        "n_weakened": len(plan.links),
        "key_links": [list(link) for link in plan.links],
        "baseline": {"lambda": _summary(base_l), "distribution": mean_distribution(base_sets)},
        "intentional": {
            "lambda": _summary(int_l),
            "weakened_weight": {"mean": int_weight, "std": 0.0},
            "distribution": mean_distribution(int_sets),
        },
        "random": {
            "lambda": _summary(rand_l),
            "weakened_weight": _summary(rand_w),
            "distribution": mean_distribution(rand_sets),
        },
    }
    if keep_sets:
        report["_sets"] = {"baseline": base_sets, "intentional": int_sets, "random": rand_sets}
    return report


def efficiency_ratio(N: int, M: int, M_u: int, t1: float, T: float, t2: float) -> float:
    """Time to draw ``N`` sets of ``M`` cascades with the detailed model over the
    time to draw ``M_u`` originals, quantify them and simulate the same sets."""
    return N * M * t1 / (M_u * t1 + T + N * M * t2)
