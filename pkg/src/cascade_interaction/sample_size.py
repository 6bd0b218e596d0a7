"""How many original cascades are needed.

``link_count_curve``/``find_M_min`` look for the cascade count beyond which the
number of identified links saturates; ``find_Mu_min`` looks for the smallest
prefix whose network propagation capacity matches the data within a relative
tolerance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cascades import CascadeSet, take_prefix
from .network import all_link_indices, build_network, propagation_capacity_network
from .quantify import quantify

__all__ = [
    "LinkCountCurve",
    "MuSearchTrace",
    "MismatchPoint",
    "SampleSizeError",
    "propagation_capacity_original",
    "link_count_curve",
    "default_grid",
    "find_M_min",
    "mismatch",
    "find_Mu_min",
]

log = logging.getLogger(__name__)


class SampleSizeError(RuntimeError):
    pass


def propagation_capacity_original(cs: CascadeSet, M_u: int | None = None) -> float:
    """Mean number of non-initial failures per cascade over the first ``M_u`` cascades."""
    M_u = cs.M if M_u is None else M_u
    if not 1 <= M_u <= cs.M:
        raise ValueError(f"M_u={M_u} outside [1, {cs.M}]")
    caused = sum(c.total - c.initial for c in cs.cascades[:M_u])
    return caused / M_u


def _tail_sigmas(counts: np.ndarray) -> np.ndarray:
    # tails shorter than 3 points are left undefined
    return np.array([np.std(counts[i:], ddof=1) for i in range(len(counts) - 2)])


@dataclass(frozen=True)
class LinkCountCurve:
    grid: tuple[int, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.counts):
            raise ValueError("grid and counts differ in length")
        if any(b < a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be non-decreasing")

    @property
    def sigmas(self) -> np.ndarray:
        return _tail_sigmas(np.asarray(self.counts, dtype=float))

    def rows(self) -> list[tuple[int, int, float | None]]:
        sig = self.sigmas
        return [(m, c, float(sig[k]) if k < sig.size else None) for k, (m, c) in enumerate(zip(self.grid, self.counts))]


def default_grid(M: int, start: int = 100, linear_points: int = 10) -> list[int]:
    """Doubling from ``start`` up to ``M / 2`` then ``linear_points`` even steps to ``M``."""
    if M < 1:
        raise ValueError("M must be positive")
    grid = []
    m = min(start, M)
    while m < M / 2:
        grid.append(m)
        m *= 2
    lo = grid[-1] if grid else 0
    step = (M - lo) / linear_points
    grid.extend(int(round(lo + step * k)) for k in range(1, linear_points + 1))
    return sorted(set(g for g in grid if g >= 1))


def link_count_curve(cs: CascadeSet, grid: Sequence[int] | None = None) -> LinkCountCurve:
    """Number of links identified from each prefix in ``grid``."""
    grid = tuple(int(g) for g in (grid if grid is not None else default_grid(cs.M)))
    counts = tuple(quantify(take_prefix(cs, m)).matrix.n_links for m in grid)
    return LinkCountCurve(grid, counts)


def find_M_min(curve: LinkCountCurve, theta: float = 0.01) -> int:
    """First grid point whose tail standard deviation is at most
    ``theta * final link count`` and does not rise over the next two points."""
    sig = curve.sigmas
    if sig.size < 1:
        raise SampleSizeError("need at least 3 grid points")
    limit = theta * curve.counts[-1]
    for k in range(sig.size):
        if sig[k] > limit:
            continue
        following = sig[k:k + 3]
        if np.all(np.diff(following) <= 0):
            return curve.grid[k]
    raise SampleSizeError("curve not saturated; extend grid")


@dataclass(frozen=True)
class MismatchPoint:
    M_u: int
    pc_original: float
    pc_network: float
    r_id: float | None
    satisfied: bool

    @property
    def delta(self) -> float:
        return self.pc_network - self.pc_original


def mismatch(cs: CascadeSet, M_u: int, eps_pc: float = 0.01) -> MismatchPoint:
    """Compare the data's propagation capacity with the network's on a prefix."""
    prefix = take_prefix(cs, M_u)
    q = quantify(prefix)
    net = all_link_indices(build_network(q.matrix), q.counts, mode="gen0")
    pc_g = propagation_capacity_network(net.weights, M_u)
    pc_o = propagation_capacity_original(prefix)
    ok = abs(pc_g - pc_o) <= eps_pc * pc_o
    return MismatchPoint(M_u, pc_o, pc_g, q.r_id, bool(ok))


@dataclass
class MuSearchTrace:
    eps_pc: float
    dM1: int
    dM2: int
    M_u0: int
    visited: list[MismatchPoint] = field(default_factory=list)
    result: int | None = None
    n_ascents: int = 0
    n_descents: int = 0
    hit_floor: bool = False

    @property
    def M_un(self) -> int:
        """Cascades generated beyond the result: accepted descent steps times ``dM2``."""
        return self.n_descents * self.dM2


def find_Mu_min(
    source: CascadeSet | Callable[[int], MismatchPoint],
    eps_pc: float = 0.01,
    dM1: int = 1000,
    dM2: int = 100,
    M_u0: int = 100,
    M_available: int | None = None,
) -> MuSearchTrace:
    """Ascend by ``dM1`` until the mismatch condition holds, then descend by
    ``dM2`` while it still holds; return the last satisfying value.

    ``source`` is either the original cascades (prefixes are quantified on
    demand) or any callable mapping ``M_u`` to a :class:`MismatchPoint`.
    """
    if not 0 < dM2 <= dM1:
        raise ValueError("need 0 < dM2 <= dM1")
    if M_u0 < 1:
        raise ValueError("M_u0 must be positive")
    if isinstance(source, CascadeSet):
        cs = source
        evaluate = lambda m: mismatch(cs, m, eps_pc)  # noqa: E731
        M_available = cs.M if M_available is None else min(M_available, cs.M)
    else:
        evaluate = source
    trace = MuSearchTrace(eps_pc, dM1, dM2, M_u0)

    def visit(m: int) -> MismatchPoint:
        point = evaluate(m)
        trace.visited.append(point)
        return point

    m = M_u0
    while True:
        if M_available is not None and m > M_available:
            raise SampleSizeError(f"condition not satisfied with up to {M_available} cascades")
        if visit(m).satisfied:
            break
        m += dM1
        trace.n_ascents += 1
    best = m
    while best - dM2 >= 1:
        if not visit(best - dM2).satisfied:
            break
        best -= dM2
        trace.n_descents += 1
    else:
        trace.hit_floor = True
        log.warning("descent reached the smallest admissible M_u=%d while still satisfied", best)
    trace.result = best
    return trace
