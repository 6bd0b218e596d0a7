from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import strategies as st

from cascade_interaction.cascades import CascadeSet
from cascade_interaction.quantify import InteractionCounts

sys.path.insert(0, str(Path(__file__).parent))

# acceptance lines collected here and printed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)


def counts_with(n: int, N=None, N0=None, M_u: int = 1) -> InteractionCounts:
    """Counts object carrying only the failure totals link indices need."""
    N = np.zeros(n, dtype=np.int64) if N is None else np.asarray(N, dtype=np.int64)
    N0 = N.copy() if N0 is None else np.asarray(N0, dtype=np.int64)
    zero = sp.csr_matrix((n, n), dtype=np.int64)
    return InteractionCounts(A=zero, A_prime=zero, N=N, N0=N0, f0=N0.copy(), M_u=M_u)


@st.composite
def cascade_lists(draw, n: int | None = None, max_cascades: int = 8):
    """``(n, cascades)`` with every cascade satisfying the store invariants."""
    n = draw(st.integers(2, 6)) if n is None else n
    M = draw(st.integers(1, max_cascades))
    out = []
    for _ in range(M):
        perm = draw(st.permutations(range(n)))
        size = draw(st.integers(1, n))
        members = list(perm[:size])
        cuts = sorted(draw(st.sets(st.integers(1, size - 1), max_size=size - 1))) if size > 1 else []
        bounds = [0, *cuts, size]
        out.append([members[a:b] for a, b in zip(bounds, bounds[1:])])
    return n, out


@pytest.fixture
def two_gen() -> CascadeSet:
    # A..E -> 0..4: generation {A,B,C} then {D,E}
    return CascadeSet.from_lists(5, [[[0, 1, 2], [3, 4]]])
