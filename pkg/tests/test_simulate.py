import numpy as np
import pytest
import scipy.sparse as sp

from cascade_interaction.network import all_link_indices, build_network, key_links
from cascade_interaction.quantify import InteractionMatrix
from cascade_interaction.simulate import (
    MitigationPlan,
    Propagator,
    SimConfig,
    apply_mitigation,
    plan_weight,
    random_plan,
    run_simulation,
    simulate,
    simulate_cascade,
)
from cascade_interaction.stats import estimate_lambda, initial_distribution, outage_distribution

import oracles
from conftest import counts_with


def _matrix(n, links, tau):
    rows = [i for i, _, _ in links]
    cols = [j for _, j, _ in links]
    vals = [b for _, _, b in links]
    B = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return InteractionMatrix(B=B, tau=np.asarray(tau, dtype=float), M_u=0)


CHAIN3 = _matrix(3, [(0, 1, 0.6), (1, 2, 0.5)], [0.2, 0.1, 0.05])


def test_zero_B_stops_at_generation_zero():
    m = _matrix(5, [], [0.3] * 5)
    cs = simulate(m, SimConfig(2000, seed=1))
    assert all(len(c) == 1 for c in cs)
    assert outage_distribution(cs).counts == initial_distribution(cs).counts


def test_zero_tau_gives_empty_cascade():
    m = _matrix(3, [(0, 1, 0.5)], [0, 0, 0])
    rng = np.random.default_rng(0)
    assert simulate_cascade(m, rng).generations == ()
    with pytest.raises(ValueError, match="tau is zero everywhere"):
        simulate(m, SimConfig(5))


def test_two_component_exact_frequency():
    m = _matrix(2, [(0, 1, 0.5)], [1.0, 0.0])
    cs = simulate(m, SimConfig(100_000, seed=11))
    assert outage_distribution(cs).prob(2) == pytest.approx(0.5, abs=0.01)


def test_chain_matches_exhaustive_enumeration():
    exact = oracles.exact_total_distribution(3, [0.2, 0.1, 0.05], {(0, 1): 0.6, (1, 2): 0.5})
    cs = simulate(CHAIN3, SimConfig(100_000, seed=5))
    dist = outage_distribution(cs)
    for k, p in exact.items():
        se = np.sqrt(p * (1 - p) / cs.M)
        assert abs(dist.prob(k) - p) <= 4 * se + 1e-12


def test_conditional_initial_sampler_is_exact():
    tau = np.array([0.3, 0.0, 0.1, 0.6, 0.05])
    prop = Propagator(_matrix(5, [], tau))
    rng = np.random.default_rng(2)
    draws = [prop.initial_nonempty(rng) for _ in range(60_000)]
    freq = np.zeros(5)
    for d in draws:
        freq[d] += 1
    p_nonempty = 1 - np.prod(1 - tau)
    assert freq / len(draws) == pytest.approx(tau / p_nonempty, abs=0.01)
    assert prop.p_nonempty == pytest.approx(p_nonempty)


def test_same_seed_identical_and_workers_irrelevant():
    a = simulate(CHAIN3, SimConfig(3000, seed=9, streams=3))
    b = simulate(CHAIN3, SimConfig(3000, seed=9, streams=3))
    c = simulate(CHAIN3, SimConfig(3000, seed=9, streams=3, workers=2))
    assert a == b == c
    assert simulate(CHAIN3, SimConfig(3000, seed=10, streams=3)) != a


def test_different_seeds_agree_statistically():
    lams = [estimate_lambda(simulate(CHAIN3, SimConfig(20_000, seed=s))) for s in (1, 2)]
    sds = []
    for s in range(3, 13):
        sds.append(estimate_lambda(simulate(CHAIN3, SimConfig(4000, seed=s))))
    sigma = np.std(sds, ddof=1) * np.sqrt(4000 / 20_000)
    assert abs(lams[0] - lams[1]) <= 3 * np.sqrt(2) * sigma


def test_discards_not_counted():
    m = _matrix(3, [], [0.01, 0.01, 0.01])
    run = run_simulation(m, SimConfig(500, seed=4))
    assert run.cascades.M == 500
    # about (1 - p) / p empty draws per kept cascade
    p = 1 - 0.99 ** 3
    assert run.discarded == pytest.approx(500 * (1 - p) / p, rel=0.15)


def test_mitigation_arithmetic():
    m = _matrix(3, [(0, 1, 0.4), (1, 2, 0.5)], [0.1, 0.1, 0.1])
    assert (apply_mitigation(m, MitigationPlan(())).B != m.B).nnz == 0
    w = apply_mitigation(m, MitigationPlan(((0, 1),), 0.9))
    assert w.B[0, 1] == pytest.approx(0.04)
    assert w.B[1, 2] == 0.5
    gone = apply_mitigation(m, MitigationPlan(((0, 1), (1, 2)), 1.0))
    assert gone.B.nnz == 0
    with pytest.raises(KeyError):
        apply_mitigation(m, MitigationPlan(((2, 0),)))
    with pytest.raises(ValueError):
        MitigationPlan(((0, 1),), 1.5)


def test_plan_json_round_trip():
    plan = MitigationPlan(((3, 1), (0, 2), (3, 1)), 0.8)
    assert plan.links == ((0, 2), (3, 1))
    assert MitigationPlan.from_json(plan.to_json()) == plan


def test_random_plan_sizes():
    net = build_network([(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5)], 3)
    rng = np.random.default_rng(0)
    assert len(random_plan(net, 3, rng).links) == 3
    assert random_plan(net, 0, rng).links == ()
    with pytest.raises(ValueError):
        random_plan(net, 4, rng)


def test_random_plans_carry_less_weight_than_key_links():
    # heavy-tailed weights on a star of 200 links
    n = 201
    net = build_network([(0, k, 0.5) for k in range(1, n)], n)
    weights = 1000.0 * np.arange(1, n, dtype=float) ** -1.5
    net = net.with_weights(weights, "total")
    keys = key_links(weights)
    key_w = plan_weight(net, [net.links[k][:2] for k in keys])
    rng = np.random.default_rng(1)
    rand_w = [plan_weight(net, random_plan(net, len(keys), rng)) for _ in range(20)]
    assert np.mean(rand_w) < 0.25 * key_w


def test_weakening_lowers_expected_size():
    m = _matrix(4, [(0, 1, 0.7), (1, 2, 0.6), (1, 3, 0.5), (2, 3, 0.4)], [0.3, 0.1, 0.1, 0.1])
    weak = apply_mitigation(m, MitigationPlan(((1, 2), (0, 1)), 0.5))
    base = [outage_distribution(simulate(m, SimConfig(5000, seed=s))).mean() for s in range(4)]
    low = [outage_distribution(simulate(weak, SimConfig(5000, seed=s))).mean() for s in range(4)]
    assert np.mean(low) < np.mean(base)
    assert all(lo <= hi + 0.02 for lo, hi in zip(low, base))


def test_no_component_repeats_in_dense_system():
    links = [(i, j, 0.45) for i in range(6) for j in range(6) if i != j]
    m = _matrix(6, links, [0.2] * 6)
    cs = simulate(m, SimConfig(2000, seed=3))
    for c in cs:
        ids = [x for g in c.generations for x in g]
        assert len(ids) == len(set(ids))


def test_index_matches_simulated_downstream_count():
    # tree system: I_l / N_i equals expected failures reached through the link
    probs = [(0, 1, 0.6), (1, 2, 0.5), (1, 3, 0.7)]
    net = all_link_indices(build_network(probs, 4), counts_with(4, N=[1, 0, 0, 0]))
    m = _matrix(4, probs, [1.0, 0, 0, 0])
    cs = simulate(m, SimConfig(50_000, seed=8))
    downstream = np.mean([c.total - 1 for c in cs])
    assert downstream == pytest.approx(net.weights[0], rel=0.02)
