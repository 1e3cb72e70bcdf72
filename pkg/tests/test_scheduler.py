import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_hub_scores
from xfersim.algorithms import make_program
from xfersim.cost import CostModelConfig, PartitionActivity
from xfersim.graph import compute_degree_stats, from_edges
from xfersim.partition import hub_scores, hub_sort, partition_chunked
from xfersim.planner import Engine, build_plan
from xfersim.rmat import rmat_generate
from xfersim.runner import run_algorithm
from xfersim.scheduler import ConfigError, PriorityPolicy, prioritize, recompute_pass

CFG = CostModelConfig()
F = Engine.FILTER


def line_graph(n):
    return from_edges(range(n - 1), range(1, n), n, weights=[1] * (n - 1))


def filter_plan(g, table, active, k=1):
    counts = np.add.reduceat(active.astype(int), table.starts)
    acts = [PartitionActivity(i, int(c), int(c), int(c), int(e))
            for i, (c, e) in enumerate(zip(counts, table.edge_counts))]
    return build_plan([F if c else None for c in counts], acts, CFG.replace(k=k))


def test_policy_validation():
    with pytest.raises(ConfigError):
        PriorityPolicy("fastest")
    with pytest.raises(ConfigError):
        PriorityPolicy(recompute_rounds=2)
    g = line_graph(3)
    with pytest.raises(ConfigError):
        PriorityPolicy("delta").check(make_program("sssp", g))
    PriorityPolicy("hub").check(make_program("sssp", g))


def test_delta_priority_on_sssp_rejected_by_runner():
    with pytest.raises(ConfigError):
        run_algorithm(line_graph(4), "sssp", policy=PriorityPolicy("delta"), partition_bytes=8)


def test_none_keeps_order():
    g = line_graph(6)
    table = partition_chunked(g, 4)
    active = np.ones(6, bool)
    plan = filter_plan(g, table, active)
    before = [u.partitions for u in plan.units()]
    prioritize(plan, table, active, PriorityPolicy(), make_program("bfs", g))
    assert [u.partitions for u in plan.units()] == before


def test_delta_sums_order_units():
    g = from_edges([0, 1], [1, 0], 2)
    table = partition_chunked(g, 4)
    prog = make_program("pr", g)
    prog.delta[:] = [5.0, 9.0]
    active = np.ones(2, bool)
    plan = filter_plan(g, table, active)
    prioritize(plan, table, active, PriorityPolicy("delta"), prog)
    assert [u.partitions for u in plan.filter_tasks] == [[1], [0]]
    assert [u.score for u in plan.filter_tasks] == [9.0, 5.0]


def test_delta_max_aggregate():
    g = from_edges([0, 1, 2, 3], [1, 0, 3, 2], 4)
    table = partition_chunked(g, 8)
    prog = make_program("pr", g)
    prog.delta[:] = [4.0, 4.0, 6.0, 0.5]
    active = np.ones(4, bool)
    plan = filter_plan(g, table, active)
    prioritize(plan, table, active, PriorityPolicy("delta"), prog)
    assert plan.filter_tasks[0].partitions == [0]
    plan = filter_plan(g, table, active)
    prioritize(plan, table, active, PriorityPolicy("delta", delta_agg="max"), prog)
    assert plan.filter_tasks[0].partitions == [1]


def test_hub_block_units_score_highest():
    src, dst = rmat_generate(1024, 8192, seed=11)
    g, _ = hub_sort(from_edges(src, dst, 1024))
    table = partition_chunked(g, 2048)
    active = np.ones(1024, bool)
    plan = filter_plan(g, table, active)
    hub = np.array(brute_hub_scores(g))
    np.testing.assert_allclose(hub, hub_scores(compute_degree_stats(g)))
    prioritize(plan, table, active, PriorityPolicy("hub"), make_program("bfs", g), hub)
    assert plan.filter_tasks[0].partitions[0] == 0
    scores = [u.score for u in plan.filter_tasks]
    assert scores == sorted(scores, reverse=True)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=30), st.integers(1, 4))
def test_prioritize_is_permutation_with_stable_ties(deltas, k):
    n = len(deltas)
    g = from_edges(range(n), [(v + 1) % n for v in range(n)], n)
    table = partition_chunked(g, 4)
    prog = make_program("pr", g)
    prog.delta[:] = deltas
    active = np.ones(n, bool)
    plan = filter_plan(g, table, active, k=k)
    original = [tuple(u.partitions) for u in plan.filter_tasks]
    prioritize(plan, table, active, PriorityPolicy("delta"), prog)
    got = [tuple(u.partitions) for u in plan.filter_tasks]
    assert sorted(got) == sorted(original)
    keys = [(-sum(deltas[i] for i in u), original.index(u)) for u in got]
    assert keys == sorted(keys)


def test_recompute_two_hops_on_chain():
    g = line_graph(3)
    table = partition_chunked(g, 1 << 20)
    active = np.array([True, False, False])
    prog = make_program("sssp", g)
    prog.begin_iteration(active, synchronous=False)
    unit = filter_plan(g, table, active).filter_tasks[0]
    before = [prog.watch(0, 3)]
    prog.push(np.array([0]), g.neighbors[:1], g.weights[:1])
    assert prog.result().tolist() == [0, 1, np.inf]
    assert recompute_pass(g, table, unit, prog, before) == 1
    assert prog.result().tolist() == [0, 1, 2]


def test_recompute_noop_without_updates():
    g = line_graph(3)
    table = partition_chunked(g, 1 << 20)
    prog = make_program("sssp", g)
    unit = filter_plan(g, table, np.array([True, False, False])).filter_tasks[0]
    before = [prog.watch(0, 3)]
    snapshot = prog.result().copy()
    assert recompute_pass(g, table, unit, prog, before) == 0
    np.testing.assert_array_equal(prog.result(), snapshot)


def test_recompute_shrinks_delta_on_cycle():
    g = from_edges([0, 1, 2, 3], [1, 2, 3, 0], 4)
    table = partition_chunked(g, 1 << 20)
    prog = make_program("pr", g)
    active = prog.initial_frontier()
    prog.begin_iteration(active, synchronous=False)
    prog.push(np.arange(4), g.neighbors, None)
    before_mass = prog.delta.sum()
    unit = filter_plan(g, table, active).filter_tasks[0]
    snap = [np.zeros(4)]
    recompute_pass(g, table, unit, prog, snap)
    assert prog.delta.sum() < before_mass


@pytest.mark.parametrize("mode", ["hub", "delta"])
def test_async_fixed_point_matches_sync(mode):
    src, dst = rmat_generate(512, 4096, seed=2)
    g = from_edges(src, dst, 512)
    # the leftover residual bounds the gap at a few epsilon
    sync = run_algorithm(g, "pr", partition_bytes=1024, epsilon=1e-10)
    asyn = run_algorithm(g, "pr", policy=PriorityPolicy(mode), partition_bytes=1024, epsilon=1e-10)
    np.testing.assert_allclose(asyn.result, sync.result, rtol=1e-9)
    for algo in ("bfs", "cc"):
        if mode == "delta":
            continue
        a = run_algorithm(g, algo, partition_bytes=1024)
        b = run_algorithm(g, algo, policy=PriorityPolicy(mode), partition_bytes=1024)
        np.testing.assert_array_equal(a.result, b.result)
        assert b.iterations <= a.iterations
