import itertools
import json
import math

import pytest

from conftest import arrow_edges, path_edges, pattern
from elimq.errors import CyclicDag, PolicyDomainMismatch, TooLarge
from elimq.qlearning import Policy
from elimq.scheduling import (
    SCHEDULER_ACTIONS,
    MachineModel,
    RewardWeights,
    ScheduleMetrics,
    Task,
    TaskDag,
    brute_force_optimal,
    check_schedule,
    dag_from_etree,
    list_schedule,
    random_dag,
    reward,
    simulate,
)
from elimq.sparse import Permutation


def unit_dag(n, edges=(), work=1.0):
    return TaskDag([Task(i, work) for i in range(n)], edges)


def naive_optimum(d, m):
    """Oracle: every topological order times every worker mapping, append-only placement."""
    n = len(d)
    best = math.inf
    for order in itertools.permutations(range(n)):
        pos = {t: i for i, t in enumerate(order)}
        if any(pos[u] > pos[v] for u, v in d.edges):
            continue
        for mapping in itertools.product(range(len(m.workers)), repeat=n):
            free = [0.0] * len(m.workers)
            fin = [0.0] * n
            for t in order:
                w = mapping[t]
                s = max([free[w]] + [fin[p] + (m.comm_cost if mapping[p] != w else 0) for p in d.preds[t]])
                fin[t] = free[w] = s + d.tasks[t].work / m.workers[w].speed
            best = min(best, max(fin))
    return best


two = MachineModel.identical(2)


# -- simulate ---------------------------------------------------------------

@pytest.mark.parametrize("action", SCHEDULER_ACTIONS)
def test_chain_makespan(action):
    assert simulate(unit_dag(3, [(0, 1), (1, 2)]), two, action).metrics.makespan == 3


def test_independent_tasks_pack():
    s = simulate(unit_dag(4), two, "TIME")
    assert s.metrics.makespan == 2
    assert s.metrics.balance == 1.0


def test_heterogeneous_speeds():
    d = unit_dag(2, work=2.0)
    m = MachineModel.from_speeds([1, 2])
    assert simulate(d, m, "TIME").metrics.makespan == 2
    assert brute_force_optimal(d, m) == 2 == naive_optimum(d, m)


def test_comm_cost_delays_remote_successor():
    d = TaskDag([Task(0, 1), Task(1, 1), Task(2, 1)], [(0, 2), (1, 2)])
    m = MachineModel.identical(2, comm_cost=5.0)
    s = simulate(d, m, "TIME")
    check_schedule(d, m, s)
    assert s.metrics.makespan == 7 and s.metrics.comm_volume == 1
    assert brute_force_optimal(d, m) == 3 == naive_optimum(d, m)


def test_constant_policy_equals_list_schedule():
    d = random_dag(7, 0.3, seed=4)
    pol = Policy.constant("scheduling", "LOCALITY", SCHEDULER_ACTIONS)
    a, b = simulate(d, two, pol), list_schedule(d, two, "LOCALITY")
    assert a.to_json() == b.to_json()
    with pytest.raises(PolicyDomainMismatch):
        simulate(d, two, Policy.constant("ordering", "MD"))


def test_determinism_and_json():
    d = random_dag(8, 0.3, seed=9)
    m = MachineModel.from_speeds([1.0, 1.5, 2.0])
    a, b = simulate(d, m, "MEM", seed=3), simulate(d, m, "MEM", seed=3)
    assert a.to_json() == b.to_json()
    out = json.loads(a.to_json())
    assert out["seed"] == 3 and sum(len(l["tasks"]) for l in out["timeline"]) == 8


def test_memory_live_until_last_consumer():
    # chain 0->1->2 of memory 1: task 0 is held while task 1 runs
    s = simulate(unit_dag(3, [(0, 1), (1, 2)]), two, "TIME")
    assert s.metrics.peak_memory == 2
    assert simulate(unit_dag(4), two, "TIME").metrics.peak_memory == 2


def test_step_rewards_telescope():
    d = random_dag(7, 0.4, seed=2)
    w = RewardWeights(1.0, 0.5, 0.25, 0.1)
    for act in SCHEDULER_ACTIONS:
        s = simulate(d, two, act, weights=w)
        assert sum(s.rewards) == pytest.approx(reward(s.metrics, w))


# -- brute force / bounds -----------------------------------------------

def test_brute_force_examples():
    assert brute_force_optimal(unit_dag(3, [(0, 1), (1, 2)]), two) == 3
    assert brute_force_optimal(unit_dag(4), two) == 2
    star = unit_dag(4, [(1, 0), (2, 0), (3, 0)])
    assert brute_force_optimal(star, two) == 3 == naive_optimum(star, two)
    with pytest.raises(TooLarge):
        brute_force_optimal(unit_dag(11), two)


@pytest.mark.parametrize("seed", range(25))
def test_brute_force_matches_naive_oracle(seed):
    d = random_dag(2 + seed % 5, 0.35, seed=seed)
    m = two if seed % 3 else MachineModel.from_speeds([1.0, 2.0])
    assert brute_force_optimal(d, m) == pytest.approx(naive_optimum(d, m))


@pytest.mark.parametrize("seed", range(20))
def test_graham_bound_and_lower_bounds(seed):
    d = random_dag(7, 0.3, seed=100 + seed)
    opt = brute_force_optimal(d, two)
    assert opt >= max(d.critical_path(), d.total_work() / 2)
    for act in SCHEDULER_ACTIONS:
        s = list_schedule(d, two, act)
        check_schedule(d, two, s)
        assert opt <= s.metrics.makespan <= 1.5 * opt + 1e-12


# -- reward -----------------------------------------------------------------

def test_reward_examples():
    assert reward(ScheduleMetrics(3, 0, 1, 0), RewardWeights(1, 0, 0, 0)) == -3
    assert reward(ScheduleMetrics(5, 9, 1.0, 4), RewardWeights(0, 0, 1, 0)) == 0
    assert reward(ScheduleMetrics(2, 0, 1, 1), RewardWeights(1, 0, 0, 1)) == -3
    assert RewardWeights.parse("1,0,0,1") == RewardWeights(1, 0, 0, 1)
    with pytest.raises(ValueError):
        RewardWeights(0, 0, 0, 0)


# -- DAG construction -----------------------------------------------------

def test_dag_from_etree_examples():
    d = dag_from_etree(pattern(4, []), Permutation.identity(4))
    assert len(d) == 4 and d.edges == ()
    assert simulate(d, two, "TIME").metrics.makespan == 2 * d.tasks[0].work

    d = dag_from_etree(pattern(4, path_edges(4)), Permutation.identity(4))
    assert d.edges == ((0, 1), (1, 2), (2, 3))
    assert [t.work for t in d.tasks] == [4, 4, 4, 1]
    assert simulate(d, two, "BALANCE").metrics.makespan == d.total_work()

    d = dag_from_etree(pattern(4, arrow_edges(4)), Permutation.from_order([1, 2, 3, 0]))
    assert d.edges == ((0, 3), (1, 3), (2, 3))
    assert d.tasks[3].tag == "col0"


def test_cycle_and_round_trip():
    with pytest.raises(CyclicDag):
        unit_dag(3, [(0, 1), (1, 2), (2, 0)]).topological_order()
    d = random_dag(6, 0.5, seed=1)
    assert TaskDag.from_dict(json.loads(json.dumps(d.to_dict()))) == d
    r = d.reversed()
    assert set(r.edges) == {(v, u) for u, v in d.edges}
