"""
Scheduling the elimination tree
===============================

Each column of the factor is a task; a column must wait for the columns
that update it. The simulator dispatches ready tasks to idle workers.
"""
from elimq import FamilySpec, generate_corpus
from elimq.ordering import greedy_order
from elimq.scheduling import (SCHEDULER_ACTIONS, MachineModel, RewardWeights, brute_force_optimal,
                              dag_from_etree, list_schedule, random_dag, simulate)

(grid,) = generate_corpus([FamilySpec.grid(3, 3)], seed=0)
perm = greedy_order(grid.pattern, "MD").perm
dag = dag_from_etree(grid.pattern, perm)
print("tasks", len(dag), "edges", dag.edges, "critical path", dag.critical_path())

machine = MachineModel.from_speeds([1.0, 2.0])
w = RewardWeights(1.0, 0.1, 0.0, 0.5)
for h in SCHEDULER_ACTIONS:
    s = simulate(dag, machine, h, weights=w)
    print(f"{h:8s} makespan={s.metrics.makespan:6.2f} peak={s.metrics.peak_memory:4.0f} "
          f"reward={sum(s.rewards):7.3f}")

# exact optimum for a small random DAG
d = random_dag(7, 0.3, seed=42)
two = MachineModel.identical(2)
print("optimum", brute_force_optimal(d, two), "TIME", list_schedule(d, two, "TIME").metrics.makespan)
