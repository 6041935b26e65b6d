"""
The full solve loop
===================

Order, permute, factorize with a pivot rule, schedule the factor and the
triangular solves, then check the residual against the original matrix.
"""
from elimq import generate_named_corpus, run_solver, summary_csv
from elimq.scheduling import MachineModel

runs = []
for name, m in generate_named_corpus(["grid2d:4x4", "random:30:0.1", "arrow:12"], seed=7):
    r = run_solver(m, ordering="MD", pivoting="RP", scheduling="TIME",
                   machine=MachineModel.identical(3), input_id=name)
    runs.append(r)
    print(name, "rewards", r.rewards)

print(summary_csv(runs))
