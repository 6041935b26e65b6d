"""
Fill-reducing orderings on small graphs
=======================================

Eliminating a node joins its neighbors into a clique; the edges this adds
are fill-in. Different selection metrics leave very different fill.
"""
import numpy as np

from elimq import FamilySpec, generate_corpus
from elimq.ordering import ORDERING_ACTIONS, greedy_order, min_fill_bruteforce, symbolic_fill_count
from elimq.sparse import Permutation

# an arrow matrix: node 0 touches everything
(arrow,) = generate_corpus(["arrow:6"], seed=0)
hub_first = symbolic_fill_count(arrow.pattern, Permutation.identity(6))
print("arrow, hub eliminated first:", hub_first)
print("arrow, minimum degree:", greedy_order(arrow.pattern, "MD").total_fill)

# every metric on a 5x5 grid
(grid,) = generate_corpus([FamilySpec.grid(5, 5)], seed=0)
for a in ORDERING_ACTIONS:
    r = greedy_order(grid.pattern, a)
    print(f"grid 5x5 {a:5s} fill={r.total_fill:3d} first nodes={list(r.order[:6])}")

# on tiny graphs we can afford the exhaustive optimum over all n! orders
(small,) = generate_corpus(["random:7:0.5"], seed=3)
print("random n=7: MD", greedy_order(small.pattern, "MD").total_fill,
      "optimum", min_fill_bruteforce(small.pattern))
