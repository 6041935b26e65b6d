"""
Learning which ordering metric to use
=====================================

A tabular Q-learner picks the metric at every elimination step from a
coarse description of the remaining graph. Rewards are minus the fill
added, so the undiscounted return is minus the total fill.
"""
import numpy as np

from elimq import generate_corpus, mixed_corpus_specs
from elimq.ordering import ORDERING_ACTIONS, adaptive_order, greedy_order
from elimq.qlearning import Policy, TrainConfig, save_qtable, train_offline

corpus = generate_corpus(mixed_corpus_specs(30, seed=11), seed=11)
fixed = {a: np.mean([greedy_order(m.pattern, a).total_fill for m in corpus]) for a in ORDERING_ACTIONS}
print({a: round(v, 2) for a, v in fixed.items()})

curve = []
table = train_offline(corpus, "ordering", TrainConfig(episodes=1500, seed=3), curve=curve)
print("states visited", len(table.states()), "last returns", [round(r) for _, r, _ in curve[-5:]])

pol = Policy(table, default=min(fixed, key=fixed.get))
print("learned mean fill", np.mean([adaptive_order(m.pattern, pol).total_fill for m in corpus]))
print("serialized table:", len(save_qtable(table)), "bytes")
