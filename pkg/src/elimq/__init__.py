"""Sparse Gaussian elimination with Q-learned ordering, pivoting and scheduling choices."""
from .errors import ElimQError, InputError, NumericError
from .sparse import (
    DenseWorkingMatrix,
    Permutation,
    SparseMatrix,
    SparsePattern,
    dump_matrix_market,
    load_matrix_market,
    permute,
    permute_matrix,
    symmetrize,
    to_dense,
)
from .qlearning import Policy, QTable, StateKey, TabularMDP, TrainConfig, load_qtable, q_update, save_qtable, train_offline
from .ordering import (
    EliminationGraph,
    OrderingAction,
    OrderingResult,
    adaptive_order,
    eliminate_node,
    enumerate_elimination_orders,
    etree,
    greedy_order,
    metric_score,
    symbolic_fill_count,
)
from .pivoting import FactorResult, GrowthTrace, PivotAction, factorize, ge_step, growth_factor, select_pivot, solve
from .scheduling import (
    MachineModel,
    RewardWeights,
    Schedule,
    ScheduleMetrics,
    SchedulerAction,
    TaskDag,
    Task,
    brute_force_optimal,
    dag_from_etree,
    list_schedule,
    reward,
    simulate,
)
from .features import featurize_ordering, featurize_pivoting, featurize_scheduling
from .driver import (
    FamilySpec,
    SolverRun,
    generate_corpus,
    generate_named_corpus,
    mixed_corpus_specs,
    run_solver,
    summary_csv,
)

__version__ = "0.1.0"
