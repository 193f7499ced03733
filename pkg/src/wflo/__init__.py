"""Wind farm layout optimization toolkit.

Builds the wake-interaction quadratic integer program for a discretized
farm domain under a wind rose, reformulates it as a pairwise binary
Markov random field, solves it with sequential tree-reweighted message
passing (optionally tightened with triplet clusters), and evaluates the
resulting layouts against exact and heuristic baselines.
"""

from wflo.wind_resource import WindRose, WindState, builtin_wr1, builtin_wr36, load_rose, uniform_rose
from wflo.farm_domain import FarmGrid, ProximityPairs, TurbineSpec, make_square_grid, proximity_pairs
from wflo.wake import (
    InteractionMatrix,
    WakeParams,
    axial_induction,
    build_interaction_matrix,
    combined_speed,
    single_wake_deficit,
)
from wflo.qip import Layout, MrfModel, QipModel, add_exclusions, build_penalized_mrf, default_beta, mrf_energy
from wflo.trws import ChainDecomposition, MessageState, SolveReport, SolverConfig, decompose, pass_message, run
from wflo.tightening import TightenConfig, TightenedModel, TripletCluster, score_candidate_triplets, tighten_and_resolve
from wflo.decode import round_top_k, repair_swap
from wflo.baselines import brute_force, greedy_construct, local_search
from wflo.evaluation import EvaluationReport, PowerCurve, compare, evaluate_layout, power_cubic, power_from_curve

__version__ = "0.1.0"
