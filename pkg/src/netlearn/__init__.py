"""Strategic information exchange on directed networks and finite population learning."""
from .errors import (BudgetExceededError, InputError, InvariantError, NetlearnError,
                     SupermodularityError)
from .network import DirectedNetwork, Society, ball, ball_sizes, make_society, max_path_lengths
from .game import (EquilibriumResult, GameParams, StrategyProfile, best_response,
                   enumerate_equilibria, is_nash, propagate, round_bound, solve_equilibrium)
from .learning import Tolerances, Verdict, classify, learning_score
from .asymptotics import DivergenceProxy, LayeredProfile, RateSequence
from .montecarlo import SimulationConfig, SimulationReport, estimate_learning
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BudgetExceededError", "DirectedNetwork", "DivergenceProxy", "EquilibriumResult",
    "GameParams", "InputError", "InvariantError", "LayeredProfile", "NetlearnError",
    "RateSequence", "SimulationConfig", "SimulationReport", "Society", "StrategyProfile",
    "SupermodularityError", "Tolerances", "Verdict", "ball", "ball_sizes", "best_response",
    "classify", "enumerate_equilibria", "estimate_learning", "is_nash", "learning_score",
    "make_society", "max_path_lengths", "propagate", "round_bound", "solve_equilibrium",
]
