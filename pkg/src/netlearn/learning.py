"""Finite population learning: erf scores and the necessary/sufficient tests."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import special

from .errors import InputError
from .game import EquilibriumResult, GameParams


def erf(x):
    """Error function; scalars in, float out, arrays in, arrays out."""
    out = special.erf(np.clip(x, -6.5, 6.5))
    return float(out) if np.ndim(out) == 0 else out


def erfc(x):
    """``1 - erf(x)`` without cancellation for large ``x``."""
    out = special.erfc(x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Tolerances:
    eps: float
    epsbar: float
    delta: float

    def __post_init__(self):
        if not self.eps > 0:
            raise InputError(f"eps must be positive, got {self.eps}")
        for name in ("epsbar", "delta"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise InputError(f"{name} must lie in (0, 1), got {v}")

    @property
    def thresholds(self) -> tuple[float, float]:
        """(necessary-condition threshold, sufficient-condition threshold)."""
        return (1 - self.epsbar) * (1 - self.delta), 1 - self.epsbar * self.delta

    def swapped(self) -> "Tolerances":
        return Tolerances(self.eps, self.delta, self.epsbar)


class Verdict(str, enum.Enum):
    LEARNING = "Learning"
    NOT_LEARNING = "NotLearning"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class LearningVerdict:
    score: float
    verdict: Verdict
    thresholds: tuple[float, float]

    def to_dict(self) -> dict:
        return {"score": self.score, "thresholds": list(self.thresholds),
                "verdict": self.verdict.value}


def accuracy(params: GameParams, k, eps: float):
    """P(|x_i - theta| <= eps) for an agent acting on ``k`` signals."""
    return erf(eps * np.sqrt((params.rho + params.rhobar * np.asarray(k, dtype=float)) / 2.0))


def learning_score(params: GameParams, counts: Sequence[int], eps: float) -> float:
    k = np.asarray(counts, dtype=float)
    if k.size == 0 or np.any(k < 1):
        raise InputError("every agent holds at least her own signal (k_i >= 1)")
    return float(np.mean(accuracy(params, k, eps)))


def failure_mass(params: GameParams, counts: Sequence[int], eps: float) -> float:
    """``1 - learning_score`` computed through erfc, accurate when it is tiny."""
    k = np.asarray(counts, dtype=float)
    if k.size == 0 or np.any(k < 1):
        raise InputError("every agent holds at least her own signal (k_i >= 1)")
    return float(np.mean(erfc(eps * np.sqrt((params.rho + params.rhobar * k) / 2.0))))


def classify(score: float, tol: Tolerances) -> LearningVerdict:
    lower, upper = tol.thresholds
    if score < lower:
        verdict = Verdict.NOT_LEARNING
    elif score >= upper:
        verdict = Verdict.LEARNING
    else:
        verdict = Verdict.INDETERMINATE
    return LearningVerdict(float(score), verdict, (lower, upper))


def markov_bounds(score: float, epsbar: float) -> tuple[float, float]:
    """Lower and upper bounds on P(fraction of inaccurate agents >= epsbar)."""
    return max(0.0, 1.0 - score / (1.0 - epsbar)), min(1.0, (1.0 - score) / epsbar)


@dataclass(frozen=True)
class NetworkFreeVerdict:
    upper_score: float  # every agent holds all n signals
    lower_score: float  # every agent holds only her own signal
    verdict: Verdict
    thresholds: tuple[float, float]

    def to_dict(self) -> dict:
        return {"upper_score": self.upper_score, "lower_score": self.lower_score,
                "thresholds": list(self.thresholds), "verdict": self.verdict.value}


def network_free_bounds(params: GameParams, n: int, tol: Tolerances) -> NetworkFreeVerdict:
    if n < 1:
        raise InputError(f"population must be positive, got {n}")
    lower, upper = tol.thresholds
    best = float(accuracy(params, n, tol.eps))
    worst = float(accuracy(params, 1, tol.eps))
    if best < lower:
        verdict = Verdict.NOT_LEARNING
    elif worst >= upper:
        verdict = Verdict.LEARNING
    else:
        verdict = Verdict.INDETERMINATE
    return NetworkFreeVerdict(best, worst, verdict, (lower, upper))


def classify_multi(params: GameParams, net, tol: Tolerances,
                   equilibria: Iterable[EquilibriumResult]) -> LearningVerdict:
    """Classify against the least favourable equilibrium."""
    scores = [learning_score(params, eq.counts, tol.eps) for eq in equilibria]
    if not scores:
        raise InputError("need at least one equilibrium")
    return classify(min(scores), tol)

