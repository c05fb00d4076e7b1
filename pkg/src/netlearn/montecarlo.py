"""Monte Carlo check of the learning event with exact equilibrium signal sets.

Randomness comes from a counter-based SplitMix64 stream: the Gaussian for
(trial, slot) is a pure function of the master seed, so trials can be
split into blocks and run on any number of threads with bit-identical
results. Slot 0 is the state theta, slots 1..n the noise terms z_i.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import InputError
from .game import EquilibriumResult, GameParams, StrategyProfile, propagate
from .learning import Tolerances
from .network import DirectedNetwork

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# Cells (trials x slots) per block; fixed so block boundaries never depend on threads.
_BLOCK_CELLS = 1 << 21


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _key(seed: int) -> np.uint64:
    with np.errstate(over="ignore"):
        return _mix64(np.array([seed & _MASK64], dtype=np.uint64))[0]


def _uniform(key: np.uint64, counters: np.ndarray) -> np.ndarray:
    """Uniforms in [0, 1) with 53 random bits."""
    with np.errstate(over="ignore"):
        bits = _mix64(key + (counters + np.uint64(1)) * _GOLDEN)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def standard_normals(seed: int, trials: np.ndarray, slots: int) -> np.ndarray:
    """Standard normals of shape ``(len(trials), slots)`` by Box-Muller."""
    key = _key(seed)
    t = np.asarray(trials, dtype=np.uint64)[:, None]
    s = np.arange(slots, dtype=np.uint64)[None, :]
    base = (t * np.uint64(slots) + s) * np.uint64(2)
    u1 = 1.0 - _uniform(key, base)
    u2 = _uniform(key, base + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


def sample_world(params: GameParams, n: int, seed: int, trial: int = 0) -> tuple[float, np.ndarray]:
    """Draw (theta, signals) for one trial: theta ~ N(0, 1/rho), s_i = theta + z_i."""
    if n < 1:
        raise InputError(f"population must be positive, got {n}")
    g = standard_normals(seed, np.array([trial]), n + 1)[0]
    theta = g[0] / math.sqrt(params.rho)
    return float(theta), theta + g[1:] / math.sqrt(params.rhobar)


def posterior_action(params: GameParams, signals: Sequence[float]) -> float:
    """Posterior mean of theta given a nonempty set of signals."""
    s = np.asarray(signals, dtype=float)
    if s.size == 0:
        raise InputError("posterior action needs at least one signal")
    return float(params.rhobar * s.sum() / (params.rho + s.size * params.rhobar))


@dataclass(frozen=True)
class SimulationConfig:
    trials: int
    master_seed: int = 0
    confidence_z: float = 3.0
    threads: int | None = None

    def __post_init__(self):
        if int(self.trials) < 1:
            raise InputError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise InputError(f"master seed must fit in 64 unsigned bits, got {self.master_seed}")
        if not self.confidence_z > 0:
            raise InputError(f"confidence_z must be positive, got {self.confidence_z}")
        if self.threads is not None and int(self.threads) < 1:
            raise InputError(f"threads must be >= 1, got {self.threads}")

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return int(self.threads)
        env = os.environ.get("NETLEARN_THREADS")
        if env:
            try:
                value = int(env)
            except ValueError:
                raise InputError(f"NETLEARN_THREADS must be an integer, got {env!r}") from None
            if value < 1:
                raise InputError(f"NETLEARN_THREADS must be >= 1, got {value}")
            return value
        return 1


@dataclass
class SimulationReport:
    p_hat: float
    ci_halfwidth: float
    per_agent_accuracy: list[float]
    trials: int
    failures: int
    ci_method: str = "normal"
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def confidence_halfwidth(failures: int, trials: int, z: float) -> tuple[float, str]:
    """Normal-approximation half-width, or the exact binomial one when either
    the failure or the success count is below 10."""
    p = failures / trials
    if failures >= 10 and trials - failures >= 10:
        return z * math.sqrt(p * (1.0 - p) / trials), "normal"
    alpha = 2.0 * stats.norm.sf(z)
    lo = 0.0 if failures == 0 else float(stats.beta.ppf(alpha / 2, failures, trials - failures + 1))
    hi = 1.0 if failures == trials else float(stats.beta.ppf(1 - alpha / 2, failures + 1, trials - failures))
    return max(p - lo, hi - p), "exact"


def _run_block(params, weights, membership, eps, epsbar, seed, start, stop, trace):
    n = membership.shape[0]
    g = standard_normals(seed, np.arange(start, stop), n + 1)
    theta = g[:, :1] / math.sqrt(params.rho)
    signals = theta + g[:, 1:] / math.sqrt(params.rhobar)
    actions = (signals @ membership) * weights[None, :]
    correct = np.abs(actions - theta) <= eps
    wrong = n - correct.sum(axis=1)
    failed = wrong / n >= epsbar
    if trace is not None:
        trace.extend(zip(range(start, stop), theta[:, 0].tolist(), (wrong / n).tolist(),
                         failed.astype(int).tolist()))
    return int(failed.sum()), correct.sum(axis=0).astype(np.int64)


def estimate_learning(params: GameParams, net: DirectedNetwork, equilibrium, tol: Tolerances,
                      cfg: SimulationConfig, trace_path=None) -> SimulationReport:
    """Estimate P(fraction of agents missing theta by more than eps >= epsbar).

    ``equilibrium`` is an EquilibriumResult or a strategy profile; each agent
    acts on exactly the signals she holds at her exit under it.
    """
    profile = equilibrium.profile if isinstance(equilibrium, EquilibriumResult) \
        else StrategyProfile(equilibrium)
    prop = propagate(net, profile)
    membership = prop.membership().astype(np.float64)
    weights = params.rhobar / (params.rho + params.rhobar * prop.counts.astype(np.float64))
    n = net.n

    T = int(cfg.trials)
    block = max(1, _BLOCK_CELLS // (n + 1))
    bounds = [(a, min(a + block, T)) for a in range(0, T, block)]
    traces = [[] if trace_path is not None else None for _ in bounds]

    def job(idx):
        a, b = bounds[idx]
        return _run_block(params, weights, membership, tol.eps, tol.epsbar,
                          cfg.master_seed, a, b, traces[idx])

    threads = cfg.resolved_threads()
    if threads == 1 or len(bounds) == 1:
        results = [job(i) for i in range(len(bounds))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(len(bounds))))

    failures = sum(r[0] for r in results)
    correct = np.sum([r[1] for r in results], axis=0)
    half, method = confidence_halfwidth(failures, T, cfg.confidence_z)
    if trace_path is not None:
        with open(trace_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "theta", "fraction_wrong", "failure"])
            for part in traces:
                for trial, theta, frac, failed in part:
                    w.writerow([trial, repr(theta), repr(frac), failed])
    return SimulationReport(
        p_hat=failures / T,
        ci_halfwidth=half,
        per_agent_accuracy=(correct / T).tolist(),
        trials=T,
        failures=failures,
        ci_method=method,
        config={"master_seed": int(cfg.master_seed), "confidence_z": cfg.confidence_z,
                "eps": tol.eps, "epsbar": tol.epsbar, "profile": list(profile.exits)},
    )
