"""The information exchange game: propagation, payoffs and pure equilibria."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from . import kernels
from .errors import BudgetExceededError, InputError, InvariantError, SupermodularityError
from .network import DirectedNetwork, Society, ball_sizes, max_path_length, max_path_lengths

# Payoffs closer than this are treated as ties.
TIE_TOL = 1e-12
MAX_STEP = "max-step"
DEFAULT_BUDGET = 10**7


@dataclass(frozen=True)
class GameParams:
    """Prior precision, signal precision, information sensitiveness and clock rates."""

    rho: float
    rhobar: float
    psi: float
    lam: float = 1.0
    r: float = 1.0

    def __post_init__(self):
        for name in ("rho", "rhobar", "lam", "r"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InputError(f"{name} must be a positive real, got {value!r}")
        if not math.isfinite(self.psi):
            raise InputError(f"psi must be finite, got {self.psi!r}")

    @property
    def rbar(self) -> float:
        return self.lam / (self.lam + self.r)

    def with_psi(self, psi: float) -> "GameParams":
        return GameParams(self.rho, self.rhobar, psi, self.lam, self.r)

    def exit_value(self, k) -> np.ndarray | float:
        """Undiscounted expected payoff with ``k`` signals."""
        return self.psi - 1.0 / (self.rho + self.rhobar * np.asarray(k, dtype=float))

    def to_dict(self) -> dict:
        return {"rho": self.rho, "rhobar": self.rhobar, "psi": self.psi,
                "lambda": self.lam, "r": self.r}

    @classmethod
    def from_dict(cls, data: Mapping) -> "GameParams":
        try:
            return cls(float(data["rho"]), float(data["rhobar"]), float(data["psi"]),
                       float(data.get("lambda", 1.0)), float(data.get("r", 1.0)))
        except KeyError as exc:
            raise InputError(f"game parameters missing {exc}") from exc


ParamsLike = Union[GameParams, Mapping[int, GameParams]]


def params_for(params: ParamsLike, n: int) -> GameParams:
    """Resolve per-population parameter overrides (psi_n varying along a society)."""
    if isinstance(params, GameParams):
        return params
    try:
        return params[n]
    except KeyError:
        raise InputError(f"no game parameters given for population n={n}") from None


@dataclass(frozen=True)
class StrategyProfile:
    exits: tuple[int, ...]

    def __init__(self, exits: Sequence[int]):
        object.__setattr__(self, "exits", tuple(int(x) for x in exits))

    def __len__(self) -> int:
        return len(self.exits)

    def __getitem__(self, i: int) -> int:
        """Exit round of agent ``i`` (1-based)."""
        return self.exits[i - 1]

    def as_array(self) -> np.ndarray:
        return np.array(self.exits, dtype=np.int64)

    def validate(self, net: DirectedNetwork) -> "StrategyProfile":
        if len(self.exits) != net.n:
            raise InputError(f"profile has {len(self.exits)} entries for {net.n} agents")
        lmax = max_path_lengths(net)
        for i, (l, top) in enumerate(zip(self.exits, lmax), start=1):
            if not 0 <= l <= top:
                raise InputError(f"exit round {l} of agent {i} outside 0..{top}")
        return self


def _as_profile(profile) -> StrategyProfile:
    return profile if isinstance(profile, StrategyProfile) else StrategyProfile(profile)


@dataclass(frozen=True)
class PropagationResult:
    """``arrival[j-1, i-1]`` is the first round signal ``j`` is offered to agent ``i``.

    Unreached pairs hold ``n``, which exceeds every exit round.
    """

    arrival: np.ndarray
    counts: np.ndarray
    exits: tuple[int, ...]

    @property
    def infinity(self) -> int:
        return self.arrival.shape[0]

    def membership(self) -> np.ndarray:
        """Boolean ``M[j, i]``: signal ``j`` is in agent ``i``'s set at her exit."""
        return self.arrival <= np.asarray(self.exits)[None, :]

    def signal_set(self, i: int) -> set[int]:
        return {int(j) + 1 for j in np.flatnonzero(self.membership()[:, i - 1])}


def propagate(net: DirectedNetwork, profile) -> PropagationResult:
    profile = _as_profile(profile)
    if len(profile) != net.n:
        raise InputError(f"profile has {len(profile)} entries for {net.n} agents")
    exits = profile.as_array()
    if np.any(exits < 0):
        raise InputError("exit rounds must be non-negative")
    arrival = kernels.arrival_table(*net.csr_in, *net.csr_out, exits)
    counts = (arrival <= exits[None, :]).sum(axis=0).astype(np.int64)
    return PropagationResult(arrival, counts, profile.exits)


def payoff(params: GameParams, i: int, profile, prop: PropagationResult) -> float:
    l = _as_profile(profile)[i]
    k = prop.counts[i - 1]
    return params.rbar**l * (params.psi - 1.0 / (params.rho + params.rhobar * k))


def utility_table(params: GameParams, n: int, horizon: int) -> np.ndarray:
    """``U[k, l]`` = payoff of exiting after ``l`` rounds holding ``k`` signals."""
    k = np.arange(n + 1, dtype=float)
    value = params.psi - 1.0 / (params.rho + params.rhobar * k)
    value[0] = -np.inf
    return value[:, None] * params.rbar ** np.arange(horizon + 1)[None, :]


def exit_curve(net: DirectedNetwork, i: int, profile, horizon: int | None = None) -> np.ndarray:
    """Signals agent ``i`` would hold after waiting 0..horizon rounds, others fixed."""
    i = net.check_agent(i)
    if horizon is None:
        horizon = max_path_length(net, i)
    exits = _as_profile(profile).as_array()
    return kernels.exit_curve(*net.csr_in, *net.csr_out, exits, i - 1, int(horizon))


def payoff_curve(params: GameParams, net: DirectedNetwork, i: int, profile) -> np.ndarray:
    """``U_i(l, l_-i)`` for every admissible ``l``."""
    k = exit_curve(net, i, profile)
    return params.rbar ** np.arange(len(k)) * params.exit_value(k)


def _argmax_first(values: np.ndarray) -> int:
    best = 0
    for l in range(1, len(values)):
        if values[l] > values[best] + TIE_TOL:
            best = l
    return best


def best_response(params: GameParams, net: DirectedNetwork, i: int, others) -> int:
    """Smallest payoff-maximising exit round for agent ``i``.

    ``others`` is a full-length profile; its entry for ``i`` is ignored (and
    may be None) since arrivals at ``i`` do not depend on her own exit.
    """
    others = list(others)
    others[net.check_agent(i) - 1] = 0
    return _argmax_first(payoff_curve(params, net, i, others))


def is_nash(params: GameParams, net: DirectedNetwork, profile) -> bool:
    profile = _as_profile(profile)
    for i in net.agents:
        values = payoff_curve(params, net, i, profile)
        if values[profile[i]] < values.max() - TIE_TOL:
            return False
    return True


@dataclass(frozen=True)
class EquilibriumResult:
    profile: StrategyProfile
    counts: tuple[int, ...]
    method: str
    assumption1_satisfied: tuple[bool, ...]
    sweeps: int = 0
    history: tuple[tuple[int, ...], ...] = field(default=(), compare=False, repr=False)

    @classmethod
    def build(cls, params: GameParams, net: DirectedNetwork, profile, method: str,
              sweeps: int = 0, history=()) -> "EquilibriumResult":
        profile = _as_profile(profile).validate(net)
        if not is_nash(params, net, profile):
            raise InvariantError(f"{profile.exits} is not a Nash equilibrium ({method})")
        counts = tuple(int(k) for k in propagate(net, profile).counts)
        a1 = tuple(bool(x) for x in _assumption1(params, net, profile))
        return cls(profile, counts, method, a1, sweeps, tuple(history))

    @property
    def exits(self) -> tuple[int, ...]:
        return self.profile.exits

    def to_dict(self) -> dict:
        return {"profile": list(self.profile.exits), "counts": list(self.counts),
                "method": self.method, "assumption1": list(self.assumption1_satisfied)}


def solve_equilibrium(params: GameParams, net: DirectedNetwork, start: str = "bottom") -> EquilibriumResult:
    """Round-robin best response from the all-zero (``bottom``) or all-max (``top``) profile.

    Agents are swept in ascending id order and updated in place. From the
    bottom every update must raise an exit round, from the top lower it;
    anything else means the monotone structure the method relies on is
    broken, and a SupermodularityError is raised.
    """
    if start not in ("bottom", "top"):
        raise InputError(f"start must be 'bottom' or 'top', got {start!r}")
    lmax = max_path_lengths(net)
    exits = np.zeros(net.n, dtype=np.int64) if start == "bottom" else lmax.copy()
    up = start == "bottom"
    limit = int(lmax.sum()) + 1
    history = [tuple(int(x) for x in exits)]
    for sweep in range(1, limit + 1):
        changed = False
        for i in net.agents:
            if lmax[i - 1] == 0:
                continue
            br = best_response(params, net, i, exits)
            old = exits[i - 1]
            if br == old:
                continue
            if (br < old) if up else (br > old):
                raise SupermodularityError(
                    f"best response of agent {i} moved {old} -> {br} against the "
                    f"{start} sweep direction at sweep {sweep}"
                )
            exits[i - 1] = br
            changed = True
        history.append(tuple(int(x) for x in exits))
        if not changed:
            return EquilibriumResult.build(params, net, exits, f"iterated_br_from_{start}",
                                           sweeps=sweep, history=history)
    raise SupermodularityError(f"iterated best response did not settle within {limit} sweeps")


def profile_space_size(net: DirectedNetwork) -> int:
    return math.prod(int(L) + 1 for L in max_path_lengths(net))


def enumerate_equilibria(params: GameParams, net: DirectedNetwork,
                         budget: int = DEFAULT_BUDGET) -> list[EquilibriumResult]:
    """Every pure Nash equilibrium, by exhaustive check of the profile space."""
    size = profile_space_size(net)
    if size > budget:
        raise BudgetExceededError(
            f"profile space has {size} profiles, budget is {budget}; use solve_equilibrium"
        )
    lmax = max_path_lengths(net)
    table = utility_table(params, net.n, int(lmax.max(initial=0)))
    found = kernels.nash_profiles(*net.csr_in, *net.csr_out, lmax, table, TIE_TOL)
    return [EquilibriumResult.build(params, net, row, "brute_force") for row in found]


def _assumption1(params: GameParams, net: DirectedNetwork, profile) -> np.ndarray:
    kmax = np.array([exit_curve(net, i, profile)[-1] for i in net.agents])
    return params.psi * (params.rho + params.rhobar * kmax) >= 1.0


def check_assumption1(params: GameParams, net: DirectedNetwork, eq: EquilibriumResult) -> np.ndarray:
    """Per agent: psi * (rho + rhobar * k_max) >= 1, with k_max the count from waiting maximally."""
    return _assumption1(params, net, eq.profile)


def round_bound(params: GameParams) -> float | str:
    """Strict upper bound on equilibrium exit rounds, or MAX_STEP when none applies."""
    s = (params.rho + params.rhobar) * params.psi
    if s <= 1.0:
        return MAX_STEP
    return math.log(1.0 - 1.0 / s) / math.log(params.rbar)


@dataclass(frozen=True)
class ExitRegime:
    case: str
    bound: float | str
    ball_limit: float
    note: str = ""


def exit_regime(params: ParamsLike, society: Society, i: int, proxy=None) -> ExitRegime:
    """Classify agent ``i``'s long-run exit behaviour along ``society``.

    Cases: ``a`` bounded by the round bound; ``b`` and ``c1`` always wait to
    the maximum step; ``c2`` bounded by a society-dependent constant (or
    waits to the maximum when too few signals are available).
    """
    from .asymptotics import DivergenceProxy

    proxy = proxy or DivergenceProxy()
    members = [g for g in society if g.n >= i]
    if not members:
        raise InputError(f"agent {i} is absent from every network of the society")
    top = params_for(params, members[-1].n)
    s = (top.rho + top.rhobar) * top.psi
    if s > 1.0:
        return ExitRegime("a", round_bound(top), math.nan)
    if top.psi <= 0:
        return ExitRegime("b", MAX_STEP, math.nan)

    reach = [int(ball_sizes(g, i)[-1]) for g in members]
    diverging = proxy.diverges(members[-1].n, reach[-1])
    limit = math.inf if diverging else float(reach[-1])
    needed = (1.0 - top.rho * top.psi) / (top.rhobar * top.psi)
    if limit < needed:
        return ExitRegime("c1", MAX_STEP, limit)

    if not diverging:
        bound = max_path_length(members[-1], i)
        return ExitRegime("c2", bound, limit, "bounded reach: limit of the maximal path length")
    # Waiting stops paying once the reachable set exceeds this size.
    discount_cap = (top.lam + top.r - top.rho * top.r * top.psi) / (top.rhobar * top.r * top.psi)
    admissible = [max_path_length(g, i) for g, b in zip(members, reach) if b < discount_cap]
    bound = max(admissible, default=0)
    return ExitRegime("c2", bound, limit, f"largest maximal path length with reach < {discount_cap:.6g}")
