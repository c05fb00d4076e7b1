"""Perfect learning along growing societies and the learning-rate bounds.

Limits over ``n`` cannot be decided from a finite prefix of a society, so
"diverges" is replaced throughout by a :class:`DivergenceProxy`: a
quantity diverges if at the largest tested population it reaches an
unbounded, slowly growing threshold (``2 log n`` by default).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InputError
from .game import ParamsLike, params_for, solve_equilibrium
from .learning import erfc
from .network import Society, ball_sizes, binomial_depth


@dataclass(frozen=True)
class DivergenceProxy:
    c: float = 2.0
    threshold_fn: Callable[[int], float] | None = None
    description: str = ""

    def threshold(self, n: int) -> float:
        if self.threshold_fn is not None:
            return float(self.threshold_fn(n))
        return self.c * math.log(n)

    def diverges(self, n: int, value: float) -> bool:
        return value >= self.threshold(n)

    def describe(self) -> str:
        return self.description or f"value >= {self.c:g}*log(n) at the largest n"


@dataclass
class EquilibriumInformed:
    ns: list[int]
    counts: list[np.ndarray]
    informed: np.ndarray  # flags for agents 1..N of the largest network
    fractions: list[float]
    proxy: str

    @property
    def fraction(self) -> float:
        return self.fractions[-1]


def equilibrium_informed(society: Society, params: ParamsLike,
                         proxy: DivergenceProxy | None = None,
                         start: str = "bottom") -> EquilibriumInformed:
    """Agents whose equilibrium signal count keeps up with the divergence proxy."""
    proxy = proxy or DivergenceProxy()
    counts, fractions = [], []
    for g in society:
        eq = solve_equilibrium(params_for(params, g.n), g, start)
        k = np.array(eq.counts)
        counts.append(k)
        fractions.append(float(np.mean(k >= proxy.threshold(g.n))))
    n_top = society.largest.n
    informed = counts[-1] >= proxy.threshold(n_top)
    return EquilibriumInformed(society.sizes, counts, informed, fractions, proxy.describe())


@dataclass
class SociallyInformed:
    informed: np.ndarray         # per agent of the largest network
    radius: list[int | None]     # L_i, None when no ball reaches the threshold
    since: list[int | None]      # least prefix population from which both conditions hold
    fraction: float
    proxy: str


def _si_conditions(p, sizes: np.ndarray, L: int) -> bool:
    def value(l):
        return p.rbar**l * (p.psi - 1.0 / (p.rho + p.rhobar * sizes[min(l, len(sizes) - 1)]))

    if not p.psi - 1.0 / (p.rho + p.rhobar * sizes[min(L, len(sizes) - 1)]) > 0:
        return False
    target = value(L)
    return all(target > value(l) for l in range(L))


def socially_informed(society: Society, params: ParamsLike,
                      proxy: DivergenceProxy | None = None) -> SociallyInformed:
    """Agents reached by a growing ball within a fixed radius who prefer to wait for it."""
    proxy = proxy or DivergenceProxy()
    top = society.largest
    thr = proxy.threshold(top.n)
    flags, radii, since = [], [], []
    for i in top.agents:
        sizes_top = ball_sizes(top, i)
        hits = np.flatnonzero(sizes_top >= thr)
        if hits.size == 0:
            flags.append(False)
            radii.append(None)
            since.append(None)
            continue
        L = int(hits[0])
        radii.append(L)
        ok = [_si_conditions(params_for(params, g.n), ball_sizes(g, i), L)
              for g in society if g.n >= i]
        members = [g.n for g in society if g.n >= i]
        start = None
        for idx in range(len(ok) - 1, -1, -1):
            if not ok[idx]:
                break
            start = members[idx]
        flags.append(start is not None)
        since.append(start)
    flags = np.array(flags, dtype=bool)
    return SociallyInformed(flags, radii, since, float(flags.mean()), proxy.describe())


@dataclass
class RateSequence:
    ns: np.ndarray
    deltas: np.ndarray
    envelope: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        self.ns = np.asarray(self.ns, dtype=np.int64)
        self.deltas = np.asarray(self.deltas, dtype=float)
        if self.ns.shape != self.deltas.shape:
            raise InputError("ns and deltas must align")
        if np.any(self.deltas < 0):
            raise InputError("rate bounds must be non-negative")


def rate_bound_from_counts(params: ParamsLike, counts_by_n: dict[int, Sequence[int]],
                           eps: float, epsbar: float) -> RateSequence:
    """Smallest delta_n certified by the sufficient condition, per population."""
    ns = sorted(counts_by_n)
    deltas = []
    for n in ns:
        p = params_for(params, n)
        k = np.asarray(counts_by_n[n], dtype=float)
        if np.any(k < 1):
            raise InputError("signal counts must be >= 1")
        deltas.append(np.mean(erfc(eps * np.sqrt((p.rho + p.rhobar * k) / 2.0))) / epsbar)
    return RateSequence(ns, deltas, label="exact")


def erf_tail_bound(x: float) -> float:
    """Upper bound on ``1 - erf(x)`` used to read off transparent rates."""
    if not x > 0:
        raise InputError(f"tail bound needs x > 0, got {x}")
    return math.exp(-x * x / 2.0) / (math.sqrt(2.0 * math.pi) * x)


def tail_bound_holds(x: float) -> bool:
    return erfc(x) < erf_tail_bound(x)


def minilower(params: ParamsLike, n: int, eps: float, epsbar: float, f_n: float) -> float:
    p = params_for(params, n)
    a = p.rho + p.rhobar * f_n
    return math.exp(-eps * eps * a / 4.0) / (math.sqrt(math.pi) * epsbar * eps * math.sqrt(a))


def rate_order(params: ParamsLike, eps: float, epsbar: float,
               f: Callable[[int], float], ns: Sequence[int]) -> RateSequence:
    """Sufficient delta_n when every agent holds at least ``f(n)`` signals, plus
    the ``exp(-rhobar eps^2 f(n) / 5)`` order envelope."""
    ns = list(ns)
    fs = [float(f(n)) for n in ns]
    if any(b < a for a, b in zip(fs, fs[1:])):
        raise InputError("f must be non-decreasing")
    deltas = [minilower(params, n, eps, epsbar, fn) for n, fn in zip(ns, fs)]
    env = [math.exp(-params_for(params, n).rhobar * eps * eps * fn / 5.0) for n, fn in zip(ns, fs)]
    return RateSequence(ns, deltas, np.array(env), label="minilower")


@dataclass
class LayeredProfile:
    """Per-population layer thresholds ``f_1 >= ... >= f_J`` and layer fractions.

    Both are callables of ``n`` returning one value per layer; ``J`` may grow
    with ``n``. Layer ``j`` must be non-decreasing in ``n`` wherever it exists.
    """

    thresholds: Callable[[int], Sequence[float]]
    fractions: Callable[[int], Sequence[float]]

    def evaluate(self, ns: Sequence[int]) -> list[tuple[np.ndarray, np.ndarray]]:
        rows = []
        for n in ns:
            f = np.asarray(self.thresholds(n), dtype=float)
            b = np.asarray(self.fractions(n), dtype=float)
            if f.shape != b.shape or f.ndim != 1 or f.size == 0:
                raise InputError(f"need one fraction per layer at n={n}")
            if np.any(b <= 0) or np.any(b >= 1):
                raise InputError(f"layer fractions must lie in (0, 1) at n={n}")
            if b.sum() > 1 + 1e-12:
                raise InputError(f"layer fractions sum to more than 1 at n={n}")
            if np.any(np.diff(f) > 0):
                raise InputError(f"layer thresholds not ordered f_1 >= f_2 >= ... at n={n}")
            if rows:
                prev = rows[-1][0]
                J = min(prev.size, f.size)
                if np.any(f[:J] < prev[:J]):
                    raise InputError(f"a layer threshold decreases at n={n}")
            rows.append((f, b))
        return rows

    @classmethod
    def constant(cls, thresholds: Sequence[Callable[[int], float]],
                 fractions: Sequence[Callable[[int], float]]) -> "LayeredProfile":
        return cls(lambda n: [f(n) for f in thresholds], lambda n: [b(n) for b in fractions])


def _tail_bound_array(x):
    return np.array([erf_tail_bound(v) for v in np.ravel(x)]).reshape(np.shape(x))


def layered_rate(params: ParamsLike, layers: LayeredProfile, eps: float,
                 ns: Sequence[int], use_tail_bound: bool = False) -> np.ndarray:
    """Required product ``delta_n * epsbar_n`` per population.

    Any tolerance pair with ``delta_n * epsbar_n >= R_n`` is certified. With
    ``use_tail_bound`` each erfc term is replaced by its closed-form upper bound.
    """
    ns = list(ns)
    tail = _tail_bound_array if use_tail_bound else erfc
    out = []
    for n, (fs, bs) in zip(ns, layers.evaluate(ns)):
        p = params_for(params, n)
        layer = tail(eps * np.sqrt((p.rho + p.rhobar * fs) / 2.0))
        rest = tail(eps * np.sqrt((p.rho + p.rhobar) / 2.0))
        out.append(float(np.dot(bs, layer) + (1.0 - bs.sum()) * rest))
    return np.array(out)


def binomial_leaf_to_root_layers() -> LayeredProfile:
    """Leaf-to-root binomial tree with ``n = 2^m - 1``: layer ``j`` (root is 1)
    holds ``2^(j-1)`` agents, each credited ``2^(m-j+1)`` signals."""
    def thresholds(n):
        m = binomial_depth(n)
        return [2.0 ** (m - j + 1) for j in range(1, m + 1)]

    def fractions(n):
        m = binomial_depth(n)
        return [2.0 ** (j - 1) / n for j in range(1, m + 1)]

    return LayeredProfile(thresholds, fractions)


@dataclass(frozen=True)
class MonotonicityCheck:
    increasing: bool
    condition_holds: bool
    values: tuple[float, ...]


def binomial_monotonicity_check(params, eps: float, m: int) -> MonotonicityCheck:
    """Is ``h(x) = 2^(x-1) (rho+rhobar x)^(-1/2) exp(-eps^2 (rho+rhobar x)/4)``
    increasing on ``x = 1..m``, and does the sufficient condition on eps hold?"""
    if m < 2:
        raise InputError("need at least two layers")
    p = params
    x = np.arange(1, m + 1, dtype=float)
    a = p.rho + p.rhobar * x
    h = 2.0 ** (x - 1) / np.sqrt(a) * np.exp(-eps * eps * a / 4.0)
    limit = -(4.0 / p.rhobar) * math.log(0.5 * math.sqrt((p.rho + 2 * p.rhobar) / (p.rho + p.rhobar)))
    return MonotonicityCheck(bool(np.all(np.diff(h) > 0)), eps * eps < limit, tuple(h.tolist()))


def fit_loglog_exponent(ns: Sequence[float], deltas: Sequence[float]) -> float:
    """Least-squares slope of log(delta) against log(n)."""
    return float(np.polyfit(np.log(ns), np.log(deltas), 1)[0])


def fit_log_slope(ns: Sequence[float], deltas: Sequence[float]) -> float:
    """Least-squares slope of log(delta) against n."""
    return float(np.polyfit(np.asarray(ns, dtype=float), np.log(deltas), 1)[0])


def rates_table(params: ParamsLike, counts_by_n: dict[int, Sequence[int]], eps: float,
                epsbar: float, f: Callable[[int], float] | None = None) -> list[dict]:
    """Rows of (n, delta_exact, delta_minilower, envelope).

    Without ``f`` the minilower column uses the smallest equilibrium count.
    """
    exact = rate_bound_from_counts(params, counts_by_n, eps, epsbar)
    ns = [int(n) for n in exact.ns]
    if f is None:
        def f(n):
            return float(np.min(counts_by_n[n]))
    order = rate_order(params, eps, epsbar, f, ns)
    return [{"n": n, "delta_exact": float(d), "delta_minilower": float(m), "envelope": float(e)}
            for n, d, m, e in zip(ns, exact.deltas, order.deltas, order.envelope)]


def write_rates_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["n", "delta_exact", "delta_minilower", "envelope"])
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})

