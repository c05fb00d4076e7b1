import itertools
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from netlearn.game import GameParams
from netlearn.network import DirectedNetwork

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("default")


# ---------------------------------------------------------------- oracles

def naive_propagation(net: DirectedNetwork, exits):
    """Round-by-round set-union simulation with Python sets.

    Returns (arrival, counts) with arrival[j-1, i-1] the first round in
    which signal j is offered to agent i (n when never).
    """
    n = net.n
    inn = {i: [j for (j, v) in net.arcs if v == i] for i in net.agents}
    sets = {i: {i} for i in net.agents}
    arrival = np.full((n, n), n, dtype=int)
    for i in net.agents:
        arrival[i - 1, i - 1] = 0
    for t in range(1, n + 1):
        offered = {i: set().union(*(sets[u] for u in inn[i])) for i in net.agents}
        for i in net.agents:
            for j in offered[i]:
                if arrival[j - 1, i - 1] == n:
                    arrival[j - 1, i - 1] = t
        sets = {i: sets[i] | offered[i] if t <= exits[i - 1] else sets[i] for i in net.agents}
    reached = np.zeros((n, n), dtype=bool)
    for i in net.agents:
        for j in sets[i]:
            reached[j - 1, i - 1] = True
    counts = reached.sum(axis=0)
    return arrival, counts


def path_distance_oracle(net: DirectedNetwork, i: int) -> dict:
    """Shortest j -> i distance by enumerating every simple path."""
    out = {v: [w for (u, w) in net.arcs if u == v] for v in net.agents}
    best = {i: 0}
    for j in net.agents:
        stack = [(j, 0, frozenset([j]))]
        while stack:
            v, d, seen = stack.pop()
            if v != i and d >= best.get(j, net.n):
                continue  # cannot beat a path already found
            if v == i:
                best[j] = min(best.get(j, d), d)
                continue
            for w in out[v]:
                if w not in seen:
                    stack.append((w, d + 1, seen | {w}))
    return best


def brute_force_nash(params: GameParams, net: DirectedNetwork):
    """Every pure equilibrium by direct payoff comparison over the naive oracle."""
    from netlearn.network import max_path_lengths

    lmax = max_path_lengths(net)
    rb = params.rbar

    def u(i, prof):
        _, k = naive_propagation(net, prof)
        return rb ** prof[i] * (params.psi - 1.0 / (params.rho + params.rhobar * k[i]))

    found = []
    for prof in itertools.product(*(range(L + 1) for L in lmax)):
        ok = True
        for i in range(net.n):
            mine = u(i, prof)
            for alt in range(lmax[i] + 1):
                dev = list(prof)
                dev[i] = alt
                if u(i, dev) > mine + 1e-12:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            found.append(prof)
    return found


# ---------------------------------------------------------------- strategies

@st.composite
def networks(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    pairs = [(j, i) for j in range(1, n + 1) for i in range(1, n + 1) if i != j]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return DirectedNetwork(n, [p for p, m in zip(pairs, mask) if m])


@st.composite
def game_params(draw):
    rho = draw(st.floats(0.05, 5.0))
    rhobar = draw(st.floats(0.05, 5.0))
    psi = draw(st.floats(-1.0, 3.0))
    lam = draw(st.floats(0.1, 5.0))
    r = draw(st.floats(0.1, 5.0))
    return GameParams(rho, rhobar, psi, lam, r)


def random_network(rng: np.random.Generator, n: int, p: float) -> DirectedNetwork:
    arcs = [(j, i) for j in range(1, n + 1) for i in range(1, n + 1)
            if i != j and rng.random() < p]
    return DirectedNetwork(n, arcs)


def random_params(rng: np.random.Generator) -> GameParams:
    return GameParams(float(rng.uniform(0.1, 3)), float(rng.uniform(0.1, 3)),
                      float(rng.uniform(-0.5, 2.5)), float(rng.uniform(0.2, 3)),
                      float(rng.uniform(0.2, 3)))


@pytest.fixture
def four():
    return DirectedNetwork(4, [(2, 1), (3, 1), (4, 3)])


@pytest.fixture
def four_params():
    return GameParams(0.5, 0.5, 1.0, 1.0, 1.0)


@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run a test against each kernel implementation."""
    from netlearn import _pykernels, kernels

    if request.param == "compiled":
        if kernels.compiled_backend is None:
            pytest.skip("compiled kernels not built")
        impl = kernels.compiled_backend
    else:
        impl = _pykernels
    for name in ("arrival_table", "exit_curve", "nash_profiles"):
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


# ---------------------------------------------------------------- acceptance summary

ACCEPTANCE_RESULTS = {}


def record(criterion: str, passed: bool, detail: str = ""):
    ACCEPTANCE_RESULTS[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[0][2:])):
        ok, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def pytest_configure(config):
    os.environ.setdefault("NETLEARN_THREADS", "1")
