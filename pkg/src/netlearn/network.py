"""Directed communication networks, shortest-path balls and growing societies.

Agents are numbered 1..n everywhere in the public API. An arc ``(j, i)``
means agent ``j`` can send information to agent ``i`` directly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

SOCIETY_KINDS = (
    "isolated",
    "complete",
    "binomial_root_to_leaf",
    "binomial_leaf_to_root",
    "four_agent_copies",
    "custom",
)


@dataclass(frozen=True)
class DirectedNetwork:
    n: int
    arcs: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __init__(self, n: int, arcs: Iterable[Sequence[int]] = ()):
        if int(n) != n or n < 1:
            raise InputError(f"agent count must be a positive integer, got {n!r}")
        n = int(n)
        clean = set()
        for arc in arcs:
            if len(arc) != 2:
                raise InputError(f"arc must be a pair (j, i), got {arc!r}")
            j, i = int(arc[0]), int(arc[1])
            if not (1 <= j <= n and 1 <= i <= n):
                raise InputError(f"arc {(j, i)} has an endpoint outside 1..{n}")
            if j == i:
                raise InputError(f"self-arc at agent {i} is not allowed")
            clean.add((j, i))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "arcs", frozenset(clean))

    def __repr__(self) -> str:
        return f"DirectedNetwork(n={self.n}, arcs={len(self.arcs)})"

    @property
    def agents(self) -> range:
        return range(1, self.n + 1)

    def check_agent(self, i: int) -> int:
        if int(i) != i or not 1 <= i <= self.n:
            raise InputError(f"unknown agent {i!r}; agents are 1..{self.n}")
        return int(i)

    @cached_property
    def _sorted_arcs(self) -> np.ndarray:
        if not self.arcs:
            return np.zeros((0, 2), dtype=np.int32)
        return np.array(sorted(self.arcs), dtype=np.int32) - 1

    @cached_property
    def csr_out(self) -> tuple[np.ndarray, np.ndarray]:
        """0-based CSR (indptr, indices) of out-neighbours."""
        return _csr(self.n, self._sorted_arcs[:, 0], self._sorted_arcs[:, 1])

    @cached_property
    def csr_in(self) -> tuple[np.ndarray, np.ndarray]:
        """0-based CSR (indptr, indices) of in-neighbours."""
        return _csr(self.n, self._sorted_arcs[:, 1], self._sorted_arcs[:, 0])

    def in_neighbors(self, i: int) -> list[int]:
        ptr, idx = self.csr_in
        k = self.check_agent(i) - 1
        return [int(v) + 1 for v in idx[ptr[k]:ptr[k + 1]]]

    def distances_to(self, i: int) -> np.ndarray:
        """Shortest-path length from every agent to ``i`` (-1 if unreachable).

        Index 0 is agent 1.
        """
        i = self.check_agent(i)
        ptr, idx = self.csr_in
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[i - 1] = 0
        frontier = np.array([i - 1])
        d = 0
        while frontier.size:
            d += 1
            starts, lens = ptr[frontier], ptr[frontier + 1] - ptr[frontier]
            # flat positions of every in-neighbour of the frontier
            pos = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(lens.sum())
            nb = idx[pos]
            frontier = np.unique(nb[dist[nb] < 0])
            dist[frontier] = d
        return dist

    @cached_property
    def max_path_lengths(self) -> np.ndarray:
        """Longest shortest path into each agent, read-only and cached."""
        out = np.array([self.distances_to(i).max(initial=0) for i in self.agents], dtype=np.int64)
        out.setflags(write=False)
        return out

    def to_dict(self) -> dict:
        return {"n": self.n, "arcs": [list(a) for a in sorted(self.arcs)]}

    @classmethod
    def from_dict(cls, data: dict) -> "DirectedNetwork":
        try:
            return cls(data["n"], data.get("arcs", []))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed network object: {exc}") from exc


def _csr(n: int, rows: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int32)
    np.add.at(indptr, rows + 1, 1)
    return np.cumsum(indptr, dtype=np.int32), np.ascontiguousarray(cols, dtype=np.int32)


def ball(net: DirectedNetwork, i: int, l: int) -> set[int]:
    """Agents whose directed shortest path to ``i`` has length at most ``l``."""
    if l < 0:
        raise InputError(f"radius must be non-negative, got {l}")
    dist = net.distances_to(i)
    return {int(j) + 1 for j in np.flatnonzero((dist >= 0) & (dist <= l))}


def ball_sizes(net: DirectedNetwork, i: int) -> np.ndarray:
    """``|B_{i,l}|`` for ``l = 0..max_path_length(i)``."""
    dist = net.distances_to(i)
    reach = dist[dist >= 0]
    return np.cumsum(np.bincount(reach, minlength=int(reach.max()) + 1))


def max_path_length(net: DirectedNetwork, i: int) -> int:
    # Unreachable agents are ignored; an agent nobody reaches gets 0.
    return int(net.max_path_lengths[net.check_agent(i) - 1])


def max_path_lengths(net: DirectedNetwork) -> np.ndarray:
    return net.max_path_lengths.copy()


@dataclass(frozen=True)
class Society:
    """A growing sequence of networks, smallest first."""

    networks: tuple[DirectedNetwork, ...]
    kind: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "networks", tuple(self.networks))
        if not self.networks:
            raise InputError("a society needs at least one network")
        if self.kind not in SOCIETY_KINDS:
            raise InputError(f"unknown society kind {self.kind!r}")
        check_link_persistence(self.networks)

    @property
    def sizes(self) -> list[int]:
        return [g.n for g in self.networks]

    def __len__(self) -> int:
        return len(self.networks)

    def __iter__(self):
        return iter(self.networks)

    def __getitem__(self, k):
        return self.networks[k]

    @property
    def largest(self) -> DirectedNetwork:
        return self.networks[-1]

    def to_list(self) -> list[dict]:
        return [g.to_dict() for g in self.networks]


def check_link_persistence(networks: Sequence[DirectedNetwork]) -> None:
    for small, big in zip(networks, networks[1:]):
        if big.n <= small.n:
            raise InputError(
                f"society populations must strictly increase ({small.n} -> {big.n})"
            )
        missing = small.arcs - big.arcs
        if missing:
            raise InputError(
                f"link persistence violated between n={small.n} and n={big.n}: "
                f"{sorted(missing)[:5]} dropped"
            )


def isolated(n: int) -> DirectedNetwork:
    return DirectedNetwork(n)


def complete(n: int) -> DirectedNetwork:
    return DirectedNetwork(n, ((j, i) for j in range(1, n + 1) for i in range(1, n + 1) if i != j))


def binomial_depth(n: int) -> int:
    """Number of layers ``m`` with ``n = 2**m - 1``."""
    m = (n + 1).bit_length() - 1
    if n < 1 or 2**m - 1 != n:
        raise InputError(f"binomial tree sizes must be 2**m - 1, got {n}")
    return m


def binomial_tree(n: int, root_to_leaf: bool = True) -> DirectedNetwork:
    # Heap numbering: children of v are 2v and 2v+1, so layer j holds 2**(j-1)..2**j - 1.
    binomial_depth(n)
    edges = [(v // 2, v) for v in range(2, n + 1)]
    if not root_to_leaf:
        edges = [(c, p) for p, c in edges]
    return DirectedNetwork(n, edges)


def layer_of(agent: int) -> int:
    """Layer (1 = root) of a heap-numbered binomial tree agent."""
    return int(agent).bit_length()


def four_agent() -> DirectedNetwork:
    """Agents 2 and 3 send to agent 1, agent 4 sends to agent 3."""
    return DirectedNetwork(4, [(2, 1), (3, 1), (4, 3)])


def disjoint_copies(base: DirectedNetwork, copies: int) -> DirectedNetwork:
    arcs = [(j + c * base.n, i + c * base.n) for c in range(copies) for j, i in base.arcs]
    return DirectedNetwork(base.n * copies, arcs)


def make_society(kind: str, sizes: Sequence[int]) -> Society:
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise InputError("sizes must be non-empty")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InputError(f"sizes must be strictly increasing, got {sizes}")
    if kind == "isolated":
        nets = [isolated(s) for s in sizes]
    elif kind == "complete":
        nets = [complete(s) for s in sizes]
    elif kind == "binomial_root_to_leaf":
        nets = [binomial_tree(s, root_to_leaf=True) for s in sizes]
    elif kind == "binomial_leaf_to_root":
        nets = [binomial_tree(s, root_to_leaf=False) for s in sizes]
    elif kind == "four_agent_copies":
        if any(s % 4 for s in sizes):
            raise InputError(f"four_agent_copies sizes must be multiples of 4, got {sizes}")
        nets = [disjoint_copies(four_agent(), s // 4) for s in sizes]
    else:
        raise InputError(f"no generator for society kind {kind!r}")
    return Society(tuple(nets), kind)


def load_network(path: str | Path) -> DirectedNetwork:
    with open(path) as fh:
        return DirectedNetwork.from_dict(json.load(fh))


def load_society(path: str | Path, kind: str = "custom") -> Society:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise InputError("a society file must hold a JSON array of networks")
    return Society(tuple(DirectedNetwork.from_dict(d) for d in data), kind)


def save_network(net: DirectedNetwork, path: str | Path) -> None:
    Path(path).write_text(json.dumps(net.to_dict()))


def save_society(society: Society, path: str | Path) -> None:
    Path(path).write_text(json.dumps(society.to_list()))
