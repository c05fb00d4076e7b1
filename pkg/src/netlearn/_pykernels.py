"""Pure numpy fallback for the propagation and enumeration kernels.

Information sets are kept as an ``n x n`` boolean matrix ``S`` with
``S[v, j]`` true when agent ``v`` holds signal ``j``; one communication
round is a boolean matrix product with the adjacency matrix. All indices
are 0-based. Signatures mirror ``_ckernels``.
"""
from __future__ import annotations

import itertools

import numpy as np


def _adjacency(in_ptr, in_idx) -> np.ndarray:
    n = len(in_ptr) - 1
    adj_in = np.zeros((n, n), dtype=np.float32)  # adj_in[v, u] = 1 for arc u -> v
    for v in range(n):
        adj_in[v, in_idx[in_ptr[v]:in_ptr[v + 1]]] = 1.0
    return adj_in


def _simulate(adj_in, exits, rounds, arrival=None):
    """Run ``rounds`` communication rounds and return the final sets.

    If ``arrival`` is given it is filled with first-offer rounds, indexed
    ``arrival[j, v]``.
    """
    n = adj_in.shape[0]
    sets = np.eye(n, dtype=bool)
    for t in range(1, rounds + 1):
        offered = (adj_in @ sets.astype(np.float32)) > 0.5
        if arrival is not None:
            fresh = offered & (arrival.T == n)
            arrival.T[fresh] = t
        absorbing = (exits >= t)[:, None]
        updated = sets | (offered & absorbing)
        if np.array_equal(updated, sets):
            break
        sets = updated
    return sets


def arrival_table(in_ptr, in_idx, out_ptr, out_idx, exits):
    n = len(in_ptr) - 1
    exits = np.asarray(exits, dtype=np.int64)
    arrival = np.full((n, n), n, dtype=np.int32)
    np.fill_diagonal(arrival, 0)
    _simulate(_adjacency(in_ptr, in_idx), exits, n - 1, arrival)
    return arrival


def exit_curve(in_ptr, in_idx, out_ptr, out_idx, exits, i, horizon):
    exits = np.array(exits, dtype=np.int64)
    exits[i] = horizon
    curve = np.ones(horizon + 1, dtype=np.int64)
    adj_in = _adjacency(in_ptr, in_idx)
    n = adj_in.shape[0]
    sets = np.eye(n, dtype=bool)
    for t in range(1, horizon + 1):
        offered = (adj_in @ sets.astype(np.float32)) > 0.5
        updated = sets | (offered & (exits >= t)[:, None])
        curve[t] = updated[i].sum()
        if np.array_equal(updated, sets):
            curve[t:] = curve[t]
            break
        sets = updated
    return curve


def nash_profiles(in_ptr, in_idx, out_ptr, out_idx, lmax, utility, tol):
    lmax = np.asarray(lmax, dtype=np.int64)
    n = len(lmax)
    horizon = int(lmax.max(initial=0))
    adj_in = _adjacency(in_ptr, in_idx)
    rounds = np.arange(horizon + 1)
    valid = rounds[:, None] <= lmax[None, :]
    found = []
    for profile in itertools.product(*(range(L + 1) for L in lmax)):
        exits = np.array(profile, dtype=np.int64)
        arrival = np.full((n, n), n, dtype=np.int32)
        np.fill_diagonal(arrival, 0)
        _simulate(adj_in, exits, horizon, arrival)
        # counts[l, i] = signals agent i would hold after waiting l rounds
        counts = (arrival[None, :, :] <= rounds[:, None, None]).sum(axis=1)
        values = np.where(valid, utility[counts, rounds[:, None]], -np.inf)
        chosen = values[exits, np.arange(n)]
        if np.all(chosen >= values.max(axis=0) - tol):
            found.append(profile)
    return np.array(found, dtype=np.int64).reshape(len(found), n)
