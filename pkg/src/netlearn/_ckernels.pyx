# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation and enumeration kernels.

Same signatures and results as ``_pykernels``. Arrival tables use a
per-source breadth-first search in which a node forwards a signal only if
it absorbed it (first offer no later than its exit round); exit curves use
fixed-width ``uint64`` bitsets advanced one communication round at a time.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int32_t, int64_t
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef void _bfs_all(int n, const int32_t[::1] out_ptr, const int32_t[::1] out_idx,
                   const int64_t[::1] exits, int64_t depth, int32_t* arr,
                   int32_t* queue) noexcept nogil:
    # arr[j * n + v]: first round signal j is offered to v (n = unreached)
    cdef int j, head, tail, u, v, e
    cdef int32_t t
    for j in range(n * n):
        arr[j] = n
    for j in range(n):
        arr[j * n + j] = 0
        queue[0] = j
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            t = arr[j * n + u]
            if u != j and t > exits[u]:
                continue
            if t >= depth:
                continue
            for e in range(out_ptr[u], out_ptr[u + 1]):
                v = out_idx[e]
                if arr[j * n + v] == n:
                    arr[j * n + v] = t + 1
                    queue[tail] = v
                    tail += 1


def arrival_table(const int32_t[::1] in_ptr, const int32_t[::1] in_idx,
                  const int32_t[::1] out_ptr, const int32_t[::1] out_idx, exits):
    cdef int n = in_ptr.shape[0] - 1
    cdef const int64_t[::1] ex = np.ascontiguousarray(exits, dtype=np.int64)
    result = np.empty((n, n), dtype=np.int32)
    cdef int32_t[:, ::1] res = result
    cdef int32_t* queue = <int32_t*> malloc(max(n, 1) * sizeof(int32_t))
    if queue == NULL:
        raise MemoryError()
    try:
        with nogil:
            _bfs_all(n, out_ptr, out_idx, ex, n, &res[0, 0], queue)
    finally:
        free(queue)
    return result


def exit_curve(const int32_t[::1] in_ptr, const int32_t[::1] in_idx,
               const int32_t[::1] out_ptr, const int32_t[::1] out_idx,
               exits, int i, int horizon):
    cdef int n = in_ptr.shape[0] - 1
    cdef int words = (n + 63) // 64
    cdef int64_t[::1] ex = np.array(exits, dtype=np.int64)
    ex[i] = horizon
    curve_arr = np.ones(horizon + 1, dtype=np.int64)
    cdef int64_t[::1] curve = curve_arr
    cdef uint64_t* cur = <uint64_t*> malloc(max(n * words, 1) * sizeof(uint64_t))
    cdef uint64_t* nxt = <uint64_t*> malloc(max(n * words, 1) * sizeof(uint64_t))
    cdef uint64_t* tmp
    cdef int t, v, e, u, w, changed
    cdef int64_t c
    cdef uint64_t before
    if cur == NULL or nxt == NULL:
        free(cur)
        free(nxt)
        raise MemoryError()
    with nogil:
        memset(cur, 0, n * words * sizeof(uint64_t))
        for v in range(n):
            cur[v * words + v // 64] = (<uint64_t> 1) << (v % 64)
        for t in range(1, horizon + 1):
            memcpy(nxt, cur, n * words * sizeof(uint64_t))
            changed = 0
            for v in range(n):
                if ex[v] < t:
                    continue
                for e in range(in_ptr[v], in_ptr[v + 1]):
                    u = in_idx[e]
                    for w in range(words):
                        before = nxt[v * words + w]
                        nxt[v * words + w] = before | cur[u * words + w]
                        if nxt[v * words + w] != before:
                            changed = 1
            tmp = cur
            cur = nxt
            nxt = tmp
            c = 0
            for w in range(words):
                c += __builtin_popcountll(cur[i * words + w])
            curve[t] = c
            if not changed:
                for v in range(t + 1, horizon + 1):
                    curve[v] = c
                break
    free(cur)
    free(nxt)
    return curve_arr


def nash_profiles(const int32_t[::1] in_ptr, const int32_t[::1] in_idx,
                  const int32_t[::1] out_ptr, const int32_t[::1] out_idx,
                  lmax, utility, double tol):
    cdef int n = in_ptr.shape[0] - 1
    cdef const int64_t[::1] lm = np.ascontiguousarray(lmax, dtype=np.int64)
    cdef const double[:, ::1] util = np.ascontiguousarray(utility, dtype=np.float64)
    cdef int64_t horizon = 0
    cdef int i, j, l, k
    for i in range(n):
        if lm[i] > horizon:
            horizon = lm[i]
    cdef int64_t[::1] prof = np.zeros(n, dtype=np.int64)
    cdef int32_t* arr = <int32_t*> malloc(max(n * n, 1) * sizeof(int32_t))
    cdef int32_t* queue = <int32_t*> malloc(max(n, 1) * sizeof(int32_t))
    cdef int64_t* hist = <int64_t*> malloc((horizon + 2) * sizeof(int64_t))
    cdef double best, mine, val
    cdef bint is_nash
    found = []
    if arr == NULL or queue == NULL or hist == NULL:
        free(arr)
        free(queue)
        free(hist)
        raise MemoryError()
    try:
        while True:
            with nogil:
                _bfs_all(n, out_ptr, out_idx, prof, horizon, arr, queue)
                is_nash = True
                for i in range(n):
                    if lm[i] == 0:
                        continue
                    for l in range(lm[i] + 1):
                        hist[l] = 0
                    for j in range(n):
                        k = arr[j * n + i]
                        if k <= lm[i]:
                            hist[k] += 1
                    # hist -> cumulative signal counts per waiting time
                    for l in range(1, lm[i] + 1):
                        hist[l] += hist[l - 1]
                    mine = util[hist[prof[i]], prof[i]]
                    best = mine
                    for l in range(lm[i] + 1):
                        val = util[hist[l], l]
                        if val > best:
                            best = val
                    if mine < best - tol:
                        is_nash = False
                        break
            if is_nash:
                found.append(tuple(prof))
            # mixed-radix increment, last agent fastest
            i = n - 1
            while i >= 0:
                if prof[i] < lm[i]:
                    prof[i] += 1
                    break
                prof[i] = 0
                i -= 1
            if i < 0:
                break
    finally:
        free(arr)
        free(queue)
        free(hist)
    return np.array(found, dtype=np.int64).reshape(len(found), n)
