"""Compiled traversal kernels over CSR arrays (``indptr``, ``indices``)."""

from __future__ import annotations

import numpy as np
from numba import njit, prange

# roots handled together by the bit-parallel cascade kernel, one per bit
BATCH = 64


@njit(cache=True)
def bfs_epoch(indptr, indices, root, mark, epoch, dist, queue):
    """Single-source BFS using ``mark == epoch`` as the visited test.

    ``dist`` holds levels for the nodes in ``queue[:count]``; nothing needs
    clearing between calls as long as ``epoch`` increases. Returns
    ``(count, max_level, level_sum)``.
    """
    mark[root] = epoch
    dist[root] = 0
    queue[0] = root
    head = 0
    tail = 1
    max_level = 0
    level_sum = 0
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u] + 1
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if mark[v] != epoch:
                mark[v] = epoch
                dist[v] = du
                queue[tail] = v
                tail += 1
                level_sum += du
                if du > max_level:
                    max_level = du
    return tail, max_level, level_sum


@njit(cache=True)
def cascade_one(indptr, indices, root, mark, epoch, dist, queue):
    count, depth, _ = bfs_epoch(indptr, indices, root, mark, epoch, dist, queue)
    # every forward neighbor of a member is itself a member, so a member is a
    # leaf of the cascade exactly when it has no forward neighbors at all
    leaves = 0
    for k in range(count):
        u = queue[k]
        if indptr[u + 1] == indptr[u]:
            leaves += 1
    return count, depth, leaves


@njit(cache=True)
def cascades_scalar(indptr, indices, roots, size_out, depth_out, leaves_out):
    n = indptr.size - 1
    mark = np.zeros(n, np.int64)
    dist = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    for k in range(roots.size):
        s, d, l = cascade_one(indptr, indices, roots[k], mark, k + 1, dist, queue)
        size_out[k] = s
        depth_out[k] = d
        leaves_out[k] = l


@njit(cache=True)
def _sliced_add(counter, word):
    # bit-sliced counter: counter[j] holds bit j of 64 independent counts
    carry = word
    j = 0
    while carry != 0:
        t = counter[j] & carry
        counter[j] ^= carry
        carry = t
        j += 1


@njit(cache=True)
def _sliced_read(counter, b):
    total = 0
    one = np.uint64(1)
    for j in range(counter.size):
        if (counter[j] >> np.uint64(b)) & one:
            total += 1 << j
    return total


@njit(cache=True)
def _cascade_chunk(indptr, indices, is_sink, roots, first_batch, stride, size_out, depth_out, leaves_out):
    n = indptr.size - 1
    n_roots = roots.size
    visited = np.zeros(n, np.uint64)
    frontier = np.zeros(n, np.uint64)
    nxt = np.zeros(n, np.uint64)
    active = np.empty(n, np.int64)
    fresh = np.empty(n, np.int64)
    touched = np.empty(n, np.int64)
    nbits = 2
    while (1 << nbits) <= n:
        nbits += 1
    c_size = np.zeros(nbits + 1, np.uint64)
    c_leaf = np.zeros(nbits + 1, np.uint64)
    depth = np.zeros(BATCH, np.int64)
    one = np.uint64(1)

    start = first_batch * BATCH
    while start < n_roots:
        width = min(BATCH, n_roots - start)
        n_active = 0
        n_touched = 0
        for b in range(width):
            r = roots[start + b]
            bit = one << np.uint64(b)
            if visited[r] == 0:
                touched[n_touched] = r
                n_touched += 1
                active[n_active] = r
                n_active += 1
            visited[r] |= bit
            frontier[r] |= bit
            depth[b] = 0

        level = 0
        while n_active > 0:
            level += 1
            n_fresh = 0
            for a in range(n_active):
                u = active[a]
                f = frontier[u]
                frontier[u] = 0
                for e in range(indptr[u], indptr[u + 1]):
                    v = indices[e]
                    new = f & ~visited[v]
                    if new != 0:
                        if visited[v] == 0:
                            touched[n_touched] = v
                            n_touched += 1
                        if nxt[v] == 0:
                            fresh[n_fresh] = v
                            n_fresh += 1
                        nxt[v] |= new
                        visited[v] |= new
            reached = np.uint64(0)
            for a in range(n_fresh):
                v = fresh[a]
                frontier[v] = nxt[v]
                nxt[v] = 0
                reached |= frontier[v]
                active[a] = v
            n_active = n_fresh
            for b in range(width):
                if (reached >> np.uint64(b)) & one:
                    depth[b] = level

        c_size[:] = 0
        c_leaf[:] = 0
        for t in range(n_touched):
            v = touched[t]
            w = visited[v]
            visited[v] = 0
            _sliced_add(c_size, w)
            if is_sink[v]:
                _sliced_add(c_leaf, w)
        for b in range(width):
            size_out[start + b] = _sliced_read(c_size, b)
            leaves_out[start + b] = _sliced_read(c_leaf, b)
            depth_out[start + b] = depth[b]
        start += stride * BATCH


@njit(cache=True, parallel=True)
def cascades_bitparallel(indptr, indices, roots, n_chunks, size_out, depth_out, leaves_out):
    """Cascade size/depth/leaves for many roots, 64 roots per BFS sweep.

    Each node carries a 64-bit word saying which roots of the current batch
    have reached it; one level-synchronous sweep advances all 64 BFS fronts.
    Batches are dealt round-robin to ``n_chunks`` workers, each with private
    arrays, and results are written by root position.
    """
    is_sink = np.diff(indptr) == 0
    for c in prange(n_chunks):
        _cascade_chunk(indptr, indices, is_sink, roots, c, n_chunks, size_out, depth_out, leaves_out)


@njit(cache=True, parallel=True)
def geodesic_sums(indptr, indices, sources, n_chunks, reached_out, dist_sum_out, max_out):
    """Per-source count of reached nodes (excluding the source), distance sum, eccentricity."""
    n = indptr.size - 1
    k = sources.size
    for c in prange(n_chunks):
        mark = np.zeros(n, np.int64)
        dist = np.zeros(n, np.int64)
        queue = np.empty(n, np.int64)
        epoch = 0
        for s in range(c, k, n_chunks):
            epoch += 1
            count, mx, total = bfs_epoch(indptr, indices, sources[s], mark, epoch, dist, queue)
            reached_out[s] = count - 1
            dist_sum_out[s] = total
            max_out[s] = mx


@njit(cache=True)
def multi_source_reach(indptr, indices, seeds):
    """Boolean mask of nodes reachable from any seed (seeds included)."""
    n = indptr.size - 1
    seen = np.zeros(n, np.bool_)
    queue = np.empty(n, np.int64)
    tail = 0
    for s in seeds:
        if not seen[s]:
            seen[s] = True
            queue[tail] = s
            tail += 1
    head = 0
    while head < tail:
        u = queue[head]
        head += 1
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if not seen[v]:
                seen[v] = True
                queue[tail] = v
                tail += 1
    return seen
