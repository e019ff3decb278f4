"""Seeded priority flooding (numba).

Pixels are popped by ``(surface value, insertion order)``; insertion order
starts with seed pixels in linear index order and neighbours are visited
up, left, right, down. Equal priorities therefore flood first-in first-out
and results are fully deterministic.

Surface values are replaced by their dense rank. Each rank owns a FIFO
bucket and a binary heap orders the non-empty ranks, which pops exactly in
``(value, insertion order)`` while plateaus cost no heap work.
"""

from __future__ import annotations

import numpy as np
from numba import njit

@njit(cache=True)
def _push(heap, size, key):
    k = size
    while k > 0:
        parent = (k - 1) >> 1
        if heap[parent] <= key:
            break
        heap[k] = heap[parent]
        k = parent
    heap[k] = key
    return size + 1


@njit(cache=True)
def _pop(heap, size):
    top = heap[0]
    size -= 1
    last = heap[size]
    k = 0
    while True:
        child = 2 * k + 1
        if child >= size:
            break
        if child + 1 < size and heap[child + 1] < heap[child]:
            child += 1
        if heap[child] >= last:
            break
        heap[k] = heap[child]
        k = child
    heap[k] = last
    return top, size


@njit(cache=True)
def _flood(rank, n_ranks, region, markers, height, width):
    # one FIFO bucket per rank, plus a heap of the ranks that are non-empty
    n = height * width
    out = np.zeros(n, dtype=np.int32)
    head = np.full(n_ranks, -1, dtype=np.int64)
    tail = np.full(n_ranks, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    pixel_of_age = np.empty(n, dtype=np.int64)
    ranks = np.empty(n_ranks, dtype=np.int64)
    n_active = 0
    age = 0
    for i in range(n):
        if markers[i] > 0 and region[i]:
            out[i] = markers[i]
            pixel_of_age[age] = i
            q = rank[i]
            if head[q] < 0:
                head[q] = age
                n_active = _push(ranks, n_active, q)
            else:
                nxt[tail[q]] = age
            tail[q] = age
            age += 1
    while n_active > 0:
        q = ranks[0]
        a = head[q]
        head[q] = nxt[a]
        if head[q] < 0:
            _, n_active = _pop(ranks, n_active)
        i = pixel_of_age[a]
        r = i // width
        c = i - r * width
        lab = out[i]
        for step in range(4):
            if step == 0:
                if r == 0:
                    continue
                j = i - width
            elif step == 1:
                if c == 0:
                    continue
                j = i - 1
            elif step == 2:
                if c == width - 1:
                    continue
                j = i + 1
            else:
                if r == height - 1:
                    continue
                j = i + width
            if region[j] and out[j] == 0:
                out[j] = lab
                pixel_of_age[age] = j
                qj = rank[j]
                if head[qj] < 0:
                    head[qj] = age
                    n_active = _push(ranks, n_active, qj)
                else:
                    nxt[tail[qj]] = age
                tail[qj] = age
                age += 1
    return out


def surface_rank(surface: np.ndarray) -> np.ndarray:
    """Dense rank of every surface value (equal values share a rank)."""
    flat = np.ascontiguousarray(surface, dtype=np.float64).ravel()
    _, inverse = np.unique(flat, return_inverse=True)
    return inverse.astype(np.int64).reshape(np.shape(surface))


def priority_flood(
    surface: np.ndarray | None,
    region: np.ndarray,
    markers: np.ndarray,
    rank: np.ndarray | None = None,
) -> np.ndarray:
    """Grow ``markers`` over ``region`` in order of increasing ``surface``.

    Marker pixels outside ``region`` are ignored; region pixels that no
    marker reaches stay 0. ``rank`` may pass a cached :func:`surface_rank`.
    """
    if rank is None:
        rank = surface_rank(surface)
    h, w = np.shape(rank)
    rank = np.ascontiguousarray(rank, dtype=np.int64).ravel()
    out = _flood(
        rank,
        int(rank.max(initial=0)) + 1,
        np.ascontiguousarray(region, dtype=np.bool_).ravel(),
        np.ascontiguousarray(markers, dtype=np.int32).ravel(),
        h,
        w,
    )
    return out.reshape(h, w)


@njit(cache=True)
def _bfs(region, markers, height, width):
    n = height * width
    out = np.zeros(n, dtype=np.int32)
    queue = np.empty(n, dtype=np.int64)
    tail = 0
    for i in range(n):
        if markers[i] > 0 and region[i]:
            out[i] = markers[i]
            queue[tail] = i
            tail += 1
    head = 0
    while head < tail:
        i = queue[head]
        head += 1
        r = i // width
        c = i - r * width
        lab = out[i]
        for step in range(4):
            if step == 0:
                if r == 0:
                    continue
                j = i - width
            elif step == 1:
                if c == 0:
                    continue
                j = i - 1
            elif step == 2:
                if c == width - 1:
                    continue
                j = i + 1
            else:
                if r == height - 1:
                    continue
                j = i + width
            if region[j] and out[j] == 0:
                out[j] = lab
                queue[tail] = j
                tail += 1
    return out


def geodesic_grow(markers: np.ndarray, region: np.ndarray) -> np.ndarray:
    """Assign region pixels to the geodesically nearest marker (4-steps).

    Same visiting order as :func:`priority_flood` on a flat surface.
    """
    markers = np.asarray(markers)
    h, w = markers.shape
    out = _bfs(
        np.ascontiguousarray(region, dtype=np.bool_).ravel(),
        np.ascontiguousarray(markers, dtype=np.int32).ravel(),
        h,
        w,
    )
    return out.reshape(h, w)
