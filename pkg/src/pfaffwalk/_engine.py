"""Numba kernels for the particle simulator.

Uniformization: every particle carries a clock of rate ``rmax`` (the largest
per-site total jump rate); at a ring the particle jumps left with probability
``left[i] / rmax``, right with probability ``right[i] / rmax`` and otherwise
nothing happens. Occupied sites are kept in a dense array with swap-removal so
that picking a uniform particle and deleting one are O(1).
"""

from __future__ import annotations

import os

import numba
import numpy as np
from numba import njit, prange

# Skip TBB probing (old system TBB triggers a warning on every import).
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"

# Boundary codes.
WALL = 0
PERIODIC = 1
SINK = 2

# Reaction codes.
MIXED = 0
THINNING = 1
STRONG = 2

# Colours.
EMPTY = 0
RED = 1
BLUE = 2


@njit(cache=True, inline="always")
def _remove(pos, where, n, i):
    # Delete the particle at site i; returns the new count.
    k = where[i]
    last = pos[n - 1]
    pos[k] = last
    where[last] = k
    where[i] = -1
    return n - 1


@njit(cache=True)
def _evolve(occ, colour, left, right, theta, t, boundary, reaction):
    """Advance ``occ`` (and ``colour``) in place to time ``t``; returns the jump count."""
    W = occ.shape[0]
    rmax = 0.0
    for i in range(W):
        r = left[i] + right[i]
        if r > rmax:
            rmax = r
    pos = np.empty(W, np.int64)
    where = np.full(W, -1, np.int64)
    n = 0
    for i in range(W):
        if occ[i]:
            pos[n] = i
            where[i] = n
            n += 1
    events = 0
    if rmax == 0.0:
        return events
    now = 0.0
    while n > 0:
        now += np.random.exponential(1.0 / (n * rmax))
        if now > t:
            break
        i = pos[np.random.randint(0, n)]
        u = np.random.random() * rmax
        if u < left[i]:
            j = i - 1
        elif u < left[i] + right[i]:
            j = i + 1
        else:
            continue
        events += 1
        if j < 0 or j >= W:
            if boundary == PERIODIC:
                j = j % W
            else:
                # Only a sink can have a nonzero outward rate.
                occ[i] = 0
                colour[i] = EMPTY
                n = _remove(pos, where, n, i)
                continue
        c_from = colour[i]
        occ[i] = 0
        colour[i] = EMPTY
        if occ[j] == 0:
            occ[j] = 1
            colour[j] = c_from
            k = where[i]
            pos[k] = j
            where[j] = k
            where[i] = -1
            continue
        c_to = colour[j]
        if reaction == MIXED:
            if np.random.random() < theta:
                occ[j] = 0
                n = _remove(pos, where, n, i)
                n = _remove(pos, where, n, j)
            else:
                n = _remove(pos, where, n, i)
        else:
            n = _remove(pos, where, n, i)
            if reaction == THINNING:
                if c_from == BLUE and c_to == BLUE:
                    if np.random.random() < theta:
                        colour[j] = RED
                elif c_from == BLUE or c_to == BLUE:
                    colour[j] = BLUE
                else:
                    colour[j] = RED
            else:
                if c_from != c_to:
                    colour[j] = RED if np.random.random() < 0.5 else BLUE
    return events


@njit(cache=True)
def run_one(occ0, colour0, left, right, theta, t, boundary, reaction, seed):
    np.random.seed(seed)
    occ = occ0.copy()
    colour = colour0.copy()
    events = _evolve(occ, colour, left, right, theta, t, boundary, reaction)
    return occ, colour, events


@njit(cache=True, parallel=True)
def run_many(occ0, colour0, left, right, theta, t, boundary, reaction, seeds):
    N = seeds.shape[0]
    W = occ0.shape[0]
    out = np.empty((N, W), np.uint8)
    cols = np.empty((N, W), np.uint8)
    events = np.empty(N, np.int64)
    for m in prange(N):
        np.random.seed(seeds[m])
        occ = occ0.copy()
        colour = colour0.copy()
        events[m] = _evolve(occ, colour, left, right, theta, t, boundary, reaction)
        out[m] = occ
        cols[m] = colour
    return out, cols, events


@njit(cache=True, parallel=True)
def run_many_coloured(occ0, left, right, theta, t, boundary, reaction, p_blue, seeds):
    # Colours are drawn inside the trajectory's own stream.
    N = seeds.shape[0]
    W = occ0.shape[0]
    out = np.empty((N, W), np.uint8)
    cols = np.empty((N, W), np.uint8)
    events = np.empty(N, np.int64)
    for m in prange(N):
        np.random.seed(seeds[m])
        occ = occ0.copy()
        colour = np.zeros(W, np.uint8)
        for i in range(W):
            if occ[i]:
                colour[i] = BLUE if np.random.random() < p_blue else RED
        events[m] = _evolve(occ, colour, left, right, theta, t, boundary, reaction)
        out[m] = occ
        cols[m] = colour
    return out, cols, events
