"""Compiled inner loops.

Event ``k`` of a stream with key ``s`` is a pure function of ``(s, k)``: its three
64-bit words are SplitMix64 outputs at counter positions ``3k, 3k+1, 3k+2``.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_INV53 = 1.0 / 9007199254740992.0

# run_events status codes
REACHED_END = 0
HIT_LIMIT = 1
VIOLATION = 2


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def stream_key(seed):
    return mix64(np.uint64(seed) + _GOLDEN)


@njit(cache=True)
def _unit(key, counter):
    # uniform in [0, 1) with 53 random bits
    w = mix64(key + (counter + _ONE) * _GOLDEN)
    return np.float64(w >> _S11) * _INV53


@njit(cache=True)
def event_draws(key, k, n_bonds, p):
    """(bond, rightward, gap) of event ``k`` over ``n_bonds`` bonds."""
    c = np.uint64(3) * np.uint64(k)
    bond = np.int64(_unit(key, c) * n_bonds)
    if bond >= n_bonds:
        bond = n_bonds - 1
    right = _unit(key, c + _ONE) < p
    gap = -np.log1p(-_unit(key, c + np.uint64(2))) / n_bonds
    return bond, right, gap


@njit(cache=True)
def run_events(occ, flux, ring, offset, n_master, origin_bond, key, p,
               k, t, t_end, max_events, lo_masks, hi_masks):
    """Apply shared events to bit-packed replicas until ``t_end`` or ``max_events``.

    ``occ[i]`` holds one occupancy bit per replica at lattice index ``i``.  Events are
    drawn over ``n_master`` bonds; window bond ``b = master - offset`` and bonds
    outside ``[0, n_bonds)`` are skipped.  After each applied jump the two touched
    sites are checked against every declared ordering pair ``lo <= hi``.

    Returns ``(k, t, applied, status, bad_site)``; on a violation the offending
    event has been applied and counted.
    """
    n_sites = occ.shape[0]
    n_bonds = n_sites if ring else n_sites - 1
    n_pairs = lo_masks.shape[0]
    applied = 0
    while applied < max_events:
        bond, right, gap = event_draws(key, k, n_master, p)
        tn = t + gap
        if tn > t_end:
            return k, t, applied, REACHED_END, -1
        t = tn
        k += 1
        applied += 1
        b = bond - offset
        if b < 0 or b >= n_bonds:
            continue
        x = b
        y = b + 1
        if y == n_sites:
            y = 0
        if right:
            src = x
            dst = y
        else:
            src = y
            dst = x
        m = occ[src] & ~occ[dst]
        if m == _ZERO:
            continue
        occ[src] = occ[src] ^ m
        occ[dst] = occ[dst] | m
        if b == origin_bond:
            d = -1 if right else 1
            r = 0
            while m != _ZERO:
                if m & _ONE:
                    flux[r] += d
                m = m >> _ONE
                r += 1
        for j in range(n_pairs):
            lo = lo_masks[j]
            hi = hi_masks[j]
            if (occ[x] & lo) != _ZERO and (occ[x] & hi) == _ZERO:
                return k, t, applied, VIOLATION, x
            if (occ[y] & lo) != _ZERO and (occ[y] & hi) == _ZERO:
                return k, t, applied, VIOLATION, y
    return k, t, applied, HIT_LIMIT, -1


@njit(cache=True)
def count_events(key, n_bonds, p, t_end):
    """Number of stream events with time ``<= t_end`` (no state is touched)."""
    t = 0.0
    k = 0
    while True:
        _, _, gap = event_draws(key, k, n_bonds, p)
        if t + gap > t_end:
            return k
        t += gap
        k += 1
