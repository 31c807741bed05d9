"""Hot loops over symbol trajectories.

Each kernel has a numba implementation (``*_nb``) and a pure-numpy one
(``*_np``) with the same signature and bit-identical results. The public names
are bound to the numba versions unless numba is missing or the environment
variable ``BCLAB_DISABLE_NUMBA`` is set to a truthy value.

Symbols are read through a *source*: a tuple ``(mode, omega, w_lo, w_hi, key,
cdf, p)``. Mode 0 reads a materialized window ``omega`` covering coordinates
``[w_lo, w_hi]``; mode 1 regenerates an iid finite-alphabet symbol from a
counter-based hash of ``(key, coordinate)`` and the cumulative table ``cdf``;
mode 2 does the same for the geometric law with success parameter ``p``.
"""

from __future__ import annotations

import bisect
import os

import numpy as np

MODE_WINDOW = 0
MODE_IID = 1
MODE_GEOMETRIC = 2

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_ONE = np.uint64(1)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

# Returned by the scan kernels in their error slot.
ERR_NONE = 0
ERR_WINDOW = 1
ERR_UNRESOLVED = 2


def _flag_disabled() -> bool:
    return os.environ.get("BCLAB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

NUMBA_ENABLED = HAVE_NUMBA and not _flag_disabled()


def _njit(**kw):
    if not HAVE_NUMBA:
        return lambda f: f
    return numba.njit(cache=True, **kw)


# ---------------------------------------------------------------------------
# counter-based uniforms (SplitMix64 output function)
# ---------------------------------------------------------------------------


def raw64_np(key, coords):
    c = np.asarray(coords, dtype=np.int64).astype(np.uint64)
    z = np.uint64(key) + (c + _ONE) * _GOLDEN
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def uniforms_np(key, coords):
    return (raw64_np(key, coords) >> _S11).astype(np.float64) * _INV53


def cdf_symbols_np(cdf, u):
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1).astype(np.int64)


def geometric_symbols_np(p, u):
    # Same float operations, in the same order, as the scalar loop below.
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros(u.shape, dtype=np.int64)
    q = 1.0 - p
    term = np.full(u.shape, p)
    cum = np.full(u.shape, p)
    active = u >= cum
    while active.any():
        idx = np.flatnonzero(active)
        new_term = term[idx] * q
        new_cum = cum[idx] + new_term
        stalled = (new_term == 0.0) | (new_cum == cum[idx])
        out[idx] += 1
        term[idx] = new_term
        cum[idx] = new_cum
        active[idx] = (u[idx] >= new_cum) & ~stalled
    return out


def fetch_np(src, coords):
    """Symbols of a source at an integer coordinate array (no bounds check)."""
    mode, omega, w_lo, _w_hi, key, cdf, p = src
    coords = np.asarray(coords, dtype=np.int64)
    if mode == MODE_WINDOW:
        return omega[coords - w_lo]
    u = uniforms_np(key, coords)
    if mode == MODE_IID:
        return cdf_symbols_np(cdf, u)
    return geometric_symbols_np(p, u)


@_njit(inline="always")
def _raw64(key, c):
    z = key + (np.uint64(c) + _ONE) * _GOLDEN
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@_njit(inline="always")
def _uniform(key, c):
    # the 53-bit value fits int64; a signed conversion avoids the slow unsigned path
    return np.float64(np.int64(_raw64(key, c) >> _S11)) * _INV53


@_njit(inline="always")
def _cdf_index(cdf, u):
    # Written with care: a short counting loop, or reassigning ``lo`` for the
    # final clamp, each made LLVM emit code about 6x slower inside the scans.
    k = cdf.shape[0]
    if k == 2:
        return np.int64(cdf[0] <= u)
    lo = 0
    hi = k
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return np.int64(min(lo, k - 1))


@_njit(inline="always")
def _geometric(p, u):
    q = 1.0 - p
    term = p
    cum = p
    a = np.int64(0)
    while u >= cum:
        new_term = term * q
        new_cum = cum + new_term
        a += 1
        if new_term == 0.0 or new_cum == cum:
            break
        term = new_term
        cum = new_cum
    return a


@_njit(inline="always")
def _symbol(mode, omega, w_lo, key, cdf, p, c):
    # the window read goes last: with it first LLVM emits a loop several times slower
    if mode == 1:
        return _cdf_index(cdf, _uniform(key, c))
    if mode == 2:
        return _geometric(p, _uniform(key, c))
    return omega[c - w_lo]


@_njit()
def fetch_nb(mode, omega, w_lo, key, cdf, p, coords):
    out = np.empty(coords.shape[0], dtype=np.int64)
    for t in range(coords.shape[0]):
        out[t] = _symbol(mode, omega, w_lo, key, cdf, p, coords[t])
    return out


# ---------------------------------------------------------------------------
# Markov window fill
# ---------------------------------------------------------------------------


@_njit()
def markov_fill_nb(key, cum_pi, cum_fwd, cum_bwd, lo, hi):
    out = np.empty(hi - lo + 1, dtype=np.int64)
    origin = -lo
    s = _cdf_index(cum_pi, _uniform(key, 0))
    out[origin] = s
    prev = s
    for j in range(1, hi + 1):
        prev = _cdf_index(cum_fwd[prev], _uniform(key, j))
        out[origin + j] = prev
    nxt = s
    for j in range(-1, lo - 1, -1):
        nxt = _cdf_index(cum_bwd[nxt], _uniform(key, j))
        out[origin + j] = nxt
    return out


def markov_fill_np(key, cum_pi, cum_fwd, cum_bwd, lo, hi):
    u_fwd = uniforms_np(key, np.arange(0, hi + 1)).tolist()
    u_bwd = uniforms_np(key, np.arange(-1, lo - 1, -1)).tolist()
    last = cum_pi.shape[0] - 1
    fwd = [row.tolist() for row in cum_fwd]
    bwd = [row.tolist() for row in cum_bwd]
    out = np.empty(hi - lo + 1, dtype=np.int64)
    origin = -lo
    s = min(bisect.bisect_right(cum_pi.tolist(), u_fwd[0]), last)
    seq = [s]
    prev = s
    for u in u_fwd[1:]:
        prev = min(bisect.bisect_right(fwd[prev], u), last)
        seq.append(prev)
    out[origin:] = seq
    back = []
    nxt = s
    for u in u_bwd:
        nxt = min(bisect.bisect_right(bwd[nxt], u), last)
        back.append(nxt)
    if back:
        out[:origin] = back[::-1]
    return out


# ---------------------------------------------------------------------------
# shifted cylinder hits: the inner loop of S_N
# ---------------------------------------------------------------------------


@_njit()
def shift_hits_nb(mode, omega, w_lo, key, cdf, p, qv, lo, hi, pat, base):
    ell, n_count = qv.shape
    hits = np.zeros(n_count, dtype=np.bool_)
    for n in range(n_count):
        ok = True
        for i in range(ell):
            q = qv[i, n]
            b = base[n] - lo[n]
            for j in range(lo[n], hi[n] + 1):
                if _symbol(mode, omega, w_lo, key, cdf, p, q + j) != pat[i, b + j]:
                    ok = False
                    break
            if not ok:
                break
        hits[n] = ok
    return hits


def shift_hits_np(mode, omega, w_lo, key, cdf, p, qv, lo, hi, pat, base, chunk=1 << 16):
    src = (mode, omega, w_lo, None, key, cdf, p)
    ell, n_count = qv.shape
    hits = np.zeros(n_count, dtype=bool)
    width = hi - lo
    for start in range(0, n_count, chunk):
        sl = slice(start, min(start + chunk, n_count))
        alive = np.ones(sl.stop - sl.start, dtype=bool)
        w = width[sl]
        for i in range(ell):
            for t in range(int(w.max()) + 1 if w.size else 0):
                idx = np.flatnonzero(alive & (w >= t))
                if idx.size == 0:
                    continue
                n_idx = idx + sl.start
                sym = fetch_np(src, qv[i, n_idx] + lo[n_idx] + t)
                alive[idx] = sym == pat[i, base[n_idx] + t]
        hits[sl] = alive
    return hits


# ---------------------------------------------------------------------------
# multiple hitting time of a cylinder
# ---------------------------------------------------------------------------


@_njit(inline="always")
def _horner(coefs, deg, k):
    acc = np.int64(0)
    for d in range(deg, -1, -1):
        acc = acc * k + coefs[d]
    return acc


_SCAN_BLOCK = 1024


@_njit()
def hitting_scan_nb(mode, omega, w_lo, w_hi, key, cdf, p, coefs, degs, tpat, t_lo, lo, hi, cap):
    """Return (tau, err, k_err); tau = -1 when censored at ``cap``.

    Works a block of k at a time, one coordinate column at a time: the hashes
    for the surviving candidates are computed in a branch-free loop, then the
    survivors are compacted in order. The first survivor of the block, if
    any, is the hit.
    """
    ell = coefs.shape[0]
    qs = np.empty(_SCAN_BLOCK, dtype=np.int64)
    idx = np.empty(_SCAN_BLOCK, dtype=np.int64)
    sym = np.empty(_SCAN_BLOCK, dtype=np.int64)
    for start in range(1, cap + 1, _SCAN_BLOCK):
        stop = min(start + _SCAN_BLOCK, cap + 1)
        limit = stop
        if mode == 0:
            for k in range(start, stop):
                bad = False
                for i in range(ell):
                    q = _horner(coefs[i], degs[i], k)
                    if q + lo < w_lo or q + hi > w_hi:
                        bad = True
                if bad:
                    limit = k
                    break
        m = limit - start
        for t in range(m):
            idx[t] = t
        for i in range(ell):
            # Horner across the survivors, coefficient by coefficient
            c = coefs[i]
            top = c[degs[i]]
            for s in range(m):
                qs[s] = top
            for d in range(degs[i] - 1, -1, -1):
                cd = c[d]
                for s in range(m):
                    qs[s] = qs[s] * (start + idx[s]) + cd
            for j in range(lo, hi + 1):
                if m == 0:
                    break
                for s in range(m):
                    sym[s] = _symbol(mode, omega, w_lo, key, cdf, p, qs[s] + j)
                a = tpat[j - t_lo]
                kept = 0
                for s in range(m):
                    idx[kept] = idx[s]
                    qs[kept] = qs[s]
                    kept += sym[s] == a
                m = kept
        if m > 0:
            return np.int64(start + idx[0]), ERR_NONE, np.int64(0)
        if limit < stop:
            return np.int64(-1), ERR_WINDOW, np.int64(limit)
    return np.int64(-1), ERR_NONE, np.int64(0)


def _poly_values_np(coefs, deg, ks):
    acc = np.zeros(ks.shape, dtype=np.int64)
    for d in range(deg, -1, -1):
        acc = acc * ks + coefs[d]
    return acc


def hitting_scan_np(mode, omega, w_lo, w_hi, key, cdf, p, coefs, degs, tpat, t_lo, lo, hi, cap,
                    chunk=1 << 16):
    src = (mode, omega, w_lo, w_hi, key, cdf, p)
    ell = coefs.shape[0]
    for start in range(1, cap + 1, chunk):
        ks = np.arange(start, min(start + chunk, cap + 1), dtype=np.int64)
        qs = [_poly_values_np(coefs[i], degs[i], ks) for i in range(ell)]
        limit = ks.size
        if mode == MODE_WINDOW:
            bad = np.zeros(ks.size, dtype=bool)
            for q in qs:
                bad |= (q + lo < w_lo) | (q + hi > w_hi)
            if bad.any():
                limit = int(np.flatnonzero(bad)[0])
        alive = np.ones(limit, dtype=bool)
        for i in range(ell):
            for j in range(lo, hi + 1):
                idx = np.flatnonzero(alive)
                if idx.size == 0:
                    break
                alive[idx] = fetch_np(src, qs[i][idx] + j) == tpat[j - t_lo]
        found = np.flatnonzero(alive)
        if found.size:
            return int(ks[found[0]]), ERR_NONE, 0
        if limit < ks.size:
            return -1, ERR_WINDOW, int(ks[limit])
    return -1, ERR_NONE, 0


# ---------------------------------------------------------------------------
# disagreement radii along a shifted orbit (max-log-distance statistic)
# ---------------------------------------------------------------------------


@_njit()
def min_radius_scan_nb(mode, omega, w_lo, w_hi, key, cdf, p, qv, targets, center, reach, two_sided):
    """Per n, the minimum over i of the disagreement radius of T^{q_i(n)} w vs target i.

    ``targets[i, center + m]`` holds target coordinate m for |m| <= reach.
    Returns (radii, err, n_err, i_err) with n_err 0-based; on error the radii
    before n_err are filled. A block of n is handled one radius m at a time,
    compacting the still-agreeing n in order, like the hitting scan.
    """
    ell, n_count = qv.shape
    out = np.empty(n_count, dtype=np.int64)
    idx = np.empty(_SCAN_BLOCK, dtype=np.int64)
    qs = np.empty(_SCAN_BLOCK, dtype=np.int64)
    sp = np.empty(_SCAN_BLOCK, dtype=np.int64)
    sm = np.empty(_SCAN_BLOCK, dtype=np.int64)
    rad = np.empty((ell, _SCAN_BLOCK), dtype=np.int64)
    for start in range(0, n_count, _SCAN_BLOCK):
        n = min(_SCAN_BLOCK, n_count - start)
        err_n = n
        err_i = 0
        err_code = ERR_NONE
        for i in range(ell):
            for t in range(n):
                idx[t] = t
                qs[t] = qv[i, start + t]
            act = n
            first = n
            code = ERR_NONE
            m = 0
            while act > 0:
                if m > reach:
                    if idx[0] < first:
                        first = idx[0]
                        code = ERR_UNRESOLVED
                    break
                if mode == 0:
                    kept = 0
                    for s in range(act):
                        if qs[s] + m > w_hi or (two_sided and qs[s] - m < w_lo):
                            if idx[s] < first:
                                first = idx[s]
                                code = ERR_WINDOW
                        else:
                            idx[kept] = idx[s]
                            qs[kept] = qs[s]
                            kept += 1
                    act = kept
                for s in range(act):
                    sp[s] = _symbol(mode, omega, w_lo, key, cdf, p, qs[s] + m)
                if two_sided:
                    for s in range(act):
                        sm[s] = _symbol(mode, omega, w_lo, key, cdf, p, qs[s] - m)
                tp = targets[i, center + m]
                tm = targets[i, center - m] if two_sided else 0
                kept = 0
                for s in range(act):
                    bad = sp[s] != tp
                    if two_sided:
                        bad |= sm[s] != tm
                    rad[i, idx[s]] = m
                    idx[kept] = idx[s]
                    qs[kept] = qs[s]
                    kept += 1 - bad
                act = kept
                m += 1
            if first < err_n:
                err_n = first
                err_i = i
                err_code = code
        for t in range(err_n):
            best = rad[0, t]
            for i in range(1, ell):
                best = min(best, rad[i, t])
            out[start + t] = best
        if err_code != ERR_NONE:
            return out, err_code, np.int64(start + err_n), np.int64(err_i)
    return out, ERR_NONE, np.int64(0), np.int64(0)


def min_radius_scan_np(mode, omega, w_lo, w_hi, key, cdf, p, qv, targets, center, reach, two_sided,
                       chunk=1 << 16):
    src = (mode, omega, w_lo, w_hi, key, cdf, p)
    ell, n_count = qv.shape
    out = np.empty(n_count, dtype=np.int64)
    for start in range(0, n_count, chunk):
        stop = min(start + chunk, n_count)
        radii = np.empty((ell, stop - start), dtype=np.int64)
        first_err = None
        for i in range(ell):
            q = qv[i, start:stop]
            rad = np.full(q.size, -1, dtype=np.int64)
            active = np.arange(q.size)
            for m in range(reach + 2):
                if active.size == 0:
                    break
                if m > reach:
                    cand = (int(active[0]), i, ERR_UNRESOLVED)
                    first_err = cand if first_err is None or cand[:2] < first_err[:2] else first_err
                    break
                qa = q[active]
                if mode == MODE_WINDOW:
                    off = (qa + m > w_hi) | ((qa - m < w_lo) if two_sided else False)
                    if np.any(off):
                        cand = (int(active[np.flatnonzero(off)[0]]), i, ERR_WINDOW)
                        first_err = cand if first_err is None or cand[:2] < first_err[:2] else first_err
                        active = active[: np.flatnonzero(off)[0]]
                        qa = q[active]
                        if active.size == 0:
                            break
                diff = fetch_np(src, qa + m) != targets[i, center + m]
                if two_sided:
                    diff |= fetch_np(src, qa - m) != targets[i, center - m]
                rad[active[diff]] = m
                active = active[~diff]
            radii[i] = rad
        if first_err is not None:
            n_err, i_err, code = first_err
            out[start:start + n_err] = radii[:, :n_err].min(axis=0)
            return out, code, start + n_err, i_err
        out[start:stop] = radii.min(axis=0)
    return out, ERR_NONE, 0, 0


if NUMBA_ENABLED:
    def fetch(src, coords):
        mode, omega, w_lo, _w_hi, key, cdf, p = src
        return fetch_nb(mode, omega, w_lo, key, cdf, p, np.asarray(coords, dtype=np.int64))

    markov_fill = markov_fill_nb
    shift_hits = shift_hits_nb
    hitting_scan = hitting_scan_nb
    min_radius_scan = min_radius_scan_nb
else:
    fetch = fetch_np
    markov_fill = markov_fill_np
    shift_hits = shift_hits_np
    hitting_scan = hitting_scan_np
    min_radius_scan = min_radius_scan_np

BACKEND = "numba" if NUMBA_ENABLED else "numpy"
