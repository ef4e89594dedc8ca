"""Simulation kernels.

Two interchangeable implementations advance many independent trials of a
process model: a numba loop per trial (parallel over trials) and a numpy path
vectorized over trials. ``STOCHRATES_NO_NUMBA=1`` forces the numpy path.

Random numbers are counter based, so a draw depends only on
(seed, trial, counter) and trials are independent of chunking and threads:

    mix64(z)     splitmix64 finalizer
    seed_mix     = mix64(seed + GOLDEN)
    key(trial)   = mix64(seed_mix ^ ((trial + 1) * TRIAL_MULT))
    bits(key, j) = mix64(key + (j + 1) * GOLDEN)
    uniform(c)   = (bits(key, 2c) >> 11) * 2^-53
    normal(c)    = Box-Muller on u1 = 1 - uniform(c), u2 = (bits(key, 2c+1) >> 11) * 2^-53

The step from index n to n + 1 uses counters (n + 1) * STRIDE + k with k < 63
for Gaussian coordinates and k = 63 for the uniform draw. Counter block 0 is
reserved for initial states.
"""

from __future__ import annotations

import math
import os
from typing import NamedTuple

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
TRIAL_MULT = 0xD1B54A32D192ED03
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
STRIDE = 64
UNIFORM_SLOT = 63
MAX_DIM = 63
TWO_PI = 2.0 * math.pi
INV53 = 1.0 / 9007199254740992.0

# model codes
COUNTER, RM, KM, PROX, SPLIT, DVORETZKY = range(6)
# field codes for RM
LINEAR, CUBIC, ABS = range(3)
# spaces
EUCLID, STAR = 0, 1


def _env_disabled() -> bool:
    return os.environ.get("STOCHRATES_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


try:  # pragma: no cover - exercised through whichever path is installed
    if _env_disabled():
        raise ImportError("numba disabled by STOCHRATES_NO_NUMBA")
    import numba
    from numba import njit, prange
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


# -- scalar reference helpers (pure python, used for seeds and tests) -------

def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def seed_mix(seed: int) -> int:
    return mix64((int(seed) + GOLDEN) & MASK64)


def trial_key(seed: int, trial: int) -> int:
    return mix64(seed_mix(seed) ^ (((trial + 1) * TRIAL_MULT) & MASK64))


def uniform_ref(key: int, counter: int) -> float:
    return (mix64(key + (2 * counter + 1) * GOLDEN) >> 11) * INV53


def normal_ref(key: int, counter: int) -> float:
    u1 = 1.0 - uniform_ref(key, counter)
    u2 = (mix64(key + (2 * counter + 2) * GOLDEN) >> 11) * INV53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)


# -- numpy path ------------------------------------------------------------

_U = np.uint64


def _mix_np(z):
    z = z ^ (z >> _U(30))
    z = z * _U(MIX1)
    z = z ^ (z >> _U(27))
    z = z * _U(MIX2)
    return z ^ (z >> _U(31))


def keys_np(seed: int, first_trial: int, trials: int) -> np.ndarray:
    idx = np.arange(first_trial + 1, first_trial + trials + 1, dtype=np.uint64)
    return _mix_np(_U(seed_mix(seed)) ^ (idx * _U(TRIAL_MULT)))


def _bits_np(keys, j: int):
    return _mix_np(keys + _U(((j + 1) * GOLDEN) & MASK64))


def uniform_np(keys, counter: int):
    return (_bits_np(keys, 2 * counter) >> _U(11)).astype(np.float64) * INV53


def normal_np(keys, counter: int):
    u1 = 1.0 - uniform_np(keys, counter)
    u2 = (_bits_np(keys, 2 * counter + 1) >> _U(11)).astype(np.float64) * INV53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(TWO_PI * u2)


TABLE_MAX = 1 << 20


def sched_values(row, n) -> np.ndarray:
    """Schedule values at the integer array n."""
    kind, p0, p1, s = row
    n = np.asarray(n, dtype=np.float64)
    if kind == 0:
        v = np.full_like(n, p0)
    elif kind == 1:
        v = 1.0 / (p0 * (n + p1))
    elif kind == 2:
        v = (n + 1.0) ** (-p0)
    else:
        v = p0 * p1 ** n
    return s * v


def sched_table(sched: np.ndarray, n_end: int) -> np.ndarray:
    """Values of every schedule row for n < min(n_end + 1, TABLE_MAX)."""
    n = np.arange(min(int(n_end) + 1, TABLE_MAX), dtype=np.float64)
    return np.ascontiguousarray(np.stack([sched_values(r, n) for r in sched]))


def sched_np(sched, table, i: int, n: int, quiet: int, noise: bool) -> float:
    if noise and n >= quiet:
        return 0.0
    if n < table.shape[1]:
        return float(table[i, n])
    return float(sched_values(sched[i], n))


def _star_geodesic_np(l1, t1, l2, t2, s):
    l1 = np.where(t1 == 0.0, l2, l1)
    l2 = np.where(t2 == 0.0, l1, l2)
    same = l1 == l2
    dist = t1 + t2
    m = s * dist
    first = m <= t1
    leg = np.where(same, l1, np.where(first, l1, l2))
    t = np.where(same, (1.0 - s) * t1 + s * t2, np.where(first, t1 - m, m - t1))
    leg = np.where(t == 0.0, 0.0, leg)
    return leg, t


def _metric_np(x, z, space):
    if space == STAR:
        same = (x[:, 0] == z[0]) | (x[:, 1] == 0.0) | (z[1] == 0.0)
        return np.where(same, np.abs(x[:, 1] - z[1]), x[:, 1] + z[1])
    return np.sqrt(np.sum((x - z) ** 2, axis=1))


def _at_target_np(x, z):
    return np.all(x == z, axis=1)


def _step_np(model, space, prm, sched, table, x, keys, n, quiet):
    base = (n + 1) * STRIDE
    T, w = x.shape
    if model == COUNTER:
        u = uniform_np(keys, base + UNIFORM_SLOT)
        return x * np.where(u < 0.5, 2.0, 0.0)[:, None]
    if model == RM:
        a = sched_np(sched, table, 0, n, quiet, False)
        field, beta, sigma = int(prm[0]), prm[1], prm[2]
        sig = 0.0 if n >= quiet else sigma
        g = np.stack([normal_np(keys, base + k) for k in range(w)], axis=1)
        if field == LINEAR:
            m = beta * x
        elif field == CUBIC:
            m = x * x * x
        else:
            m = np.sign(x)
        return x - a * (m + sig * g)
    if model == KM:
        r = prm[0]
        lam = sched_np(sched, table, 0, n, quiet, False)
        sd = sched_np(sched, table, 1, n, quiet, True)
        if space == STAR:
            e = sd * normal_np(keys, base)
            e = np.clip(e, -3.0 * sd, 3.0 * sd)
            ty = np.abs(r * x[:, 1] + e)
            t = (1.0 - lam) * x[:, 1] + lam * ty
            return np.stack([np.where(t == 0.0, 0.0, x[:, 0]), t], axis=1)
        e = sd * np.stack([normal_np(keys, base + k) for k in range(w)], axis=1)
        norm = np.sqrt(np.sum(e * e, axis=1))
        cap = 3.0 * sd
        e = np.where((norm > cap)[:, None], e * (cap / np.where(norm > 0, norm, 1.0))[:, None], e)
        return (1.0 - lam) * x + lam * (r * x + e)
    if model == PROX:
        z = prm[:w]
        gam = sched_np(sched, table, 0, n, quiet, False)
        sd = sched_np(sched, table, 1, n, quiet, True)
        g = np.stack([normal_np(keys, base + k) for k in range(w)], axis=1)
        return z + (x - z) / (1.0 + gam) + sd * g
    if model == SPLIT:
        N = int(prm[0])
        anchors = prm[1:1 + N * w].reshape(N, w)
        weights = prm[1 + N * w:1 + N * w + N]
        lam = sched_np(sched, table, 0, n, quiet, False)
        u = uniform_np(keys, base + UNIFORM_SLOT)
        j = np.minimum((u * N).astype(np.int64), N - 1)
        tw = 2.0 * lam * weights[j]
        s = tw / (1.0 + tw)
        a = anchors[j]
        if space == STAR:
            leg, t = _star_geodesic_np(x[:, 0], x[:, 1], a[:, 0], a[:, 1], s)
            return np.stack([leg, t], axis=1)
        return x + s[:, None] * (a - x)
    if model == DVORETZKY:
        z = prm[:w]
        c = sched_np(sched, table, 0, n, quiet, False)
        sd = sched_np(sched, table, 1, n, quiet, True)
        diff = x - z
        dist = np.sqrt(np.sum(diff * diff, axis=1))
        keep = dist > c
        fac = np.where(keep, 1.0 - c / np.where(keep, dist, 1.0), 0.0)
        y = np.where(keep[:, None], z + diff * fac[:, None], z)
        g = np.stack([normal_np(keys, base + k) for k in range(w)], axis=1)
        return y + sd * g
    raise ValueError(f"unknown model code {model}")


class KernelResult(NamedTuple):
    states: np.ndarray       # (trials, len(record), width)
    last_exceed: np.ndarray  # (trials, len(thresholds)), -1 when never exceeded
    steps: np.ndarray        # (trials,) index at which the trial stopped


def run_numpy(model, space, prm, sched, table, state0, n_end, record, thresholds, z,
              seed, first_trial, quiet, settles=False) -> KernelResult:
    T, w = state0.shape
    keys = keys_np(seed, first_trial, T)
    x = state0.copy()
    R = len(record)
    states = np.empty((T, R, w))
    last = np.full((T, len(thresholds)), -1, dtype=np.int64)
    stop = np.full(T, n_end, dtype=np.int64)
    act = np.arange(T)
    min_thr = float(np.min(thresholds)) if len(thresholds) else math.inf
    j = 0
    m = 0
    while True:
        while j < R and record[j] == m:
            states[:, j] = x
            j += 1
        xa = x[act]
        met = _metric_np(xa, z, space)
        for k, thr in enumerate(thresholds):
            last[act[met >= thr], k] = m
        if m >= n_end:
            break
        if m >= quiet:
            # a trial at the target never moves again; a settled trial's
            # metric never rises again
            hit = _at_target_np(xa, z)
            if settles and j == R:
                hit |= met < min_thr
            if hit.any():
                stop[act[hit]] = m
                act = act[~hit]
                xa = xa[~hit]
            if act.size == 0:
                while j < R:
                    states[:, j] = x
                    j += 1
                break
        x[act] = _step_np(model, space, prm, sched, table, xa, keys[act], m, quiet)
        m += 1
    return KernelResult(states, last, stop)


# -- numba path ------------------------------------------------------------

if HAVE_NUMBA:
    _G = np.uint64(GOLDEN)
    _TM = np.uint64(TRIAL_MULT)
    _M1 = np.uint64(MIX1)
    _M2 = np.uint64(MIX2)
    _S30 = np.uint64(30)
    _S27 = np.uint64(27)
    _S31 = np.uint64(31)
    _S11 = np.uint64(11)
    _ONE = np.uint64(1)
    _TWO = np.uint64(2)

    @njit(cache=True, inline="always")
    def _mix_nb(z):
        z = z ^ (z >> _S30)
        z = z * _M1
        z = z ^ (z >> _S27)
        z = z * _M2
        return z ^ (z >> _S31)

    @njit(cache=True, inline="always")
    def _uniform_nb(key, counter):
        c = np.uint64(counter)
        return float(_mix_nb(key + (_TWO * c + _ONE) * _G) >> _S11) * INV53

    @njit(cache=True, inline="always")
    def _normal_nb(key, counter):
        c = np.uint64(counter)
        u1 = 1.0 - float(_mix_nb(key + (_TWO * c + _ONE) * _G) >> _S11) * INV53
        u2 = float(_mix_nb(key + (_TWO * c + _TWO) * _G) >> _S11) * INV53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)

    @njit(cache=True, inline="always")
    def _sched_nb(sched, table, i, n, quiet, noise):
        if noise and n >= quiet:
            return 0.0
        if n < table.shape[1]:
            return table[i, n]
        kind = sched[i, 0]
        p0 = sched[i, 1]
        p1 = sched[i, 2]
        if kind == 0:
            v = p0
        elif kind == 1:
            v = 1.0 / (p0 * (n + p1))
        elif kind == 2:
            v = (n + 1.0) ** (-p0)
        else:
            v = p0 * p1 ** float(n)
        return sched[i, 3] * v

    @njit(cache=True, inline="always")
    def _metric_nb(x, z, space):
        if space == STAR:
            if x[0] == z[0] or x[1] == 0.0 or z[1] == 0.0:
                return abs(x[1] - z[1])
            return x[1] + z[1]
        s = 0.0
        for k in range(x.shape[0]):
            d = x[k] - z[k]
            s += d * d
        return math.sqrt(s)

    @njit(cache=True, inline="always")
    def _at_target_nb(x, z):
        for k in range(x.shape[0]):
            if x[k] != z[k]:
                return False
        return True

    @njit(cache=True, inline="always")
    def _step_nb(model, space, prm, sched, table, x, e, key, n, quiet):
        base = (n + 1) * STRIDE
        w = x.shape[0]
        if model == COUNTER:
            u = _uniform_nb(key, base + UNIFORM_SLOT)
            x[0] = x[0] * (2.0 if u < 0.5 else 0.0)
        elif model == RM:
            a = _sched_nb(sched, table, 0, n, quiet, False)
            field = int(prm[0])
            beta = prm[1]
            sig = 0.0 if n >= quiet else prm[2]
            for k in range(w):
                g = _normal_nb(key, base + k)
                xk = x[k]
                if field == LINEAR:
                    m = beta * xk
                elif field == CUBIC:
                    m = xk * xk * xk
                else:
                    m = 1.0 if xk > 0 else (-1.0 if xk < 0 else 0.0)
                x[k] = xk - a * (m + sig * g)
        elif model == KM:
            r = prm[0]
            lam = _sched_nb(sched, table, 0, n, quiet, False)
            sd = _sched_nb(sched, table, 1, n, quiet, True)
            if space == STAR:
                e = sd * _normal_nb(key, base)
                cap = 3.0 * sd
                if e > cap:
                    e = cap
                elif e < -cap:
                    e = -cap
                ty = abs(r * x[1] + e)
                t = (1.0 - lam) * x[1] + lam * ty
                if t == 0.0:
                    x[0] = 0.0
                x[1] = t
            else:
                nrm = 0.0
                for k in range(w):
                    e[k] = sd * _normal_nb(key, base + k)
                    nrm += e[k] * e[k]
                nrm = math.sqrt(nrm)
                cap = 3.0 * sd
                if nrm > cap:
                    for k in range(w):
                        e[k] = e[k] * (cap / nrm)
                for k in range(w):
                    x[k] = (1.0 - lam) * x[k] + lam * (r * x[k] + e[k])
        elif model == PROX:
            gam = _sched_nb(sched, table, 0, n, quiet, False)
            sd = _sched_nb(sched, table, 1, n, quiet, True)
            for k in range(w):
                g = _normal_nb(key, base + k)
                x[k] = prm[k] + (x[k] - prm[k]) / (1.0 + gam) + sd * g
        elif model == SPLIT:
            N = int(prm[0])
            lam = _sched_nb(sched, table, 0, n, quiet, False)
            u = _uniform_nb(key, base + UNIFORM_SLOT)
            j = int(u * N)
            if j > N - 1:
                j = N - 1
            tw = 2.0 * lam * prm[1 + N * w + j]
            s = tw / (1.0 + tw)
            if space == STAR:
                l1 = x[0]
                t1 = x[1]
                l2 = prm[1 + j * w]
                t2 = prm[2 + j * w]
                if t1 == 0.0:
                    l1 = l2
                if t2 == 0.0:
                    l2 = l1
                if l1 == l2:
                    leg = l1
                    t = (1.0 - s) * t1 + s * t2
                else:
                    m = s * (t1 + t2)
                    if m <= t1:
                        leg = l1
                        t = t1 - m
                    else:
                        leg = l2
                        t = m - t1
                if t == 0.0:
                    leg = 0.0
                x[0] = leg
                x[1] = t
            else:
                for k in range(w):
                    x[k] = x[k] + s * (prm[1 + j * w + k] - x[k])
        elif model == DVORETZKY:
            c = _sched_nb(sched, table, 0, n, quiet, False)
            sd = _sched_nb(sched, table, 1, n, quiet, True)
            dist = 0.0
            for k in range(w):
                d = x[k] - prm[k]
                dist += d * d
            dist = math.sqrt(dist)
            keep = dist > c
            fac = 1.0 - c / dist if keep else 0.0
            for k in range(w):
                y = prm[k] + (x[k] - prm[k]) * fac if keep else prm[k]
                x[k] = y + sd * _normal_nb(key, base + k)

    @njit(cache=True, parallel=True)
    def _run_nb(model, space, prm, sch, table, state0, n_end, record, thresholds, z,
                smix, first_trial, quiet, settles):
        T, w = state0.shape
        R = record.shape[0]
        H = thresholds.shape[0]
        states = np.empty((T, R, w))
        last = np.full((T, H), -1, dtype=np.int64)
        stop = np.full(T, n_end, dtype=np.int64)
        min_thr = np.inf
        for h in range(H):
            min_thr = min(min_thr, thresholds[h])
        for i in prange(T):
            key = _mix_nb(smix ^ (np.uint64(first_trial + i + 1) * _TM))
            x = state0[i].copy()
            e = np.empty(w)
            j = 0
            m = 0
            while True:
                while j < R and record[j] == m:
                    for k in range(w):
                        states[i, j, k] = x[k]
                    j += 1
                met = _metric_nb(x, z, space)
                for h in range(H):
                    if met >= thresholds[h]:
                        last[i, h] = m
                if m >= n_end:
                    break
                if m >= quiet:
                    if _at_target_nb(x, z):
                        stop[i] = m
                        while j < R:
                            for k in range(w):
                                states[i, j, k] = x[k]
                            j += 1
                        break
                    if settles and j == R and met < min_thr:
                        stop[i] = m
                        break
                _step_nb(model, space, prm, sch, table, x, e, key, m, quiet)
                m += 1
        return states, last, stop


def run(model: int, space: int, prm, sched, state0, n_end: int, record, thresholds, z,
        seed: int, first_trial: int, quiet: int, use_numba=None,
        settles: bool = False) -> KernelResult:
    """Advance ``state0.shape[0]`` trials from index 0 to ``n_end``.

    ``record`` lists sorted distinct indices whose states are returned;
    ``last_exceed[i, h]`` is the last index m <= n_end with metric(x_m, z) >=
    thresholds[h]. A trial stops early once m >= quiet and x_m equals z
    exactly, since from then on it never moves. With ``settles`` (models whose
    metric cannot grow once the noise is off) a trial also stops at m >= quiet
    when its metric is below every threshold and no recorded index remains.
    """
    prm = np.ascontiguousarray(prm, dtype=np.float64)
    sched = np.ascontiguousarray(sched, dtype=np.float64).reshape(-1, 4)
    if sched.shape[0] == 0:
        sched = np.zeros((1, 4))
    state0 = np.ascontiguousarray(state0, dtype=np.float64)
    record = np.ascontiguousarray(record, dtype=np.int64)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    if state0.shape[1] > MAX_DIM:
        raise ValueError(f"state width is limited to {MAX_DIM}")
    if len(record) and (np.any(np.diff(record) <= 0) or record[0] < 0 or record[-1] > n_end):
        raise ValueError("record indices must be sorted, distinct and within [0, n_end]")
    quiet = int(min(quiet, n_end + 1))
    table = sched_table(sched, n_end)
    use = HAVE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    if use:
        states, last, stop = _run_nb(model, space, prm, sched, table, state0, int(n_end), record,
                                     thresholds, z, np.uint64(seed_mix(seed)),
                                     int(first_trial), quiet, bool(settles))
        return KernelResult(states, last, stop)
    return run_numpy(model, space, prm, sched, table, state0, int(n_end), record, thresholds, z,
                     seed, first_trial, quiet, settles)
