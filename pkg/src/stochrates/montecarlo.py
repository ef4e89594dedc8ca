"""Seeded Monte Carlo estimators that check computed rates against simulation.

Infinite-horizon tail events are truncated at a finite horizon, so every
exceedance estimate is a lower bound of the probability the rate controls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import _kernels as K
from .errors import ContractError, DomainError, RangeError
from .moduli import SiccFunction
from .processes import ProcessModel, rm_linear_marginal
from .rates import RateBundle, as_index, format_index


@dataclass(frozen=True)
class MCConfig:
    trials: int = 100_000
    horizon: int = 10_000
    master_seed: int = 0
    ci_multiplier: float = 3.0
    chunk: int = 1 << 16
    use_numba: Optional[bool] = None

    def __post_init__(self):
        if self.trials < 2:
            raise DomainError("trials must be at least 2")
        if self.horizon < 1:
            raise DomainError("horizon must be at least 1")
        if not self.ci_multiplier > 0:
            raise DomainError("ci_multiplier must be positive")
        if not 0 <= self.master_seed < 1 << 64:
            raise DomainError("master_seed must fit in 64 bits")


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    std_err: float
    trials: int

    def upper(self, k: float) -> float:
        return self.mean + k * self.std_err


def estimate_from(values: np.ndarray) -> EstimateWithCI:
    """Mean and standard error with order-independent summation."""
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n < 2:
        raise DomainError("need at least two samples")
    mean = math.fsum(v) / n
    var = math.fsum((v - mean) ** 2) / (n - 1)
    return EstimateWithCI(mean, math.sqrt(var / n), n)


@dataclass(frozen=True)
class ValidationRow:
    epsilon: float
    lam: Optional[float]
    index: int
    estimate: Optional[EstimateWithCI]
    bound: float
    passed: bool
    status: str = "pass"
    kind: str = "mean"
    note: str = ""
    horizon: Optional[int] = None

    def as_dict(self) -> Dict[str, object]:
        e = self.estimate
        return {
            "kind": self.kind, "epsilon": self.epsilon, "lambda": self.lam,
            "index": self.index, "horizon": self.horizon,
            "mean": None if e is None else e.mean,
            "std_err": None if e is None else e.std_err,
            "trials": None if e is None else e.trials,
            "bound": self.bound, "passed": self.passed, "status": self.status,
            "note": self.note,
        }


def _row(eps, lam, index, est, bound, cfg, kind, note="", horizon=None, status=None):
    ok = est.mean <= bound + cfg.ci_multiplier * est.std_err
    st = status or ("pass" if ok else "fail")
    return ValidationRow(eps, lam, index, est, bound, ok, st, kind, note, horizon)


def _infeasible(eps, lam, index, bound, kind, note, horizon=None):
    return ValidationRow(eps, lam, index, None, bound, False, "infeasible", kind, note, horizon)


def default_tail_horizon(index: int) -> int:
    return max(10 * index, index + 1000)


# -- simulation ------------------------------------------------------------

def simulate(model: ProcessModel, cfg: MCConfig, n_end: int, record: Sequence[int] = (),
             thresholds: Sequence[float] = (), first_trial: int = 0,
             trials: Optional[int] = None) -> K.KernelResult:
    """Run trials ``first_trial ..`` up to index n_end, in chunks of ``cfg.chunk``."""
    T = cfg.trials if trials is None else int(trials)
    rec = np.array(sorted(set(int(r) for r in record)), dtype=np.int64)
    thr = np.asarray(thresholds, dtype=float)
    sched = model.kernel_schedules()
    parts = []
    for start in range(0, T, cfg.chunk):
        cnt = min(cfg.chunk, T - start)
        ft = first_trial + start
        x0 = model.initial_states(cfg.master_seed, ft, cnt)
        parts.append(K.run(model.code, model.space, model.prm, sched, x0, int(n_end), rec,
                           thr, model.target, cfg.master_seed, ft, model.quiet,
                           cfg.use_numba, model.settles))
    return K.KernelResult(*(np.concatenate([getattr(p, f) for p in parts])
                            for f in K.KernelResult._fields))


def _quantity(model: ProcessModel, g):
    if g is None or g == "dist_map":
        return model.dist_map
    if g == "F":
        return model.functional
    if g == "metric":
        return model.metric
    return g


def estimate_mean_functional(model: ProcessModel, g, n: int, cfg: MCConfig,
                             first_trial: int = 0, marginal: bool = False) -> EstimateWithCI:
    """Estimate E[g(x_n)]; ``g`` is a callable on state rows or one of
    "dist_map", "F", "metric". ``marginal`` samples x_n exactly without
    stepping (linear Robbins-Monro only; g must then act on ||x_n||^2)."""
    if marginal:
        sq = rm_linear_marginal(model, n, cfg.master_seed, first_trial, cfg.trials)
        fn = (lambda v: v) if g in (None, "dist_map") else g
        return estimate_from(fn(sq))
    if n > cfg.horizon:
        raise RangeError(f"index {format_index(n)} exceeds horizon {cfg.horizon}")
    res = simulate(model, cfg, n, [n], first_trial=first_trial)
    return estimate_from(_quantity(model, g)(res.states[:, 0]))


def estimate_means(model: ProcessModel, g, indices: Sequence[int], cfg: MCConfig
                   ) -> Dict[int, EstimateWithCI]:
    """Estimates at several indices from a single run."""
    idx = sorted(set(int(i) for i in indices))
    if idx and idx[-1] > cfg.horizon:
        raise RangeError(f"index {idx[-1]} exceeds horizon {cfg.horizon}")
    res = simulate(model, cfg, idx[-1], idx)
    fn = _quantity(model, g)
    return {n: estimate_from(fn(res.states[:, j])) for j, n in enumerate(idx)}


def exceedance_samples(model: ProcessModel, cfg: MCConfig, horizon: int,
                       thresholds: Sequence[float]) -> np.ndarray:
    """Per trial, the last index in [0, horizon] with metric >= threshold (-1 if none)."""
    return simulate(model, cfg, horizon, (), thresholds).last_exceed


def estimate_sup_exceedance(model: ProcessModel, N: int, epsilon: float, cfg: MCConfig,
                            horizon: Optional[int] = None) -> EstimateWithCI:
    """Fraction of trials with metric(x_n) >= epsilon for some n in [N, horizon]."""
    H = cfg.horizon if horizon is None else int(horizon)
    if N > H:
        raise RangeError(f"start index {N} exceeds horizon {H}")
    last = exceedance_samples(model, cfg, H, [epsilon])[:, 0]
    return estimate_from((last >= N).astype(float))


def ville_check(model: ProcessModel, a: float, cfg: MCConfig) -> ValidationRow:
    """Compare P(sup_n U_n >= a), truncated at the horizon, against E[U_0]/a."""
    if not model.supermartingale:
        raise ContractError(f"{model.name} is not certified as a nonnegative supermartingale")
    if not a > 0:
        raise DomainError("a must be positive")
    bound = float(model.certified["E_U0"]) / a
    est = estimate_sup_exceedance(model, 0, a, cfg)
    return _row(a, None, 0, est, bound, cfg, "ville", horizon=cfg.horizon)


def validate_mean_rate(model: ProcessModel, f: SiccFunction, bundle: RateBundle,
                       eps_list: Iterable[float], cfg: MCConfig, marginal: bool = False,
                       quantity=None) -> List[ValidationRow]:
    """Check E[f(X_n)] < eps at n = rho(eps) and two later indices.

    X_n is ``quantity`` (default: the model's distance map to the target).
    """
    rows = []
    fn = _quantity(model, quantity)
    for eps in eps_list:
        idx = as_index(bundle.rho(eps))
        checks = [(idx, "mean"), (2 * idx + 1, "mean-spot"), (4 * idx + 1, "mean-spot")]
        for n, kind in checks:
            if not marginal and n > cfg.horizon:
                note = f"rate index {format_index(n)} exceeds horizon {cfg.horizon}"
                rows.append(_infeasible(eps, None, n, eps, kind, note))
                continue
            if marginal:
                sq = rm_linear_marginal(model, n, cfg.master_seed, 0, cfg.trials)
                est = estimate_from(np.asarray(f.eval(sq), dtype=float))
                note = "exact marginal sampling"
            else:
                res = simulate(model, cfg, n, [n])
                est = estimate_from(np.asarray(f.eval(fn(res.states[:, 0])), dtype=float))
                note = ""
            rows.append(_row(eps, None, n, est, eps, cfg, kind, note, n))
    return rows


def validate_as_rate(model: ProcessModel, rate_as: Callable[[float, float], int],
                     pairs: Iterable[tuple], cfg: MCConfig, on: str = "dist_map",
                     cap_index: Optional[int] = None) -> List[ValidationRow]:
    """Check P(exists n >= rho(lam, eps): X_n >= eps) < lam by truncated simulation.

    ``on="dist_map"`` reads eps as a tolerance on the model's distance map
    (turned into a metric threshold), ``on="metric"`` as a metric tolerance.
    Indices above the horizon give infeasible rows, unless ``cap_index`` is
    set: the check then runs from that index and is marked accordingly.
    """
    if on not in ("dist_map", "metric"):
        raise DomainError("on must be 'dist_map' or 'metric'")
    plan = []
    for lam, eps in pairs:
        idx = as_index(rate_as(lam, eps))
        thr = math.sqrt(eps) if (on == "dist_map" and model.dist_is_square) else eps
        if idx > cfg.horizon:
            if cap_index is None:
                plan.append((lam, eps, idx, thr, None, f"rate index {format_index(idx)} exceeds horizon"))
                continue
            start = int(cap_index)
            plan.append((lam, eps, idx, thr, start,
                         f"infeasible-at-desk-scale: rate index {format_index(idx)} capped at {start}"))
        else:
            plan.append((lam, eps, idx, thr, idx, ""))
    by_h: Dict[int, list] = {}
    for item in plan:
        if item[4] is not None:
            by_h.setdefault(default_tail_horizon(item[4]), []).append(item)
    results = {}
    for H, items in by_h.items():
        thr = sorted(set(it[3] for it in items))
        last = exceedance_samples(model, cfg, H, thr)
        for it in items:
            col = thr.index(it[3])
            results[id(it)] = (estimate_from((last[:, col] >= it[4]).astype(float)), H)
    rows = []
    for it in plan:
        lam, eps, idx, thr, start, note = it
        if start is None:
            rows.append(_infeasible(eps, lam, idx, lam, "as", note))
            continue
        est, H = results[id(it)]
        status = "infeasible-at-desk-scale" if start != idx else None
        row = _row(eps, lam, start, est, lam, cfg, "as", note, H)
        if status:
            row = ValidationRow(row.epsilon, row.lam, idx, est, lam, row.passed, status,
                                "as", note, H)
        rows.append(row)
    return rows


def validate_fast_bound(model: ProcessModel, mean_bound: Callable[[int], float],
                        sample_indices: Sequence[int], cfg: MCConfig, quantity=None
                        ) -> List[ValidationRow]:
    """Check E[X_n] <= mean_bound(n) at each sampled index from one run."""
    ests = estimate_means(model, quantity, sample_indices, cfg)
    return [_row(None, None, n, est, float(mean_bound(n)), cfg, "fast", horizon=n)
            for n, est in ests.items()]


def validate_tail_bound(model: ProcessModel, exceed_bound: Callable[[int, float], float],
                        starts: Sequence[int], epsilon: float, cfg: MCConfig,
                        on: str = "dist_map") -> List[ValidationRow]:
    """Check P(exists n in [N, H]: X_n >= eps) against min(1, exceed_bound(N, eps))."""
    thr = math.sqrt(epsilon) if (on == "dist_map" and model.dist_is_square) else epsilon
    rows = []
    for N in starts:
        H = default_tail_horizon(N)
        last = exceedance_samples(model, cfg, H, [thr])[:, 0]
        est = estimate_from((last >= N).astype(float))
        bound = min(1.0, float(exceed_bound(N, epsilon)))
        rows.append(_row(epsilon, None, N, est, bound, cfg, "tail", horizon=H))
    return rows


def quasi_fejer_profile(model: ProcessModel, indices: Sequence[int], xi: Callable[[int], float],
                        cfg: MCConfig) -> List[dict]:
    """E[dist_map(x_n)] minus accumulated xi_k for k < n, with a monotonicity flag.

    A step passes when the profile does not rise by more than the combined
    confidence half-widths of the two estimates.
    """
    idx = sorted(set(int(i) for i in indices))
    ests = estimate_means(model, "dist_map", idx, cfg)
    out, prev = [], None
    acc, k = 0.0, 0
    for n in idx:
        while k < n:
            acc += float(xi(k))
            k += 1
        e = ests[n]
        val = e.mean - acc
        ok = True
        if prev is not None:
            ok = val <= prev[0] + cfg.ci_multiplier * (e.std_err + prev[1])
        out.append({"n": n, "mean": e.mean, "std_err": e.std_err, "xi_sum": acc,
                    "profile": val, "nonincreasing": ok})
        prev = (val, e.std_err)
    return out


def empirical_second_moment_bound(model: ProcessModel, cfg: MCConfig, n_max: int,
                                  stride: int = 1) -> float:
    """Largest upper confidence value of E[d^2(x_n, z)] over sampled n <= n_max."""
    idx = sorted(set(range(0, n_max + 1, max(1, stride))) | {n_max})
    res = simulate(model, cfg, n_max, idx)
    best = 0.0
    for j in range(len(idx)):
        sq = model.metric(res.states[:, j]) ** 2
        best = max(best, estimate_from(sq).upper(cfg.ci_multiplier))
    return best


def rm_condition_check(model: ProcessModel, states: np.ndarray, draws: int, seed: int,
                       c: float, d: float, k: float = 3.0) -> List[dict]:
    """Conditional check of E[||y||^2 | x] <= c ||x - z||^2 + d at frozen states."""
    beta, sigma, fld = float(model.prm[1]), float(model.prm[2]), int(model.prm[0])
    keys = K.keys_np(seed, 0, draws)
    out = []
    for x in np.atleast_2d(states):
        if fld == K.LINEAR:
            m = beta * x
        elif fld == K.CUBIC:
            m = x ** 3
        else:
            m = np.sign(x)
        g = np.stack([K.normal_np(keys, j) for j in range(x.size)], axis=1)
        y2 = np.sum((m + sigma * g) ** 2, axis=1)
        est = estimate_from(y2)
        bound = c * float(np.sum((x - model.target) ** 2)) + d
        out.append({"x": x.tolist(), "mean": est.mean, "std_err": est.std_err,
                    "bound": bound, "passed": est.mean <= bound + k * est.std_err})
    return out


def regularity_contract_check(model: ProcessModel, V, X, tau: Callable[[float], float],
                              eps_list: Sequence[float], indices: Sequence[int],
                              cfg: MCConfig) -> List[dict]:
    """Empirical surrogate of E[V] < tau(eps) => E[X] < eps over sampled indices."""
    idx = sorted(set(int(i) for i in indices))
    res = simulate(model, cfg, idx[-1], idx)
    fv, fx = _quantity(model, V), _quantity(model, X)
    k = cfg.ci_multiplier
    out = []
    for j, n in enumerate(idx):
        ev = estimate_from(fv(res.states[:, j]))
        ex = estimate_from(fx(res.states[:, j]))
        for eps in eps_list:
            premise = ev.mean < tau(eps) - k * ev.std_err
            ok = (not premise) or ex.mean < eps + k * ex.std_err
            out.append({"n": n, "epsilon": eps, "premise": premise, "passed": ok,
                        "E_V": ev.mean, "E_X": ex.mean})
    return out


__all__ = [
    "MCConfig", "EstimateWithCI", "ValidationRow", "estimate_from", "simulate",
    "estimate_mean_functional", "estimate_means", "exceedance_samples",
    "estimate_sup_exceedance", "ville_check", "validate_mean_rate", "validate_as_rate",
    "validate_fast_bound", "validate_tail_bound", "quasi_fejer_profile",
    "empirical_second_moment_bound", "rm_condition_check", "regularity_contract_check",
    "default_tail_horizon",
]
