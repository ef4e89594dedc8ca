"""Regularity moduli: maps tau with E[V] < tau(eps) implying E[f(X)] < eps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainError
from .moduli import RegularityFn


@dataclass(frozen=True)
class RegularityModulus:
    fn: Callable[[float], float]
    label: str

    def __call__(self, eps: float) -> float:
        if not eps > 0:
            raise DomainError(f"epsilon must be positive, got {eps!r}")
        return float(self.fn(eps))


@dataclass(frozen=True)
class PointwiseLowerBound:
    """pi(eps, l) bounds V from below whenever X lies in [eps, l]."""
    pi: Callable[[float, float], float]

    def __call__(self, eps, l):
        return self.pi(eps, l)


@dataclass(frozen=True)
class UIModulus:
    mu: Callable[[float], float]

    def __call__(self, eps):
        return self.mu(eps)


def _sample_convex(tau, samples: int, bound: float, seed: int = 0) -> Optional[str]:
    rng = np.random.default_rng(seed)
    if abs(float(tau(0.0))) > 1e-12:
        return "tau(0) must be 0"
    x = rng.uniform(0.0, bound, samples)
    y = rng.uniform(0.0, bound, samples)
    tx = np.array([tau(v) for v in x])
    ty = np.array([tau(v) for v in y])
    tm = np.array([tau(v) for v in (x + y) / 2.0])
    slack = 1e-12 * (1.0 + np.abs((tx + ty) / 2.0))
    if np.any(tm > (tx + ty) / 2.0 + slack):
        return "tau fails the midpoint convexity check"
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    sep = hi - lo > 1e-9 * (1.0 + hi)
    flo = np.where(x <= y, tx, ty)
    fhi = np.where(x <= y, ty, tx)
    if np.any(sep & (fhi <= flo)):
        return "tau is not strictly increasing"
    return None


def reg_from_convex(tau: Callable[[float], float], check_samples: int = 1000,
                    domain_bound: float = 10.0, label: str = "convex") -> RegularityModulus:
    """Use a convex strictly increasing tau with V >= tau(X) directly as the modulus.

    Jensen gives tau(E[X]) <= E[V], so E[V] < tau(eps) forces E[X] < eps.
    """
    problem = _sample_convex(tau, check_samples, domain_bound)
    if problem:
        raise ConfigError(f"{label}: {problem}")
    return RegularityModulus(tau, label)


def reg_from_ui(pi: PointwiseLowerBound, K: float, mu: UIModulus) -> RegularityModulus:
    """Modulus from a pointwise lower bound and uniform integrability of X."""
    if not K > 0:
        raise DomainError("K must be positive")

    def tau(eps):
        q = eps / 4.0
        m = mu(q)
        return pi(q, K / m) * m / 2.0

    return RegularityModulus(tau, f"ui(K={K:g})")


def reg_bounded(pi: PointwiseLowerBound, K: float) -> RegularityModulus:
    """Modulus for X bounded by K almost surely."""
    if not K > 0:
        raise DomainError("K must be positive")
    return RegularityModulus(lambda eps: pi(eps / 2.0, K) * eps / (2.0 * K), f"bounded(K={K:g})")


def uniq_quasi_contraction(r: float) -> RegularityModulus:
    """(1 - r) eps, for F(x) = d(x, Tx) and T a quasi-contraction with constant r."""
    if not 0.0 <= r < 1.0:
        raise DomainError(f"contraction constant must lie in [0, 1), got {r}")
    return RegularityModulus(lambda eps: (1.0 - r) * eps, f"quasi-contraction:{r:g}")


def uniq_sharp_min(tau: Callable[[float], float], quasiconvex_quarter: bool = False,
                   label: str = "sharp-min") -> RegularityModulus:
    """Growth condition f(x) >= min f + tau(d(x, z)); the quarter form covers
    uniformly quasiconvex functions."""
    if abs(float(tau(0.0))) > 1e-12:
        raise ConfigError("tau(0) must be 0")
    if quasiconvex_quarter:
        return RegularityModulus(lambda eps: 0.25 * tau(eps), label + ":quarter")
    return RegularityModulus(tau, label)


def uniq_strongly_quasiconvex(mu: float) -> RegularityModulus:
    """(mu / 8) eps^2 for a mu-strongly quasiconvex function."""
    if not mu > 0:
        raise DomainError("mu must be positive")
    return uniq_sharp_min(lambda e: 0.5 * mu * e * e, True, f"strongly-quasiconvex:{mu:g}")


def uniq_frechet() -> RegularityModulus:
    """eps^2, for F = sum w d^2(., a) - min of the same sum."""
    return RegularityModulus(lambda eps: eps * eps, "frechet")


def uniq_prox_transfer(tau: RegularityFn, gamma_lower: float) -> RegularityModulus:
    """Move a modulus for F onto x -> ||x - J_{gamma A} x|| with gamma >= gamma_lower."""
    if not gamma_lower > 0:
        raise DomainError("gamma_lower must be positive")
    return RegularityModulus(lambda eps: min(tau(eps / 2.0) * gamma_lower, eps / 2.0),
                             f"prox-transfer(gamma={gamma_lower:g})")


def uniq_error_bound(tau_inverse: Callable[[float], float]) -> RegularityModulus:
    """Error bound tau(f(x) - min f) >= d(x, z) with concave tau; the caller
    supplies tau^{-1}, which is the modulus."""
    return RegularityModulus(tau_inverse, "error-bound")


__all__ = [
    "RegularityModulus", "PointwiseLowerBound", "UIModulus", "reg_from_convex",
    "reg_from_ui", "reg_bounded", "uniq_quasi_contraction", "uniq_sharp_min",
    "uniq_strongly_quasiconvex", "uniq_frechet", "uniq_prox_transfer", "uniq_error_bound",
]
