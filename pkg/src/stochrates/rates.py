"""Closed-form convergence rates as executable functions.

Every constructor takes the certified data of a convergence statement (bounds,
moduli, rates of divergence and tail rates) and returns callables mapping
tolerances to iteration indices. Real-valued intermediate quantities that end
up as indices are rounded up, which keeps every rate valid.

Index-valued callables supplied by the caller may return Python ints of any
size; nothing here converts them to floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .errors import DomainError
from .moduli import (DivergenceRate, LiminfModulus, RateASFn, RateFn, RegularityFn,
                     SiccFunction, TailRate, sicc_power)


def as_index(v) -> int:
    """Round an index-like value up to a natural number."""
    if isinstance(v, int):
        return max(0, v)
    if isinstance(v, float) and math.isinf(v):
        raise DomainError("index is infinite")
    return max(0, int(math.ceil(v)))


_EXACT_DIGITS = 18


def format_index(v) -> str:
    """Exact decimal for moderate integers, d.dddddde+X beyond 18 digits."""
    if not isinstance(v, int) or abs(v) < 10 ** _EXACT_DIGITS:
        return str(v)
    lg = math.log10(abs(v))
    exp = int(math.floor(lg))
    mant = 10.0 ** (lg - exp)
    if mant >= 9.9999995:
        mant, exp = 1.0, exp + 1
    return f"{'-' if v < 0 else ''}{mant:.6f}e+{exp}"


def _positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class RateBundle:
    rho: RateFn
    rho_as: RateASFn
    provenance: str


@dataclass(frozen=True)
class GeneralSpec:
    K: float
    chi: TailRate
    f: SiccFunction
    liminf_mod: LiminfModulus

    def __post_init__(self):
        if not self.K >= 1:
            raise DomainError("K must be at least 1")


@dataclass(frozen=True)
class RSSpec:
    K: float
    L: float
    M: float
    chi: TailRate
    theta: DivergenceRate
    tau: RegularityFn
    f: SiccFunction

    def __post_init__(self):
        _positive(K=self.K, L=self.L)
        if self.M < 0:
            raise DomainError("M must be nonnegative")


@dataclass(frozen=True)
class FastSpec:
    c: float
    d: float
    r: int
    t: float
    K: float
    L: float

    def __post_init__(self):
        if not self.c > 1:
            raise DomainError("c must exceed 1")
        if self.r < 1:
            raise DomainError("r must be at least 1")
        if self.d < 0 or self.L < 0 or not self.t > 0 or not self.K >= 1:
            raise DomainError("need d >= 0, L >= 0, t > 0 and K >= 1")


@dataclass(frozen=True)
class DvoretzkySpec:
    A: float
    B: float
    C: float
    M: float
    varphi_a: TailRate
    beta_b: TailRate
    gamma_c: TailRate
    mu_y: TailRate
    theta: DivergenceRate
    L_of: Callable[[int], float]

    def __post_init__(self):
        if self.B < 0 or self.A < 0 or self.M < 0:
            raise DomainError("A, B and M must be nonnegative")
        _positive(C=self.C)


@dataclass(frozen=True)
class RMSpec:
    c: float
    d: float
    L: float
    M: float
    theta: DivergenceRate
    chi: TailRate
    tau: RegularityFn
    f: SiccFunction

    def __post_init__(self):
        _positive(c=self.c, L=self.L, M=self.M)
        if self.d < 0:
            raise DomainError("d must be nonnegative")


def _snapshot(name: str, **kw) -> str:
    parts = []
    for k, v in kw.items():
        if isinstance(v, float):
            v = f"{v:.10g}"
        elif isinstance(v, SiccFunction):
            v = v.label
        elif callable(v):
            v = getattr(v, "label", getattr(v, "__name__", "fn"))
        parts.append(f"{k}={v}")
    return f"{name}(" + ", ".join(parts) + ")"


def _check_eps(eps):
    if not eps > 0:
        raise DomainError(f"epsilon must be positive, got {eps!r}")


def _check_pair(lam, eps):
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    _check_eps(eps)


def rate_general(spec: GeneralSpec) -> RateBundle:
    """Mean and almost-sure rates for almost-supermartingales."""
    f, shrink = spec.f, float(spec.f.psi(1.0 / spec.K)) / 2.0

    def rho(eps):
        _check_eps(eps)
        e1 = eps * shrink
        return as_index(spec.liminf_mod(e1, as_index(spec.chi(float(f.kappa(e1))))))

    def rho_as(lam, eps):
        _check_pair(lam, eps)
        return rho(lam * float(f.eval(eps)))

    return RateBundle(rho, rho_as, _snapshot("general", K=spec.K, f=spec.f))


def compose_liminf(liminf_V: LiminfModulus, tau: RegularityFn) -> LiminfModulus:
    """Turn a liminf bound for E[V_n] into one for E[f(X_n)] through tau."""
    return lambda eps, N: liminf_V(tau(eps), N)


def qihou_sum_bound(init_bound: float, prod_bound: float, err_bound: float) -> float:
    """Bound on the summed decrease terms of a perturbed nonnegative recursion.

    With x_0 < init_bound, prod(1 + alpha_i) < prod_bound and
    sum(gamma_i) < err_bound, the sum of the beta_i in
    x_{n+1} <= (1 + alpha_n) x_n - beta_n + gamma_n stays below the result.
    """
    _positive(init_bound=init_bound, prod_bound=prod_bound)
    if err_bound < 0:
        raise DomainError("err_bound must be nonnegative")
    return prod_bound * (init_bound + err_bound)


def liminf_from_sum(theta: DivergenceRate, L: float) -> LiminfModulus:
    """Liminf bound for v_n given sum u_n v_n < L and a divergence rate of u_n."""
    _positive(L=L)

    def phi(eps, N):
        _check_eps(eps)
        return as_index(theta(N, L / eps))

    return phi


def rate_rs(spec: RSSpec) -> RateBundle:
    """Rates for E[X_{n+1}|F_n] <= (1+a_n)X_n - u_n V_n + C_n with a regularity modulus."""
    f, shrink = spec.f, float(spec.f.psi(1.0 / spec.K)) / 2.0
    total = spec.K * (spec.L + spec.M)

    def rho(eps):
        _check_eps(eps)
        e1 = eps * shrink
        start = as_index(spec.chi(float(f.kappa(e1))))
        return as_index(spec.theta(start, total / spec.tau(e1)))

    def rho_as(lam, eps):
        _check_pair(lam, eps)
        return rho(lam * float(f.eval(eps)))

    return RateBundle(rho, rho_as, _snapshot("rs", K=spec.K, L=spec.L, M=spec.M,
                                              f=spec.f, tau=spec.tau))


class RecurrenceBound(NamedTuple):
    u: float
    bound: Callable[[int], float]


def recurrence_bound(c: float, d: float, r: int, x0: float) -> RecurrenceBound:
    """u/(n+r) dominates any x_n with x_{n+1} <= (1 - c/(n+r)) x_n + d/(n+r)^2."""
    if not c > 1:
        raise DomainError("c must exceed 1")
    if r < 1:
        raise DomainError("r must be at least 1")
    u = max(d / (c - 1.0), r * x0)
    # while n + r < c the factor 1 - c/(n+r) is negative, so x_{n+1} is only
    # bounded by d/(n+r)^2 and u must cover that term directly
    m = r
    while m < c:
        u = max(u, d * (m + 1.0) / (m * m))
        m += 1
    return RecurrenceBound(u, lambda n: u / (n + r))


class FastRates(NamedTuple):
    mean_bound: Callable[[int], float]
    exceed_bound: Callable[[int, float], float]
    u: float


def fast_rate_rs(spec: FastSpec) -> FastRates:
    """O(1/n) mean bound and tail-probability bound under a linear modulus.

    ``exceed_bound`` is the raw formula; use :func:`clamp_unit` for reports.
    """
    u = recurrence_bound(spec.c, spec.d, spec.r, spec.L).u
    K, d, r = spec.K, spec.d, spec.r

    def exceed(n, eps):
        _check_eps(eps)
        return K * (u + 2.0 * d) / (eps * (n + r))

    return FastRates(lambda n: u / (n + r), exceed, u)


def clamp_unit(p: float) -> float:
    return min(1.0, max(0.0, p))


def dvoretzky_K(delta: float, B: float) -> float:
    return (1.0 + B * B) * math.exp(delta * B)


def dvoretzky_M(delta: float, B: float, C: float, M: float) -> float:
    return (1.0 + delta * B) * C + delta * (1.0 + delta * B) * B + M


class DvoretzkyRate:
    """Almost-sure rate rho(lambda, eps) for the shrinkage-plus-noise scheme.

    Calling the object evaluates the rate; :meth:`intermediates` exposes every
    quantity entering the formula.
    """

    def __init__(self, spec: DvoretzkySpec):
        self.spec = spec
        self.provenance = _snapshot("dvoretzky", A=spec.A, B=spec.B, C=spec.C, M=spec.M)

    def chi_delta(self, delta: float, eps: float) -> int:
        s = self.spec
        g = 1.0 + delta * s.B
        parts = [as_index(s.mu_y(eps / 3.0)), as_index(s.gamma_c(eps / (3.0 * g)))]
        if s.B > 0:
            # B = 0 certifies b_n = 0, so the b-tail contributes nothing
            parts.append(as_index(s.beta_b(eps / (3.0 * delta * g))))
        return max(parts)

    def intermediates(self, lam: float, eps: float) -> dict:
        _check_pair(lam, eps)
        s = self.spec
        delta = eps / 2.0
        K = dvoretzky_K(delta, s.B)
        Md = dvoretzky_M(delta, s.B, s.C, s.M)
        tail_arg = lam * lam * eps / (4.0 * K)
        chi = self.chi_delta(delta, tail_arg)
        phi = as_index(s.varphi_a(delta))
        start = max(chi, phi)
        L = float(s.L_of(phi))
        target = 2.0 * K * math.sqrt(K) * (L + Md) / (lam * eps)
        return {"delta": delta, "K_delta": K, "M_delta": Md, "chi_arg": tail_arg,
                "chi_delta": chi, "varphi": phi, "L": L, "theta_start": start,
                "theta_target": target}

    def __call__(self, lam: float, eps: float) -> int:
        q = self.intermediates(lam, eps)
        return as_index(self.spec.theta(q["theta_start"], q["theta_target"]))


def rate_dvoretzky(spec: DvoretzkySpec) -> DvoretzkyRate:
    return DvoretzkyRate(spec)


class FejerRates(NamedTuple):
    rho: RateFn
    rho_as: RateASFn
    rho_metric: RateASFn


def rate_fejer(tau: RegularityFn, K: float, chi: TailRate, liminf_mod: LiminfModulus,
               consistency: RegularityFn = lambda e: e) -> FejerRates:
    """Rates for stochastically quasi-Fejer monotone sequences.

    ``consistency`` maps a metric tolerance to a tolerance on the distance map.
    """
    _positive(K=K)

    def rho(eps):
        _check_eps(eps)
        e1 = eps / (2.0 * K)
        return as_index(liminf_mod(tau(e1), as_index(chi(e1))))

    def rho_as(lam, eps):
        _check_pair(lam, eps)
        return rho(lam * eps)

    def rho_metric(lam, eps):
        _check_pair(lam, eps)
        return rho_as(lam, consistency(eps))

    return FejerRates(rho, rho_as, rho_metric)


def _rm_rates(spec: RMSpec, K1: float, chi_arg, name: str, reduce) -> RateBundle:
    K2 = math.exp(spec.c * spec.M) * (spec.L + spec.d * spec.M)

    def rho(eps):
        _check_eps(eps)
        e1 = K1 * eps
        # noise-free case: the error series vanishes and needs no tail index
        start = 0 if spec.d == 0 else as_index(spec.chi(chi_arg(e1) / spec.d))
        return as_index(spec.theta(start, K2 / spec.tau(e1)))

    def rho_as(lam, eps):
        _check_pair(lam, eps)
        return rho(lam * reduce(eps))

    return RateBundle(rho, rho_as, _snapshot(name, c=spec.c, d=spec.d, L=spec.L, M=spec.M,
                                              K1=K1, K2=K2, f=spec.f, tau=spec.tau))


def rate_rm(spec: RMSpec) -> RateBundle:
    """Rates for x_{n+1} = x_n - a_n y_n in Hilbert space."""
    f = spec.f
    K1 = 0.5 * float(f.psi(math.exp(-spec.c * spec.M)))
    return _rm_rates(spec, K1, lambda e: float(f.kappa(e)), "rm",
                     lambda eps: float(f.eval(eps * eps)))


def rate_rm_sqrt(spec: RMSpec) -> RateBundle:
    """Variant with the premise phrased on E||x_n - z|| directly."""
    K1 = 0.5 * math.exp(-spec.c * spec.M / 2.0)
    return _rm_rates(spec, K1, lambda e: e * e, "rm-sqrt", lambda eps: eps)


class StronglyMonotoneRates(NamedTuple):
    step: Callable[[int], float]
    mean_bound: Callable[[int], float]
    exceed_bound: Callable[[int, float], float]
    u: float


def fast_rate_strongly_monotone(beta: float, c: float, d: float, r: int, L: float,
                                K: float = 1.0) -> StronglyMonotoneRates:
    """O(1/n) bounds for a beta-strongly monotone field with steps 1/(beta(n+r)).

    u takes the largest of 2d/beta, 2d/beta^2 and rL so that it covers both
    ways of instantiating the underlying recurrence.
    """
    _positive(beta=beta, c=c)
    if d < 0 or L < 0:
        raise DomainError("d and L must be nonnegative")
    if r < 2.0 * c / (beta * beta):
        raise DomainError(f"step offset r={r} is below 2c/beta^2={2 * c / beta ** 2:g}")
    d_err = d / beta ** 2
    u = max(2.0 * d / beta, recurrence_bound(1.5, d_err, r, L).u)

    def exceed(n, eps):
        _check_eps(eps)
        return K * (u + 2.0 * d_err) / (eps * (n + r))

    return StronglyMonotoneRates(lambda n: 1.0 / (beta * (n + r)), lambda n: u / (n + r),
                                 exceed, u)


__all__ = [
    "RateBundle", "GeneralSpec", "RSSpec", "FastSpec", "DvoretzkySpec", "RMSpec",
    "rate_general", "compose_liminf", "qihou_sum_bound", "liminf_from_sum", "rate_rs",
    "recurrence_bound", "fast_rate_rs", "rate_dvoretzky", "rate_fejer", "rate_rm",
    "rate_rm_sqrt", "fast_rate_strongly_monotone", "clamp_unit", "as_index", "format_index",
    "dvoretzky_K", "dvoretzky_M", "sicc_power",
]
