"""Strictly increasing concave functions with attached moduli.

A function ``f`` in this class satisfies ``f(0) = 0``, is strictly increasing,
concave and continuous, and carries two moduli:

* ``psi`` with ``f(x * a) >= f(x) * psi(a)`` for ``x >= 0`` and ``a`` in [0, 1];
* ``kappa`` with ``x < kappa(eps)  =>  f(x) < eps``.

All callables accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from .errors import ConfigError, DomainError

# Semantic shapes of the maps handled by the rate calculators.
RateFn = Callable[[float], int]
RateASFn = Callable[[float, float], int]
LiminfModulus = Callable[[float, int], int]
DivergenceRate = Callable[[int, float], int]
TailRate = Callable[[float], int]
RegularityFn = Callable[[float], float]

SLACK = 1e-12


@dataclass(frozen=True)
class SiccFunction:
    eval: Callable
    psi: Callable
    kappa: Callable
    label: str

    def __call__(self, x):
        if np.any(np.asarray(x) < 0):
            raise DomainError(f"{self.label} is defined on [0, inf), got {x!r}")
        return self.eval(x)


def sicc_power(q) -> SiccFunction:
    """x -> x**q with psi(a) = a**q and kappa(eps) = eps**(1/q)."""
    q = float(q)
    if not 0.0 < q <= 1.0:
        raise DomainError(f"power exponent must lie in (0, 1], got {q}")
    if q == 1.0:
        ident = lambda x: x
        return SiccFunction(ident, ident, ident, "id")
    inv = 1.0 / q
    return SiccFunction(
        lambda x: np.power(x, q),
        lambda a: np.power(a, q),
        lambda e: np.power(e, inv),
        f"power:{_fmt(q)}",
    )


def sicc_log(c) -> SiccFunction:
    """x -> log_c(1 + x) with psi(a) = a and kappa(eps) = c**eps - 1."""
    c = float(c)
    if not c > 1.0:
        raise DomainError(f"logarithm base must exceed 1, got {c}")
    lc = math.log(c)
    return SiccFunction(
        lambda x: np.log1p(x) / lc,
        lambda a: a,
        lambda e: np.expm1(np.multiply(e, lc)),
        f"log:{_fmt(c)}",
    )


def sicc_combine(kind: str, f: SiccFunction, g: SiccFunction,
                 alpha: float = 1.0, beta: float = 1.0) -> SiccFunction:
    """Closure operations: ``sum`` (alpha*f + beta*g), ``compose`` (f o g), ``min``."""
    if kind == "sum":
        if not (alpha > 0 and beta > 0):
            raise DomainError("sum weights must be positive")
        return SiccFunction(
            lambda x: alpha * f.eval(x) + beta * g.eval(x),
            lambda a: np.minimum(f.psi(a), g.psi(a)),
            lambda e: np.minimum(f.kappa(np.divide(e, 2 * alpha)),
                                 g.kappa(np.divide(e, 2 * beta))),
            f"sum({_fmt(alpha)}*{f.label}, {_fmt(beta)}*{g.label})",
        )
    if kind == "compose":
        # f(g(xa)) >= f(g(x) psi_g(a)) >= f(g(x)) psi_f(psi_g(a))
        return SiccFunction(
            lambda x: f.eval(g.eval(x)),
            lambda a: f.psi(g.psi(a)),
            lambda e: g.kappa(f.kappa(e)),
            f"compose({f.label}, {g.label})",
        )
    if kind == "min":
        return SiccFunction(
            lambda x: np.minimum(f.eval(x), g.eval(x)),
            lambda a: np.minimum(f.psi(a), g.psi(a)),
            lambda e: np.maximum(f.kappa(e), g.kappa(e)),
            f"min({f.label}, {g.label})",
        )
    raise DomainError(f"unknown combination kind {kind!r}")


@dataclass
class PropertyReport:
    label: str
    samples: int
    checks: Dict[str, bool] = field(default_factory=dict)
    worst: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> List[str]:
        return [k for k, ok in self.checks.items() if not ok]


def verify_sicc(f: SiccFunction, samples: int = 10_000, domain_bound: float = 1e3,
                seed: int = 0, slack: float = SLACK) -> PropertyReport:
    """Check the defining properties of ``f`` on seeded random samples.

    Each check records the largest violation found; a violation counts only
    when it exceeds ``slack * (1 + |reference value|)``.
    """
    if samples < 1:
        raise DomainError("sample count must be at least 1")
    with np.errstate(over="ignore", under="ignore"):
        return _verify(f, samples, domain_bound, seed, slack)


def _verify(f, samples, domain_bound, seed, slack) -> PropertyReport:
    rng = np.random.default_rng(seed)
    rep = PropertyReport(f.label, samples)

    def record(name, excess, scale):
        excess = np.asarray(excess, dtype=float)
        tol = slack * (1.0 + np.abs(np.asarray(scale, dtype=float)))
        bad = excess > tol
        rep.checks[name] = not bool(np.any(bad))
        rep.worst[name] = float(np.max(excess)) if excess.size else 0.0

    zero = float(f.eval(0.0))
    record("zero", abs(zero), 0.0)

    x = rng.uniform(0.0, domain_bound, samples)
    y = rng.uniform(0.0, domain_bound, samples)
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    flo, fhi = f.eval(lo), f.eval(hi)
    # strictness only asserted where the pair is numerically separated
    separated = (hi - lo) > 1e-9 * (1.0 + hi)
    # a tie between separated points breaks strictness: count it as a unit violation
    tie = separated & (fhi <= flo)
    record("increasing", np.where(tie, 1.0 + (flo - fhi), 0.0), 0.0)

    fm = f.eval((x + y) / 2.0)
    avg = (f.eval(x) + f.eval(y)) / 2.0
    record("concave", np.maximum(avg - fm, 0.0), avg)

    a = rng.uniform(0.0, 1.0, samples)
    lhs = f.eval(x * a)
    rhs = f.eval(x) * f.psi(a)
    record("supermultiplicative", np.maximum(rhs - lhs, 0.0), rhs)
    pos = f.psi(a[a > 0])
    record("psi_positive", np.where(pos > 0, 0.0, 1.0), 0.0)

    eps = rng.uniform(0.0, 10.0, samples)
    eps = np.where(eps == 0.0, 10.0, eps)
    k = f.kappa(eps)
    # subnormal or overflowing kappa values cannot be probed in floating point
    normal = np.isfinite(k) & (np.asarray(k) >= np.finfo(float).tiny)
    eps, k = eps[normal], np.asarray(k)[normal]
    u = rng.uniform(0.0, 1.0, eps.size)
    xs = np.concatenate([u * k, k * (1.0 - 1e-12)])
    es = np.concatenate([eps, eps])
    fx = f.eval(xs)
    record("continuity", np.maximum(fx - es, 0.0), es)
    return rep


def sicc_from_name(expr: str) -> SiccFunction:
    """Parse the catalog grammar: ``id``, ``sqrt``, ``power:q``, ``log:c``,
    ``sum(a*f, b*g)``, ``compose(f, g)``, ``min(f, g)``."""
    s = expr.strip().replace("·", "*")
    if s in ("id", "identity"):
        return sicc_power(1.0)
    if s == "sqrt":
        return sicc_power(0.5)
    for kind in ("sum", "compose", "min"):
        if s.startswith(kind + "(") and s.endswith(")"):
            parts = split_top_level(s[len(kind) + 1:-1])
            if len(parts) != 2:
                raise ConfigError(f"{kind} takes two arguments: {expr!r}")
            if kind == "sum":
                (a, f), (b, g) = (_weighted(p) for p in parts)
                return sicc_combine("sum", f, g, a, b)
            return sicc_combine(kind, sicc_from_name(parts[0]), sicc_from_name(parts[1]))
    head, _, arg = s.partition(":")
    try:
        if head == "power":
            return sicc_power(_number(arg))
        if head == "log":
            return sicc_log(_number(arg))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown s.i.c.c. function {expr!r}")


def split_top_level(s: str) -> List[str]:
    """Split on commas that are not nested inside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur).strip())
    return parts


def _weighted(term: str):
    w, star, rest = term.partition("*")
    if not star:
        return 1.0, sicc_from_name(term)
    try:
        return float(w), sicc_from_name(rest)
    except ValueError:
        return 1.0, sicc_from_name(term)


def _number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _fmt(v: float) -> str:
    return f"{v:g}"
