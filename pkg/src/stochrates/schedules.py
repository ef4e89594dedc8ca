"""Parametric nonnegative sequences: step sizes, noise levels, error series.

Each schedule knows its value at index ``n`` plus the certified quantities the
rate calculators need: totals, tail indices (rates of convergence of a
summable series) and rates of divergence. All bounds err on the safe side.

Expression grammar (optionally prefixed by a positive multiplier ``s*``):

    const:v          a_n = v
    harmonic:b,r     a_n = 1 / (b (n + r))
    power:p          a_n = (n + 1)^(-p)
    geometric:s,q    a_n = s q^n
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_CEILING, Context, Decimal
from typing import Optional, Tuple

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError

KINDS = ("const", "harmonic", "power", "geometric")

_DEC = Context(prec=60, Emax=10**9, Emin=-10**9)


@dataclass(frozen=True)
class Schedule:
    kind: str
    params: Tuple[float, ...]
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        need = {"const": 1, "harmonic": 2, "power": 1, "geometric": 2}[self.kind]
        if len(self.params) != need:
            raise ConfigError(f"{self.kind} takes {need} parameter(s), got {self.params}")
        if not self.scale >= 0:
            raise ConfigError("schedule multiplier must be nonnegative")
        p = self.params
        if self.kind == "const" and p[0] < 0:
            raise ConfigError("const value must be nonnegative")
        if self.kind == "harmonic" and not (p[0] > 0 and p[1] > 0):
            raise ConfigError("harmonic:b,r needs b > 0 and r > 0")
        if self.kind == "power" and not p[0] > 0:
            raise ConfigError("power:p needs p > 0")
        if self.kind == "geometric" and not (p[0] >= 0 and 0 <= p[1] < 1):
            raise ConfigError("geometric:s,q needs s >= 0 and 0 <= q < 1")

    # -- evaluation ------------------------------------------------------
    def value(self, n):
        """Value at index n (int or integer array)."""
        fn = np.asarray(n, dtype=np.float64)
        p = self.params
        if self.kind == "const":
            v = np.full_like(fn, p[0])
        elif self.kind == "harmonic":
            v = 1.0 / (p[0] * (fn + p[1]))
        elif self.kind == "power":
            v = (fn + 1.0) ** (-p[0])
        else:
            v = p[0] * p[1] ** fn
        v = self.scale * v
        return float(v) if np.ndim(v) == 0 else v

    __call__ = value

    def scaled(self, s: float) -> "Schedule":
        return Schedule(self.kind, self.params, self.scale * s)

    def kernel_row(self) -> np.ndarray:
        """Flat float encoding consumed by the simulation kernels."""
        p = tuple(self.params) + (0.0,) * (2 - len(self.params))
        return np.array([KINDS.index(self.kind), p[0], p[1], self.scale], dtype=np.float64)

    @property
    def expr(self) -> str:
        body = f"{self.kind}:" + ",".join(f"{v:.17g}" for v in self.params)
        return body if self.scale == 1.0 else f"{self.scale:.17g}*{body}"

    # -- sums ------------------------------------------------------------
    def is_zero(self) -> bool:
        return self.scale == 0 or (self.kind in ("const", "geometric") and self.params[0] == 0)

    def total(self) -> float:
        """Upper bound on the sum of all terms (inf when divergent)."""
        if self.is_zero():
            return 0.0
        p, s = self.params, self.scale
        if self.kind == "geometric":
            return s * p[0] / (1.0 - p[1])
        if self.kind == "power" and p[0] > 1:
            return s * float(special.zeta(p[0]))
        return math.inf

    def square_total(self) -> float:
        """Upper bound on the sum of squared terms."""
        if self.is_zero():
            return 0.0
        p, s = self.params, self.scale
        if self.kind == "geometric":
            return (s * p[0]) ** 2 / (1.0 - p[1] ** 2)
        if self.kind == "harmonic":
            return s * s * float(special.polygamma(1, p[1])) / (p[0] * p[0])
        if self.kind == "power" and p[0] > 0.5:
            return s * s * float(special.zeta(2.0 * p[0]))
        return math.inf

    def sup(self) -> float:
        """Largest value; every kind is nonincreasing in n."""
        return float(self.value(0))

    def convergence_rate(self, eps: float) -> int:
        """Index j with a_n < eps for every n >= j."""
        if not eps > 0:
            raise DomainError("tolerance must be positive")
        if self.is_zero():
            return 0
        p, s = self.params, self.scale
        if self.kind == "const":
            if s * p[0] < eps:
                return 0
            raise DomainError(f"{self.expr} does not converge to 0")
        if self.kind == "harmonic":
            # s / (beta (n + r)) < eps  iff  n > s / (beta eps) - r
            j = max(0, int(math.floor(s / (p[0] * eps) - p[1])) + 1)
        elif self.kind == "power":
            j = max(0, int(math.floor((s / eps) ** (1.0 / p[0]))))
        else:
            a0, q = s * p[0], p[1]
            if q == 0 or a0 < eps:
                return 0 if a0 < eps else 1
            j = max(0, int(math.floor(math.log(eps / a0) / math.log(q))))
        while self.value(j) >= eps:
            j += 1
        return j

    def tail_rate(self, eps: float) -> int:
        """Smallest j (up to safe rounding) with sum_{n >= j} a_n < eps."""
        return _tail_index(self.kind, self.params, self.scale, eps, squared=False)

    def square_tail_rate(self, eps: float) -> int:
        """Index j with sum_{n >= j} a_n^2 < eps."""
        return _tail_index(self.kind, self.params, self.scale, eps, squared=True)

    def divergence_rate(self, k: int, b: float) -> int:
        """theta(k, b) with sum_{n=k}^{theta} a_n >= b."""
        if b <= 0:
            raise DomainError("divergence target must be positive")
        k = int(k)
        if self.is_zero():
            raise DomainError(f"{self.expr} does not diverge")
        p, b = self.params, b / self.scale
        if self.kind == "const":
            return k + _ceil(b / p[0])
        if self.kind == "harmonic":
            beta, r = p
            # sum_{i=k}^m 1/(beta(i+r)) >= log((m+1+r)/(k+r)) / beta
            grow = _DEC.exp(Decimal(beta * b, _DEC))
            start = Decimal(k, _DEC) + Decimal(r, _DEC)
            m = _ceil_decimal(start * grow - Decimal(r, _DEC) - 1)
            return max(k, m)
        if self.kind == "power" and p[0] <= 1:
            q = p[0]
            if q == 1:
                return Schedule("harmonic", (1.0, 1.0)).divergence_rate(k, b)
            e = 1.0 - q
            # sum_{i=k}^m (i+1)^-q >= ((m+2)^e - (k+1)^e) / e
            base = Decimal(k + 1, _DEC) ** Decimal(e, _DEC) + Decimal(e * b, _DEC)
            m = _ceil_decimal(_DEC.power(base, Decimal(1.0 / e, _DEC))) - 2
            return max(k, m)
        raise DomainError(f"{self.expr} is summable, it has no rate of divergence")

    def zero_from(self) -> Optional[int]:
        """First index from which every value evaluates to exactly 0.0, if any."""
        if self.is_zero():
            return 0
        if self.kind != "geometric":
            return None
        if self.params[1] == 0:
            return 1
        # geometric values are nonincreasing in floating point too
        lo, hi = 0, 1
        while self.value(hi) != 0.0:
            hi *= 2
            if hi > 1 << 40:
                return None
        while lo < hi:
            mid = (lo + hi) // 2
            if self.value(mid) == 0.0:
                hi = mid
            else:
                lo = mid + 1
        return lo


def parse_schedule(expr) -> Schedule:
    """Parse ``[s*]kind:p1[,p2]``; a bare number means a constant."""
    if isinstance(expr, Schedule):
        return expr
    if isinstance(expr, (int, float)):
        return Schedule("const", (float(expr),))
    text = str(expr).strip().replace(" ", "")
    scale = 1.0
    if "*" in text:
        head, text = text.split("*", 1)
        scale = _num(head)
    kind, _, rest = text.partition(":")
    if kind not in KINDS:
        try:
            return Schedule("const", (_num(text),), scale)
        except ConfigError:
            raise ConfigError(f"unknown schedule expression {expr!r}") from None
    params = tuple(_num(v) for v in rest.split(",")) if rest else ()
    return Schedule(kind, params, scale)


def _num(text: str) -> float:
    try:
        if "/" in text:
            a, b = text.split("/", 1)
            return float(a) / float(b)
        return float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def _ceil(x: float) -> int:
    return int(math.ceil(x))


def _ceil_decimal(x: Decimal) -> int:
    return int(x.to_integral_value(rounding=ROUND_CEILING))


def _tail_index(kind, p, s, eps, squared) -> int:
    if not eps > 0:
        raise DomainError("tail tolerance must be positive")
    if s == 0 or (kind in ("const", "geometric") and p[0] == 0):
        return 0
    if math.isinf(eps):
        return 0
    if kind == "geometric":
        a0, q = (s * p[0]) ** (2 if squared else 1), p[1] ** (2 if squared else 1)
        if q == 0:
            return 0 if a0 < eps else 1
        tail = lambda j: a0 * q ** j / (1.0 - q)
        j = max(0, int(math.floor(math.log(eps * (1.0 - q) / a0) / math.log(q))))
        while tail(j) >= eps:
            j += 1
        while j > 0 and tail(j - 1) < eps:
            j -= 1
        return j
    if kind == "harmonic" and squared:
        beta, r = p
        c = s * s / (beta * beta)
        # sum_{n>=j} c/(n+r)^2 <= c/(j+r-1) whenever j+r-1 > 0
        return max(0, int(math.floor(c / eps - r)) + 2)
    if kind == "power":
        e = 2.0 * p[0] if squared else p[0]
        c = s * s if squared else s
        if e <= 1:
            raise DomainError("series is not summable")
        # sum_{n>=j} (n+1)^-e <= j^(1-e)/(e-1) for j >= 1
        return max(1, int(math.floor((c / ((e - 1.0) * eps)) ** (1.0 / (e - 1.0)))) + 1)
    raise DomainError(f"{kind} series is not summable")
