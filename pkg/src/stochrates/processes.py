"""Seeded stochastic iterations with known targets and certified constants.

States are stored as float rows: a Euclidean point is its coordinate vector,
a point of the star tree is ``[leg, t]`` with the origin always written as
leg 0. The :class:`ProcessModel` functions (``functional``, ``dist_map``,
``metric``) act on arrays of such rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Context, Decimal
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels as K
from .errors import ConfigError, DomainError
from .schedules import Schedule, parse_schedule

NEVER = 1 << 62


# -- star tree -------------------------------------------------------------

@dataclass(frozen=True)
class StarPoint:
    """Point at distance t from the origin along leg ``leg``."""
    leg: int
    t: float

    def __post_init__(self):
        if not self.t >= 0:
            raise DomainError(f"star coordinate must be nonnegative, got {self.t}")
        if self.leg < 0:
            raise DomainError("leg index must be nonnegative")
        if self.t == 0:
            object.__setattr__(self, "leg", 0)

    def row(self) -> np.ndarray:
        return np.array([float(self.leg), float(self.t)])


StatePoint = Union[StarPoint, np.ndarray]


def _check_legs(legs, *pts):
    if legs is None:
        return
    for p in pts:
        if p.leg >= legs:
            raise DomainError(f"leg {p.leg} out of range for a star with {legs} legs")


def star_distance(x: StarPoint, y: StarPoint, legs: Optional[int] = None) -> float:
    _check_legs(legs, x, y)
    if x.leg == y.leg:
        return abs(x.t - y.t)
    return x.t + y.t


def star_geodesic(x: StarPoint, y: StarPoint, s: float, legs: Optional[int] = None) -> StarPoint:
    """Point at fraction s of the way from x to y, passing through the origin."""
    _check_legs(legs, x, y)
    if not 0.0 <= s <= 1.0:
        raise DomainError("geodesic parameter must lie in [0, 1]")
    leg, t = K._star_geodesic_np(np.array([x.leg], float), np.array([x.t]),
                                 np.array([y.leg], float), np.array([y.t]), s)
    return StarPoint(int(leg[0]), float(t[0]))


def star_distance_rows(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    same = (x[..., 0] == y[..., 0]) | (x[..., 1] == 0) | (y[..., 1] == 0)
    return np.where(same, np.abs(x[..., 1] - y[..., 1]), x[..., 1] + y[..., 1])


def frechet_mean_star(anchors: Sequence[StarPoint], weights: Sequence[float],
                      legs: int) -> Tuple[StarPoint, float]:
    """Exact weighted Frechet mean on the star; returns (mean, min value).

    On leg l the objective is a quadratic in t whose minimizer is the
    on-leg weighted sum of anchor radii minus the off-leg one, clipped at 0.
    """
    w = np.asarray(weights, float)
    best = None
    for l in range(legs):
        on = np.array([a.leg == l and a.t > 0 for a in anchors])
        s = np.array([a.t for a in anchors])
        t = max(0.0, float(np.sum(w[on] * s[on]) - np.sum(w[~on] * s[~on])))
        p = StarPoint(l, t)
        val = float(sum(wi * star_distance(p, a) ** 2 for wi, a in zip(w, anchors)))
        if best is None or val < best[1]:
            best = (p, val)
    return best


# -- random source ---------------------------------------------------------

class RandomSource:
    """Counter-based stream for one trial: draws depend only on (seed, trial, counter)."""

    def __init__(self, master_seed: int, trial: int):
        self.master_seed = int(master_seed)
        self.trial = int(trial)
        self.key = K.trial_key(master_seed, trial)
        self.counter = 0

    def uniform(self) -> float:
        v = K.uniform_ref(self.key, self.counter)
        self.counter += 1
        return v

    def normal(self) -> float:
        v = K.normal_ref(self.key, self.counter)
        self.counter += 1
        return v

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def at(self, counter: int) -> "RandomSource":
        self.counter = int(counter)
        return self


# -- process models --------------------------------------------------------

@dataclass(frozen=True)
class ProcessModel:
    name: str
    code: int
    space: int
    width: int
    prm: np.ndarray
    schedules: Tuple[Schedule, ...]
    init: np.ndarray
    target: np.ndarray
    functional: Callable[[np.ndarray], np.ndarray]
    dist_map: Callable[[np.ndarray], np.ndarray]
    metric: Callable[[np.ndarray], np.ndarray]
    certified: Dict[str, object] = field(default_factory=dict)
    quiet: int = NEVER
    supermartingale: bool = False
    settles: bool = False  # metric never increases once the noise is off
    dist_is_square: bool = False
    legs: int = 0
    params: Dict[str, object] = field(default_factory=dict)

    def initial_states(self, seed: int, first_trial: int, trials: int) -> np.ndarray:
        if self.code == K.COUNTER:
            keys = K.keys_np(seed, first_trial, trials)
            u = K.uniform_np(keys, K.UNIFORM_SLOT)
            return np.where(u < 0.5, 2.0, 0.0)[:, None]
        return np.tile(self.init, (trials, 1))

    def kernel_schedules(self) -> np.ndarray:
        if not self.schedules:
            return np.zeros((1, 4))
        return np.stack([s.kernel_row() for s in self.schedules])

    def step(self, x: StatePoint, n: int, source: RandomSource) -> StatePoint:
        """One step from index n, drawing from ``source``'s trial stream."""
        row = to_row(x, self.space)[None, :]
        keys = np.array([source.key], dtype=np.uint64)
        sched = self.kernel_schedules()
        out = K._step_np(self.code, self.space, self.prm, sched, K.sched_table(sched, 0), row,
                         keys, int(n), self.quiet)[0]
        return from_row(out, self.space)

    def F(self, x: StatePoint) -> float:
        return float(self.functional(to_row(x, self.space)[None, :])[0])

    def phi(self, x: StatePoint) -> float:
        return float(self.dist_map(to_row(x, self.space)[None, :])[0])


def to_row(x: StatePoint, space: int) -> np.ndarray:
    if isinstance(x, StarPoint):
        return x.row()
    return np.atleast_1d(np.asarray(x, dtype=float))


def from_row(row: np.ndarray, space: int) -> StatePoint:
    if space == K.STAR:
        return StarPoint(int(row[0]), float(row[1]))
    return np.array(row, dtype=float)


def _euclid(x0, dim=None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x0, dtype=float))
    if dim is not None and v.size == 1 and dim > 1:
        v = np.full(dim, float(v[0]))
    if v.ndim != 1 or v.size < 1:
        raise ConfigError("Euclidean points need dimension at least 1")
    if v.size > K.MAX_DIM:
        raise ConfigError(f"dimension is limited to {K.MAX_DIM}")
    return v


def _norm_rows(x, z):
    return np.sqrt(np.sum((x - z) ** 2, axis=-1))


def _product_total(lam: Schedule, other: Schedule) -> float:
    """Upper bound on sum lam_n * other_n for nonincreasing schedules."""
    return lam.sup() * other.total()


def counterexample_model(eta_check: bool = True) -> ProcessModel:
    """X_0 = Y_0, X_{n+1} = X_n Y_{n+1} with Y uniform on {0, 2}."""
    zero = np.zeros(1)
    eta = math.sqrt(2.0) / 2.0
    cert = {"E_U0": 1.0, "E_X": 1.0, "eta": eta}
    if eta_check:
        cert["E_sqrtY"] = 0.5 * 0.0 + 0.5 * math.sqrt(2.0)
    return ProcessModel(
        name="counterexample", code=K.COUNTER, space=K.EUCLID, width=1, prm=np.zeros(1),
        schedules=(), init=np.full(1, np.nan), target=zero,
        functional=lambda x: np.sqrt(x[..., 0]), dist_map=lambda x: x[..., 0],
        metric=lambda x: np.abs(x[..., 0]), certified=cert, quiet=0,
        supermartingale=True,
    )


def counterexample_sqrt_mean(n: int) -> float:
    return (math.sqrt(2.0) / 2.0) ** (n + 1)


RM_FIELDS = {"linear": K.LINEAR, "cubic": K.CUBIC, "abs": K.ABS}


def rm_model(field_name: str, noise_sd: float, steps, x0=1.0, beta: float = 1.0,
             dim: int = 1) -> ProcessModel:
    """x_{n+1} = x_n - a_n (M(x_n) + g_n) with Gaussian g_n; the zero of M is 0."""
    if field_name not in RM_FIELDS:
        raise ConfigError(f"unknown Robbins-Monro field {field_name!r}")
    if not noise_sd >= 0:
        raise ConfigError("noise_sd must be nonnegative")
    steps = parse_schedule(steps)
    if steps.is_zero():
        raise ConfigError("steps must be positive")
    code = RM_FIELDS[field_name]
    if code != K.LINEAR:
        dim = 1
    else:
        if not beta > 0:
            raise ConfigError("beta must be positive")
    x0 = _euclid(x0, dim)
    dim = x0.size
    zero = np.zeros(dim)
    d = dim * noise_sd ** 2
    if code == K.LINEAR:
        fn = lambda x: beta * np.sum(x * x, axis=-1)
        c = beta * beta
    elif code == K.CUBIC:
        fn = lambda x: np.sum(x ** 4, axis=-1)
        c = None  # x^6 growth: no global linear-quadratic bound
    else:
        fn = lambda x: np.sum(np.abs(x), axis=-1)
        c = 0.0
        d = 1.0 + d
    cert = {"c": c, "d": d, "L": float(np.sum(x0 ** 2)), "beta": beta, "dim": dim,
            "noise_sd": noise_sd, "M": steps.square_total()}
    return ProcessModel(
        name=f"rm:{field_name}", code=K.RM, space=K.EUCLID, width=dim,
        prm=np.array([code, beta, noise_sd], float), schedules=(steps,), init=x0,
        target=zero, functional=fn, dist_map=lambda x: np.sum(x * x, axis=-1),
        metric=lambda x: _norm_rows(x, 0.0), certified=cert,
        quiet=0 if noise_sd == 0 else NEVER, dist_is_square=True,
        params={"field": field_name, "noise_sd": noise_sd, "steps": steps.expr,
                "beta": beta, "dim": dim, "x0": x0.tolist()},
    )


def rm_linear_marginal(model: ProcessModel, n: int, seed: int, first_trial: int,
                       trials: int) -> np.ndarray:
    """Exact draws of ||x_n||^2 for the linear field with steps 1/(beta (n + r)).

    Unrolling the recursion gives (n + r - 1) x_n = (r - 1) x_0 - (sigma/beta) S_n
    with S_n a sum of n standard Gaussians, so x_n is sampled directly. Python
    integers and decimals keep indices far beyond float range exact.
    """
    steps = model.schedules[0]
    beta, sigma = float(model.prm[1]), float(model.prm[2])
    if model.code != K.RM or int(model.prm[0]) != K.LINEAR:
        raise ConfigError("exact marginals exist only for the linear field")
    if steps.kind != "harmonic" or steps.scale != 1.0 or steps.params[0] != beta:
        raise ConfigError("exact marginals need steps harmonic:beta,r with the field's beta")
    r = steps.params[1]
    n = int(n)
    x0 = model.init
    if n == 0:
        return np.full(trials, float(np.sum(x0 ** 2)))
    keys = K.keys_np(seed, first_trial, trials)
    z = np.stack([K.normal_np(keys, k) for k in range(model.width)], axis=1)
    if n < 1 << 50:
        y = (r - 1.0) * x0 - (sigma / beta) * math.sqrt(n) * z
        return np.sum(y * y, axis=1) / (n + r - 1.0) ** 2
    ctx = Context(prec=40, Emax=10 ** 12, Emin=-10 ** 12)
    den = ctx.power(ctx.add(Decimal(n), Decimal(r - 1.0)), 2)
    root = ctx.sqrt(Decimal(n))
    coef = [Decimal((r - 1.0) * v) for v in x0]
    out = np.empty(trials)
    for i in range(trials):
        acc = Decimal(0)
        for k in range(model.width):
            yk = ctx.subtract(coef[k], ctx.multiply(Decimal(sigma / beta * z[i, k]), root))
            acc = ctx.add(acc, ctx.multiply(yk, yk))
        out[i] = float(ctx.divide(acc, den))
    return out


def rm_linear_second_moment(model: ProcessModel, n: int) -> float:
    """Closed form E||x_n||^2 for the setting of :func:`rm_linear_marginal`."""
    beta, sigma = float(model.prm[1]), float(model.prm[2])
    r = model.schedules[0].params[1]
    if n == 0:
        return float(np.sum(model.init ** 2))
    num = (r - 1.0) ** 2 * float(np.sum(model.init ** 2)) + (sigma / beta) ** 2 * n * model.width
    return num / (n + r - 1.0) ** 2


def km_model(contraction_r: float, lam, noise_sd_seq, space: str = "euclidean",
             dim: int = 1, legs: int = 3, x0=1.0, K_empirical: Optional[float] = None
             ) -> ProcessModel:
    """Noisy Krasnoselskii-Mann iteration for T x = r x (fixed point: the origin).

    The noisy value y_n lies within eps_n = 3 sd_n of T x_n: Gaussian noise is
    clipped at that radius.
    """
    if not 0.0 <= contraction_r < 1.0:
        raise ConfigError("contraction_r must lie in [0, 1)")
    lam, sd = parse_schedule(lam), parse_schedule(noise_sd_seq)
    if not 0.0 <= lam.sup() <= 1.0:
        raise ConfigError("lambda values must lie in [0, 1]")
    r = contraction_r
    if space == "star":
        if legs < 1:
            raise ConfigError("a star needs at least one leg")
        p = x0 if isinstance(x0, StarPoint) else StarPoint(int(x0[0]), float(x0[1]))
        _check_legs(legs, p)
        init, width, sp = p.row(), 2, K.STAR
        d0 = p.t
        dist = lambda x: x[..., 1]
    elif space == "euclidean":
        init = _euclid(x0, dim)
        width, sp, d0 = init.size, K.EUCLID, float(np.linalg.norm(init))
        dist = lambda x: _norm_rows(x, 0.0)
    else:
        raise ConfigError(f"unknown space {space!r}")
    xi_total = 3.0 * _product_total(lam, sd)
    cert = {"r": r, "xi_total": xi_total, "d0": d0,
            # d(x_n, 0) <= d(x_0, 0) + sum lam_k eps_k holds surely
            "K_sq": (d0 + xi_total) ** 2, "lam_sup": lam.sup(), "legs": legs}
    if K_empirical is not None:
        cert["K_empirical"] = K_empirical
    zf = sd.zero_from()
    return ProcessModel(
        name="km", code=K.KM, space=sp, width=width, prm=np.array([r, sp], float),
        schedules=(lam, sd), init=init, target=np.zeros(width),
        functional=lambda x: (1.0 - r) * dist(x), dist_map=dist, metric=dist,
        certified=cert, settles=True, quiet=NEVER if zf is None else zf, legs=legs if sp == K.STAR else 0,
        params={"r": r, "lambda": lam.expr, "noise_sd": sd.expr, "space": space,
                "dim": dim, "legs": legs, "x0": init.tolist()},
    )


def prox_model(gamma, noise_sd_seq, z=0.0, x0=1.0, dim: int = 1) -> ProcessModel:
    """Noisy proximal point for A = grad of ||x - z||^2 / 2, so J_g x = (x + g z)/(1 + g)."""
    gamma, sd = parse_schedule(gamma), parse_schedule(noise_sd_seq)
    if gamma.kind != "const" or gamma.is_zero():
        raise ConfigError("gamma needs a positive infimum: use a const schedule")
    g_low = gamma.sup()
    z = _euclid(z, dim)
    x0 = _euclid(x0, z.size)
    if x0.size != z.size:
        raise ConfigError("x0 and z dimensions differ")
    w = z.size
    d0 = float(np.linalg.norm(x0 - z))
    cert = {"gamma_lower": g_low, "d0": d0,
            "K_sq": d0 ** 2 + w * sd.square_total(),
            "xi_total": math.sqrt(w) * sd.total()}
    zf = sd.zero_from()
    return ProcessModel(
        name="prox", code=K.PROX, space=K.EUCLID, width=w, prm=z.copy(),
        schedules=(gamma, sd), init=x0, target=z.copy(),
        functional=lambda x: _norm_rows(x, z) * g_low / (1.0 + g_low),
        dist_map=lambda x: _norm_rows(x, z), metric=lambda x: _norm_rows(x, z),
        certified=cert, settles=True, quiet=NEVER if zf is None else zf,
        params={"gamma": gamma.expr, "noise_sd": sd.expr, "z": z.tolist(), "x0": x0.tolist()},
    )


def prox_resolvent(x, gamma: float, z=0.0):
    return (np.asarray(x, float) + gamma * np.asarray(z, float)) / (1.0 + gamma)


def splitting_step_fraction(lam: float, w: float) -> float:
    """Geodesic fraction of the exact proximal step for y -> w d^2(y, a)."""
    return 2.0 * lam * w / (1.0 + 2.0 * lam * w)


def splitting_model(anchors: Sequence[StatePoint], weights: Sequence[float], lam,
                    space: str = "euclidean", legs: int = 3, x0=0.0) -> ProcessModel:
    """Random-order proximal splitting for the weighted Frechet mean of the anchors."""
    w = np.asarray(weights, float)
    if len(anchors) != len(w) or len(w) == 0:
        raise ConfigError("need one positive weight per anchor")
    if np.any(w <= 0) or abs(float(np.sum(w)) - 1.0) > 1e-12:
        raise ConfigError("weights must be positive and sum to 1")
    lam = parse_schedule(lam)
    N = len(w)
    if space == "star":
        pts = [a if isinstance(a, StarPoint) else StarPoint(int(a[0]), float(a[1]))
               for a in anchors]
        p0 = x0 if isinstance(x0, StarPoint) else StarPoint(int(np.ravel(x0)[0]),
                                                             float(np.ravel(x0)[-1]))
        _check_legs(legs, p0, *pts)
        zstar, fmin = frechet_mean_star(pts, w, legs)
        rows = np.stack([p.row() for p in pts])
        init, target, sp, width = p0.row(), zstar.row(), K.STAR, 2
        allp = [p0] + pts
        diam = max(star_distance(a, b) for a in allp for b in allp)
        sqd = lambda x, y: star_distance_rows(x, y) ** 2
    elif space == "euclidean":
        rows = np.stack([_euclid(a) for a in anchors])
        init = _euclid(x0, rows.shape[1])
        if init.size != rows.shape[1]:
            raise ConfigError("x0 and anchor dimensions differ")
        target = w @ rows
        fmin = float(w @ np.sum((rows - target) ** 2, axis=1))
        sp, width = K.EUCLID, rows.shape[1]
        allp = np.vstack([init, rows])
        diam = float(max(np.linalg.norm(a - b) for a in allp for b in allp))
        sqd = lambda x, y: np.sum((x - y) ** 2, axis=-1)
    else:
        raise ConfigError(f"unknown space {space!r}")

    def objective(x):
        return sum(wi * sqd(x, rows[i]) for i, wi in enumerate(w))

    lip = 2.0 * float(np.max(w)) * diam
    cert = {"N": N, "L_lip": lip, "diam": diam, "K_sq": diam ** 2, "f_min": fmin,
            "lam_square_total": lam.square_total(), "K_prod": 1.0}
    prm = np.concatenate([[N], rows.ravel(), w])
    return ProcessModel(
        name="splitting", code=K.SPLIT, space=sp, width=width, prm=prm, schedules=(lam,),
        init=init, target=target,
        functional=lambda x: np.maximum(objective(x) - fmin, 0.0),
        dist_map=lambda x: sqd(x, target), metric=lambda x: np.sqrt(sqd(x, target)),
        certified=cert, quiet=NEVER, dist_is_square=True,
        legs=legs if sp == K.STAR else 0,
        params={"anchors": rows.tolist(), "weights": w.tolist(), "lambda": lam.expr,
                "space": space, "legs": legs, "x0": init.tolist()},
    )


def dvoretzky_map(x, z, c: float):
    """Soft shrinkage toward z by c: T(x) = z + (x - z) max(0, 1 - c/||x - z||)."""
    x, z = np.asarray(x, float), np.asarray(z, float)
    dist = float(np.linalg.norm(x - z))
    if dist <= c:
        return z.copy()
    return z + (x - z) * (1.0 - c / dist)


def dvoretzky_model(a_seq, b_seq, c_seq, noise_sd_seq, z=0.0, x0=1.0) -> ProcessModel:
    """x_{n+1} = T_{n+1}(x_n) + y_n with shrinkage T and Gaussian y_n."""
    a, b, c, sd = (parse_schedule(s) for s in (a_seq, b_seq, c_seq, noise_sd_seq))
    z = _euclid(z)
    x0 = _euclid(x0, z.size)
    if x0.size != z.size:
        raise ConfigError("x0 and z dimensions differ")
    w = z.size
    d0 = float(np.linalg.norm(x0 - z))
    M = w * sd.square_total()
    # shrinkage is nonexpansive toward z and the noise is centred
    L_const = (float(np.linalg.norm(z)) + math.sqrt(d0 ** 2 + M)) ** 2
    cert = {"A": a.sup(), "B": b.total(), "C": c.square_total(), "M": M, "d0": d0,
            "L_const": L_const, "dim": w}
    zf = sd.zero_from()
    return ProcessModel(
        name="dvoretzky", code=K.DVORETZKY, space=K.EUCLID, width=w, prm=z.copy(),
        schedules=(c, sd, a, b), init=x0, target=z.copy(),
        functional=lambda x: _norm_rows(x, z), dist_map=lambda x: _norm_rows(x, z),
        metric=lambda x: _norm_rows(x, z), certified=cert, settles=True,
        quiet=NEVER if zf is None else zf,
        params={"a": a.expr, "b": b.expr, "c": c.expr, "noise_sd": sd.expr,
                "z": z.tolist(), "x0": x0.tolist()},
    )


MODEL_NAMES = ("counterexample", "rm:linear", "rm:cubic", "rm:abs", "km", "prox",
               "splitting", "dvoretzky")


def build_model(name: str, params: Dict[str, object]) -> ProcessModel:
    """Construct a model from its catalog name and a parameter table."""
    p = dict(params)

    def take(key, default=None, required=False):
        if key in p:
            return p.pop(key)
        if required:
            raise ConfigError(f"model {name!r} needs parameter {key!r}")
        return default

    if name == "counterexample":
        m = counterexample_model(bool(take("eta_check", True)))
    elif name.startswith("rm:"):
        m = rm_model(name[3:], float(take("noise_sd", 1.0)), take("steps", required=True),
                     take("x0", 1.0), float(take("beta", 1.0)), int(take("dim", 1)))
    elif name == "km":
        space = take("space", "euclidean")
        x0 = take("x0", 1.0)
        if space == "star" and isinstance(x0, (list, tuple)):
            x0 = StarPoint(int(x0[0]), float(x0[1]))
        m = km_model(float(take("r", required=True)), take("lambda", required=True),
                     take("noise_sd", 0.0), space, int(take("dim", 1)), int(take("legs", 3)),
                     x0, take("K_empirical"))
    elif name == "prox":
        m = prox_model(take("gamma", required=True), take("noise_sd", 0.0), take("z", 0.0),
                       take("x0", 1.0), int(take("dim", 1)))
    elif name == "splitting":
        space = take("space", "euclidean")
        anchors = take("anchors", required=True)
        x0 = take("x0", [0, 0.0] if space == "star" else 0.0)
        if space == "star":
            anchors = [StarPoint(int(a[0]), float(a[1])) for a in anchors]
            x0 = StarPoint(int(x0[0]), float(x0[1]))
        m = splitting_model(anchors, take("weights", required=True), take("lambda", required=True),
                            space, int(take("legs", 3)), x0)
    elif name == "dvoretzky":
        m = dvoretzky_model(take("a", required=True), take("b", "const:0"),
                            take("c", required=True), take("noise_sd", 0.0), take("z", 0.0),
                            take("x0", 1.0))
    else:
        raise ConfigError(f"unknown model {name!r}; known: {', '.join(MODEL_NAMES)}")
    if p:
        raise ConfigError(f"unknown parameter(s) for {name!r}: {', '.join(sorted(p))}")
    return m


__all__ = [
    "StarPoint", "star_distance", "star_geodesic", "star_distance_rows", "frechet_mean_star",
    "RandomSource", "ProcessModel", "counterexample_model", "counterexample_sqrt_mean",
    "rm_model", "rm_linear_marginal", "rm_linear_second_moment", "km_model", "prox_model",
    "prox_resolvent", "splitting_model", "splitting_step_fraction", "dvoretzky_map",
    "dvoretzky_model", "build_model", "MODEL_NAMES", "to_row", "from_row",
]
