"""Experiment configuration: TOML tables, the modulus grammar and rate assembly.

A config has four tables::

    [model]     name = "km", plus model parameters
    [rate]      theorem = "fejer", auto = true | explicit constants and moduli,
                epsilon = [...], pairs = [[lam, eps], ...], indices = [...]
    [mc]        trials, horizon, master_seed, ci_multiplier
    [validate]  checks = ["mean", "as", "fast", "tail", "ville"] and options

Modulus grammar (strings in [rate])::

    theta    sum:<schedule>           divergence rate of the series of the schedule
    chi      zero | inverse[:s] | tail:<schedule> | square-tail:<schedule>
    liminf   window:s | decay:<schedule> | sum:L:<schedule>
    tau      id | linear:s | convex:power:p | quasi-contraction:r | sharp-min:p[,quarter]
             | strongly-quasiconvex:mu | frechet | prox-transfer:g:<tau>
             | bounded:K,<pi> | ui:K,<pi>,<mu>      (pi: one|eps|eps/l, mu: one|min-eps-1)
    kappa    id | square | power:p
    f        id | sqrt | power:q | log:c | sum(a*f, b*g) | compose(f, g) | min(f, g)
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from . import instances
from .errors import ConfigError, ContractError, DomainError
from .moduli import SiccFunction, sicc_from_name, sicc_power
from .montecarlo import MCConfig
from .processes import MODEL_NAMES, ProcessModel, build_model
from .rates import (DvoretzkySpec, FastSpec, GeneralSpec, RMSpec, RSSpec, as_index,
                    fast_rate_rs, fast_rate_strongly_monotone, liminf_from_sum, rate_dvoretzky,
                    rate_fejer, rate_general, rate_rm, rate_rm_sqrt, rate_rs)
from .regularity import (PointwiseLowerBound, RegularityModulus, UIModulus, reg_bounded,
                         reg_from_convex, reg_from_ui, uniq_frechet, uniq_prox_transfer,
                         uniq_quasi_contraction, uniq_sharp_min, uniq_strongly_quasiconvex)
from .schedules import parse_schedule

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

THEOREMS = ("general", "rs", "rs-fast", "dvoretzky", "fejer", "rm", "rm-sqrt",
            "strong-monotone")
CHECKS = ("mean", "as", "fast", "tail", "ville")

# explicit-mode keys per theorem
REQUIRED = {
    "general": ("K", "chi", "f", "liminf"),
    "rs": ("K", "L", "M", "chi", "theta", "tau", "f"),
    "rm": ("c", "d", "L", "M", "theta", "chi", "tau", "f"),
    "rm-sqrt": ("c", "d", "L", "M", "theta", "chi", "tau"),
    "fejer": ("tau", "K", "chi", "liminf"),
    "dvoretzky": ("A", "B", "C", "M", "a", "b", "c", "y_sq", "L"),
    "rs-fast": ("c", "d", "r", "t", "K", "L"),
    "strong-monotone": ("beta", "c", "d", "r", "L"),
}

GRID_KEYS = ("theorem", "epsilon", "pairs", "indices")


# -- grammar ---------------------------------------------------------------

def parse_theta(expr: str) -> Callable[[int, float], int]:
    head, _, rest = str(expr).partition(":")
    if head != "sum" or not rest:
        raise ConfigError(f"theta must read sum:<schedule>, got {expr!r}")
    s = parse_schedule(rest)
    return s.divergence_rate


def parse_chi(expr) -> Callable[[float], int]:
    text = str(expr).strip()
    head, _, rest = text.partition(":")
    if text == "zero":
        return lambda e: 0
    if head == "inverse":
        s = float(rest) if rest else 1.0
        return lambda e: as_index(s / e)
    if head == "tail":
        return parse_schedule(rest).tail_rate
    if head == "square-tail":
        return parse_schedule(rest).square_tail_rate
    raise ConfigError(f"unknown tail rate {expr!r}")


def parse_liminf(expr) -> Callable[[float, int], int]:
    text = str(expr).strip()
    head, _, rest = text.partition(":")
    if head == "window":
        s = float(rest)
        return lambda e, N: int(N) + as_index(s / e)
    if head == "decay":
        sched = parse_schedule(rest)
        return lambda e, N: max(int(N), sched.convergence_rate(e))
    if head == "sum":
        L, _, sched = rest.partition(":")
        return liminf_from_sum(parse_schedule(sched).divergence_rate, float(L))
    raise ConfigError(f"unknown liminf bound {expr!r}")


_PI = {"one": lambda e, l: 1.0, "eps": lambda e, l: e, "eps/l": lambda e, l: e / l}
_MU = {"one": lambda e: 1.0, "min-eps-1": lambda e: min(e, 1.0)}


def parse_tau(expr) -> RegularityModulus:
    text = str(expr).strip()
    head, _, rest = text.partition(":")
    try:
        if text in ("id", "identity"):
            return RegularityModulus(lambda e: e, "id")
        if head == "linear":
            s = float(rest)
            if not s > 0:
                raise ConfigError("linear modulus needs a positive slope")
            return RegularityModulus(lambda e: s * e, text)
        if head == "convex":
            kind, _, p = rest.partition(":")
            if kind != "power" or float(p) < 1:
                raise ConfigError("convex moduli read convex:power:p with p >= 1")
            q = float(p)
            return reg_from_convex(lambda e: e ** q, label=text)
        if head == "quasi-contraction":
            return uniq_quasi_contraction(float(rest))
        if head == "sharp-min":
            p, _, quarter = rest.partition(",")
            q = float(p)
            return uniq_sharp_min(lambda e: e ** q, quarter == "quarter", text)
        if head == "strongly-quasiconvex":
            return uniq_strongly_quasiconvex(float(rest))
        if text == "frechet":
            return uniq_frechet()
        if head == "prox-transfer":
            g, _, inner = rest.partition(":")
            return uniq_prox_transfer(parse_tau(inner or "id"), float(g))
        if head == "bounded":
            K, _, pi = rest.partition(",")
            return reg_bounded(PointwiseLowerBound(_PI[pi or "eps"]), float(K))
        if head == "ui":
            parts = rest.split(",")
            pi = parts[1] if len(parts) > 1 else "eps"
            mu = parts[2] if len(parts) > 2 else "one"
            return reg_from_ui(PointwiseLowerBound(_PI[pi]), float(parts[0]), UIModulus(_MU[mu]))
    except (ValueError, KeyError, DomainError) as exc:
        raise ConfigError(f"bad regularity modulus {expr!r}: {exc}") from None
    raise ConfigError(f"unknown regularity modulus {expr!r}")


def parse_kappa(expr) -> Callable[[float], float]:
    text = str(expr).strip()
    if text in ("id", "identity"):
        return lambda e: e
    if text == "square":
        return lambda e: e * e
    head, _, rest = text.partition(":")
    if head == "power":
        q = float(rest)
        return lambda e: e ** q
    raise ConfigError(f"unknown consistency modulus {expr!r}")


def parse_f(expr) -> SiccFunction:
    return sicc_from_name(str(expr))


# -- config ----------------------------------------------------------------

def _plain(v):
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def _positive_list(name, values) -> List[float]:
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"[rate] {name}: entries must be positive numbers, got {v!r}")
        out.append(v)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    model_params: Dict[str, Any]
    theorem: str
    rate: Dict[str, Any]
    epsilon: List[float] = field(default_factory=list)
    pairs: List[List[float]] = field(default_factory=list)
    indices: List[int] = field(default_factory=list)
    mc: MCConfig = field(default_factory=MCConfig)
    validate: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        data = _plain(data)
        unknown = set(data) - {"model", "rate", "mc", "validate"}
        if unknown:
            raise ConfigError(f"unknown table(s): {', '.join(sorted(unknown))}")
        model = dict(data.get("model") or {})
        if "name" not in model:
            raise ConfigError("[model] name: missing key")
        name = model.pop("name")
        if name not in MODEL_NAMES:
            raise ConfigError(f"[model] name: unknown model {name!r}")
        rate = dict(data.get("rate") or {})
        theorem = rate.get("theorem")
        if theorem not in THEOREMS:
            raise ConfigError(f"[rate] theorem: expected one of {', '.join(THEOREMS)}, "
                              f"got {theorem!r}")
        eps = _positive_list("epsilon", rate.get("epsilon", []))
        pairs = rate.get("pairs", [])
        for p in pairs:
            if not isinstance(p, list) or len(p) != 2:
                raise ConfigError(f"[rate] pairs: entries must be [lambda, epsilon], got {p!r}")
            _positive_list("pairs", p)
        idx = rate.get("indices", [])
        if any(isinstance(i, bool) or not isinstance(i, int) or i < 0 for i in idx):
            raise ConfigError("[rate] indices: entries must be natural numbers")
        if theorem in ("rs-fast", "strong-monotone"):
            if not idx:
                raise ConfigError("[rate] indices: the fast bounds need a nonempty index grid")
        elif not eps and not pairs:
            raise ConfigError("[rate] epsilon: give a nonempty epsilon grid or pairs")
        extra = {k: v for k, v in rate.items() if k not in GRID_KEYS}
        mc = dict(data.get("mc") or {})
        known_mc = {"trials", "horizon", "master_seed", "ci_multiplier", "chunk", "use_numba"}
        if set(mc) - known_mc:
            raise ConfigError(f"[mc] unknown key(s): {', '.join(sorted(set(mc) - known_mc))}")
        try:
            mcc = MCConfig(**mc)
        except (DomainError, TypeError) as exc:
            raise ConfigError(f"[mc] {exc}") from None
        val = dict(data.get("validate") or {})
        checks = val.get("checks", [])
        bad = [c for c in checks if c not in CHECKS]
        if bad:
            raise ConfigError(f"[validate] checks: unknown check(s) {', '.join(map(str, bad))}")
        cfg = cls(name, model, theorem, extra, eps, pairs, idx, mcc, val)
        cfg.check()
        return cfg

    def check(self):
        """Resolve every referenced name, without running anything."""
        model = self.build_model()
        build_rates(self, model)

    def build_model(self) -> ProcessModel:
        try:
            return build_model(self.model, self.model_params)
        except (DomainError, ValueError, TypeError, IndexError) as exc:
            raise ConfigError(f"[model] {exc}") from None

    def to_dict(self) -> Dict[str, Any]:
        rate = {"theorem": self.theorem, **self.rate}
        for key in ("epsilon", "pairs", "indices"):
            if getattr(self, key):
                rate[key] = getattr(self, key)
        mc = {"trials": self.mc.trials, "horizon": self.mc.horizon,
              "master_seed": self.mc.master_seed, "ci_multiplier": self.mc.ci_multiplier,
              "chunk": self.mc.chunk}
        if self.mc.use_numba is not None:
            mc["use_numba"] = self.mc.use_numba
        out = {"model": {"name": self.model, **self.model_params}, "rate": rate, "mc": mc}
        if self.validate:
            out["validate"] = self.validate
        return _plain(out)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        mc = MCConfig(self.mc.trials, self.mc.horizon, int(seed), self.mc.ci_multiplier,
                      self.mc.chunk, self.mc.use_numba)
        return ExperimentConfig(self.model, self.model_params, self.theorem, self.rate,
                                self.epsilon, self.pairs, self.indices, mc, self.validate)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ExperimentConfig.from_dict(data)


def loads_config(text: str) -> ExperimentConfig:
    return ExperimentConfig.from_dict(tomllib.loads(text))


def dumps_config(cfg: ExperimentConfig) -> str:
    import tomli_w
    return tomli_w.dumps(cfg.to_dict())


# -- rate assembly ---------------------------------------------------------

@dataclass
class Rates:
    """Everything a theorem yields that the validators can consume."""
    provenance: str
    rho: Optional[Callable[[float], int]] = None
    rho_as: Optional[Callable[[float, float], int]] = None
    as_target: str = "dist_map"
    f: SiccFunction = field(default_factory=lambda: sicc_power(1.0))
    quantity: str = "dist_map"
    mean_bound: Optional[Callable[[int], float]] = None
    exceed_bound: Optional[Callable[[int, float], float]] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def _get(cfg: ExperimentConfig, key: str):
    if key not in cfg.rate:
        raise ConfigError(f"[rate] {key}: missing key for theorem {cfg.theorem!r}")
    return cfg.rate[key]


def _num(cfg, key) -> float:
    v = _get(cfg, key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"[rate] {key}: expected a number, got {v!r}")
    return float(v)


def _wrap(key, fn, *args):
    try:
        return fn(*args)
    except ConfigError as exc:
        raise ConfigError(f"[rate] {key}: {exc}") from None
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"[rate] {key}: {exc}") from None


def build_rates(cfg: ExperimentConfig, model: ProcessModel) -> Rates:
    """Instantiate the selected theorem, from the model (auto) or from [rate] keys."""
    try:
        if cfg.rate.get("auto", False):
            return _auto_rates(cfg, model)
        return _explicit_rates(cfg)
    except (DomainError, ContractError) as exc:
        raise ConfigError(f"[rate] {exc}") from None


def _opt_tau(cfg):
    return _wrap("tau", parse_tau, cfg.rate["tau"]) if "tau" in cfg.rate else None


def _opt_f(cfg):
    return _wrap("f", parse_f, cfg.rate["f"]) if "f" in cfg.rate else None


def _auto_rates(cfg: ExperimentConfig, model: ProcessModel) -> Rates:
    th = cfg.theorem
    if th == "general":
        b = instances.counterexample_bundle(model)
        return Rates(b.provenance, b.rho, b.rho_as, f=sicc_power(0.5))
    if th == "rs":
        spec = instances.rm_rs_spec(model, _opt_tau(cfg), _opt_f(cfg))
        b = rate_rs(spec)
        return Rates(b.provenance, b.rho, b.rho_as, f=spec.f,
                     extra={"K": spec.K, "L": spec.L, "M": spec.M})
    if th in ("rm", "rm-sqrt"):
        spec = instances.rm_spec(model, _opt_tau(cfg), _opt_f(cfg))
        b = (rate_rm if th == "rm" else rate_rm_sqrt)(spec)
        f = spec.f if th == "rm" else sicc_power(1.0)
        return Rates(b.provenance, b.rho, b.rho_as, "metric", f,
                     "dist_map" if th == "rm" else "metric")
    if th == "fejer":
        build = {"km": instances.km_fejer, "prox": instances.prox_fejer,
                 "splitting": instances.splitting_fejer}.get(model.name)
        if build is None:
            raise ConfigError(f"[rate] auto: no Fejer instance for model {model.name!r}")
        K = cfg.rate.get("K_bound")
        fr = build(model, _opt_tau(cfg), None if K is None else float(K))
        return Rates(f"fejer(model={model.name})", fr.rho, fr.rho_as)
    if th == "dvoretzky":
        r = rate_dvoretzky(instances.dvoretzky_spec(model))
        return Rates(r.provenance, None, r, "metric", quantity="metric")
    if th == "strong-monotone":
        s = instances.rm_fast(model)
        return Rates(f"strong-monotone(u={s.u:g})", mean_bound=s.mean_bound,
                     exceed_bound=s.exceed_bound, extra={"u": s.u})
    if th == "rs-fast":
        s = instances.rm_fast(model)
        beta = float(model.certified["beta"])
        fast = fast_rate_rs(FastSpec(1.5, float(model.certified["d"]) / beta ** 2,
                                     int(model.schedules[0].params[1]), beta,
                                     math.exp(float(model.certified["c"]) *
                                              float(model.certified["M"])),
                                     float(model.certified["L"])))
        return Rates(f"rs-fast(u={fast.u:g})", mean_bound=fast.mean_bound,
                     exceed_bound=fast.exceed_bound, extra={"u": fast.u, "u_model": s.u})
    raise ConfigError(f"[rate] theorem: {th!r} has no automatic instance")


def _explicit_rates(cfg: ExperimentConfig) -> Rates:
    th = cfg.theorem
    for key in REQUIRED[th]:
        _get(cfg, key)
    if th == "general":
        f = _wrap("f", parse_f, _get(cfg, "f"))
        b = rate_general(GeneralSpec(_num(cfg, "K"), _wrap("chi", parse_chi, _get(cfg, "chi")),
                                     f, _wrap("liminf", parse_liminf, _get(cfg, "liminf"))))
        return Rates(b.provenance, b.rho, b.rho_as, f=f)
    if th == "rs":
        f = _wrap("f", parse_f, _get(cfg, "f"))
        b = rate_rs(RSSpec(_num(cfg, "K"), _num(cfg, "L"), _num(cfg, "M"),
                           _wrap("chi", parse_chi, _get(cfg, "chi")),
                           _wrap("theta", parse_theta, _get(cfg, "theta")),
                           _wrap("tau", parse_tau, _get(cfg, "tau")), f))
        return Rates(b.provenance, b.rho, b.rho_as, f=f)
    if th in ("rm", "rm-sqrt"):
        f = _wrap("f", parse_f, cfg.rate.get("f", "id"))
        spec = RMSpec(_num(cfg, "c"), _num(cfg, "d"), _num(cfg, "L"), _num(cfg, "M"),
                      _wrap("theta", parse_theta, _get(cfg, "theta")),
                      _wrap("chi", parse_chi, _get(cfg, "chi")),
                      _wrap("tau", parse_tau, _get(cfg, "tau")), f)
        b = (rate_rm if th == "rm" else rate_rm_sqrt)(spec)
        return Rates(b.provenance, b.rho, b.rho_as, "metric",
                     f if th == "rm" else sicc_power(1.0),
                     "dist_map" if th == "rm" else "metric")
    if th == "fejer":
        fr = rate_fejer(_wrap("tau", parse_tau, _get(cfg, "tau")), _num(cfg, "K"),
                        _wrap("chi", parse_chi, _get(cfg, "chi")),
                        _wrap("liminf", parse_liminf, _get(cfg, "liminf")),
                        _wrap("consistency", parse_kappa, cfg.rate.get("consistency", "id")))
        return Rates(f"fejer(K={_num(cfg, 'K'):g})", fr.rho, fr.rho_as)
    if th == "dvoretzky":
        a, b, c, y = (_wrap(k, parse_schedule, _get(cfg, k)) for k in ("a", "b", "c", "y_sq"))
        L = _num(cfg, "L")
        r = rate_dvoretzky(DvoretzkySpec(_num(cfg, "A"), _num(cfg, "B"), _num(cfg, "C"),
                                         _num(cfg, "M"), a.convergence_rate, b.tail_rate,
                                         c.square_tail_rate, y.tail_rate, c.divergence_rate,
                                         lambda n: L))
        return Rates(r.provenance, None, r, "metric", quantity="metric")
    if th == "rs-fast":
        fast = fast_rate_rs(FastSpec(_num(cfg, "c"), _num(cfg, "d"), int(_num(cfg, "r")),
                                     _num(cfg, "t"), _num(cfg, "K"), _num(cfg, "L")))
        return Rates(f"rs-fast(u={fast.u:g})", mean_bound=fast.mean_bound,
                     exceed_bound=fast.exceed_bound, extra={"u": fast.u})
    s = fast_rate_strongly_monotone(_num(cfg, "beta"), _num(cfg, "c"), _num(cfg, "d"),
                                    int(_num(cfg, "r")), _num(cfg, "L"),
                                    float(cfg.rate.get("K", 1.0)))
    return Rates(f"strong-monotone(u={s.u:g})", mean_bound=s.mean_bound,
                 exceed_bound=s.exceed_bound, extra={"u": s.u})


__all__ = [
    "THEOREMS", "CHECKS", "REQUIRED", "ExperimentConfig", "Rates", "build_rates", "load_config",
    "loads_config", "dumps_config", "parse_theta", "parse_chi", "parse_liminf", "parse_tau",
    "parse_kappa", "parse_f",
]
