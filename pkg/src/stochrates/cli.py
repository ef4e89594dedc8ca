"""Command line front end: ``stochrates catalog|rate|validate|trajectory``.

Exit codes: 0 when every feasible row passes, 1 on any validation failure,
2 on configuration errors. Tables are written as CSV (first line
``# schema=<command>/v1``) and/or JSON ``{"schema": ..., "rows": [...]}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from typing import Dict, Iterable, List, Optional

import click

from . import __version__
from .config import (CHECKS, REQUIRED, ExperimentConfig, build_rates, dumps_config,
                     load_config)
from .errors import ConfigError, ContractError, DomainError, RangeError
from .rates import RateBundle, format_index
from .montecarlo import (ValidationRow, simulate, validate_as_rate, validate_fast_bound,
                         validate_mean_rate, validate_tail_bound,
                         ville_check)

RATE_FIELDS = ("kind", "epsilon", "lambda", "n", "index", "value", "provenance")
VALIDATE_FIELDS = ("kind", "epsilon", "lambda", "index", "horizon", "mean", "std_err", "trials",
                   "bound", "passed", "status", "note")
TRAJECTORY_FIELDS = ("trial", "n", "F", "dist_map")

CATALOG = {
    "moduli": [
        ("id", "x, psi(a) = a, kappa(e) = e"),
        ("sqrt", "x^(1/2)"),
        ("power:q", "x^q for q in (0,1], psi(a) = a^q, kappa(e) = e^(1/q)"),
        ("log:c", "log_c(1 + x) for c in (1,inf), psi(a) = a, kappa(e) = c^e - 1"),
        ("sum(a*f, b*g)", "a f + b g with a, b > 0"),
        ("compose(f, g)", "f(g(x))"),
        ("min(f, g)", "pointwise minimum"),
    ],
    "regularity": [
        ("id | linear:s", "tau(e) = s e"),
        ("convex:power:p", "convex strictly increasing tau(e) = e^p, p >= 1"),
        ("quasi-contraction:r", "(1 - r) e for r in [0,1)"),
        ("sharp-min:p[,quarter]", "e^p, or e^p / 4 for uniformly quasiconvex f"),
        ("strongly-quasiconvex:mu", "(mu / 8) e^2"),
        ("frechet", "e^2 for weighted Frechet means"),
        ("prox-transfer:g:<tau>", "min(tau(e/2) g, e/2) for x -> ||x - J_g x||"),
        ("bounded:K,<pi>", "pi(e/2, K) e / (2K) for X <= K"),
        ("ui:K,<pi>,<mu>", "pi(e/4, K/mu(e/4)) mu(e/4) / 2 under uniform integrability"),
    ],
    "rates": [
        ("sum:<schedule>", "theta: divergence rate of the series"),
        ("zero | inverse[:s] | tail:<schedule> | square-tail:<schedule>", "chi: tail index"),
        ("window:s | decay:<schedule> | sum:L:<schedule>", "liminf bound phi(e, N)"),
        ("id | square | power:p", "kappa: uniform consistency of the distance map"),
    ],
    "schedules": [
        ("const:v", "a_n = v"),
        ("harmonic:b,r", "a_n = 1/(b (n + r))"),
        ("power:p", "a_n = (n + 1)^(-p)"),
        ("geometric:s,q", "a_n = s q^n"),
        ("s*<schedule>", "positive multiple"),
    ],
    "models": [
        ("counterexample", "eta_check"),
        ("rm:linear", "steps, noise_sd, x0, beta, dim"),
        ("rm:cubic", "steps, noise_sd, x0"),
        ("rm:abs", "steps, noise_sd, x0"),
        ("km", "r, lambda, noise_sd, space, dim, legs, x0, K_empirical"),
        ("prox", "gamma, noise_sd, z, x0, dim"),
        ("splitting", "anchors, weights, lambda, space, legs, x0"),
        ("dvoretzky", "a, b, c, noise_sd, z, x0"),
    ],
    "theorems": [
        ("general", "almost-supermartingale rate through an s.i.c.c. function"),
        ("rs", "quantitative Robbins-Siegmund rate"),
        ("rs-fast", "O(1/n) rates under a linear regularity modulus"),
        ("dvoretzky", "almost-sure rate for Dvoretzky-type schemes"),
        ("fejer", "rates for stochastically quasi-Fejer monotone sequences"),
        ("rm", "Robbins-Monro rate via Robbins-Siegmund"),
        ("rm-sqrt", "Robbins-Monro rate for E||x_n - z||"),
        ("strong-monotone", "O(1/n) Robbins-Monro bounds for strongly monotone fields"),
    ],
}


# -- output ------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return format_index(v)
    return str(v)


def to_csv(schema: str, fields: Iterable[str], rows: List[Dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    fields = list(fields)
    w.writerow(fields)
    for r in rows:
        w.writerow([_cell(r.get(k)) for k in fields])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, int) and not isinstance(v, bool) and abs(v) >= 10 ** 18:
        return format_index(v)
    return v


def to_json(schema: str, fields: Iterable[str], rows: List[Dict]) -> str:
    fields = list(fields)
    doc = {"schema": schema, "rows": [{k: _json_safe(r.get(k)) for k in fields} for r in rows]}
    return json.dumps(doc, indent=1) + "\n"


def emit(cmd: str, fields, rows: List[Dict], out: Optional[str], fmt: str,
         cfg: Optional[ExperimentConfig] = None):
    schema = f"{cmd}/v1"
    if out is None:
        text = to_json(schema, fields, rows) if fmt == "json" else to_csv(schema, fields, rows)
        click.echo(text, nl=False)
        return
    os.makedirs(out, exist_ok=True)
    if fmt in ("csv", "both"):
        with open(os.path.join(out, f"{cmd}.csv"), "w") as fh:
            fh.write(to_csv(schema, fields, rows))
    if fmt in ("json", "both"):
        with open(os.path.join(out, f"{cmd}.json"), "w") as fh:
            fh.write(to_json(schema, fields, rows))
    if cfg is not None:
        with open(os.path.join(out, "config.toml"), "w") as fh:
            fh.write(dumps_config(cfg))


# -- commands ----------------------------------------------------------------

def _load(path: str, seed: Optional[int]) -> ExperimentConfig:
    cfg = load_config(path)
    return cfg if seed is None else cfg.with_seed(seed)


def rate_rows(cfg: ExperimentConfig) -> List[Dict]:
    model = cfg.build_model()
    rates = build_rates(cfg, model)
    rows = []
    prov = rates.provenance
    if rates.rho is not None:
        for e in cfg.epsilon:
            rows.append({"kind": "rate", "epsilon": e, "index": rates.rho(e), "provenance": prov})
    if rates.rho_as is not None:
        for lam, e in cfg.pairs:
            rows.append({"kind": "as-rate", "epsilon": e, "lambda": lam,
                         "index": rates.rho_as(lam, e), "provenance": prov})
    if rates.mean_bound is not None:
        for n in cfg.indices:
            rows.append({"kind": "mean-bound", "n": n, "value": rates.mean_bound(n),
                         "provenance": prov})
        for e in cfg.epsilon:
            for n in cfg.indices:
                rows.append({"kind": "exceed-bound", "epsilon": e, "n": n,
                             "value": rates.exceed_bound(n, e), "provenance": prov})
    return rows


def _rescale(row: ValidationRow, s: float, k: float) -> ValidationRow:
    if row.estimate is None or s == 1.0:
        return row
    bound = row.bound * s
    ok = row.estimate.mean <= bound + k * row.estimate.std_err
    status = row.status
    if status in ("pass", "fail"):
        status = "pass" if ok else "fail"
    return ValidationRow(row.epsilon, row.lam, row.index, row.estimate, bound, ok, status,
                         row.kind, row.note, row.horizon)


def validation_rows(cfg: ExperimentConfig) -> List[ValidationRow]:
    model = cfg.build_model()
    rates = build_rates(cfg, model)
    opts = cfg.validate
    checks = opts.get("checks") or _default_checks(cfg, rates)
    mc = cfg.mc
    rows: List[ValidationRow] = []
    for check in checks:
        if check == "mean":
            if rates.rho is None:
                raise ConfigError(f"[validate] checks: theorem {cfg.theorem!r} has no mean rate")
            bundle = RateBundle(rates.rho, rates.rho_as, rates.provenance)
            rows += validate_mean_rate(model, rates.f, bundle, cfg.epsilon, mc,
                                       marginal=bool(opts.get("marginal", False)),
                                       quantity=rates.quantity)
        elif check == "as":
            if rates.rho_as is None:
                raise ConfigError(f"[validate] checks: theorem {cfg.theorem!r} has no a.s. rate")
            rows += validate_as_rate(model, rates.rho_as, cfg.pairs, mc, on=rates.as_target,
                                     cap_index=opts.get("cap_index"))
        elif check == "fast":
            if rates.mean_bound is None:
                raise ConfigError(f"[validate] checks: theorem {cfg.theorem!r} has no mean bound")
            rows += validate_fast_bound(model, rates.mean_bound, cfg.indices, mc)
        elif check == "tail":
            if rates.exceed_bound is None:
                raise ConfigError(f"[validate] checks: theorem {cfg.theorem!r} has no tail bound")
            starts = opts.get("tail_starts", cfg.indices)
            for e in cfg.epsilon:
                rows += validate_tail_bound(model, rates.exceed_bound, starts, e, mc)
        elif check == "ville":
            for a in opts.get("ville_a", [2.0]):
                rows.append(ville_check(model, float(a), mc))
    s = float(opts.get("bound_scale", 1.0))
    return [_rescale(r, s, mc.ci_multiplier) for r in rows]


def _default_checks(cfg, rates) -> List[str]:
    out = []
    if rates.rho is not None and cfg.epsilon:
        out.append("mean")
    if rates.rho_as is not None and cfg.pairs:
        out.append("as")
    if rates.mean_bound is not None:
        out += ["fast", "tail"]
    return out


MAX_TRAJECTORY_ROWS = 10 ** 7


def trajectory_rows(cfg: ExperimentConfig, count: int) -> List[Dict]:
    model = cfg.build_model()
    H = cfg.mc.horizon
    if (H + 1) * count > MAX_TRAJECTORY_ROWS:
        raise RangeError(f"{count} trajectories of {H + 1} steps exceed "
                         f"{MAX_TRAJECTORY_ROWS} rows; lower [mc] horizon")
    res = simulate(model, cfg.mc, H, range(H + 1), trials=count)
    rows = []
    for i in range(count):
        st = res.states[i]
        F, D = model.functional(st), model.dist_map(st)
        for n in range(H + 1):
            rows.append({"trial": i, "n": n, "F": float(F[n]), "dist_map": float(D[n])})
    return rows


def _fail(exc: Exception, code: int):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _guard(fn):
    try:
        return fn()
    except ConfigError as exc:
        _fail(exc, 2)
    except (DomainError, ContractError, RangeError) as exc:
        _fail(exc, 2)
    except OSError as exc:
        _fail(exc, 2)


config_opt = click.option("--config", "config_path", required=True,
                          type=click.Path(dir_okay=False), help="TOML experiment config.")
out_opt = click.option("--out", type=click.Path(file_okay=False), default=None,
                       help="Directory for result files (default: standard output).")
seed_opt = click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None,
                        help="Override the master seed.")
fmt_opt = click.option("--format", "fmt", type=click.Choice(["csv", "json", "both"]),
                       default="csv", show_default=True)


@click.group()
@click.version_option(__version__)
def main():
    """Executable convergence rates for stochastic iterations."""


@main.command()
def catalog():
    """List moduli, schedules, models and theorem constructors."""
    for section, items in CATALOG.items():
        click.echo(f"[{section}]")
        for name, sig in items:
            extra = ""
            if section == "theorems":
                extra = f"  keys: {', '.join(REQUIRED[name])} (or auto = true)"
            click.echo(f"  {name:<44} {sig}{extra}")
    click.echo(f"[checks]\n  {', '.join(CHECKS)}")


@main.command()
@config_opt
@out_opt
@seed_opt
@fmt_opt
def rate(config_path, out, seed, fmt):
    """Evaluate the selected rate on the configured grids."""
    def run():
        cfg = _load(config_path, seed)
        emit("rate", RATE_FIELDS, rate_rows(cfg), out, fmt, cfg)
    _guard(run)


@main.command()
@config_opt
@out_opt
@seed_opt
@fmt_opt
def validate(config_path, out, seed, fmt):
    """Check the selected rate against Monte Carlo estimates."""
    def run():
        cfg = _load(config_path, seed)
        rows = validation_rows(cfg)
        emit("validate", VALIDATE_FIELDS, [r.as_dict() for r in rows], out, fmt, cfg)
        return rows
    rows = _guard(run)
    passed = sum(r.status == "pass" for r in rows)
    failed = sum(not r.passed and r.status != "infeasible" for r in rows)
    infeasible = sum(r.status in ("infeasible", "infeasible-at-desk-scale") for r in rows)
    click.echo(f"{passed} passed / {failed} failed / {infeasible} infeasible", err=out is None)
    if infeasible:
        click.echo("warning: some rows could not be checked at this horizon", err=True)
    sys.exit(1 if failed else 0)


@main.command()
@config_opt
@out_opt
@seed_opt
@fmt_opt
@click.option("--count", type=click.IntRange(min=1), default=1, show_default=True,
              help="Number of trajectories.")
def trajectory(config_path, out, seed, fmt, count):
    """Per-step functional values of seeded trajectories."""
    def run():
        cfg = _load(config_path, seed)
        emit("trajectory", TRAJECTORY_FIELDS, trajectory_rows(cfg, count), out, fmt, cfg)
    _guard(run)


if __name__ == "__main__":
    main()
