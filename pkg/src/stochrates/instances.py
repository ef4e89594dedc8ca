"""Rate constructors instantiated from the certified constants of shipped models.

Each function reads ``model.certified`` and the model's schedules and returns
the spec or rate object of the matching convergence statement. Callers may
override the supplied modulus tau and the second-moment bound K.
"""

from __future__ import annotations

import math
from typing import Optional

from .errors import ContractError
from .moduli import SiccFunction, sicc_power
from .processes import ProcessModel
from .rates import (DvoretzkySpec, FejerRates, GeneralSpec, RateBundle, RMSpec, RSSpec,
                    StronglyMonotoneRates, as_index, fast_rate_strongly_monotone,
                    liminf_from_sum, rate_fejer, rate_general)
from .regularity import (RegularityModulus, reg_from_convex, uniq_frechet, uniq_prox_transfer,
                         uniq_quasi_contraction)
from .schedules import Schedule


def _require(model: ProcessModel, name: str):
    if model.name != name and not model.name.startswith(name):
        raise ContractError(f"expected a {name} model, got {model.name}")


def counterexample_bundle(model: ProcessModel) -> RateBundle:
    """Rates for E[sqrt(X_n)] on the product martingale.

    X_n is a martingale (no perturbation, no errors) and E[sqrt(X_n)] equals
    eta^(n+1), so every window [N, max(N, n_eps)] holds a small enough mean.
    """
    _require(model, "counterexample")
    eta = float(model.certified["eta"])
    decay = Schedule("geometric", (eta, eta))
    spec = GeneralSpec(K=1.0, chi=lambda e: 0, f=sicc_power(0.5),
                       liminf_mod=lambda e, N: max(int(N), decay.convergence_rate(e)))
    return rate_general(spec)


def _rm_linear(model: ProcessModel):
    _require(model, "rm:linear")
    steps = model.schedules[0]
    c, d, M = (float(model.certified[k]) for k in ("c", "d", "M"))
    if not math.isfinite(M):
        raise ContractError("step sizes must be square summable")
    return steps, c, d, M


def rm_rs_spec(model: ProcessModel, tau: Optional[RegularityModulus] = None,
               f: Optional[SiccFunction] = None) -> RSSpec:
    """Supermartingale data for ||x_n||^2 under the linear field.

    E[||x_{n+1}||^2 | F_n] <= (1 + c a_n^2) ||x_n||^2 - 2 a_n V_n + d a_n^2 with
    V_n = beta ||x_n||^2. The default modulus eps^2 follows from V >= X^2
    whenever X <= beta, so it is sound for tolerances up to beta.
    """
    steps, c, d, M = _rm_linear(model)
    if tau is None:
        tau = reg_from_convex(lambda e: e * e, label="convex:eps^2")
    f = f or sicc_power(1.0)
    chi = (lambda e: 0) if d == 0 else (lambda e: steps.square_tail_rate(e / d))
    return RSSpec(K=math.exp(c * M), L=float(model.certified["L"]), M=d * M, chi=chi,
                  theta=lambda k, b: steps.divergence_rate(k, b / 2.0), tau=tau, f=f)


def rm_spec(model: ProcessModel, tau: Optional[RegularityModulus] = None,
            f: Optional[SiccFunction] = None) -> RMSpec:
    """Robbins-Monro data: condition constants, step-size rates and a modulus.

    For the linear field <x, E[y|F]> = beta ||x||^2, so tau(eps) = beta eps is
    exact when f is the identity.
    """
    steps, c, d, M = _rm_linear(model)
    beta = float(model.certified["beta"])
    if tau is None:
        tau = RegularityModulus(lambda e: beta * e, f"linear:{beta:g}")
    return RMSpec(c=c, d=d, L=float(model.certified["L"]), M=M,
                  theta=steps.divergence_rate, chi=steps.square_tail_rate, tau=tau,
                  f=f or sicc_power(1.0))


def rm_fast(model: ProcessModel) -> StronglyMonotoneRates:
    """O(1/n) bounds for the linear field with steps 1/(beta (n + r))."""
    steps, c, d, M = _rm_linear(model)
    beta = float(model.certified["beta"])
    if steps.kind != "harmonic" or steps.scale != 1.0 or steps.params[0] != beta:
        raise ContractError("fast bounds need steps harmonic:beta,r with the field's beta")
    r = steps.params[1]
    if r != int(r):
        raise ContractError("step offset r must be an integer")
    return fast_rate_strongly_monotone(beta, c, d, int(r), float(model.certified["L"]),
                                       K=math.exp(c * M))


def _moment_bound(model: ProcessModel, K_bound: Optional[float]) -> float:
    if K_bound is not None:
        return float(K_bound)
    if "K_empirical" in model.certified:
        return float(model.certified["K_empirical"])
    return float(model.certified["K_sq"])


def km_fejer(model: ProcessModel, tau: Optional[RegularityModulus] = None,
             K_bound: Optional[float] = None) -> FejerRates:
    """Fejer rates for the noisy Krasnoselskii-Mann iteration with dist_map = d.

    xi_n = lam_n eps_n with eps_n = 3 sd_n; the liminf window for
    F(x) = d(x, Tx) is theta(N, L / eps^2) with L = K + M (4 sqrt(K) + 1) and
    theta a divergence rate of lam_n (1 - lam_n).
    """
    _require(model, "km")
    lam, sd = model.schedules
    if 3.0 * sd.sup() > 1.0:
        raise ContractError("noise envelope 3 sd_n must stay below 1")
    lam_sup = lam.sup()
    if lam_sup >= 1.0:
        raise ContractError("lambda must stay below 1 for a divergent lam (1 - lam)")
    if tau is None:
        tau = uniq_quasi_contraction(float(model.certified["r"]))
    Kb = _moment_bound(model, K_bound)
    M = float(model.certified["xi_total"])
    L = Kb + M * (4.0 * math.sqrt(Kb) + 1.0)
    # lam_n (1 - lam_n) >= (1 - lam_sup) lam_n
    theta = lambda k, b: lam.divergence_rate(k, b / (1.0 - lam_sup))
    chi = lambda e: sd.tail_rate(e / (3.0 * lam_sup)) if lam_sup > 0 else 0
    liminf = lambda e, N: as_index(theta(N, L / (e * e)))
    return rate_fejer(tau, 1.0, chi, liminf)


def prox_fejer(model: ProcessModel, tau: Optional[RegularityModulus] = None,
               K_bound: Optional[float] = None) -> FejerRates:
    """Fejer rates for the noisy proximal point method with dist_map = ||x - z||.

    ``tau`` is a modulus for F(x) = dist(0, A x) = ||x - z||; it is moved onto
    F'(x) = ||x - J x|| through the resolvent transfer.
    """
    _require(model, "prox")
    _, sd = model.schedules
    w = model.width
    if w * sd.sup() ** 2 > 1.0:
        raise ContractError("the noise second moment must stay below 1")
    tau = tau or RegularityModulus(lambda e: e, "id")
    tau_f = uniq_prox_transfer(tau, float(model.certified["gamma_lower"]))
    Kb = _moment_bound(model, K_bound)
    M = float(model.certified["xi_total"])
    L = Kb + M * (2.0 * math.sqrt(Kb) + 1.0)
    chi = lambda e: sd.tail_rate(e / math.sqrt(w))
    liminf = lambda e, N: int(N) + as_index(4.0 * L / (e * e))
    return rate_fejer(tau_f, 1.0, chi, liminf)


def splitting_fejer(model: ProcessModel, tau: Optional[RegularityModulus] = None,
                    K_bound: Optional[float] = None) -> FejerRates:
    """Fejer rates for random-order proximal splitting with dist_map = d^2.

    Errors are xi_k = 4 lam_k^2 L^2 with L the Lipschitz-type constant; the
    liminf window for F = f - min f is theta(N, (K + 4 M L^2) / eps) with
    theta a divergence rate of 2 lam_k / N.
    """
    _require(model, "splitting")
    (lam,) = model.schedules
    cert = model.certified
    N, lip = int(cert["N"]), float(cert["L_lip"])
    M = float(cert["lam_square_total"])
    if not math.isfinite(M):
        raise ContractError("lambda must be square summable")
    tau = tau or uniq_frechet()
    Kb = _moment_bound(model, K_bound)
    total = Kb + 4.0 * M * lip * lip
    theta = lambda k, b: lam.divergence_rate(k, b * N / 2.0)
    chi = lambda e: lam.square_tail_rate(e / (4.0 * lip * lip))
    return rate_fejer(tau, float(cert["K_prod"]), chi, liminf_from_sum(theta, total),
                      consistency=lambda e: e * e)


def dvoretzky_spec(model: ProcessModel) -> DvoretzkySpec:
    """Bounds and rates for the shrinkage-plus-noise scheme."""
    _require(model, "dvoretzky")
    c, sd, a, b = model.schedules
    cert = model.certified
    w = int(cert["dim"])
    B = float(cert["B"])
    if not math.isfinite(B) or not math.isfinite(float(cert["C"])):
        raise ContractError("b must be summable and c square summable")
    L = float(cert["L_const"])
    return DvoretzkySpec(
        A=float(cert["A"]), B=B, C=float(cert["C"]), M=float(cert["M"]),
        varphi_a=a.convergence_rate, beta_b=b.tail_rate, gamma_c=c.square_tail_rate,
        mu_y=lambda e: sd.square_tail_rate(e / w), theta=c.divergence_rate,
        L_of=lambda n: L)


__all__ = [
    "counterexample_bundle", "rm_rs_spec", "rm_spec", "rm_fast", "km_fejer", "prox_fejer",
    "splitting_fejer", "dvoretzky_spec",
]
