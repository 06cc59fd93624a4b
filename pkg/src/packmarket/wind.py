"""Beta-distributed wind output: density, CDF, iterated CDF integrals, moments.

A plant of capacity ``cap`` produces ``w = cap * s`` with ``s ~ Beta(alpha,
beta)`` and both shape parameters strictly above 1.  Downstream cost
expressions consume the second moment through the iterated CDF integrals

    CF(cap)  = int_0^cap F(w) dw,
    CCF(cap) = int_0^cap CF(w) dw,

related to it by integration by parts:

    E[w^2] = cap^2 - 2 * (cap * CF(cap) - CCF(cap)).

``cf_ccf`` evaluates the integrals by adaptive quadrature of the regularized
incomplete beta function; the moment identity above is kept out of the
production path so it can serve as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import NumericError, ParameterError

# Unit-interval quadrature must come in far below the advertised 1e-9
# absolute tolerance after rescaling by capacity^2.
_QUAD_KW = dict(epsabs=1e-13, epsrel=1e-13, limit=200)
_QUAD_TOL = 1e-10

# Margin keeping matched shape parameters strictly above 1 when a requested
# spread is clipped to the feasible range.
_SHAPE_MARGIN = 1e-6


@dataclass(frozen=True)
class BetaWind:
    alpha: float
    beta: float
    capacity: float

    def __post_init__(self):
        if not (self.alpha > 1 and self.beta > 1):
            raise ParameterError(
                f"beta shape parameters must both exceed 1, got "
                f"alpha={self.alpha}, beta={self.beta}"
            )
        if not self.capacity > 0:
            raise ParameterError(f"capacity must be > 0, got {self.capacity}")


def mean(model: BetaWind) -> float:
    """Physical mean output in MWh."""
    return model.capacity * model.alpha / (model.alpha + model.beta)


def variance(model: BetaWind) -> float:
    """Physical output variance in MWh^2."""
    a, b = model.alpha, model.beta
    return model.capacity**2 * a * b / ((a + b) ** 2 * (a + b + 1))


def pdf(model: BetaWind, w):
    """Density of the plant output at ``w`` (scalar or array), MWh^-1."""
    w = np.asarray(w, dtype=float)
    if np.any((w < 0) | (w > model.capacity)):
        raise ParameterError(
            f"output outside the support [0, {model.capacity}]"
        )
    s = w / model.capacity
    interior = (s > 0) & (s < 1)
    out = np.zeros_like(s)
    si = s[interior]
    log_pdf = (
        (model.alpha - 1) * np.log(si)
        + (model.beta - 1) * np.log1p(-si)
        - special.betaln(model.alpha, model.beta)
        - np.log(model.capacity)
    )
    out[interior] = np.exp(log_pdf)
    return out if out.ndim else float(out)


def cdf(model: BetaWind, w):
    """Cumulative distribution of the plant output at ``w``."""
    w = np.asarray(w, dtype=float)
    if np.any((w < 0) | (w > model.capacity)):
        raise ParameterError(
            f"output outside the support [0, {model.capacity}]"
        )
    out = special.betainc(model.alpha, model.beta, w / model.capacity)
    return out if out.ndim else float(out)


def cf_ccf(model: BetaWind) -> tuple[float, float]:
    """Iterated CDF integrals evaluated at capacity: (CF, CCF).

    Both reduce to unit-interval integrals of the regularized incomplete
    beta function I_s: CF = cap * int I_s ds and, after swapping the order
    of integration, CCF = cap^2 * int (1 - s) I_s ds.
    """
    a, b = model.alpha, model.beta
    cf_unit, err_cf = integrate.quad(
        lambda s: special.betainc(a, b, s), 0.0, 1.0, **_QUAD_KW
    )
    ccf_unit, err_ccf = integrate.quad(
        lambda s: (1.0 - s) * special.betainc(a, b, s), 0.0, 1.0, **_QUAD_KW
    )
    worst = max(err_cf, err_ccf)
    if worst > _QUAD_TOL:
        raise NumericError(
            f"CF/CCF quadrature did not converge: achieved absolute error "
            f"{worst:.3e} > {_QUAD_TOL:.1e}"
        )
    return model.capacity * cf_unit, model.capacity**2 * ccf_unit


def second_moment(model: BetaWind) -> float:
    """E[w^2] via the integration-by-parts identity on CF/CCF."""
    cf, ccf = cf_ccf(model)
    return model.capacity**2 - 2.0 * (model.capacity * cf - ccf)


def match_moments(mean_out: float, var_norm: float, capacity: float) -> BetaWind:
    """Build the model with physical mean ``mean_out`` and normalized variance
    ``var_norm`` (the variance of ``w / capacity``).

    Raises ``ParameterError`` when the pair is infeasible for a beta variable
    or would force a shape parameter at or below 1; infeasible requests are
    errors, never clamped.
    """
    if not 0 < mean_out < capacity:
        raise ParameterError(
            f"mean {mean_out} must lie strictly inside (0, capacity={capacity})"
        )
    m = mean_out / capacity
    bound = m * (1.0 - m)
    if not 0 < var_norm < bound:
        raise ParameterError(
            f"normalized variance {var_norm} must lie in (0, m(1-m)={bound})"
        )
    k = bound / var_norm - 1.0
    alpha = m * k
    beta = (1.0 - m) * k
    if alpha <= 1 or beta <= 1:
        raise ParameterError(
            f"moment match yields shape parameters alpha={alpha}, beta={beta}; "
            f"both must exceed 1 (reduce the variance)"
        )
    return BetaWind(alpha=alpha, beta=beta, capacity=capacity)


def beta_from_spread(mean_out: float, spread: float, capacity: float) -> BetaWind:
    """Build a model from the percentage-style spread parameter.

    The requested normalized variance is ``(spread / 100) * m * (1 - m)``,
    clipped just inside the range keeping both shape parameters above 1.
    This is the interpretation used for configured plants; ``match_moments``
    remains the strict entry point.
    """
    if not spread > 0:
        raise ParameterError(f"spread must be > 0, got {spread}")
    if not 0 < mean_out < capacity:
        raise ParameterError(
            f"mean {mean_out} must lie strictly inside (0, capacity={capacity})"
        )
    m = mean_out / capacity
    bound = m * (1.0 - m)
    requested = (spread / 100.0) * bound
    # alpha, beta > 1 needs k > 1 / min(m, 1 - m); clip the variance to match.
    k_min = (1.0 + _SHAPE_MARGIN) / min(m, 1.0 - m)
    var_cap = bound / (k_min + 1.0)
    return match_moments(mean_out, min(requested, var_cap), capacity)
