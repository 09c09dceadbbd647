"""Reference evaluation of Mittag-Leffler functions.

These evaluators do not share any code path with the sum-of-exponentials
construction, so they can serve as the yardstick for its error.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, InvalidArgumentError
from .quadrature import adaptive_integrate

SERIES_RADIUS = 5.0
MAX_TERMS = 200


def _rgamma(x):
    """Reciprocal gamma, zero at the poles."""
    if x <= 0 and x == math.floor(x):
        return 0.0
    if x < 171.0:
        return 1.0 / math.gamma(x)
    return math.exp(-math.lgamma(x))


def ml_two_param_series(alpha: float, beta: float, z: float) -> float:
    """Power series for E_{alpha,beta}(z) with real ``z``, ``|z| <= 5``.

    Terms are added until one falls below ``1e-16 * |sum|`` or 200 terms
    have been used.
    """
    if not alpha > 0:
        raise InvalidArgumentError(f"alpha must be positive, got {alpha}")
    if abs(z) > SERIES_RADIUS:
        raise DomainError(f"|z| = {abs(z)} outside the series regime |z| <= {SERIES_RADIUS}")
    if z == 0.0:
        return _rgamma(beta)
    log_abs_z = math.log(abs(z))
    sign = -1.0 if z < 0 else 1.0
    total = 0.0
    for j in range(MAX_TERMS):
        arg = j * alpha + beta
        if arg < 171.0:
            term = z**j * _rgamma(arg)
        else:
            term = (sign**j) * math.exp(j * log_abs_z - math.lgamma(arg))
        total += term
        if j > 0 and abs(term) < 1e-16 * abs(total):
            break
    return total


def ml_integrand(x, t: float, alpha: float):
    """Integrand whose integral over (0, inf) is E_alpha(-t^alpha).

    Obtained from the Laplace-type representation through ``x = s^(-alpha)``::

        sin(alpha pi) / (alpha pi) * exp(-t x^(-1/alpha)) / (x^2 + 2 x cos(alpha pi) + 1)
    """
    x = np.asarray(x, dtype=float)
    c = math.cos(alpha * math.pi)
    pref = math.sin(alpha * math.pi) / (alpha * math.pi)
    with np.errstate(divide="ignore", over="ignore"):
        decay = np.exp(-t * x ** (-1.0 / alpha)) if t > 0 else np.ones_like(x)
    decay = np.where(x > 0, decay, 0.0 if t > 0 else 1.0)
    return pref * decay / (x * x + 2.0 * x * c + 1.0)


def _ml_integral(alpha, t, tol):
    # split at x = 1 so the finite part and the algebraic tail are handled separately
    head = adaptive_integrate(lambda x: ml_integrand(x, t, alpha), 0.0, 1.0, tol / 2)
    tail = adaptive_integrate(lambda x: ml_integrand(x, t, alpha), 1.0, math.inf, tol / 2)
    return head + tail


def ml_one_param_ref(alpha: float, t: float, tol: float = 1e-12) -> float:
    """Reference value of E_alpha(-t^alpha) for ``0 < alpha < 1``, ``t >= 0``.

    Uses the power series while ``t^alpha <= 1`` and the real-line integral
    representation otherwise.
    """
    if not 0 < alpha < 1:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    if not t >= 0:
        raise InvalidArgumentError(f"t must be non-negative, got {t}")
    z = t**alpha
    if z <= 1.0:
        return ml_two_param_series(alpha, 1.0, -z)
    return _ml_integral(alpha, t, tol)


def ml_one_param_integral(alpha: float, t: float, tol: float = 1e-12) -> float:
    """Integral-representation branch of :func:`ml_one_param_ref`, any ``t >= 0``."""
    if not 0 < alpha < 1:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    return _ml_integral(alpha, t, tol)
