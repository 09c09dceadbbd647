"""Sum-of-exponentials approximation of the Mittag-Leffler relaxation kernel.

The kernel ``E_alpha(-t^alpha)`` is written as a real-line integral of
``ml_integrand``, the line is truncated at ``q^K`` and split into K+1
geometrically growing intervals, and a J-point Gauss-Legendre rule is put on
each. Every node becomes one exponential::

    E_alpha(-t^alpha) ~ sum_j b_j exp(-a_j t)

The number of terms, ``(K + 1) J``, grows like ``|log eps|^2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, InvalidArgumentError, SoeValidityWarning
from .mittag_leffler import ml_one_param_ref
from .quadrature import gauss_legendre_rule

# distance kept from the admissibility boundary in the error bound
BOUNDARY_GUARD = 1e-12


def _check_alpha_q(alpha, q):
    if not 0 < alpha < 1:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    if not q > 1:
        raise InvalidArgumentError(f"q must exceed 1, got {q}")


def pole_moduli(alpha: float, q: float) -> tuple[float, float, float]:
    """Moduli bounding the poles of the scaled integrands.

    Returns ``(q1, q2, 1 + 2/q)``: the pole modulus on the first interval,
    on the second interval, and the lower bound valid for all later ones.
    """
    _check_alpha_q(alpha, q)
    c = math.cos((1.0 - alpha) * math.pi)
    q1 = math.sqrt(5.0 - 4.0 * c)
    q2 = math.sqrt((q + 1.0) ** 2 - 4.0 * (q + 1.0) * c + 4.0) / (q - 1.0)
    return q1, q2, 1.0 + 2.0 / q


def admissible_l_bound(alpha: float, q: float) -> float:
    """Upper limit ``q3 = min(1 + 2/q, q1, q2)`` for the analysis radius ``l``."""
    return min(pole_moduli(alpha, q))


def _ceil(x):
    # tolerate last-bit noise in quotients such as log(1e-2) / log(10)
    return int(math.ceil(x - 1e-9))


def select_K_J(eps: float, q: float, l: float) -> tuple[int, int]:
    """Number of extra intervals ``K`` and Gauss points ``J`` for tolerance ``eps``.

    ``K = ceil(|ln eps| / ln q)`` makes the truncated tail ``1/(q^K - 1)``
    of order ``eps``; ``J = ceil(ln(|ln eps| / eps) / (2 ln q ln l))``.
    """
    if not 0 < eps < 1:
        raise InvalidArgumentError(f"eps must lie in (0, 1), got {eps}")
    if not q > 1 or not l > 1:
        raise InvalidArgumentError(f"need q > 1 and l > 1, got q={q}, l={l}")
    log_eps = abs(math.log(eps))
    K = max(1, _ceil(log_eps / math.log(q)))
    J = max(1, _ceil(math.log(log_eps / eps) / (2.0 * math.log(q) * math.log(l))))
    return K, J


@dataclass(frozen=True)
class IntervalPartition:
    centers: np.ndarray
    radii: np.ndarray
    K: int

    @property
    def right_endpoint(self) -> float:
        return float(self.centers[-1] + self.radii[-1])


def interval_partition(q: float, K: int) -> IntervalPartition:
    """Intervals ``(0, 1), (1, q), (q, q^2), ..., (q^(K-1), q^K)`` as centers/radii."""
    if not q > 1:
        raise InvalidArgumentError(f"q must exceed 1, got {q}")
    if K < 0:
        raise InvalidArgumentError(f"K must be non-negative, got {K}")
    k = np.arange(1, K + 1)
    powers = q ** (k - 1.0)
    centers = np.concatenate([[0.5], 0.5 * (q + 1.0) * powers])
    radii = np.concatenate([[0.5], 0.5 * (q - 1.0) * powers])
    return IntervalPartition(centers, radii, int(K))


@dataclass(frozen=True)
class SoeParams:
    alpha: float
    q: float = 10.0
    l: float = 1.1
    eps: float = 1e-3
    T_max: float = 1.0

    def validate(self) -> None:
        _check_alpha_q(self.alpha, self.q)
        if not 0 < self.eps < 1:
            raise InvalidArgumentError(f"eps must lie in (0, 1), got {self.eps}")
        if not self.T_max > 0:
            raise InvalidArgumentError(f"T_max must be positive, got {self.T_max}")
        q1, q2, q_far = pole_moduli(self.alpha, self.q)
        bounds = {"1 + 2/q": q_far, "q1": q1, "q2": q2}
        if not self.l > 1:
            raise AdmissibilityError(f"l must exceed 1, got {self.l}")
        for name, value in bounds.items():
            if self.l >= value:
                raise AdmissibilityError(
                    f"l = {self.l} violates l < {name} = {value:.6g} "
                    f"(q3 = {min(bounds.values()):.6g})"
                )


@dataclass(frozen=True)
class SoeExpansion:
    """``sum_j weights[j] * exp(-exponents[j] * t)``, flattened interval-major."""

    exponents: np.ndarray
    weights: np.ndarray
    params: SoeParams
    K: int
    J: int
    partition: IntervalPartition = field(repr=False)

    @property
    def n_exp(self) -> int:
        return len(self.exponents)

    def __call__(self, t):
        return soe_eval(self, t)


def build_soe(params: SoeParams) -> SoeExpansion:
    """Construct the expansion for ``params``.

    Raises
    ------
    AdmissibilityError
        If ``l`` is not below ``admissible_l_bound(alpha, q)``.
    InvalidArgumentError
        If ``eps`` is outside ``(0, 1)`` or another parameter is out of range.
    """
    params.validate()
    alpha = params.alpha
    K, J = select_K_J(params.eps, params.q, params.l)
    part = interval_partition(params.q, K)
    rule = gauss_legendre_rule(J)

    x = part.radii[:, None] * rule.nodes[None, :] + part.centers[:, None]
    c = math.cos(alpha * math.pi)
    pref = math.sin(alpha * math.pi) / (alpha * math.pi)
    a = x ** (-1.0 / alpha)
    b = pref * rule.weights[None, :] * part.radii[:, None] / (x * x + 2.0 * x * c + 1.0)
    a.setflags(write=False)
    b.setflags(write=False)
    return SoeExpansion(a.ravel(), b.ravel(), params, K, J, part)


def soe_eval(expansion: SoeExpansion, t):
    """Evaluate the expansion at scalar or array ``t >= 0``.

    Values past ``params.T_max`` are still returned but trigger a
    :class:`SoeValidityWarning`, since the error bound grows like ``e^T``.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidArgumentError("t must be non-negative")
    if np.any(t_arr > expansion.params.T_max):
        warnings.warn(
            f"SOE evaluated beyond T_max = {expansion.params.T_max}", SoeValidityWarning, stacklevel=2
        )
    vals = np.exp(-np.multiply.outer(t_arr, expansion.exponents)) @ expansion.weights
    return float(vals) if np.ndim(vals) == 0 else vals


def soe_error_bound(alpha: float, T: float, q: float, l: float, K: int, J: int) -> float:
    """A priori bound on ``|E_alpha(-t^alpha) - SOE(t)|`` for ``0 < t <= T``.

    ``C (K + 1) (l + sqrt(l^2 - 1))^(-2J) + 1 / (q^K - 1)`` where
    ``C = 2 q e^T / ((q - 1) (w - l)^2)`` is taken at the worst of the three
    pole moduli ``w`` in ``{q1, q2, 1 + q/2}``.
    """
    q1, q2, _ = pole_moduli(alpha, q)
    if not 1 < l < admissible_l_bound(alpha, q):
        raise AdmissibilityError(f"l = {l} is not in (1, {admissible_l_bound(alpha, q):.6g})")
    if K < 1:
        raise InvalidArgumentError("K must be at least 1")
    gap = min(q1, q2, 1.0 + q / 2.0) - l
    if gap <= BOUNDARY_GUARD:
        raise AdmissibilityError(f"l = {l} is within {BOUNDARY_GUARD} of a pole modulus")
    C = 2.0 * q * math.exp(T) / ((q - 1.0) * gap * gap)
    rho = l + math.sqrt(l * l - 1.0)
    return C * (K + 1) * rho ** (-2.0 * J) + 1.0 / (q**K - 1.0)


def expansion_error_bound(expansion: SoeExpansion) -> float:
    p = expansion.params
    return soe_error_bound(p.alpha, p.T_max, p.q, p.l, expansion.K, expansion.J)


def soe_measured_error(expansion: SoeExpansion, alpha: float, grid) -> tuple[float, np.ndarray]:
    """Pointwise ``|E_ref(t) - SOE(t)|`` over ``grid`` and its maximum."""
    grid = np.asarray(grid, dtype=float)
    ref = np.array([ml_one_param_ref(alpha, float(t)) for t in grid])
    per_t = np.abs(ref - soe_eval(expansion, grid))
    return float(per_t.max()), per_t
