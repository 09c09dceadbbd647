"""Fully discrete time integrators for the fractional Zener wave model.

Both schemes advance the displacement coefficients ``U`` with the Newmark
update and differ in how the fractional memory is carried:

* :func:`l1_newmark_solve` discretises the Caputo derivatives with the L1
  formula and keeps the whole history (``O(s N)`` memory, ``O(s N^2)`` work).
* :func:`fast_solve` uses the integrated form of the constitutive law with
  the Mittag-Leffler kernel replaced by a sum of exponentials, so the memory
  is ``N_exp`` recursively updated vectors (``O(s N_exp)`` memory,
  ``O(s N_exp N)`` work).
"""

from __future__ import annotations

import json
import math
import struct
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import DivergenceError, InvalidArgumentError, SolverError, ValidityError
from .fem import AssembledOperators, MaterialModel
from .soe import SoeExpansion

CONSTITUTIVE_FORMS = ("displacement", "velocity-paper")


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if not self.T > 0 or int(self.N) != self.N or self.N < 1:
            raise InvalidArgumentError(f"need T > 0 and integer N >= 1, got T={self.T}, N={self.N}")

    @property
    def dt(self) -> float:
        return self.T / self.N

    def t(self, n: int) -> float:
        return n * self.T / self.N

    @classmethod
    def from_step(cls, T: float, dt: float) -> "TimeGrid":
        N = int(round(T / dt))
        if N < 1 or abs(N * dt - T) > 1e-9 * T:
            raise InvalidArgumentError(f"dt = {dt} does not divide T = {T}")
        return cls(T, N)


@dataclass(frozen=True)
class NewmarkParams:
    """Newmark weights; ``(1/2, 1/4)`` is the constant average acceleration rule."""

    theta1: float = 0.5
    theta2: float = 0.25

    def __post_init__(self):
        if not self.theta2 > 0:
            raise InvalidArgumentError(f"theta2 must be positive, got {self.theta2}")


NEWMARK_FAMILY = {
    "fox-goodwin": (0.5, 1.0 / 12.0),
    "linear-acceleration": (0.5, 1.0 / 6.0),
    "average-acceleration": (0.5, 0.25),
}


@dataclass
class RunStats:
    steps: int = 0
    history_floats: int = 0
    history_update_seconds: float = 0.0
    total_seconds: float = 0.0
    factorizations: int = 0

    @property
    def history_mbytes(self) -> float:
        return 8.0 * self.history_floats / 2**20

    def to_json(self) -> str:
        d = asdict(self)
        d["history_mbytes"] = self.history_mbytes
        return json.dumps(d, indent=2)


@dataclass
class Trajectory:
    """Displacement coefficients at every time level, ``U[n]`` at ``t_n``."""

    grid: TimeGrid
    U: np.ndarray
    Ut: np.ndarray | None = None
    Utt: np.ndarray | None = None

    @property
    def s(self) -> int:
        return self.U.shape[1]

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.grid.T, self.grid.N + 1)


_TRAJ_HEADER = struct.Struct("<qqd")


def save_trajectory(traj: Trajectory, path) -> None:
    """Binary layout: little-endian ``int64 s, int64 N, float64 dt`` then N+1 frames."""
    with open(path, "wb") as fh:
        fh.write(_TRAJ_HEADER.pack(traj.s, traj.grid.N, traj.grid.dt))
        fh.write(np.ascontiguousarray(traj.U, dtype="<f8").tobytes())


def load_trajectory(path) -> Trajectory:
    with open(path, "rb") as fh:
        s, N, dt = _TRAJ_HEADER.unpack(fh.read(_TRAJ_HEADER.size))
        U = np.frombuffer(fh.read(), dtype="<f8").reshape(N + 1, s).copy()
    return Trajectory(TimeGrid(N * dt, N), U)


def l1_weights(alpha: float, n: int) -> np.ndarray:
    """``a_k = (k + 1)^(1 - alpha) - k^(1 - alpha)`` for ``k = 0..n-1``."""
    if not 0 < alpha < 1:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    k = np.arange(n + 1, dtype=float) ** (1.0 - alpha)
    return np.diff(k)


def newmark_predictor(U, Ut, Utt, dt, params: NewmarkParams):
    return U + dt * Ut + 0.5 * dt * dt * (1.0 - 2.0 * params.theta2) * Utt


def newmark_update(U_n, U_prev, Ut_prev, Utt_prev, dt, params: NewmarkParams):
    """Acceleration and velocity at ``t_n`` from the new displacement ``U_n``."""
    Utt_n = (U_n - newmark_predictor(U_prev, Ut_prev, Utt_prev, dt, params)) / (dt * dt * params.theta2)
    Ut_n = Ut_prev + dt * ((1.0 - params.theta1) * Utt_prev + params.theta1 * Utt_n)
    return Utt_n, Ut_n


def exp_step_coeffs(a, tau_sigma: float, dt: float):
    """Exact moments ``int_0^dt s^p / p! exp(-a (dt - s) / tau_sigma) ds``, p = 0, 1, 2.

    These weight ``U``, ``U_t`` and ``U_tt`` at the left end of a step when
    the exponential history is advanced with a quadratic Taylor model of
    ``U``. For small ``a dt / tau_sigma`` the closed forms cancel badly and
    are replaced by their power series. All arguments broadcast.
    """
    a, tau_sigma, dt = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, tau_sigma, dt)))
    if np.any(a <= 0) or np.any(tau_sigma <= 0) or np.any(dt <= 0):
        raise InvalidArgumentError("need a > 0, tau_sigma > 0, dt > 0")
    lam = a / tau_sigma
    x = lam * dt
    # phi_p(x) = int_0^1 u^p / p! e^{-x (1 - u)} du, so T_{p+1} = dt^{p+1} phi_p(x)
    small = x < 0.1
    xs = np.where(small, 1.0, x)
    e1 = -np.expm1(-xs)
    phi0 = e1 / xs
    phi1 = (xs - e1) / (xs * xs)
    phi2 = (0.5 * xs * xs - xs + e1) / xs**3
    if np.any(small):
        xv = x[small]
        s0 = np.zeros_like(xv)
        s1 = np.zeros_like(xv)
        s2 = np.zeros_like(xv)
        term = np.ones_like(xv)
        # phi_p(x) = sum_k (-x)^k / (k + p + 1)!
        for k in range(30):
            s0 += term / math.factorial(k + 1)
            s1 += term / math.factorial(k + 2)
            s2 += term / math.factorial(k + 3)
            term = term * (-xv)
        phi0 = np.where(small, 0.0, phi0)
        phi1 = np.where(small, 0.0, phi1)
        phi2 = np.where(small, 0.0, phi2)
        phi0[small] = s0
        phi1[small] = s1
        phi2[small] = s2
    T1 = dt * phi0
    T2 = dt**2 * phi1
    T3 = dt**3 * phi2
    if T1.ndim == 0:
        return float(T1), float(T2), float(T3)
    return T1, T2, T3


def _check_finite(n, *vecs):
    for v in vecs:
        if not np.all(np.isfinite(v)):
            raise DivergenceError(n)


def _factor(M, stats: RunStats):
    try:
        fac = sla.cho_factor(M, lower=True, check_finite=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise SolverError(f"system matrix is singular or indefinite: {exc}") from exc
    stats.factorizations += 1
    return fac


def _initial_acceleration(ops, eta0, Beta0):
    # momentum balance at t = 0: C U_tt = eta + B^T beta
    return np.asarray((eta0 + ops.B.T @ Beta0) / ops.C.diagonal())


def l1_newmark_solve(
    ops: AssembledOperators,
    material: MaterialModel,
    grid: TimeGrid,
    params: NewmarkParams,
    forcing: Callable[[float], np.ndarray],
    init,
    store_trajectory: bool = True,
):
    """Reference L1-Newmark integration of the differential constitutive law.

    Each step solves ``(C / (dt^2 theta2) + c_e S) U_n = rhs`` with
    ``c_e = (1 + L_eps) / (1 + L_sigma)`` and a history vector ``H_{n-1}``
    that is a weighted sum over all previous ``H_k`` and ``S U_k``. Both
    sequences are stored, which is the ``2 s N`` history of this scheme.

    Returns
    -------
    (Trajectory, RunStats)
    """
    t_start = time.perf_counter()
    U0, V0, Beta0 = (np.asarray(v, dtype=float) for v in init)
    N, dt = grid.N, grid.dt
    s = ops.S.shape[0]
    alpha = material.alpha
    g2 = math.gamma(2.0 - alpha)
    L_sig = material.tau_sigma**alpha / (dt**alpha * g2)
    L_eps = material.tau_eps**alpha / (dt**alpha * g2)
    c_e = (1.0 + L_eps) / (1.0 + L_sig)
    k_u = (L_eps - L_sig) / (1.0 + L_sig) ** 2
    k_h = L_sig / (1.0 + L_sig)

    stats = RunStats(steps=N)
    C_diag = ops.C.diagonal()
    inv_newmark = 1.0 / (dt * dt * params.theta2)
    M = ops.S * c_e
    M[np.diag_indices(s)] += C_diag * inv_newmark
    fac = _factor(M, stats)

    a = l1_weights(alpha, N)
    # d[m] = a_{m-1} - a_m, the weight of level k in step n sits at m = n - k
    d = np.concatenate([[0.0], a[:-1] - a[1:]])
    P0 = ops.B.T @ Beta0
    # stress-history seed; vanishes when A Beta0 = -c_e B U0 exactly
    seed = P0 + c_e * (ops.S @ U0)

    H_hist = np.empty((N, s))
    SU_hist = np.empty((N, s))
    U, Ut = U0.copy(), V0.copy()
    Utt = _initial_acceleration(ops, forcing(0.0), Beta0)
    SU = ops.S @ U0

    if store_trajectory:
        traj_U = np.empty((N + 1, s))
        traj_U[0] = U
    t_hist = 0.0
    for n in range(1, N + 1):
        th = time.perf_counter()
        SU_hist[n - 1] = SU
        w = d[n - 1:0:-1]  # weights of levels k = 1..n-1
        # S K_{u,n-1} = sum_k w_k S U_k + a_{n-1} S U_0
        SK = w @ SU_hist[1:n] + a[n - 1] * SU_hist[0]
        H = k_u * SK + k_h * (w @ H_hist[0:n - 1]) + k_h * a[n - 1] * seed
        H_hist[n - 1] = H
        t_hist += time.perf_counter() - th

        pred = newmark_predictor(U, Ut, Utt, dt, params)
        rhs = forcing(grid.t(n)) + H + C_diag * inv_newmark * pred
        U_new = sla.cho_solve(fac, rhs, check_finite=False)
        Utt, Ut = newmark_update(U_new, U, Ut, Utt, dt, params)
        # S U_n recovered from the solved system at O(s) cost
        SU = (rhs - C_diag * inv_newmark * U_new) / c_e
        U = U_new
        _check_finite(n, U)
        if store_trajectory:
            traj_U[n] = U

    stats.history_floats = SU_hist.size + H_hist.size
    stats.history_update_seconds = t_hist
    stats.total_seconds = time.perf_counter() - t_start
    traj = Trajectory(grid, traj_U if store_trajectory else U[None, :])
    return traj, stats


def fast_solve(
    ops: AssembledOperators,
    material: MaterialModel,
    grid: TimeGrid,
    params: NewmarkParams,
    soe: SoeExpansion,
    forcing: Callable[[float], np.ndarray],
    init,
    constitutive_form: str = "displacement",
    store_trajectory: bool = True,
):
    """SOE-accelerated integration of the integrated constitutive law.

    The memory term ``int_0^t k(t - s) U_t(s) ds`` with
    ``k(t) = sum_j b_j exp(-a_j t / tau_sigma)`` is integrated by parts into
    the history vectors ``G_j(t) = int_0^t exp(-a_j (t - s) / tau_sigma) U(s) ds``,
    each advanced by one exponential recurrence per step.

    ``constitutive_form="displacement"`` uses the stress law with the
    instantaneous strain ``eps(u)``; ``"velocity-paper"`` swaps in ``eps(u_t)``
    there and is kept for comparison only.
    """
    if constitutive_form not in CONSTITUTIVE_FORMS:
        raise InvalidArgumentError(f"constitutive_form must be one of {CONSTITUTIVE_FORMS}")
    tau = material.tau_sigma
    if soe.params.T_max < grid.T / tau * (1.0 - 1e-12):
        raise ValidityError(
            f"SOE valid up to {soe.params.T_max}, but the kernel is needed up to {grid.T / tau}"
        )
    if abs(soe.params.alpha - material.alpha) > 1e-14:
        raise InvalidArgumentError("SOE expansion was built for a different alpha")
    t_start = time.perf_counter()
    U0, V0, Beta0 = (np.asarray(v, dtype=float) for v in init)
    N, dt = grid.N, grid.dt
    s = ops.S.shape[0]
    r = material.ratio
    a_j, b_j = soe.exponents, soe.weights
    n_exp = len(a_j)
    decay = np.exp(-a_j * dt / tau)
    T1, T2, T3 = exp_step_coeffs(a_j, tau, dt)
    conv_w = a_j * b_j / tau
    kernel0 = float(b_j.sum())

    stats = RunStats(steps=N)
    C_diag = ops.C.diagonal()
    S = ops.S
    th1, th2 = params.theta1, params.theta2
    if constitutive_form == "displacement":
        # k(0) = sum b_j multiplies the instantaneous S U term after integration by parts
        M = S * (1.0 + (r - 1.0) * kernel0)
        M[np.diag_indices(s)] += C_diag / (dt * dt * th2)
        q1 = C_diag / (dt * dt * th2)
        q2 = C_diag / (dt * th2)
        q3 = C_diag * (1.0 - 2.0 * th2) / (2.0 * th2)
        Q1 = Q2 = Q3 = None
    else:
        M = S * (th1 * dt / (dt * dt * th2) + (r - 1.0))
        M[np.diag_indices(s)] += C_diag / (dt * dt * th2)
        Q1 = S * (th1 * dt / (dt * dt * th2))
        Q1[np.diag_indices(s)] += C_diag / (dt * dt * th2)
        Q2 = S * ((th1 - th2) * dt / (dt * th2))
        Q2[np.diag_indices(s)] += C_diag / (dt * th2)
        Q3 = S * (dt * (th1 - 2.0 * th2) / (2.0 * th2))
        Q3[np.diag_indices(s)] += C_diag * (1.0 - 2.0 * th2) / (2.0 * th2)
    fac = _factor(M, stats)

    init_vec = ops.B.T @ Beta0 + r * (S @ U0)
    G = np.zeros((n_exp, s))
    U, Ut = U0.copy(), V0.copy()
    Utt = _initial_acceleration(ops, forcing(0.0), Beta0)
    if store_trajectory:
        traj_U = np.empty((N + 1, s))
        traj_U[0] = U
    t_hist = 0.0
    for n in range(1, N + 1):
        th = time.perf_counter()
        G *= decay[:, None]
        G += np.outer(T1, U)
        G += np.outer(T2, Ut)
        G += np.outer(T3, Utt)
        conv = conv_w @ G
        t_hist += time.perf_counter() - th

        tn = grid.t(n)
        kernel_n = float(b_j @ np.exp(-a_j * tn / tau))
        rhs = forcing(tn) + kernel_n * init_vec + (r - 1.0) * (S @ conv)
        if Q1 is None:
            rhs += q1 * U + q2 * Ut + q3 * Utt
        else:
            rhs += Q1 @ U + Q2 @ Ut + Q3 @ Utt
        U_new = sla.cho_solve(fac, rhs, check_finite=False)
        Utt, Ut = newmark_update(U_new, U, Ut, Utt, dt, params)
        U = U_new
        _check_finite(n, U)
        if store_trajectory:
            traj_U[n] = U

    stats.history_floats = G.size
    stats.history_update_seconds = t_hist
    stats.total_seconds = time.perf_counter() - t_start
    traj = Trajectory(grid, traj_U if store_trajectory else U[None, :])
    return traj, stats


def trajectory_error(traj: Trajectory, u_exact, mesh, layout, order: int = 3) -> float:
    """``max_{1 <= n <= N} ||U(t_n) - u(t_n)||_{L2}``."""
    from .fem import l2_error

    if traj.U.shape[0] != traj.grid.N + 1:
        raise InvalidArgumentError("trajectory was not stored")
    times = traj.times()
    return max(l2_error(mesh, layout, traj.U[n], u_exact, times[n], order) for n in range(1, traj.grid.N + 1))


def trajectory_distance(a: Trajectory, b: Trajectory, ops: AssembledOperators) -> float:
    """``max_n ||U_a(t_n) - U_b(t_n)||_{L2}`` between two discrete trajectories."""
    if a.U.shape != b.U.shape:
        raise InvalidArgumentError("trajectories have different shapes")
    diff = a.U - b.U
    return float(np.sqrt(np.max(np.einsum("ni,ni->n", diff, (ops.mass @ diff.T).T))))
