"""Hu-Man-Zhang rectangular mixed elements for 2D isotropic elasticity.

Stress space (symmetric, H(div)-conforming) on each rectangle::

    sigma_11 in P_{2,0}   (quadratic in x, constant in y)
    sigma_22 in P_{0,2}
    sigma_12 in Q_1       (globally continuous bilinear)

Displacement space: ``u_1 in span{1, xi}``, ``u_2 in span{1, eta}``,
discontinuous across elements. ``div`` maps the stress space into the
displacement space, which is what makes the pair stable.

Degrees of freedom
------------------
``sigma_11``: one value on each vertical grid line per element row (shared by
the two neighbours, so the normal component is continuous) plus one interior
bubble per element; ``m (2n + 1)`` in total on an ``n x m`` grid.
``sigma_22`` is the transpose. ``sigma_12`` lives on the vertices.

Local stress basis order: ``[11 left, 11 right, 11 bubble, 22 bottom,
22 top, 22 bubble, 12 at (-1,-1), (1,-1), (1,1), (-1,1)]``.
Local displacement basis order: ``[(1, 0), (xi, 0), (0, 1), (0, eta)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, InvalidArgumentError
from .quadrature import gauss_legendre_rule

N_STRESS_LOCAL = 10
N_DISP_LOCAL = 4


@dataclass(frozen=True)
class MaterialModel:
    alpha: float = 0.5
    tau_sigma: float = 1.0
    tau_eps: float = 1.0
    rho: float = 1.0
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidArgumentError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.tau_sigma > 0 or not self.tau_eps >= 0:
            raise InvalidArgumentError("need tau_sigma > 0 and tau_eps >= 0")
        if not (self.rho > 0 and self.lam > 0 and self.mu > 0):
            raise InvalidArgumentError("rho, lambda and mu must be positive")

    @property
    def ratio(self) -> float:
        """``(tau_eps / tau_sigma) ** alpha``."""
        return (self.tau_eps / self.tau_sigma) ** self.alpha


def elasticity_apply(material: MaterialModel, eps):
    """``2 mu eps + lambda tr(eps) I`` for tensors shaped ``(2, 2, ...)``."""
    eps = np.asarray(eps, dtype=float)
    out = 2.0 * material.mu * eps
    tr = eps[0, 0] + eps[1, 1]
    out[0, 0] += material.lam * tr
    out[1, 1] += material.lam * tr
    return out


def compliance_apply(material: MaterialModel, tau):
    """Inverse of :func:`elasticity_apply`."""
    tau = np.asarray(tau, dtype=float)
    k = material.lam / (2.0 * material.mu + 2.0 * material.lam)
    out = tau.copy()
    tr = tau[0, 0] + tau[1, 1]
    out[0, 0] -= k * tr
    out[1, 1] -= k * tr
    return out / (2.0 * material.mu)


@dataclass(frozen=True)
class RectMesh:
    """Uniform ``nx x ny`` grid on the unit square, elements numbered row-major."""

    nx: int
    ny: int

    @property
    def hx(self) -> float:
        return 1.0 / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / self.ny

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def n_vertices(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    def element_ij(self):
        e = np.arange(self.n_elements)
        return e % self.nx, e // self.nx

    def element_vertices(self) -> np.ndarray:
        """Vertex indices in local order (-1,-1), (1,-1), (1,1), (-1,1)."""
        i, j = self.element_ij()
        v = lambda a, b: b * (self.nx + 1) + a  # noqa: E731
        return np.stack([v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)], axis=1)

    def element_centers(self):
        i, j = self.element_ij()
        return (i + 0.5) * self.hx, (j + 0.5) * self.hy

    def interior_vertical_edges(self):
        """Pairs ``(left element, right element)`` sharing a vertical edge."""
        i, j = self.element_ij()
        mask = i < self.nx - 1
        e = np.arange(self.n_elements)[mask]
        return np.stack([e, e + 1], axis=1)

    def interior_horizontal_edges(self):
        """Pairs ``(lower element, upper element)``."""
        i, j = self.element_ij()
        mask = j < self.ny - 1
        e = np.arange(self.n_elements)[mask]
        return np.stack([e, e + self.nx], axis=1)


def build_mesh(nx: int, ny: int | None = None) -> RectMesh:
    ny = nx if ny is None else ny
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise InvalidArgumentError(f"element counts must be positive integers, got ({nx}, {ny})")
    return RectMesh(int(nx), int(ny))


@dataclass(frozen=True)
class DofLayout:
    mesh: RectMesh
    n11: int
    n22: int
    n12: int
    stress_dofs: np.ndarray  # (n_elements, 10)
    disp_dofs: np.ndarray  # (n_elements, 4)

    @property
    def r(self) -> int:
        return self.n11 + self.n22 + self.n12

    @property
    def s(self) -> int:
        return self.disp_dofs.size


def build_dof_layout(mesh: RectMesh) -> DofLayout:
    n, m = mesh.nx, mesh.ny
    i, j = mesh.element_ij()
    n11 = m * (2 * n + 1)
    n22 = n * (2 * m + 1)
    n12 = (n + 1) * (m + 1)
    row11 = j * (2 * n + 1)
    col22 = n11 + i * (2 * m + 1)
    verts = n11 + n22 + mesh.element_vertices()
    stress = np.column_stack([
        row11 + i,
        row11 + i + 1,
        row11 + n + 1 + i,
        col22 + j,
        col22 + j + 1,
        col22 + m + 1 + j,
        verts,
    ])
    disp = np.arange(4 * mesh.n_elements).reshape(-1, 4)
    return DofLayout(mesh, n11, n22, n12, stress, disp)


# ---------------------------------------------------------------- local basis

def _p2(t):
    return np.stack([0.5 * t * (t - 1.0), 0.5 * t * (t + 1.0), 1.0 - t * t])


def _dp2(t):
    return np.stack([t - 0.5, t + 0.5, -2.0 * t])


_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def stress_basis(xi, eta, hx, hy):
    """Local stress basis at reference points.

    Returns ``(comp, div)`` with ``comp`` shaped ``(10, 3, npts)`` holding
    ``(s11, s22, s12)`` and ``div`` shaped ``(10, 2, npts)`` in physical
    derivatives.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    npts = xi.size
    comp = np.zeros((N_STRESS_LOCAL, 3, npts))
    div = np.zeros((N_STRESS_LOCAL, 2, npts))
    comp[0:3, 0] = _p2(xi)
    div[0:3, 0] = _dp2(xi) * (2.0 / hx)
    comp[3:6, 1] = _p2(eta)
    div[3:6, 1] = _dp2(eta) * (2.0 / hy)
    for a, (cx, cy) in enumerate(_CORNERS):
        fx = 0.5 * (1.0 + cx * xi)
        fy = 0.5 * (1.0 + cy * eta)
        comp[6 + a, 2] = fx * fy
        div[6 + a, 0] = fx * 0.5 * cy * (2.0 / hy)  # d/dy of s12
        div[6 + a, 1] = 0.5 * cx * fy * (2.0 / hx)  # d/dx of s12
    return comp, div


def disp_basis(xi, eta):
    """Local displacement basis, shaped ``(4, 2, npts)``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    out = np.zeros((N_DISP_LOCAL, 2, xi.size))
    out[0, 0] = 1.0
    out[1, 0] = xi
    out[2, 1] = 1.0
    out[3, 1] = eta
    return out


def element_quadrature(order: int = 3):
    """Tensor Gauss rule on the reference square: ``(xi, eta, weights)``."""
    rule = gauss_legendre_rule(order)
    xi, eta = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    w = np.outer(rule.weights, rule.weights)
    return xi.ravel(), eta.ravel(), w.ravel()


def compliance_inner(material, s, t):
    """``D^{-1} s : t`` for component triples ``(s11, s22, s12)``."""
    k = material.lam / (2.0 * material.mu + 2.0 * material.lam)
    full = s[0] * t[0] + s[1] * t[1] + 2.0 * s[2] * t[2]
    tr = (s[0] + s[1]) * (t[0] + t[1])
    return (full - k * tr) / (2.0 * material.mu)


def element_matrices(mesh: RectMesh, material: MaterialModel, order: int = 3):
    """Element matrices ``(A_e, B_e, C_e)``, identical on every element."""
    hx, hy = mesh.hx, mesh.hy
    xi, eta, w = element_quadrature(order)
    jac = 0.25 * hx * hy
    comp, div = stress_basis(xi, eta, hx, hy)
    kap = disp_basis(xi, eta)
    wq = w * jac
    A_e = np.empty((N_STRESS_LOCAL, N_STRESS_LOCAL))
    for a in range(N_STRESS_LOCAL):
        for b in range(N_STRESS_LOCAL):
            A_e[a, b] = np.dot(wq, compliance_inner(material, comp[a], comp[b]))
    B_e = np.einsum("q,acq,icq->ai", wq, div, kap)
    C_e = material.rho * np.einsum("q,acq,bcq->ab", wq, kap, kap)
    return A_e, B_e, C_e


def _scatter(rows, cols, block, shape):
    ne = rows.shape[0]
    R = np.repeat(rows[:, :, None], cols.shape[1], axis=2)
    Cc = np.repeat(cols[:, None, :], rows.shape[1], axis=1)
    V = np.broadcast_to(block, (ne,) + block.shape)
    return sp.coo_matrix((V.ravel(), (R.ravel(), Cc.ravel())), shape=shape).tocsr()


@dataclass
class AssembledOperators:
    """Global matrices of the semi-discrete system.

    ``A`` stress compliance mass, ``B`` divergence coupling (``r x s``),
    ``C`` density mass, ``S = B^T A^{-1} B`` (dense), ``mass`` the unit
    density mass matrix used for L2 norms and projections.
    """

    A: sp.csr_matrix
    B: sp.csr_matrix
    C: sp.csr_matrix
    S: np.ndarray
    mass: sp.csr_matrix
    A_lu: object = field(repr=False)

    def solve_A(self, rhs):
        return self.A_lu.solve(np.asarray(rhs, dtype=float))

    def l2_norm(self, coeffs) -> float:
        coeffs = np.asarray(coeffs, dtype=float)
        return float(np.sqrt(max(coeffs @ (self.mass @ coeffs), 0.0)))


def factor_spd(A: sp.spmatrix):
    """Sparse LDL^T-style factorization of a symmetric matrix without pivoting.

    Diagonal pivoting is disabled so the pivots are those of ``L D L^T``;
    all of them being positive certifies positive definiteness.
    """
    lu = spla.splu(
        sp.csc_matrix(A),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )
    piv = lu.U.diagonal()
    if not np.all(piv > 0):
        raise AssemblyError(f"matrix is not positive definite (min pivot {piv.min():.3e})")
    return lu


def assemble_operators(
    mesh: RectMesh,
    layout: DofLayout,
    material: MaterialModel,
    order: int = 3,
    chunk: int = 512,
) -> AssembledOperators:
    A_e, B_e, C_e = element_matrices(mesh, material, order)
    r, s = layout.r, layout.s
    A = _scatter(layout.stress_dofs, layout.stress_dofs, A_e, (r, r))
    B = _scatter(layout.stress_dofs, layout.disp_dofs, B_e, (r, s))
    C = _scatter(layout.disp_dofs, layout.disp_dofs, C_e, (s, s))
    mass = C / material.rho
    A = 0.5 * (A + A.T)
    C = 0.5 * (C + C.T)
    try:
        lu = factor_spd(A)
    except RuntimeError as exc:
        raise AssemblyError(f"factorization of A failed: {exc}") from exc
    if not np.all(C.diagonal() > 0):
        raise AssemblyError("mass matrix has a non-positive diagonal")

    Bt = B.T.tocsr()
    S = np.empty((s, s))
    for start in range(0, s, chunk):
        stop = min(start + chunk, s)
        X = lu.solve(B[:, start:stop].toarray())
        S[:, start:stop] = Bt @ X
    S = 0.5 * (S + S.T)
    return AssembledOperators(A.tocsr(), B, C.tocsr(), S, mass.tocsr(), lu)


# ------------------------------------------------------- fields and functionals

def quadrature_points(mesh: RectMesh, order: int = 3):
    """Physical quadrature points ``(x, y)`` shaped ``(n_elements, nq)`` and weights."""
    xi, eta, w = element_quadrature(order)
    cx, cy = mesh.element_centers()
    x = cx[:, None] + 0.5 * mesh.hx * xi[None, :]
    y = cy[:, None] + 0.5 * mesh.hy * eta[None, :]
    return x, y, xi, eta, w * 0.25 * mesh.hx * mesh.hy


def load_vector(mesh: RectMesh, layout: DofLayout, f: Callable, order: int = 3) -> np.ndarray:
    """``<f, kappa_i>`` for a vector field ``f(x, y) -> (2, ...)``."""
    x, y, xi, eta, wq = quadrature_points(mesh, order)
    fx = np.asarray(f(x, y), dtype=float)  # (2, ne, nq)
    kap = disp_basis(xi, eta)  # (4, 2, nq)
    local = np.einsum("q,ceq,icq->ei", wq, fx, kap)
    out = np.zeros(layout.s)
    np.add.at(out, layout.disp_dofs, local)
    return out


def stress_load_vector(
    mesh: RectMesh, layout: DofLayout, material: MaterialModel, sigma: Callable, order: int = 3
) -> np.ndarray:
    """``<D^{-1} sigma, phi_i>`` for a tensor field ``sigma(x, y) -> (2, 2, ...)``."""
    x, y, xi, eta, wq = quadrature_points(mesh, order)
    sig = np.asarray(sigma(x, y), dtype=float)
    trip = np.stack([sig[0, 0], sig[1, 1], 0.5 * (sig[0, 1] + sig[1, 0])])  # (3, ne, nq)
    comp, _ = stress_basis(xi, eta, mesh.hx, mesh.hy)  # (10, 3, nq)
    vals = compliance_inner(material, trip[:, None], comp.transpose(1, 0, 2)[:, :, None])  # (10, ne, nq)
    local = np.einsum("q,aeq->ea", wq, vals)
    out = np.zeros(layout.r)
    np.add.at(out, layout.stress_dofs, local)
    return out


def project_displacement(mesh, layout, u: Callable, order: int = 3, ops: AssembledOperators | None = None):
    """L2 projection onto the displacement space."""
    rhs = load_vector(mesh, layout, u, order)
    if ops is not None:
        diag = ops.mass.diagonal()
    else:
        diag = np.tile([1.0, 1.0 / 3.0, 1.0, 1.0 / 3.0], mesh.n_elements) * mesh.hx * mesh.hy
    # the local basis is L2-orthogonal, so the mass matrix is diagonal
    return rhs / diag


def project_initial_data(
    mesh: RectMesh,
    layout: DofLayout,
    material: MaterialModel,
    u0: Callable,
    v0: Callable,
    sigma0: Callable,
    ops: AssembledOperators | None = None,
    order: int = 3,
):
    """Coefficient vectors ``(U0, V0, Beta0)`` of the initial data.

    ``U0`` and ``V0`` are L2 projections; ``Beta0`` solves
    ``A Beta0 = <D^{-1} sigma0, phi>``.
    """
    U0 = project_displacement(mesh, layout, u0, order, ops)
    V0 = project_displacement(mesh, layout, v0, order, ops)
    rhs = stress_load_vector(mesh, layout, material, sigma0, order)
    if ops is None:
        ops_lu = factor_spd(assemble_A(mesh, layout, material))
        Beta0 = ops_lu.solve(rhs)
    else:
        Beta0 = ops.solve_A(rhs)
    return U0, V0, Beta0


def assemble_A(mesh, layout, material, order: int = 3):
    A_e, _, _ = element_matrices(mesh, material, order)
    A = _scatter(layout.stress_dofs, layout.stress_dofs, A_e, (layout.r, layout.r))
    return 0.5 * (A + A.T)


def eval_displacement(layout: DofLayout, U, elems, xi, eta):
    """Displacement at reference points of the given elements: ``(2, len(elems), npts)``."""
    kap = disp_basis(xi, eta)  # (4, 2, npts)
    coeff = np.asarray(U)[layout.disp_dofs[np.atleast_1d(elems)]]  # (ne, 4)
    return np.einsum("ei,icq->ceq", coeff, kap)


def displacement_field(layout: DofLayout, U) -> Callable:
    """Callable ``(x, y) -> (2, ...)`` evaluating the discrete displacement ``U``.

    Points on an element boundary are assigned to the element on their
    upper/right side (the field is discontinuous there).
    """
    mesh = layout.mesh
    U = np.asarray(U, dtype=float)

    def field(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        i = np.clip(np.floor(x * mesh.nx).astype(int), 0, mesh.nx - 1)
        j = np.clip(np.floor(y * mesh.ny).astype(int), 0, mesh.ny - 1)
        xi = 2.0 * (x - (i + 0.5) * mesh.hx) / mesh.hx
        eta = 2.0 * (y - (j + 0.5) * mesh.hy) / mesh.hy
        coeff = U[layout.disp_dofs[(j * mesh.nx + i).ravel()]]  # (npts, 4)
        kap = disp_basis(xi.ravel(), eta.ravel())  # (4, 2, npts)
        return np.einsum("pi,icp->cp", coeff, kap).reshape((2,) + x.shape)

    return field


def eval_stress(layout: DofLayout, beta, elems, xi, eta):
    """Stress components ``(s11, s22, s12)`` shaped ``(3, len(elems), npts)``."""
    mesh = layout.mesh
    comp, _ = stress_basis(xi, eta, mesh.hx, mesh.hy)
    coeff = np.asarray(beta)[layout.stress_dofs[np.atleast_1d(elems)]]  # (ne, 10)
    return np.einsum("ea,acq->ceq", coeff, comp)


def l2_error(mesh: RectMesh, layout: DofLayout, U, u_exact: Callable, t: float, order: int = 3) -> float:
    """``||U_h - u(., t)||_{L2}`` by elementwise tensor Gauss quadrature."""
    x, y, xi, eta, wq = quadrature_points(mesh, order)
    uh = eval_displacement(layout, U, np.arange(mesh.n_elements), xi, eta)
    ue = np.asarray(u_exact(x, y, t), dtype=float)
    diff = uh - ue
    return float(np.sqrt(np.einsum("q,ceq->", wq, diff * diff)))


def normal_jumps(layout: DofLayout, beta, npts: int = 4) -> float:
    """Largest normal-traction jump of the stress field across interior edges."""
    mesh = layout.mesh
    s = gauss_legendre_rule(npts).nodes
    worst = 0.0
    ve = mesh.interior_vertical_edges()
    if len(ve):
        left = eval_stress(layout, beta, ve[:, 0], np.ones_like(s), s)
        right = eval_stress(layout, beta, ve[:, 1], -np.ones_like(s), s)
        # normal (1, 0): traction (s11, s12)
        worst = max(worst, np.abs(left[[0, 2]] - right[[0, 2]]).max())
    he = mesh.interior_horizontal_edges()
    if len(he):
        low = eval_stress(layout, beta, he[:, 0], s, np.ones_like(s))
        up = eval_stress(layout, beta, he[:, 1], s, -np.ones_like(s))
        # normal (0, 1): traction (s12, s22)
        worst = max(worst, np.abs(low[[2, 1]] - up[[2, 1]]).max())
    return float(worst)


def is_positive_definite(M) -> bool:
    """Dense Cholesky test, for small matrices."""
    M = M.toarray() if sp.issparse(M) else np.asarray(M)
    try:
        sla.cholesky(M, lower=True)
    except sla.LinAlgError:
        return False
    return True
