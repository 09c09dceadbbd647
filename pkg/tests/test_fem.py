import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from fastvisco import fem
from fastvisco.bench import spatial_field
from fastvisco.errors import InvalidArgumentError
from fastvisco.quadrature import adaptive_integrate


def sym_tensors(rng, n):
    a = rng.standard_normal((2, 2, n))
    return 0.5 * (a + a.transpose(1, 0, 2))


@pytest.fixture(scope="module")
def small():
    mesh = fem.build_mesh(3)
    layout = fem.build_dof_layout(mesh)
    material = fem.MaterialModel(lam=2.0, mu=3.0)
    ops = fem.assemble_operators(mesh, layout, material)
    return mesh, layout, material, ops


class TestMaterial:
    def test_identity_strain(self):
        m = fem.MaterialModel()
        sig = fem.elasticity_apply(m, np.eye(2))
        np.testing.assert_allclose(fem.compliance_apply(m, sig), np.eye(2), atol=1e-15)

    def test_shear(self):
        tau = np.array([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(fem.compliance_apply(fem.MaterialModel(), tau), tau / 2)

    def test_round_trip(self):
        m = fem.MaterialModel(lam=2.0, mu=3.0)
        tau = sym_tensors(np.random.default_rng(4), 50)
        np.testing.assert_allclose(fem.elasticity_apply(m, fem.compliance_apply(m, tau)), tau, atol=1e-13)

    def test_ratio(self):
        assert fem.MaterialModel(alpha=0.5, tau_sigma=1.0, tau_eps=4.0).ratio == pytest.approx(2.0)

    @pytest.mark.parametrize("kw", [{"alpha": 1.0}, {"tau_sigma": 0.0}, {"mu": -1.0}, {"rho": 0.0}])
    def test_invalid(self, kw):
        with pytest.raises(InvalidArgumentError):
            fem.MaterialModel(**kw)


class TestMeshAndLayout:
    def test_counts(self):
        mesh = fem.build_mesh(2, 2)
        assert mesh.n_elements == 4 and mesh.n_vertices == 9

    def test_h(self):
        assert fem.build_mesh(8).hx == 0.125

    def test_single_element(self):
        mesh = fem.build_mesh(1)
        assert len(mesh.interior_vertical_edges()) == 0 and len(mesh.interior_horizontal_edges()) == 0

    def test_zero_rejected(self):
        with pytest.raises(InvalidArgumentError):
            fem.build_mesh(0)

    @pytest.mark.parametrize("n, m, r, s", [(2, 2, 29, 16), (1, 1, 10, 4), (8, 8, 8 * 17 * 2 + 81, 256), (3, 2, None, 24)])
    def test_dof_counts(self, n, m, r, s):
        layout = fem.build_dof_layout(fem.build_mesh(n, m))
        expected_r = m * (2 * n + 1) + n * (2 * m + 1) + (n + 1) * (m + 1)
        assert layout.r == (r if r is not None else expected_r) == expected_r
        assert layout.s == s

    def test_every_stress_dof_used(self):
        layout = fem.build_dof_layout(fem.build_mesh(3, 2))
        assert set(np.unique(layout.stress_dofs)) == set(range(layout.r))


class TestConformity:
    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_random_fields_have_no_normal_jumps(self, seed):
        layout = fem.build_dof_layout(fem.build_mesh(3, 2))
        beta = np.random.default_rng(seed).standard_normal(layout.r)
        assert fem.normal_jumps(layout, beta) <= 1e-11

    def test_tangential_jump_is_allowed(self):
        # sigma_22 is discontinuous across vertical edges in general
        layout = fem.build_dof_layout(fem.build_mesh(2))
        beta = np.random.default_rng(0).standard_normal(layout.r)
        s = np.array([0.0])
        left = fem.eval_stress(layout, beta, [0], np.ones(1), s)
        right = fem.eval_stress(layout, beta, [1], -np.ones(1), s)
        assert abs(left[1] - right[1]).max() > 1e-6


class TestOperators:
    def test_spd_and_symmetric(self, small):
        _, _, _, ops = small
        for M in (ops.A, ops.C):
            d = M.toarray()
            assert np.abs(d - d.T).max() <= 1e-14 * np.abs(d).max()
            assert fem.is_positive_definite(d)
        assert np.linalg.eigvalsh(ops.S).min() > -1e-12

    def test_S_action(self, small):
        _, _, _, ops = small
        v = np.random.default_rng(2).standard_normal(ops.S.shape[0])
        A = ops.A.toarray()
        L = sla.cholesky(A, lower=True)
        w = sla.cho_solve((L, True), ops.B @ v)
        np.testing.assert_allclose(ops.S @ v, ops.B.T @ w, rtol=1e-10, atol=1e-10 * np.abs(ops.S @ v).max())

    def test_mass_block(self):
        mesh = fem.build_mesh(2)
        layout = fem.build_dof_layout(mesh)
        ops = fem.assemble_operators(mesh, layout, fem.MaterialModel(rho=1.0))
        C = ops.C.toarray()
        block = C[np.ix_(layout.disp_dofs[0], layout.disp_dofs[0])]
        # int over the reference square of (1, xi, 1, eta) products, times hx hy / 4
        ref = np.diag([4.0, 4.0 / 3.0, 4.0, 4.0 / 3.0]) * mesh.hx * mesh.hy / 4
        np.testing.assert_allclose(block, ref, atol=1e-15)

    def test_density_scales_C(self):
        mesh = fem.build_mesh(2)
        layout = fem.build_dof_layout(mesh)
        c1 = fem.assemble_operators(mesh, layout, fem.MaterialModel(rho=1.0)).C
        c3 = fem.assemble_operators(mesh, layout, fem.MaterialModel(rho=3.0)).C
        np.testing.assert_allclose(c3.toarray(), 3 * c1.toarray())

    def test_constant_stress_is_divergence_free(self, small):
        mesh, layout, material, ops = small
        identity = lambda x, y: np.broadcast_to(np.eye(2)[:, :, None, None], (2, 2) + x.shape)  # noqa: E731
        beta = ops.solve_A(fem.stress_load_vector(mesh, layout, material, identity))
        assert np.abs(ops.B.T @ beta).max() <= 1e-13

    def test_quadrature_order_robust(self, small):
        mesh, layout, material, _ = small
        A3 = fem.assemble_A(mesh, layout, material, order=3).toarray()
        A4 = fem.assemble_A(mesh, layout, material, order=4).toarray()
        assert np.abs(A3 - A4).max() <= 1e-12


class TestProjection:
    def test_zero(self, small):
        mesh, layout, _, _ = small
        U = fem.project_displacement(mesh, layout, lambda x, y: np.zeros((2,) + x.shape))
        assert np.all(U == 0)

    def test_in_space_is_reproduced(self, small):
        mesh, layout, _, ops = small
        U = fem.project_displacement(mesh, layout, lambda x, y: np.stack([1 + 2 * x, 3 - y]), ops=ops)
        err = fem.l2_error(mesh, layout, U, lambda x, y, t: np.stack([1 + 2 * x, 3 - y]), 0.0)
        assert err <= 1e-12

    def test_idempotent(self, small):
        mesh, layout, _, _ = small
        U = np.random.default_rng(7).standard_normal(layout.s)
        P = fem.project_displacement(mesh, layout, fem.displacement_field(layout, U))
        np.testing.assert_allclose(P, U, atol=1e-12)

    def test_convergence_rate(self):
        # first order is the best the piecewise-linear space allows; it is reached from below
        errs = []
        for n in (4, 8, 16, 32):
            mesh = fem.build_mesh(n)
            layout = fem.build_dof_layout(mesh)
            U = fem.project_displacement(mesh, layout, spatial_field)
            errs.append(fem.l2_error(mesh, layout, U, lambda x, y, t: spatial_field(x, y), 0.0))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.diff(rates) > 0)
        assert rates[-1] >= 0.99

    def test_stress_projection_reproduces_space_member(self, small):
        mesh, layout, material, ops = small
        # sigma_11 = x^2 lies in P_{2,0}, sigma_12 = x y in Q_1
        field = lambda x, y: np.stack([np.stack([x * x, x * y]), np.stack([x * y, 1 + y])])  # noqa: E731
        beta = ops.solve_A(fem.stress_load_vector(mesh, layout, material, field))
        xi = np.array([-0.3, 0.6])
        eta = np.array([0.2, -0.9])
        e = 4
        vals = fem.eval_stress(layout, beta, [e], xi, eta)
        cx, cy = mesh.element_centers()
        x = cx[e] + 0.5 * mesh.hx * xi
        y = cy[e] + 0.5 * mesh.hy * eta
        np.testing.assert_allclose(vals[:, 0], [x * x, 1 + y, x * y], atol=1e-12)


class TestL2Error:
    def test_unit_field(self, small):
        mesh, layout, _, _ = small
        err = fem.l2_error(mesh, layout, np.zeros(layout.s), lambda x, y, t: np.ones((2,) + x.shape), 0.0)
        assert err == pytest.approx(math.sqrt(2), abs=1e-14)

    def test_against_adaptive_integral(self):
        mesh = fem.build_mesh(16)
        layout = fem.build_dof_layout(mesh)

        def inner(y):
            return adaptive_integrate(lambda x: (spatial_field(x, y) ** 2).sum(0), 0.0, 1.0, 1e-14)

        ref = math.sqrt(adaptive_integrate(lambda ys: np.array([inner(y) for y in ys]), 0.0, 1.0, 1e-13))
        err = fem.l2_error(mesh, layout, np.zeros(layout.s), lambda x, y, t: spatial_field(x, y), 0.0)
        assert err == pytest.approx(ref, abs=1e-8)
