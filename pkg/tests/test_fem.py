"""Operators, loads, norms, and boundary traces of the P1 discretization."""
import numpy as np
import pytest
import scipy.linalg

from viscontact.fem import (
    CONTACT_NORMAL,
    LoadData,
    assemble_elasticity,
    assemble_load,
    assemble_load_full,
    assemble_operator_full,
    assemble_viscosity,
    build_dofmap,
    contact_quadrature,
    contact_trace,
    v_norm,
    v_norm_full,
)
from viscontact.mesh import build_uniform


def strain_integrals(mesh, u_full):
    """Exact integrals of eps(u):eps(u) and tr(eps(u))^2 for a P1 field.

    Independent of the assembly code: per triangle the affine gradient is
    recovered by solving the 2x2 vertex-difference system directly.
    """
    u = np.asarray(u_full).reshape(-1, 2)
    dev = 0.0
    trace2 = 0.0
    for tri in mesh.triangles:
        p = mesh.nodes[tri]
        E = np.array([p[1] - p[0], p[2] - p[0]])
        area = 0.5 * abs(np.linalg.det(E))
        G = np.zeros((2, 2))
        for c in range(2):
            rhs = np.array([u[tri[1], c] - u[tri[0], c], u[tri[2], c] - u[tri[0], c]])
            G[c] = np.linalg.solve(E, rhs)
        eps = 0.5 * (G + G.T)
        dev += area * np.sum(eps * eps)
        trace2 += area * np.trace(eps) ** 2
    return dev, trace2


@pytest.fixture(scope="module")
def operators(mesh4, params, dofmap4):
    A = assemble_viscosity(mesh4, params, dofmap4)
    B = assemble_elasticity(mesh4, params, dofmap4)
    return A, B


def test_operator_symmetry(operators):
    A, B = operators
    assert abs(A - A.T).max() <= 1e-12
    assert abs(B - B.T).max() <= 1e-12


def test_operator_positive_definite(operators):
    A, B = operators
    # Cholesky succeeds only for symmetric positive definite matrices
    scipy.linalg.cholesky(A.toarray())
    scipy.linalg.cholesky(B.toarray())


def test_operator_energy_identity(mesh4, params, dofmap4, operators, rng):
    # <A v, v> equals the integral of 2 phi eps:eps + xi tr(eps)^2, and the
    # same identity with (eta, lam) holds for the elasticity operator
    A, B = operators
    v = rng.standard_normal(dofmap4.n_free)
    full = dofmap4.scatter(v)
    dev, tr2 = strain_integrals(mesh4, full)
    np.testing.assert_allclose(v @ (A @ v), 2.0 * params.phi * dev + params.xi * tr2,
                               rtol=1e-12)
    np.testing.assert_allclose(v @ (B @ v), 2.0 * params.eta * dev + params.lam * tr2,
                               rtol=1e-12)


def test_operator_kernel_is_rigid_motion_free():
    # on the unreduced matrix, translations produce zero energy and the
    # clamped reduction removes them
    mesh = build_uniform(3)
    m = assemble_operator_full(mesh, 1.0, 1.0)
    shift = np.zeros(2 * mesh.n_nodes)
    shift[0::2] = 1.0
    np.testing.assert_allclose(m @ shift, 0.0, atol=1e-12)
    rot = np.empty(2 * mesh.n_nodes)
    rot[0::2] = -mesh.nodes[:, 1]
    rot[1::2] = mesh.nodes[:, 0]
    np.testing.assert_allclose(m @ rot, 0.0, atol=1e-12)


def test_dofmap_roundtrip(mesh4, dofmap4, rng):
    clamped = mesh4.dirichlet_nodes()
    assert dofmap4.n_free == 2 * mesh4.n_nodes - 2 * clamped.size
    v = rng.standard_normal(dofmap4.n_free)
    full = dofmap4.scatter(v)
    np.testing.assert_array_equal(dofmap4.reduce_vector(full), v)
    for node in clamped:
        assert full[2 * node] == 0.0
        assert full[2 * node + 1] == 0.0
    assert np.all(dofmap4.full_to_free[dofmap4.free_dofs] == np.arange(dofmap4.n_free))


def test_constant_load_partition_of_unity(mesh4, dofmap4):
    # hats sum to one, so a constant body force integrates to f0 |domain| and
    # a constant traction to fN |Neumann boundary| (top plus right, length 2)
    loads = LoadData.constant([-2.5, -0.5], [0.3, -0.7])
    F = assemble_load_full(mesh4, loads, 0.0)
    np.testing.assert_allclose(np.sum(F[0::2]), -2.5 * 1.0 + 0.3 * 2.0, atol=1e-12)
    np.testing.assert_allclose(np.sum(F[1::2]), -0.5 * 1.0 - 0.7 * 2.0, atol=1e-12)
    reduced = assemble_load(mesh4, loads, 0.0, dofmap4)
    np.testing.assert_array_equal(reduced, F[dofmap4.free_dofs])


def test_linear_body_force_is_integrated_exactly():
    mesh = build_uniform(5)

    def f0(x, t):
        return np.column_stack([x[:, 0], 2.0 * x[:, 1]])

    def fN(x, t):
        return np.zeros((x.shape[0], 2))

    F = assemble_load_full(mesh, LoadData(f0=f0, fN=fN), 0.0)
    # sums over hats reproduce the exact integrals of x and 2 y on the square
    np.testing.assert_allclose(np.sum(F[0::2]), 0.5, atol=1e-13)
    np.testing.assert_allclose(np.sum(F[1::2]), 1.0, atol=1e-13)


def test_load_time_dependence(mesh4):
    def f0(x, t):
        return np.full((x.shape[0], 2), t)

    def fN(x, t):
        return np.zeros((x.shape[0], 2))

    loads = LoadData(f0=f0, fN=fN)
    F1 = assemble_load_full(mesh4, loads, 1.0)
    Fhalf = assemble_load_full(mesh4, loads, 0.5)
    np.testing.assert_allclose(Fhalf, 0.5 * F1, atol=1e-14)


def test_v_norm_analytic_values():
    mesh = build_uniform(4)
    full = np.zeros(2 * mesh.n_nodes)
    # u = (x, 0): eps = diag(1, 0), integral of eps:eps over the unit square is 1
    full[0::2] = mesh.nodes[:, 0]
    np.testing.assert_allclose(v_norm_full(mesh, full), 1.0, rtol=1e-13)
    # u = (y, 0): eps has off-diagonal 1/2, eps:eps = 1/2
    full[0::2] = mesh.nodes[:, 1]
    np.testing.assert_allclose(v_norm_full(mesh, full), np.sqrt(0.5), rtol=1e-13)


def test_v_norm_matches_strain_integral(mesh4, dofmap4, rng):
    v = rng.standard_normal(dofmap4.n_free)
    dev, _ = strain_integrals(mesh4, dofmap4.scatter(v))
    np.testing.assert_allclose(v_norm(mesh4, dofmap4, v) ** 2, dev, rtol=1e-12)


def test_contact_quadrature_layout(mesh4, dofmap4, quad4):
    n = mesh4.n_per_side
    assert quad4.n_points == 3 * n
    # weights reproduce edge lengths and the whole boundary measure
    np.testing.assert_allclose(np.sum(quad4.w), 1.0, rtol=1e-14)
    np.testing.assert_allclose(np.sum(quad4.w.reshape(n, 3), axis=1), mesh4.h, rtol=1e-14)
    np.testing.assert_allclose(quad4.shape_a + quad4.shape_b, 1.0, atol=1e-15)
    assert np.all(np.diff(quad4.x) > 0)
    assert quad4.x[0] > 0.0 and quad4.x[-1] < 1.0
    # the corner shared with the clamped edge is constrained, everything else free
    assert quad4.dofx_a[0] == -1 and quad4.dofy_a[0] == -1
    assert np.all(quad4.dofx_b >= 0) and np.all(quad4.dofy_b >= 0)
    # the last point's right node is the bottom-right corner, x component 2 n
    assert dofmap4.free_dofs[quad4.dofx_b[-1]] == 2 * n


def test_contact_quadrature_integrates_quartics(mesh4, quad4):
    # three Gauss points per edge are exact through degree five
    for p in range(5):
        np.testing.assert_allclose(np.sum(quad4.w * quad4.x**p), 1.0 / (p + 1),
                                   rtol=1e-13)


def test_contact_trace_of_linear_field(mesh4, dofmap4, quad4):
    # u = (0.4 x, -0.25 x) vanishes on the clamped edge, so its reduction
    # represents it exactly; on the bottom edge u_nu = 0.25 x, u_tau = (0.4 x, 0)
    full = np.empty(2 * mesh4.n_nodes)
    full[0::2] = 0.4 * mesh4.nodes[:, 0]
    full[1::2] = -0.25 * mesh4.nodes[:, 0]
    tr = contact_trace(quad4, dofmap4.reduce_vector(full))
    np.testing.assert_allclose(tr.u_nu, 0.25 * quad4.x, atol=1e-14)
    np.testing.assert_allclose(tr.u_tau[:, 0], 0.4 * quad4.x, atol=1e-14)
    np.testing.assert_array_equal(tr.u_tau[:, 1], 0.0)
    np.testing.assert_array_equal(tr.x, quad4.x)
    np.testing.assert_array_equal(tr.w, quad4.w)


def test_contact_normal_direction():
    np.testing.assert_array_equal(CONTACT_NORMAL, [0.0, -1.0])


def test_material_params_validation():
    from viscontact.fem import MaterialParams

    with pytest.raises(ValueError):
        MaterialParams(phi=0.0, xi=2.0, eta=4.0, lam=4.0)
    with pytest.raises(ValueError):
        MaterialParams(phi=2.0, xi=2.0, eta=4.0, lam=-1.0)
