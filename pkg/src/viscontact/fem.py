"""P1 finite element core: operators, loads, norms, contact boundary traces.

Both material operators are isotropic tensor maps tau -> 2 a tau + b tr(tau) I,
so the viscosity and elasticity matrices come from one assembly routine with
shear and bulk coefficients plugged in. Dirichlet conditions are imposed by
eliminating the clamped degrees of freedom; all solver-facing vectors and
matrices live on the free ones. Nodal degrees of freedom are interleaved,
``2 * node`` for the x component and ``2 * node + 1`` for the y component.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh

# 3-point Gauss-Legendre rule on [-1, 1], exact through degree 5.
GAUSS3_POINTS = np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
GAUSS3_WEIGHTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])

# Outward unit normal of the contact boundary [0, 1] x {0}.
CONTACT_NORMAL = np.array([0.0, -1.0])


@dataclass(frozen=True)
class MaterialParams:
    """Kelvin-Voigt material constants and the final time.

    ``phi`` and ``xi`` are the shear and bulk viscosities entering the
    operator A(tau) = 2 phi tau + xi tr(tau) I; ``eta`` and ``lam`` play the
    same roles for the elasticity operator B.
    """

    phi: float
    xi: float
    eta: float
    lam: float
    T: float = 1.0

    def __post_init__(self) -> None:
        for name in ("phi", "xi", "eta", "lam", "T"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"material parameter {name} must be positive")


@dataclass(frozen=True)
class DofMap:
    """Free/constrained splitting of the interleaved nodal DOFs."""

    n_nodes: int
    free_dofs: np.ndarray        # (n_free,) indices into the full vector
    full_to_free: np.ndarray     # (2 * n_nodes,), -1 on constrained entries

    @property
    def n_free(self) -> int:
        return self.free_dofs.shape[0]

    @property
    def n_full(self) -> int:
        return 2 * self.n_nodes

    def reduce_matrix(self, m_full: sp.spmatrix) -> sp.csr_matrix:
        m = m_full.tocsr()
        return m[self.free_dofs][:, self.free_dofs].tocsr()

    def reduce_vector(self, v_full: np.ndarray) -> np.ndarray:
        return np.asarray(v_full)[self.free_dofs].copy()

    def scatter(self, v_free: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_full)
        out[self.free_dofs] = v_free
        return out


def build_dofmap(mesh: Mesh) -> DofMap:
    """Constrain both components of every node on the clamped edge."""
    constrained = np.zeros(2 * mesh.n_nodes, dtype=bool)
    for node in mesh.dirichlet_nodes():
        constrained[2 * node] = True
        constrained[2 * node + 1] = True
    free = np.nonzero(~constrained)[0].astype(np.int64)
    full_to_free = np.full(2 * mesh.n_nodes, -1, dtype=np.int64)
    full_to_free[free] = np.arange(free.shape[0])
    return DofMap(n_nodes=mesh.n_nodes, free_dofs=free, full_to_free=full_to_free)


def _triangle_geometry(mesh: Mesh):
    """Constant P1 gradient data per triangle: coefficients and areas."""
    p = mesh.nodes[mesh.triangles]          # (nt, 3, 2)
    x = p[:, :, 0]
    y = p[:, :, 1]
    # grad phi_i = (b_i, c_i) / (2 area), cyclic differences
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
                  - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    return b, c, area


def _strain_displacement(mesh: Mesh):
    """Voigt strain matrices B with rows (e_xx, e_yy, gamma_xy), shape (nt, 3, 6)."""
    b, c, area = _triangle_geometry(mesh)
    nt = b.shape[0]
    B = np.zeros((nt, 3, 6))
    inv2a = 1.0 / (2.0 * area)
    for i in range(3):
        B[:, 0, 2 * i] = b[:, i] * inv2a
        B[:, 1, 2 * i + 1] = c[:, i] * inv2a
        B[:, 2, 2 * i] = c[:, i] * inv2a
        B[:, 2, 2 * i + 1] = b[:, i] * inv2a
    return B, area


def assemble_operator_full(mesh: Mesh, mu: float, lam: float) -> sp.csr_matrix:
    """Assemble the unreduced matrix of tau -> 2 mu tau + lam tr(tau) I.

    One-point quadrature per triangle, exact because P1 strains are constant.

    Returns
    -------
    scipy.sparse.csr_matrix, shape (2 nn, 2 nn)
    """
    B, area = _strain_displacement(mesh)
    D = np.array([
        [2.0 * mu + lam, lam, 0.0],
        [lam, 2.0 * mu + lam, 0.0],
        [0.0, 0.0, mu],
    ])
    ke = np.einsum("tki,kl,tlj,t->tij", B, D, B, area, optimize=True)

    tri = mesh.triangles
    dofs = np.empty((tri.shape[0], 6), dtype=np.int64)
    dofs[:, 0::2] = 2 * tri
    dofs[:, 1::2] = 2 * tri + 1
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    n = 2 * mesh.n_nodes
    m = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    m.sum_duplicates()
    return m


def assemble_viscosity(mesh: Mesh, params: MaterialParams, dofmap: DofMap) -> sp.csr_matrix:
    """Viscosity matrix on the free DOFs, coefficients (phi, xi)."""
    return dofmap.reduce_matrix(assemble_operator_full(mesh, params.phi, params.xi))


def assemble_elasticity(mesh: Mesh, params: MaterialParams, dofmap: DofMap) -> sp.csr_matrix:
    """Elasticity matrix on the free DOFs, coefficients (eta, lam)."""
    return dofmap.reduce_matrix(assemble_operator_full(mesh, params.eta, params.lam))


@dataclass(frozen=True)
class LoadData:
    """Body force and surface traction densities.

    ``f0`` and ``fN`` map an array of points (m, 2) and a time to values
    (m, 2). ``time_constant`` lets the stepper assemble the load vector once
    and reuse it at every time node.
    """

    f0: Callable[[np.ndarray, float], np.ndarray]
    fN: Callable[[np.ndarray, float], np.ndarray]
    time_constant: bool = False

    @staticmethod
    def constant(f0_vec, fN_vec) -> "LoadData":
        f0_arr = np.asarray(f0_vec, dtype=np.float64)
        fN_arr = np.asarray(fN_vec, dtype=np.float64)

        def f0(x: np.ndarray, t: float) -> np.ndarray:
            return np.broadcast_to(f0_arr, (x.shape[0], 2))

        def fN(x: np.ndarray, t: float) -> np.ndarray:
            return np.broadcast_to(fN_arr, (x.shape[0], 2))

        return LoadData(f0=f0, fN=fN, time_constant=True)


def assemble_load_full(mesh: Mesh, loads: LoadData, t: float) -> np.ndarray:
    """Unreduced load vector <f(t), phi_i> over all DOFs.

    Body force by the 3-point edge-midpoint rule per triangle (exact through
    quadratics, so exact for constant and linear f0 against P1 hats);
    traction by 3-point Gauss-Legendre per Neumann edge.
    """
    F = np.zeros(2 * mesh.n_nodes)
    tri = mesh.triangles
    p = mesh.nodes[tri]                                  # (nt, 3, 2)
    _, _, area = _triangle_geometry(mesh)
    # midpoint of edge opposite vertex i; hat values there: 0 at i, 1/2 at others
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        mid = 0.5 * (p[:, j] + p[:, k])
        val = loads.f0(mid, t) * (area[:, None] / 3.0)
        for v in (j, k):
            np.add.at(F, 2 * tri[:, v], 0.5 * val[:, 0])
            np.add.at(F, 2 * tri[:, v] + 1, 0.5 * val[:, 1])

    for a, b in mesh.neumann_edges:
        pa, pb = mesh.nodes[a], mesh.nodes[b]
        length = np.linalg.norm(pb - pa)
        s = 0.5 * (GAUSS3_POINTS + 1.0)                  # in [0, 1] along the edge
        pts = pa[None, :] + s[:, None] * (pb - pa)[None, :]
        w = 0.5 * length * GAUSS3_WEIGHTS
        val = loads.fN(pts, t)
        F[2 * a] += np.sum(w * (1.0 - s) * val[:, 0])
        F[2 * a + 1] += np.sum(w * (1.0 - s) * val[:, 1])
        F[2 * b] += np.sum(w * s * val[:, 0])
        F[2 * b + 1] += np.sum(w * s * val[:, 1])
    return F


def assemble_load(mesh: Mesh, loads: LoadData, t: float, dofmap: DofMap) -> np.ndarray:
    return dofmap.reduce_vector(assemble_load_full(mesh, loads, t))


def v_norm_full(mesh: Mesh, u_full: np.ndarray) -> float:
    """Energy seminorm sqrt(integral of eps(u):eps(u)) of a full nodal field."""
    B, area = _strain_displacement(mesh)
    tri = mesh.triangles
    ue = np.empty((tri.shape[0], 6))
    ue[:, 0::2] = np.asarray(u_full)[2 * tri]
    ue[:, 1::2] = np.asarray(u_full)[2 * tri + 1]
    eps = np.einsum("tij,tj->ti", B, ue)                 # (e_xx, e_yy, gamma)
    dens = eps[:, 0] ** 2 + eps[:, 1] ** 2 + 0.5 * eps[:, 2] ** 2
    return float(np.sqrt(np.sum(area * dens)))


def v_norm(mesh: Mesh, dofmap: DofMap, u_free: np.ndarray) -> float:
    """Energy seminorm of a free-DOF vector, clamped DOFs implicitly zero."""
    return v_norm_full(mesh, dofmap.scatter(u_free))


@dataclass(frozen=True)
class ContactQuadrature:
    """Gauss points on the contact edges with free-DOF indexing.

    Arrays are flat over all quadrature points, three per edge, left to
    right. ``dofx_a`` etc. index the free vector, -1 where the node is
    clamped (only the corner shared with the Dirichlet edge).
    """

    x: np.ndarray          # (nq,) first coordinate of the point
    w: np.ndarray          # (nq,) weight, edge length times Gauss weight
    shape_a: np.ndarray    # (nq,) hat value of the left node
    shape_b: np.ndarray    # (nq,) hat value of the right node
    dofx_a: np.ndarray
    dofy_a: np.ndarray
    dofx_b: np.ndarray
    dofy_b: np.ndarray

    @property
    def n_points(self) -> int:
        return self.x.shape[0]


def contact_quadrature(mesh: Mesh, dofmap: DofMap) -> ContactQuadrature:
    """Build the 3-point Gauss rule on every contact edge."""
    edges = mesh.contact_edges
    ne = edges.shape[0]
    s = 0.5 * (GAUSS3_POINTS + 1.0)
    h = mesh.h
    xa = mesh.nodes[edges[:, 0], 0]
    x = (xa[:, None] + s[None, :] * h).ravel()
    w = np.tile(0.5 * h * GAUSS3_WEIGHTS, ne)
    shape_b = np.tile(s, ne)
    shape_a = 1.0 - shape_b
    f2f = dofmap.full_to_free
    a = np.repeat(edges[:, 0], 3)
    b = np.repeat(edges[:, 1], 3)
    return ContactQuadrature(
        x=x, w=w, shape_a=shape_a, shape_b=shape_b,
        dofx_a=f2f[2 * a], dofy_a=f2f[2 * a + 1],
        dofx_b=f2f[2 * b], dofy_b=f2f[2 * b + 1],
    )


@dataclass(frozen=True)
class ContactSamples:
    """Trace values of a field at the contact quadrature points."""

    x: np.ndarray          # (nq,)
    w: np.ndarray          # (nq,)
    u_nu: np.ndarray       # (nq,) normal component, positive toward the obstacle
    u_tau: np.ndarray      # (nq, 2) tangential part

    @property
    def n_points(self) -> int:
        return self.x.shape[0]


def _gather(u_free: np.ndarray, dof: np.ndarray) -> np.ndarray:
    vals = np.where(dof >= 0, u_free[np.where(dof >= 0, dof, 0)], 0.0)
    return vals


def contact_trace(quad: ContactQuadrature, u_free: np.ndarray) -> ContactSamples:
    """Sample a free-DOF field on the contact boundary.

    The normal is (0, -1), so u_nu = -u_y (penetration is positive) and the
    tangential part is (u_x, 0).
    """
    u = np.asarray(u_free, dtype=np.float64)
    ux = quad.shape_a * _gather(u, quad.dofx_a) + quad.shape_b * _gather(u, quad.dofx_b)
    uy = quad.shape_a * _gather(u, quad.dofy_a) + quad.shape_b * _gather(u, quad.dofy_b)
    u_nu = -uy
    u_tau = np.column_stack([ux, np.zeros_like(ux)])
    return ContactSamples(x=quad.x, w=quad.w, u_nu=u_nu, u_tau=u_tau)
