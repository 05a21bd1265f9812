"""Structured triangulations of the unit square with tagged boundary parts.

The domain is (0, 1)^2. The left edge is clamped, the bottom edge is the
contact boundary, and the top and right edges carry surface tractions.
Every cell of the uniform grid is split along its bottom-left to top-right
diagonal, which makes meshes obtained by halving the mesh size nested.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
CONTACT = "contact"


@dataclass(frozen=True)
class Mesh:
    """Uniform P1 triangulation of the unit square.

    Attributes
    ----------
    n_per_side : int
        Number of segments per side; the mesh size is ``1 / n_per_side``.
    nodes : ndarray, shape (nn, 2)
        Vertex coordinates, row-major by (y, x): node ``iy * (n + 1) + ix``
        sits at ``(ix * h, iy * h)``.
    triangles : ndarray, shape (nt, 3)
        Vertex indices, counterclockwise.
    dirichlet_edges, neumann_edges, contact_edges : ndarray, shape (*, 2)
        Boundary edges as (a, b) node pairs, oriented with the domain on
        the left.
    """

    n_per_side: int
    nodes: np.ndarray
    triangles: np.ndarray
    dirichlet_edges: np.ndarray
    neumann_edges: np.ndarray
    contact_edges: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / self.n_per_side

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def node_id(self, ix: int, iy: int) -> int:
        return iy * (self.n_per_side + 1) + ix

    def dirichlet_nodes(self) -> np.ndarray:
        """Nodes on the clamped edge {0} x [0, 1], corners included."""
        n = self.n_per_side
        return np.arange(n + 1, dtype=np.int64) * (n + 1)

    def contact_nodes(self) -> np.ndarray:
        """Nodes on the contact edge [0, 1] x {0}, left to right."""
        return np.arange(self.n_per_side + 1, dtype=np.int64)


def build_uniform(n_per_side: int) -> Mesh:
    """Build the uniform triangulation with ``n_per_side`` segments per side.

    Parameters
    ----------
    n_per_side : int
        Positive number of segments along each side of the square.

    Returns
    -------
    Mesh
        ``(n + 1)^2`` nodes and ``2 n^2`` congruent right triangles of
        area ``h^2 / 2``.
    """
    n = int(n_per_side)
    if n < 1:
        raise ValueError(f"n_per_side must be >= 1, got {n_per_side}")
    h = 1.0 / n
    ix, iy = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    nodes = np.column_stack([(ix * h).ravel(), (iy * h).ravel()])

    cx, cy = np.meshgrid(np.arange(n), np.arange(n))
    cx = cx.ravel()
    cy = cy.ravel()
    bl = cy * (n + 1) + cx
    br = bl + 1
    tl = bl + (n + 1)
    tr = tl + 1
    lower = np.column_stack([bl, br, tr])
    upper = np.column_stack([bl, tr, tl])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    i = np.arange(n, dtype=np.int64)
    bottom = np.column_stack([i, i + 1])                        # +x, domain above
    right = np.column_stack([n + i * (n + 1), n + (i + 1) * (n + 1)])
    top = np.column_stack([n * (n + 1) + i + 1, n * (n + 1) + i])
    left = np.column_stack([(i + 1) * (n + 1), i * (n + 1)])
    return Mesh(
        n_per_side=n,
        nodes=nodes,
        triangles=triangles,
        dirichlet_edges=left,
        neumann_edges=np.vstack([top, right]),
        contact_edges=bottom,
    )


def prolongate(u_coarse: np.ndarray, coarse: Mesh, fine: Mesh) -> np.ndarray:
    """Evaluate a coarse P1 nodal field at the fine mesh nodes.

    The fine resolution must be an integer multiple of the coarse one, so
    each fine node lies inside exactly one coarse triangle and the transfer
    reproduces the coarse function exactly (linear interpolation is exact
    on piecewise-linear data).

    Parameters
    ----------
    u_coarse : ndarray, shape (nn_coarse,) or (nn_coarse, m)
        Nodal values on the coarse mesh.
    coarse, fine : Mesh
        Source and target triangulations.

    Returns
    -------
    ndarray
        Nodal values on the fine mesh with the same trailing shape.
    """
    nc, nf = coarse.n_per_side, fine.n_per_side
    if nf % nc != 0:
        raise ValueError(f"fine resolution {nf} is not a multiple of coarse {nc}")
    u = np.asarray(u_coarse, dtype=np.float64)
    if u.shape[0] != coarse.n_nodes:
        raise ValueError("nodal array does not match the coarse mesh")
    r = nf // nc

    ixf, iyf = np.meshgrid(np.arange(nf + 1), np.arange(nf + 1))
    ixf = ixf.ravel()
    iyf = iyf.ravel()
    cx = np.minimum(ixf // r, nc - 1)
    cy = np.minimum(iyf // r, nc - 1)
    lx = ixf - cx * r
    ly = iyf - cy * r
    xi = lx / r
    eta = ly / r

    blc = cy * (nc + 1) + cx
    brc = blc + 1
    tlc = blc + (nc + 1)
    trc = tlc + 1

    lower = ly <= lx
    w_bl = np.where(lower, 1.0 - xi, 1.0 - eta)
    w_br = np.where(lower, xi - eta, 0.0)
    w_tr = np.where(lower, eta, xi)
    w_tl = np.where(lower, 0.0, eta - xi)
    if u.ndim == 1:
        return w_bl * u[blc] + w_br * u[brc] + w_tr * u[trc] + w_tl * u[tlc]
    w = (w_bl[:, None], w_br[:, None], w_tr[:, None], w_tl[:, None])
    return w[0] * u[blc] + w[1] * u[brc] + w[2] * u[trc] + w[3] * u[tlc]


def edge_outward_normal(mesh: Mesh, edge: np.ndarray) -> np.ndarray:
    """Outward unit normal of a boundary edge oriented domain-left."""
    a, b = mesh.nodes[edge[0]], mesh.nodes[edge[1]]
    t = b - a
    t = t / np.linalg.norm(t)
    return np.array([t[1], -t[0]])
