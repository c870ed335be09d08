"""Uniform P1 / Q1 meshes and the algebraic operators of the group FEM.

The operators are stored edge-wise: every undirected edge ``(i, j)`` with
``i < j`` carries the consistent mass entry ``m_ij`` and the two discrete
gradient vectors ``c_ij`` and ``c_ji``.  Diagonal entries ``m_ii`` and
``c_ii`` are kept separately (``c_ii`` is nonzero only at nodes of a
non-periodic boundary).

Element matrices are integrated exactly in closed form and assembled with
``scipy.sparse``; no quadrature is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "BoundaryNode",
    "MeshTopology",
    "build_line_mesh",
    "build_quad_mesh",
    "edge_topology",
]

BOUNDARY_KINDS = ("wall", "inflow", "outflow")


@dataclass(frozen=True)
class BoundaryNode:
    """A node on a non-periodic boundary.

    ``normal`` is the outward unit normal; ``measure`` is the boundary
    measure attributed to the node (1 in one dimension).
    """

    node: int
    normal: tuple[float, ...]
    kind: str
    side: str
    measure: float = 1.0


@dataclass(frozen=True, eq=False)
class MeshTopology:
    dim: int
    coords: np.ndarray
    lumped_mass: np.ndarray
    mass_diag: np.ndarray
    c_diag: np.ndarray
    edges: np.ndarray
    edge_mass: np.ndarray
    c_ij: np.ndarray
    c_ji: np.ndarray
    periodic: bool = True
    shape: tuple[int, ...] = ()
    extent: tuple[tuple[float, float], ...] = ()
    boundary_nodes: tuple[BoundaryNode, ...] = ()
    elements: np.ndarray | None = None
    _dir_order: np.ndarray = field(init=False, repr=False)
    _dir_starts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.num_nodes
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        order = np.argsort(src, kind="stable")
        counts = np.bincount(src, minlength=n)
        if np.any(counts == 0):
            raise ValueError("every node needs at least one neighbour")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        object.__setattr__(self, "_dir_order", order)
        object.__setattr__(self, "_dir_starts", starts)
        for name in ("coords", "lumped_mass", "mass_diag", "c_diag", "edges",
                     "edge_mass", "c_ij", "c_ji"):
            getattr(self, name).setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return self.lumped_mass.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def i(self) -> np.ndarray:
        return self.edges[:, 0]

    @property
    def j(self) -> np.ndarray:
        return self.edges[:, 1]

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / n for (a, b), n in zip(self.extent, self.shape))

    def boundary_kind(self) -> np.ndarray:
        """Per-node classification: periodic-image, wall, inflow, outflow or interior."""
        kind = np.full(self.num_nodes, "interior", dtype=object)
        if self.periodic:
            # nodes whose image sits on the identified boundary
            for axis, (a, _) in enumerate(self.extent):
                kind[np.isclose(self.coords[:, axis], a)] = "periodic-image"
        for bn in self.boundary_nodes:
            kind[bn.node] = bn.kind
        return kind

    def scatter(self, at_i: np.ndarray, at_j: np.ndarray) -> np.ndarray:
        """Accumulate edge contributions to their end nodes.

        ``at_i`` is added to node ``i`` of each edge and ``at_j`` to node
        ``j``.  Arrays may carry trailing component axes.
        """
        n = self.num_nodes
        at_i = np.asarray(at_i, dtype=float)
        at_j = np.asarray(at_j, dtype=float)
        if at_i.ndim == 1:
            return (np.bincount(self.i, weights=at_i, minlength=n)
                    + np.bincount(self.j, weights=at_j, minlength=n))
        flat_i = at_i.reshape(at_i.shape[0], -1)
        flat_j = at_j.reshape(at_j.shape[0], -1)
        out = np.empty((n, flat_i.shape[1]))
        for k in range(flat_i.shape[1]):
            out[:, k] = (np.bincount(self.i, weights=flat_i[:, k], minlength=n)
                         + np.bincount(self.j, weights=flat_j[:, k], minlength=n))
        return out.reshape((n,) + at_i.shape[1:])

    def _reduce(self, ufunc, at_i, at_j):
        vals = np.concatenate([at_i, at_j])[self._dir_order]
        return ufunc.reduceat(vals, self._dir_starts, axis=0)

    def node_max(self, at_i: np.ndarray, at_j: np.ndarray) -> np.ndarray:
        """Maximum over all edges incident to each node."""
        return self._reduce(np.maximum, at_i, at_j)

    def node_min(self, at_i: np.ndarray, at_j: np.ndarray) -> np.ndarray:
        return self._reduce(np.minimum, at_i, at_j)

    def neighbour_max(self, values: np.ndarray) -> np.ndarray:
        """max_{j in N_i} values_j, the stencil includes i itself."""
        return np.maximum(values, self.node_max(values[self.j], values[self.i]))

    def neighbour_min(self, values: np.ndarray) -> np.ndarray:
        return np.minimum(values, self.node_min(values[self.j], values[self.i]))

    def gradient_row_sums(self) -> np.ndarray:
        """sum_j c_ij for every node, including the diagonal entry."""
        return self.c_diag + self.scatter(self.c_ij, self.c_ji)

    def consistent_mass_row_sums(self) -> np.ndarray:
        return self.mass_diag + self.scatter(self.edge_mass, self.edge_mass)


def edge_topology(mass: sp.spmatrix, grads: list[sp.spmatrix]):
    """Split assembled sparse operators into diagonal and edge arrays."""
    mass = sp.csr_matrix(mass)
    pattern = abs(mass)
    for g in grads:
        pattern = pattern + abs(sp.csr_matrix(g))
    upper = sp.triu(pattern, k=1).tocoo()
    i, j = upper.row.astype(np.int64), upper.col.astype(np.int64)
    order = np.lexsort((j, i))
    i, j = i[order], j[order]
    edge_mass = np.asarray(mass[i, j]).ravel()
    c_ij = np.stack([np.asarray(sp.csr_matrix(g)[i, j]).ravel() for g in grads], axis=1)
    c_ji = np.stack([np.asarray(sp.csr_matrix(g)[j, i]).ravel() for g in grads], axis=1)
    c_diag = np.stack([sp.csr_matrix(g).diagonal() for g in grads], axis=1)
    return np.stack([i, j], axis=1), edge_mass, c_ij, c_ji, mass.diagonal(), c_diag


def _assemble(n_nodes, elements, local_mass, local_grads):
    rows = np.repeat(elements, elements.shape[1], axis=1).ravel()
    cols = np.tile(elements, (1, elements.shape[1])).ravel()
    ne = elements.shape[0]
    mass = sp.coo_matrix((np.tile(local_mass.ravel(), ne), (rows, cols)),
                         shape=(n_nodes, n_nodes)).tocsr()
    grads = [sp.coo_matrix((np.tile(g.ravel(), ne), (rows, cols)),
                           shape=(n_nodes, n_nodes)).tocsr() for g in local_grads]
    return mass, grads


def _parse_line_boundary(boundary):
    if boundary == "periodic":
        return None
    if isinstance(boundary, str):
        if boundary == "inflow-outflow":
            return ("inflow", "outflow")
        left = right = boundary
    else:
        left, right = boundary
    for kind in (left, right):
        if kind not in BOUNDARY_KINDS:
            raise ValueError(f"unknown boundary kind {kind!r}")
    return left, right


def build_line_mesh(n_cells: int, interval=(0.0, 1.0), boundary="periodic") -> MeshTopology:
    """Uniform P1 mesh of ``interval`` with ``n_cells`` elements.

    ``boundary`` is ``"periodic"``, one of ``"wall"``, ``"inflow"``,
    ``"outflow"``, ``"inflow-outflow"``, or a ``(left, right)`` pair of
    kinds.  Periodic meshes identify the two end points.
    """
    if int(n_cells) != n_cells or n_cells < 2:
        raise ValueError("n_cells must be an integer >= 2")
    a, b = map(float, interval)
    if not b > a:
        raise ValueError("degenerate interval")
    n_cells = int(n_cells)
    h = (b - a) / n_cells
    sides = _parse_line_boundary(boundary)
    periodic = sides is None

    n_nodes = n_cells if periodic else n_cells + 1
    left = np.arange(n_cells)
    right = (left + 1) % n_nodes if periodic else left + 1
    elements = np.stack([left, right], axis=1)
    local_mass = h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    # int phi_k phi_l' over an element is -1/2 or +1/2 whatever h is
    local_cx = np.array([[-0.5, 0.5], [-0.5, 0.5]])
    mass, grads = _assemble(n_nodes, elements, local_mass, [local_cx])
    edges, m_ij, c_ij, c_ji, m_ii, c_ii = edge_topology(mass, grads)

    coords = (a + h * np.arange(n_nodes))[:, None]
    bnodes = ()
    if not periodic:
        bnodes = (BoundaryNode(0, (-1.0,), sides[0], "left"),
                  BoundaryNode(n_nodes - 1, (1.0,), sides[1], "right"))
    return MeshTopology(
        dim=1, coords=coords, lumped_mass=np.asarray(mass.sum(axis=1)).ravel(),
        mass_diag=m_ii, c_diag=c_ii, edges=edges, edge_mass=m_ij, c_ij=c_ij, c_ji=c_ji,
        periodic=periodic, shape=(n_cells,), extent=((a, b),), boundary_nodes=bnodes,
        elements=elements,
    )


def build_quad_mesh(nx: int, ny: int, rect=((0.0, 1.0), (0.0, 1.0)),
                    boundary="periodic") -> MeshTopology:
    """Uniform periodic Q1 mesh of the rectangle ``rect`` with nx*ny cells."""
    if boundary != "periodic":
        raise ValueError("quadrilateral meshes support periodic boundaries only")
    if nx < 2 or ny < 2 or int(nx) != nx or int(ny) != ny:
        raise ValueError("nx and ny must be integers >= 2")
    (xa, xb), (ya, yb) = rect
    if not (xb > xa and yb > ya):
        raise ValueError("rectangle must have positive extents")
    nx, ny = int(nx), int(ny)
    hx, hy = (xb - xa) / nx, (yb - ya) / ny

    def node(ix, iy):
        return (iy % ny) * nx + (ix % nx)

    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    ix, iy = ix.ravel(), iy.ravel()
    # local numbering: (0,0), (1,0), (0,1), (1,1)
    elements = np.stack([node(ix, iy), node(ix + 1, iy), node(ix, iy + 1),
                         node(ix + 1, iy + 1)], axis=1)

    mx = hx / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    my = hy / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    dx = np.array([[-0.5, 0.5], [-0.5, 0.5]])
    # local index k = a + 2 b with a the x-index, b the y-index
    local_mass = np.kron(my, mx)
    local_cx = np.kron(my, dx)
    local_cy = np.kron(dx, mx)
    n_nodes = nx * ny
    mass, grads = _assemble(n_nodes, elements, local_mass, [local_cx, local_cy])
    edges, m_ij, c_ij, c_ji, m_ii, c_ii = edge_topology(mass, grads)

    gx, gy = np.meshgrid(xa + hx * np.arange(nx), ya + hy * np.arange(ny), indexing="xy")
    coords = np.stack([gx.ravel(), gy.ravel()], axis=1)
    return MeshTopology(
        dim=2, coords=coords, lumped_mass=np.asarray(mass.sum(axis=1)).ravel(),
        mass_diag=m_ii, c_diag=c_ii, edges=edges, edge_mass=m_ij, c_ij=c_ij, c_ji=c_ji,
        periodic=True, shape=(nx, ny), extent=((xa, xb), (ya, yb)), elements=elements,
    )
