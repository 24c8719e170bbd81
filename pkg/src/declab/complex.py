"""Simplicial n-complexes in R^n: construction, orientation, incidence, boundary.

Storage convention: every simplex is keyed by its sorted vertex tuple, with a
separate +-1 orientation sign.  Top-dimensional cells get the sign that makes
their ambient signed volume positive; lower simplices keep sign +1 (the sorted
order itself is the stored orientation).  Relative orientations then reduce to
an alternating-sign parity check, and boundary-of-boundary vanishes in exact
integer arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import geometry
from .errors import DegenerateSimplexError, MeshError, NonConformingError

WELL_CENTERED_TOL = 1e-12
DEGENERATE_REL_TOL = 1e-12


def _row_lookup(table: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Indices of query rows inside a lexsorted unique row table; -1 if absent."""
    if table.size == 0:
        return -np.ones(len(queries), dtype=np.int64)
    tv = np.ascontiguousarray(table).view([("", table.dtype)] * table.shape[1]).ravel()
    qv = np.ascontiguousarray(queries).view([("", queries.dtype)] * queries.shape[1]).ravel()
    pos = np.searchsorted(tv, qv)
    pos = np.clip(pos, 0, len(tv) - 1)
    hit = tv[pos] == qv
    return np.where(hit, pos, -1).astype(np.int64)


@dataclass
class ShapeReport:
    h: float
    gamma_min: float
    c_reg: float
    star_bound: int
    well_centered: str  # "strict" | "weak" | "violated"
    worst_simplex: tuple | None = None  # (dim, index) attaining the classification


@dataclass
class SubComplex:
    """Index view of a subcomplex: for each dimension, indices into the parent."""
    parent: "SimplicialComplex"
    indices: dict[int, np.ndarray]

    def counts(self) -> dict[int, int]:
        return {k: len(v) for k, v in self.indices.items()}


class SimplicialComplex:
    def __init__(self, dim: int, vertices: np.ndarray, simplices: list[np.ndarray],
                 orientation: list[np.ndarray], faces: list[np.ndarray | None]):
        self.dim = dim
        self.vertices = vertices
        self.simplices = simplices      # simplices[k]: (N_k, k+1) sorted rows, lexsorted
        self.orientation = orientation  # orientation[k]: (N_k,) in {-1, +1}
        self.faces = faces              # faces[k][s, i] = index of the (k-1)-face
        #                                 obtained by dropping vertex position i
        self._boundary: dict[int, sp.csr_matrix] = {}
        self._cofaces: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self.boundary_labels: dict[tuple, str] = {}
        self.family: dict | None = None  # set by generators for refinement dispatch
        for arr in self.simplices:
            arr.setflags(write=False)
        self.vertices.setflags(write=False)

    # -- basic queries ------------------------------------------------------

    def num(self, k: int) -> int:
        return len(self.simplices[k])

    def coords_of(self, k: int, idx=None) -> np.ndarray:
        """Vertex coordinates of k-simplices, shape (m, k+1, n)."""
        rows = self.simplices[k] if idx is None else self.simplices[k][idx]
        return self.vertices[rows]

    def index_of(self, k: int, rows) -> np.ndarray:
        rows = np.sort(np.atleast_2d(np.asarray(rows, dtype=np.int64)), axis=1)
        return _row_lookup(self.simplices[k], rows)

    def cofaces(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """CSR-style (indptr, coface_indices) of (k+1)-cofaces per k-simplex."""
        if k not in self._cofaces:
            if k >= self.dim:
                raise ValueError("no cofaces above top dimension")
            f = self.faces[k + 1]  # (N_{k+1}, k+2)
            src = f.ravel()
            cof = np.repeat(np.arange(len(f), dtype=np.int64), f.shape[1])
            order = np.argsort(src, kind="stable")
            src, cof = src[order], cof[order]
            indptr = np.searchsorted(src, np.arange(self.num(k) + 1))
            self._cofaces[k] = (indptr, cof)
        return self._cofaces[k]

    # -- boundary operator --------------------------------------------------

    def boundary_matrix(self, k: int) -> sp.csr_matrix:
        """Signed incidence C_k -> C_{k-1}: entry (face, cell) in {-1, 0, +1}."""
        if not 1 <= k <= self.dim:
            raise ValueError(f"boundary_matrix defined for 1 <= k <= {self.dim}, got {k}")
        if k not in self._boundary:
            nk, kp1 = self.simplices[k].shape
            cells = np.repeat(np.arange(nk, dtype=np.int64), kp1)
            fidx = self.faces[k].ravel()
            alt = np.tile(np.array([(-1) ** i for i in range(kp1)], dtype=np.int64), nk)
            vals = alt * np.repeat(self.orientation[k], kp1) * self.orientation[k - 1][fidx]
            mat = sp.coo_matrix((vals, (fidx, cells)),
                                shape=(self.num(k - 1), nk), dtype=np.int64)
            self._boundary[k] = mat.tocsr()
        return self._boundary[k]

    def boundary_chain(self, k: int, index: int) -> list[tuple[int, int]]:
        """Signed (k-1)-faces of one stored oriented k-simplex."""
        if not 0 <= index < self.num(k):
            raise MeshError(f"unknown {k}-simplex index {index}")
        if k == 0:
            return []
        s = int(self.orientation[k][index])
        out = []
        for i in range(k + 1):
            f = int(self.faces[k][index, i])
            out.append((f, s * (-1) ** i * int(self.orientation[k - 1][f])))
        return out

    # -- stars ---------------------------------------------------------------

    def closed_star(self, k: int, index: int) -> SubComplex:
        """Smallest subcomplex containing all cofaces of the given simplex."""
        if not 0 <= index < self.num(k):
            raise MeshError(f"unknown {k}-simplex index {index}")
        up: dict[int, set[int]] = {k: {index}}
        for j in range(k, self.dim):
            indptr, cof = self.cofaces(j)
            nxt: set[int] = set()
            for s in up[j]:
                nxt.update(cof[indptr[s]:indptr[s + 1]].tolist())
            up[j + 1] = nxt
        closure: dict[int, set[int]] = {j: set(v) for j, v in up.items()}
        for j in range(self.dim, 0, -1):
            cur = closure.get(j, set())
            if not cur:
                continue
            closure.setdefault(j - 1, set())
            closure[j - 1].update(self.faces[j][sorted(cur)].ravel().tolist())
        return SubComplex(self, {j: np.array(sorted(v), dtype=np.int64)
                                 for j, v in closure.items() if v})

    # -- boundary of the underlying polytope ----------------------------------

    def boundary_face_indices(self) -> np.ndarray:
        """(n-1)-simplices with exactly one top coface."""
        indptr, _ = self.cofaces(self.dim - 1)
        counts = np.diff(indptr)
        return np.flatnonzero(counts == 1).astype(np.int64)

    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.num(0), dtype=bool)
        bf = self.boundary_face_indices()
        if len(bf):
            mask[np.unique(self.simplices[self.dim - 1][bf])] = True
        return mask

    def interior_vertex_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_vertex_mask())

    # -- audits ----------------------------------------------------------------

    def shape_report(self) -> ShapeReport:
        n = self.dim
        h = 0.0
        gamma_min = np.inf
        c_reg = 0.0
        status = 0  # 0 strict, 1 weak, 2 violated
        worst = None
        for k in range(1, n + 1):
            coords = self.coords_of(k)
            diam = geometry.diameter(coords)
            rho = geometry.inradius(coords)
            h = max(h, float(diam.max()))
            gamma_min = min(gamma_min, float(rho.min()))
            c_reg = max(c_reg, float((diam / rho).max()))
            if k >= 2:
                cc = geometry.circumcenter(coords, check=False)
                lam = geometry.barycentric_coordinates(cc, coords)
                lmin = lam.min(axis=1)
                if (lmin < -WELL_CENTERED_TOL).any():
                    status = 2
                    worst = (k, int(np.argmin(lmin)))
                elif (lmin <= WELL_CENTERED_TOL).any() and status < 2:
                    if status < 1:
                        worst = (k, int(np.argmin(lmin)))
                    status = max(status, 1)
        # max top-cell count over closed stars; vertices attain the maximum
        # over base simplices of every dimension
        star_bound = int(np.bincount(self.simplices[n].ravel(),
                                     minlength=self.num(0)).max())
        return ShapeReport(
            h=h, gamma_min=gamma_min, c_reg=c_reg, star_bound=star_bound,
            well_centered=("strict", "weak", "violated")[status],
            worst_simplex=worst,
        )


def build_complex(dim: int, vertex_coords, top_cells, validate: bool = True) -> SimplicialComplex:
    """Assemble the full face lattice from top-dimensional cells.

    Cells are reoriented so each carries positive ambient signed volume.
    ``validate`` runs the conformity audit (degenerate cells are always
    rejected): duplicate vertex coordinates and vertices lying inside a
    non-incident cell both raise ``NonConformingError``.
    """
    vertices = np.ascontiguousarray(np.atleast_2d(np.asarray(vertex_coords, dtype=float)))
    cells = np.atleast_2d(np.asarray(top_cells, dtype=np.int64))
    if vertices.shape[1] != dim:
        raise MeshError(f"vertex coordinates must be {dim}-dimensional")
    if cells.shape[1] != dim + 1:
        raise MeshError(f"top cells need {dim + 1} vertices")
    if cells.size and (cells.min() < 0 or cells.max() >= len(vertices)):
        raise MeshError("cell vertex index out of range")

    cells = np.sort(cells, axis=1)
    if len(np.unique(cells, axis=0)) != len(cells):
        seen: dict[tuple, int] = {}
        for i, row in enumerate(map(tuple, cells)):
            if row in seen:
                raise NonConformingError(f"duplicate cell {row} at positions {seen[row]} and {i}")
            seen[row] = i

    svol = geometry.signed_volume(vertices[cells])
    scale = geometry.diameter(vertices[cells]) ** dim
    degenerate = np.abs(svol) <= DEGENERATE_REL_TOL * np.maximum(scale, 1e-300)
    if degenerate.any():
        i = int(np.argmax(degenerate))
        raise DegenerateSimplexError(
            f"degenerate cell {tuple(cells[i])}: signed volume {svol[i]:.3e}")

    simplices: list[np.ndarray] = [None] * (dim + 1)  # type: ignore[list-item]
    faces: list[np.ndarray | None] = [None] * (dim + 1)
    order = np.lexsort(cells.T[::-1])
    cells = cells[order]
    svol = svol[order]
    simplices[dim] = cells
    for k in range(dim, 0, -1):
        rows = simplices[k]
        kp1 = k + 1
        sub = np.empty((len(rows) * kp1, k), dtype=np.int64)
        for i in range(kp1):
            keep = [j for j in range(kp1) if j != i]
            sub[i::kp1] = rows[:, keep]
        uniq, inv = np.unique(sub, axis=0, return_inverse=True)
        simplices[k - 1] = uniq
        faces[k] = inv.reshape(len(rows), kp1)
    if simplices[0] is None:
        simplices[0] = np.arange(len(vertices), dtype=np.int64)[:, None]
    elif len(simplices[0]) != len(vertices):
        raise MeshError("isolated vertices: every vertex must belong to a cell")

    orientation = [np.ones(len(simplices[k]), dtype=np.int64) for k in range(dim + 1)]
    orientation[dim] = np.where(svol > 0, 1, -1).astype(np.int64)

    cx = SimplicialComplex(dim, vertices, simplices, orientation, faces)
    if validate:
        _audit_conformity(cx)
    return cx


def _audit_conformity(cx: SimplicialComplex) -> None:
    from scipy.spatial import cKDTree

    verts = cx.vertices
    cells = cx.simplices[cx.dim]
    coords = verts[cells]
    h = geometry.diameter(coords)
    tol = 1e-9 * max(float(h.max()), 1e-300)

    tree = cKDTree(verts)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    if len(pairs):
        i, j = pairs[0]
        raise NonConformingError(
            f"vertices {i} and {j} coincide within tolerance; cells meeting there "
            "cannot intersect in a common face")

    centroid = coords.mean(axis=1)
    radius = np.sqrt(((coords - centroid[:, None, :]) ** 2).sum(-1)).max(axis=1)
    cand = tree.query_ball_point(centroid, radius + tol)
    cell_ids = []
    vert_ids = []
    for c, lst in enumerate(cand):
        for v in lst:
            if v not in cells[c]:
                cell_ids.append(c)
                vert_ids.append(v)
    if cell_ids:
        lam = geometry.barycentric_coordinates(verts[vert_ids], coords[cell_ids])
        inside = lam.min(axis=1) > -1e-9
        if inside.any():
            i = int(np.argmax(inside))
            raise NonConformingError(
                f"vertex {vert_ids[i]} lies inside cell {tuple(cells[cell_ids[i]])}: "
                "non-conforming intersection")
