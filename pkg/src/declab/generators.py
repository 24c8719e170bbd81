"""Mesh family generators and refiners.

Families:

* ``pentagon_wheel(n_gon)`` -- wheel over a regular n-gon, hub at the origin,
  one rim vertex on the +x axis, unit spokes.  Strictly well-centered; the
  initial mesh size is the rim edge length ``(2 - 2 cos(2 pi/n))**0.5``.
* ``corner(alpha)`` -- the same wheel construction restricted to four sectors
  of angle ``alpha/4`` each, leaving a re-entrant corner of interior angle
  ``alpha`` at the hub (which then lies on the boundary).
* ``square(pattern)`` -- unit square, three structured right-triangle
  patterns (1: uniform diagonals, 2: alternating diagonals on a 2x2 base,
  3: criss-cross with cell centers).  Weakly well-centered: circumcenters sit
  on the hypotenuses.
* ``cube_kuhn`` -- unit cube on a 2^(level+1) grid, each cell split into six
  tetrahedra around its main diagonal (self-similar under grid halving).
  Weakly well-centered.
* ``from_file(path)`` -- arbitrary conforming meshes via the decmesh format.

2D refinement is medial subdivision (each triangle into four by its edge
midpoints; h halves exactly).  The cube family refines by halving the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import meshio
from .complex import SimplicialComplex, build_complex
from .errors import MeshError

DEFAULT_ALPHA = 8 * math.pi / 5


@dataclass(frozen=True)
class FamilySpec:
    family: str                      # pentagon_wheel | square | corner | cube_kuhn | from_file
    level: int = 0
    n_gon: int = 5
    pattern: int = 1
    alpha: float = DEFAULT_ALPHA
    path: str | None = None

    def __post_init__(self):
        if self.level < 0:
            raise MeshError("level must be >= 0")
        if self.family == "pentagon_wheel" and self.n_gon < 5:
            raise MeshError("wheel needs n_gon >= 5 to stay strictly well-centered")
        if self.family == "square" and self.pattern not in (1, 2, 3):
            raise MeshError("square pattern must be 1, 2 or 3")
        if self.family == "corner" and not (math.pi < self.alpha < 2 * math.pi):
            raise MeshError("corner angle must lie in (pi, 2*pi)")
        if self.family == "from_file" and not self.path:
            raise MeshError("from_file requires a path")
        if self.family not in ("pentagon_wheel", "square", "corner", "cube_kuhn", "from_file"):
            raise MeshError(f"unknown family '{self.family}'")


def generate(spec: FamilySpec) -> SimplicialComplex:
    if spec.family == "pentagon_wheel":
        cx = _wheel(spec.n_gon)
    elif spec.family == "corner":
        cx = _corner(spec.alpha)
    elif spec.family == "square":
        cx = _square(spec.pattern)
    elif spec.family == "cube_kuhn":
        cx = _cube(spec.level)
        cx.family = {"family": "cube_kuhn", "level": spec.level}
        return cx
    else:
        cx = meshio.load(spec.path)
        cx.family = {"family": "from_file", "level": 0, "path": spec.path}
    for _ in range(spec.level):
        cx = medial_refine(cx)
    cx.family = {"family": spec.family, "level": spec.level,
                 "n_gon": spec.n_gon, "pattern": spec.pattern,
                 "alpha": spec.alpha, "path": spec.path}
    if spec.family == "corner":
        _label_slit(cx, spec.alpha)
    return cx


def refine(cx: SimplicialComplex, family: dict | None = None) -> SimplicialComplex:
    """One refinement step, dispatching on the family tag."""
    family = family or cx.family
    if family is None:
        if cx.dim == 2:
            out = medial_refine(cx)
            out.family = None
            return out
        raise MeshError("refinement of untagged meshes is only supported in 2D")
    name = family["family"]
    if name == "cube_kuhn":
        out = _cube(family["level"] + 1)
        out.family = {"family": "cube_kuhn", "level": family["level"] + 1}
        return out
    if cx.dim != 2:
        raise MeshError(f"family '{name}' does not support refinement in dim {cx.dim}")
    out = medial_refine(cx)
    out.family = dict(family)
    out.family["level"] = family["level"] + 1
    if name == "corner":
        _label_slit(out, family.get("alpha", DEFAULT_ALPHA))
    return out


def medial_refine(cx: SimplicialComplex) -> SimplicialComplex:
    """Split every triangle into its four medial subtriangles."""
    if cx.dim != 2:
        raise MeshError("medial refinement is 2D only")
    nv = cx.num(0)
    edges = cx.simplices[1]
    mids = 0.5 * (cx.vertices[edges[:, 0]] + cx.vertices[edges[:, 1]])
    verts = np.vstack([cx.vertices, mids])
    tri = cx.simplices[2]
    f = cx.faces[2]  # f[t, i] = edge opposite vertex position i
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    m_bc, m_ac, m_ab = nv + f[:, 0], nv + f[:, 1], nv + f[:, 2]
    children = np.concatenate([
        np.stack([a, m_ab, m_ac], axis=1),
        np.stack([b, m_ab, m_bc], axis=1),
        np.stack([c, m_ac, m_bc], axis=1),
        np.stack([m_ab, m_ac, m_bc], axis=1),
    ])
    return build_complex(2, verts, children, validate=False)


# -- builders -----------------------------------------------------------------


def _wheel_points(count: int, step: float) -> np.ndarray:
    ang = step * np.arange(count)
    rim = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.vstack([[0.0, 0.0], rim])


def _wheel(n: int) -> SimplicialComplex:
    verts = _wheel_points(n, 2 * math.pi / n)
    cells = [(0, 1 + j, 1 + (j + 1) % n) for j in range(n)]
    return build_complex(2, verts, cells, validate=False)


def _corner(alpha: float) -> SimplicialComplex:
    verts = _wheel_points(5, alpha / 4)
    cells = [(0, 1 + j, 2 + j) for j in range(4)]
    return build_complex(2, verts, cells, validate=False)


def _label_slit(cx: SimplicialComplex, alpha: float) -> None:
    """Mark boundary edges lying on the two slit rays with label 'gamma'."""
    labels: dict[tuple, str] = {}
    ray = np.array([math.cos(alpha), math.sin(alpha)])
    for e in cx.boundary_face_indices():
        pa, pb = cx.coords_of(1, [int(e)])[0]
        tup = tuple(int(v) for v in cx.simplices[1][e])
        on_x = abs(pa[1]) < 1e-12 and abs(pb[1]) < 1e-12 and pa[0] >= -1e-12 and pb[0] >= -1e-12
        cr_a = abs(pa[0] * ray[1] - pa[1] * ray[0]) < 1e-12 and pa @ ray >= -1e-12
        cr_b = abs(pb[0] * ray[1] - pb[1] * ray[0]) < 1e-12 and pb @ ray >= -1e-12
        labels[tup] = "gamma" if (on_x or (cr_a and cr_b)) else "default"
    cx.boundary_labels = labels


def _square(pattern: int) -> SimplicialComplex:
    if pattern in (1, 2):
        m = 1 if pattern == 1 else 2
        xs = np.linspace(0.0, 1.0, m + 1)
        verts = np.array([[x, y] for y in xs for x in xs])
        vid = lambda i, j: j * (m + 1) + i
        cells = []
        for j in range(m):
            for i in range(m):
                a, b = vid(i, j), vid(i + 1, j)
                c, d = vid(i + 1, j + 1), vid(i, j + 1)
                if pattern == 1 or (i + j) % 2 == 0:
                    cells += [(a, b, c), (a, c, d)]
                else:
                    cells += [(a, b, d), (b, c, d)]
        return build_complex(2, verts, cells, validate=False)
    # pattern 3: both diagonals, one center vertex per cell
    verts = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]]
    cells = [(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4)]
    return build_complex(2, np.array(verts, dtype=float), cells, validate=False)


_KUHN_PERMS = list(permutations(range(3)))


def _cube(level: int) -> SimplicialComplex:
    m = 2 ** (level + 1)
    side = m + 1
    g = np.arange(side)
    verts = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3) / m

    base = np.stack(np.meshgrid(np.arange(m), np.arange(m), np.arange(m),
                                indexing="ij"), axis=-1).reshape(-1, 3)
    strides = np.array([side * side, side, 1])
    base_id = base @ strides

    cells = []
    for perm in _KUHN_PERMS:
        corner = np.zeros(3, dtype=np.int64)
        offs = [corner.copy()]
        for ax in perm:
            corner = corner.copy()
            corner[ax] += 1
            offs.append(corner.copy())
        off_ids = np.array([o @ strides for o in offs])
        cells.append(base_id[:, None] + off_ids[None, :])
    cells = np.concatenate(cells, axis=0)
    return build_complex(3, verts, cells, validate=False)


def jitter_interior(cx: SimplicialComplex, amplitude: float = 0.1,
                    seed: int = 0) -> SimplicialComplex:
    """Displace interior vertices by a seeded random fraction of the local edge length.

    Produces a generic (asymmetric) mesh from a structured one while keeping a
    comfortable margin of strict well-centeredness for small amplitudes.
    """
    edges = cx.simplices[1]
    lengths = np.linalg.norm(cx.vertices[edges[:, 1]] - cx.vertices[edges[:, 0]], axis=1)
    local = np.full(cx.num(0), np.inf)
    np.minimum.at(local, edges[:, 0], lengths)
    np.minimum.at(local, edges[:, 1], lengths)

    rng = np.random.default_rng(seed)
    disp = rng.standard_normal(cx.vertices.shape)
    nrm = np.linalg.norm(disp, axis=1, keepdims=True)
    disp = disp / np.maximum(nrm, 1e-300)
    radii = amplitude * local * rng.random(cx.num(0)) ** (1.0 / cx.dim)
    disp = disp * radii[:, None]
    disp[cx.boundary_vertex_mask()] = 0.0

    out = build_complex(cx.dim, cx.vertices + disp, cx.simplices[cx.dim],
                        validate=False)
    out.family = None
    return out


def estimate_unknowns(spec: FamilySpec) -> int | None:
    """Interior vertex count, used by the study memory guard."""
    i = spec.level
    if spec.family == "pentagon_wheel":
        n = spec.n_gon
        return 1 + (n * 4 ** i - n * 2 ** i) // 2
    if spec.family == "corner":
        return 1 + 2 * 4 ** i - 3 * 2 ** i
    if spec.family == "square":
        if spec.pattern == 1:
            m = 2 ** i
            return (m - 1) ** 2
        if spec.pattern == 2:
            m = 2 ** (i + 1)
            return (m - 1) ** 2
        m = 2 ** i
        return (m - 1) ** 2 + m ** 2
    if spec.family == "cube_kuhn":
        m = 2 ** (i + 1)
        return (m - 1) ** 3
    return None
