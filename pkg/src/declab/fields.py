"""Continuous-side bridge: form fields, deRham maps, Whitney forms, probes.

A ``FormField`` evaluates to antisymmetric coefficient arrays over the
lexicographically increasing index tuples of its degree.  The Euclidean
pointwise Hodge star of a field is purely algebraic (a signed permutation of
components), so starred fields never need hand-derived formulas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable

import numpy as np

from . import geometry
from .complex import SimplicialComplex
from .dualmesh import DualComplex
from .operators import Cochain, hodge_star
from .quadrature import simplex_rule


@lru_cache(maxsize=None)
def index_tuples(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(n), k))


@dataclass(frozen=True)
class FormField:
    degree: int
    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]  # (m, n) -> (m, C(n, k))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.asarray(self.evaluator(pts), dtype=float)
        want = len(index_tuples(self.dim, self.degree))
        if out.ndim == 1:
            out = out[:, None]
        if out.shape != (len(pts), want):
            raise ValueError(f"field returned {out.shape}, expected ({len(pts)}, {want})")
        return out


def scalar_field(dim: int, fn: Callable) -> FormField:
    return FormField(0, dim, lambda p: np.asarray(fn(p), dtype=float).reshape(len(p), 1))


def volume_field(dim: int, fn: Callable) -> FormField:
    """fn(points) * dx_1 ^ ... ^ dx_n."""
    return FormField(dim, dim, lambda p: np.asarray(fn(p), dtype=float).reshape(len(p), 1))


def _perm_sign(perm) -> int:
    inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm))
              if perm[i] > perm[j])
    return -1 if inv % 2 else 1


@lru_cache(maxsize=None)
def _star_table(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Component permutation and signs realizing the Euclidean pointwise star."""
    src = index_tuples(n, k)
    dst = index_tuples(n, n - k)
    pos = {t: i for i, t in enumerate(dst)}
    perm = np.empty(len(src), dtype=np.int64)
    sign = np.empty(len(src), dtype=np.int64)
    for i, rho in enumerate(src):
        comp = tuple(sorted(set(range(n)) - set(rho)))
        perm[i] = pos[comp]
        sign[i] = _perm_sign(rho + comp)
    return perm, sign


def hodge_field(field: FormField) -> FormField:
    """Pointwise Euclidean Hodge star of a field (exact, algebraic)."""
    n, k = field.dim, field.degree
    perm, sign = _star_table(n, k)

    def ev(points):
        vals = field(points)
        out = np.zeros((len(points), len(index_tuples(n, n - k))))
        out[:, perm] = vals * sign
        return out

    return FormField(n - k, n, ev)


def evaluate_on_frames(field: FormField, points: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """Apply the k-covector at each point to a k-frame: (m, n), (m, k, n) -> (m,)."""
    k = field.degree
    vals = field(points)
    if k == 0:
        return vals[:, 0]
    combos = index_tuples(field.dim, k)
    out = np.zeros(len(points))
    for c, rho in enumerate(combos):
        minors = np.linalg.det(frames[:, :, rho])
        out += vals[:, c] * minors
    return out


# -- deRham maps -----------------------------------------------------------------


def derham_primal(field: FormField, cx: SimplicialComplex, degree: int = 4) -> Cochain:
    """Integrate a k-form over every oriented primal k-simplex."""
    k = field.degree
    if field.dim != cx.dim:
        raise ValueError(f"field lives in R^{field.dim}, complex in R^{cx.dim}")
    if k > cx.dim:
        raise ValueError("field degree exceeds complex dimension")
    if k == 0:
        return Cochain(0, "primal", field(cx.vertices)[:, 0])
    rule = simplex_rule(k, degree)
    coords = cx.coords_of(k)
    edges = coords[:, 1:, :] - coords[:, :1, :]
    pts = rule.physical_points(coords)           # (m, Q, n)
    m, q, n = pts.shape
    vals = field(pts.reshape(-1, n)).reshape(m, q, -1)
    combos = index_tuples(cx.dim, k)
    integ = np.zeros(m)
    for c, rho in enumerate(combos):
        minors = np.linalg.det(edges[:, :, rho])
        integ += (vals[:, :, c] @ rule.weights) * minors
    integ /= math.factorial(k)
    return Cochain(k, "primal", integ * cx.orientation[k])


def derham_dual(field: FormField, dual: DualComplex, degree: int = 4) -> Cochain:
    """Integrate an (n-k)-form over every dual cell, fragment by fragment.

    Fragments enter with their chain orientation coefficients, so the result
    is the integral over the coherently oriented dual cell.
    """
    cx = dual.complex
    n = cx.dim
    if field.dim != n:
        raise ValueError(f"field lives in R^{field.dim}, complex in R^{n}")
    m_deg = field.degree
    k = n - m_deg
    if not 0 <= k <= n:
        raise ValueError("field degree exceeds complex dimension")
    chain, sign, _ = dual.flags(k)
    if m_deg == 0:
        vals = field(dual.circumcenters[n][chain[:, -1]])[:, 0] * sign
        return Cochain(m_deg, "dual",
                       np.bincount(chain[:, 0], weights=vals, minlength=cx.num(k)))
    pts0 = dual.circumcenters[k][chain[:, 0]]
    frame = np.stack([dual.circumcenters[k + j][chain[:, j]] - pts0
                      for j in range(1, m_deg + 1)], axis=1)  # edges from c(t_k)
    corners = np.concatenate([pts0[:, None, :], pts0[:, None, :] + frame], axis=1)
    rule = simplex_rule(m_deg, degree)
    pts = rule.physical_points(corners)
    mm, qq, nn = pts.shape
    vals = field(pts.reshape(-1, nn)).reshape(mm, qq, -1)
    combos = index_tuples(n, m_deg)
    integ = np.zeros(mm)
    for c, rho in enumerate(combos):
        minors = np.linalg.det(frame[:, :, rho])
        integ += (vals[:, :, c] @ rule.weights) * minors
    integ *= sign / math.factorial(m_deg)
    return Cochain(m_deg, "dual",
                   np.bincount(chain[:, 0], weights=integ, minlength=cx.num(k)))


# -- Whitney forms ------------------------------------------------------------------


def _barycentric_gradients(cx: SimplicialComplex) -> np.ndarray:
    """Gradients of the n+1 barycentric hat functions per top cell: (m, n+1, n)."""
    coords = cx.coords_of(cx.dim)
    e = coords[:, 1:, :] - coords[:, :1, :]
    ginv = np.linalg.inv(e)          # (m, n, n); rows of inv(E)^T are grad lam_i
    grads = np.transpose(ginv, (0, 2, 1))
    g0 = -grads.sum(axis=1, keepdims=True)
    return np.concatenate([g0, grads], axis=1)


@lru_cache(maxsize=None)
def _face_positions(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(n + 1), k + 1))


class WhitneyField:
    """Piecewise-polynomial form obtained by Whitney interpolation of a cochain."""

    def __init__(self, cochain: Cochain, cx: SimplicialComplex):
        if cochain.side != "primal":
            raise ValueError("Whitney interpolation applies to primal cochains")
        self.cochain = cochain
        self.cx = cx
        self.degree = cochain.degree
        n = cx.dim
        k = cochain.degree
        self._grads = _barycentric_gradients(cx)
        subsets = _face_positions(n, k)
        rows = np.array(subsets, dtype=np.int64)  # (S, k+1) vertex positions
        cells = cx.simplices[n]
        face_rows = cells[:, rows]                # (m, S, k+1) vertex ids, sorted
        self._face_idx = np.stack(
            [cx.index_of(k, face_rows[:, s, :]) for s in range(len(subsets))], axis=1)
        self._subsets = rows

    def eval_on_cells(self, cells: np.ndarray, bary: np.ndarray) -> np.ndarray:
        """Evaluate on given top cells at shared barycentric points.

        cells: (m,) cell indices; bary: (Q, n+1); returns (m, Q, C(n, k)).
        """
        cx, k, n = self.cx, self.degree, self.cx.dim
        cells = np.asarray(cells, dtype=np.int64)
        m, q = len(cells), len(bary)
        ncomp = len(index_tuples(n, k))
        out = np.zeros((m, q, ncomp))
        vals = self.cochain.values
        if k == 0:
            w = vals[cx.simplices[n][cells]]           # (m, n+1)
            return np.einsum("mj,qj->mq", w, bary)[:, :, None]
        grads = self._grads[cells]                     # (m, n+1, n)
        combos = index_tuples(n, k)
        fact = math.factorial(k)
        for s, pos in enumerate(self._subsets):
            fidx = self._face_idx[cells, s]
            coef = vals[fidx] * cx.orientation[k][fidx]    # (m,)
            for drop in range(k + 1):
                keep = [pos[j] for j in range(k + 1) if j != drop]
                gsel = grads[:, keep, :]                   # (m, k, n)
                lam = bary[:, pos[drop]]                   # (q,)
                sgn = (-1) ** drop * fact
                for c, rho in enumerate(combos):
                    minors = np.linalg.det(gsel[:, :, rho])    # (m,)
                    out[:, :, c] += (coef * minors * sgn)[:, None] * lam[None, :]
        return out

    def derivative_on_cells(self, cells: np.ndarray) -> np.ndarray:
        """Constant (k+1)-form d(W omega) per top cell: (m, C(n, k+1))."""
        cx, k, n = self.cx, self.degree, self.cx.dim
        cells = np.asarray(cells, dtype=np.int64)
        m = len(cells)
        combos = index_tuples(n, k + 1)
        out = np.zeros((m, len(combos)))
        grads = self._grads[cells]
        vals = self.cochain.values
        fact = math.factorial(k + 1)
        for s, pos in enumerate(self._subsets):
            fidx = self._face_idx[cells, s]
            coef = vals[fidx] * cx.orientation[k][fidx]
            gsel = grads[:, list(pos), :]              # (m, k+1, n)
            for c, rho in enumerate(combos):
                minors = np.linalg.det(gsel[:, :, rho])
                out[:, c] += coef * minors * fact
        return out

    def eval_at(self, points: np.ndarray) -> np.ndarray:
        """Brute-force point location then evaluation; intended for small meshes."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.cx.dim
        coords = self.cx.coords_of(n)
        out = np.empty((len(pts), len(index_tuples(n, self.degree))))
        for i, p in enumerate(pts):
            lam = geometry.barycentric_coordinates(
                np.repeat(p[None, :], len(coords), axis=0), coords)
            inside = np.flatnonzero(lam.min(axis=1) >= -1e-12)
            if not len(inside):
                raise ValueError(f"point {p} lies outside the mesh")
            c = int(inside[0])
            out[i] = self.eval_on_cells(np.array([c]), lam[c][None, :])[0, 0]
        return out


def whitney_map(cochain: Cochain, cx: SimplicialComplex) -> WhitneyField:
    return WhitneyField(cochain, cx)


def whitney_l2_norm(cochain: Cochain, cx: SimplicialComplex, degree: int = 4) -> float:
    """L2 norm of the Whitney interpolant (quadrature exact for its degree)."""
    w = whitney_map(cochain, cx)
    n = cx.dim
    rule = simplex_rule(n, degree)
    cells = np.arange(cx.num(n), dtype=np.int64)
    vals = w.eval_on_cells(cells, rule.points)         # (m, Q, C)
    dens = (vals ** 2).sum(axis=2)                     # pointwise |W|^2
    vols = geometry.unsigned_volume(cx.coords_of(n))
    return float(np.sqrt(np.sum(rule.integrate(dens, vols))))


def whitney_mass_matrix(cx: SimplicialComplex, k: int, degree: int = 4):
    """Gram matrix of the Whitney k-basis: ||W c||_L2^2 = c^T G c.

    Assembled cell by cell from quadrature values of the local basis forms;
    the integrand is quadratic in barycentric coordinates, so the default
    quadrature is exact.
    """
    import scipy.sparse as sp

    n = cx.dim
    rule = simplex_rule(n, max(degree, 2))
    nk = cx.num(k)
    cells = np.arange(cx.num(n), dtype=np.int64)
    vols = geometry.unsigned_volume(cx.coords_of(n))
    scaffold = WhitneyField(Cochain(k, "primal", np.zeros(nk)), cx)
    nsub = len(scaffold._subsets)
    local_vals = [_single_basis_values(scaffold, cells, s, rule.points)
                  for s in range(nsub)]
    orient = cx.orientation[k]
    rows, cols, data = [], [], []
    for a in range(nsub):
        fa = scaffold._face_idx[cells, a]
        for b in range(nsub):
            fb = scaffold._face_idx[cells, b]
            integ = np.einsum("mqc,mqc,q->m", local_vals[a], local_vals[b],
                              rule.weights)
            rows.append(fa)
            cols.append(fb)
            data.append(integ * vols * orient[fa] * orient[fb])
    return sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nk, nk)).tocsr()


def _single_basis_values(w: WhitneyField, cells: np.ndarray, subset: int,
                         bary: np.ndarray) -> np.ndarray:
    """Values of one local Whitney basis form (with the face's stored
    orientation) on every cell: (m, Q, C)."""
    cx, k, n = w.cx, w.degree, w.cx.dim
    m, q = len(cells), len(bary)
    combos = index_tuples(n, k)
    out = np.zeros((m, q, len(combos)))
    pos = w._subsets[subset]
    if k == 0:
        out[:, :, 0] = bary[None, :, pos[0]]
        return out
    grads = w._grads[cells]
    fact = math.factorial(k)
    for drop in range(k + 1):
        keep = [pos[j] for j in range(k + 1) if j != drop]
        gsel = grads[:, keep, :]
        lam = bary[:, pos[drop]]
        sgn = (-1) ** drop * fact
        for c, rho in enumerate(combos):
            minors = np.linalg.det(gsel[:, :, rho])
            out[:, :, c] += (minors * sgn)[:, None] * lam[None, :]
    return out


# -- consistency probes ----------------------------------------------------------------


@dataclass(frozen=True)
class ConsistencyRecord:
    """Error norms of the star/deRham commutators at one mesh level."""
    err_max: float            # primal-side expression, max norm
    err_l2_primal_side: float  # primal-side expression, dual discrete L2 norm
    err_max_dual_side: float  # dual-side expression, max norm
    err_l2_dual_side: float   # dual-side expression, discrete L2 norm


def consistency_probe(field: FormField, cx: SimplicialComplex, dual: DualComplex,
                      degree: int = 6, interior_l2: bool = False) -> ConsistencyRecord:
    """Measure star_h R_h - R_h star on a field and on its star.

    The primal-side expression star_h(R_h w) - R_h(star w) is a dual cochain;
    the dual-side expression star_h(R_h(star w)) - R_h(star star w) is primal.
    Max norms run over all cells; with ``interior_l2`` the L2 norms skip cells
    whose base simplex touches the domain boundary (their truncated duals
    carry a slowly decaying layer that masks the sharp interior rate).
    """
    from .operators import discrete_l2, max_norm

    k = field.degree
    n = cx.dim
    star_w = hodge_field(field)
    primal = derham_primal(field, cx, degree)
    sh = hodge_star(dual, k, side="primal")
    rhs = derham_dual(star_w, dual, degree)
    prim_expr = Cochain(n - k, "dual", sh.apply(primal).values - rhs.values)

    sd = hodge_star(dual, n - k, side="dual")
    rhs2 = derham_primal(hodge_field(star_w), cx, degree)
    dual_expr = Cochain(k, "primal", sd.apply(rhs).values - rhs2.values)

    if interior_l2:
        keep = ~dual.boundary_mask(k)
        dvol, pvol = dual.hodge_ratios(k)
        l2_prim = float(np.sqrt(np.sum(
            (pvol[keep] / dvol[keep]) * prim_expr.values[keep] ** 2)))
        l2_dual = float(np.sqrt(np.sum(
            (dvol[keep] / pvol[keep]) * dual_expr.values[keep] ** 2)))
    else:
        l2_prim = discrete_l2(dual, prim_expr)
        l2_dual = discrete_l2(dual, dual_expr)
    return ConsistencyRecord(
        err_max=max_norm(prim_expr),
        err_l2_primal_side=l2_prim,
        err_max_dual_side=max_norm(dual_expr),
        err_l2_dual_side=l2_dual,
    )


@dataclass(frozen=True)
class LaplaceConsistencyRecord:
    """Interior-vertex consistency of the 0-form Hodge-Laplace and its two-term split."""
    total_max: float
    total_l2: float
    term1_max: float   # star d (star R - R star) d u  : the non-decaying term
    term1_l2: float
    term2_max: float   # (star R - R star) d star d u  : the O(h) term
    term2_l2: float
    identity_gap: float  # max |total - (term1 - term2)| at interior vertices


def laplace_consistency_probe(bundle, cx: SimplicialComplex, dual: DualComplex,
                              degree: int = 6) -> LaplaceConsistencyRecord:
    """Evaluate Delta_h R_h u - R_h Delta u and its exact two-term decomposition.

    Restricted to interior vertices: boundary dual cells are truncated, so the
    dual Stokes step behind the decomposition only holds away from them.
    """
    from .operators import laplace

    n = cx.dim
    interior = cx.interior_vertex_indices()
    ru = derham_primal(bundle.u, cx, degree)
    rf = derham_primal(bundle.f, cx, degree)  # f = delta d u, the continuous image
    lap = laplace(dual, 0)
    total = lap.apply(ru).values - rf.values

    inv_v = 1.0 / dual.volumes[0]
    star_du = hodge_field(bundle.du)
    v = hodge_star(dual, 1, "primal").apply(derham_primal(bundle.du, cx, degree)).values \
        - derham_dual(star_du, dual, degree).values
    term1 = inv_v * (cx.boundary_matrix(1) @ v)

    d_star_du = volume_field(n, lambda p: -bundle.f(p)[:, 0])
    t2_lhs = inv_v * derham_dual(d_star_du, dual, degree).values
    t2_rhs = -rf.values
    term2 = t2_lhs - t2_rhs

    weights = dual.volumes[0][interior]

    def l2(x):
        return float(np.sqrt(np.sum(weights * x[interior] ** 2)))

    def mx(x):
        return float(np.max(np.abs(x[interior])))

    gap = mx(total - (term1 - term2))
    return LaplaceConsistencyRecord(
        total_max=mx(total), total_l2=l2(total),
        term1_max=mx(term1), term1_l2=l2(term1),
        term2_max=mx(term2), term2_l2=l2(term2),
        identity_gap=gap,
    )
