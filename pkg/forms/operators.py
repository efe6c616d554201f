"""Discrete exterior calculus on primal and circumcentric dual cochains."""
from __future__ import annotations

from itertools import permutations
from math import factorial
from typing import Callable

import numpy as np
import scipy.sparse as sp

from forms.cochain import Form, FormError, TensorValuedForm
from mesh.complex import SimplicialComplex, encode_rows, permutation_parity

RANK_RTOL = 1e-8


def _require_dual(complex_: SimplicialComplex) -> None:
    if not complex_.has_dual:
        raise FormError("operator needs circumcentric dual measures (2D complexes only)")


def _require_planar(complex_: SimplicialComplex) -> None:
    if complex_.dim != 2:
        raise FormError("operator is implemented for 2D complexes")


def _float_incidence(complex_: SimplicialComplex, k: int) -> sp.csr_matrix:
    return complex_.memo(f"incidence{k}", lambda: complex_.incidence(k).astype(float).tocsr())


def exterior_derivative(alpha: Form) -> Form:
    """d on primal forms is ∂ᵀ; on dual forms living on k-cells it is (-1)^k ∂_k."""
    cx, n, k = alpha.complex, alpha.n, alpha.degree
    if alpha.component is not None:
        raise FormError("exterior derivative of boundary forms is not provided")
    if k >= n:
        raise FormError(f"d of a top-degree ({k}) form")
    if not alpha.dual:
        return Form(k + 1, _float_incidence(cx, k + 1).T @ alpha.values, cx)
    cells = n - k
    return Form(k + 1, ((-1) ** cells) * (_float_incidence(cx, cells) @ alpha.values), cx, dual=True)


def hodge_ratio(complex_: SimplicialComplex, k: int) -> np.ndarray:
    """Diagonal of ⋆_k: dual measure over primal measure of each k-cell."""
    _require_dual(complex_)
    return complex_.memo(f"star{k}", lambda: complex_.dual_measures[k] / complex_.primal_measures[k])


def _safe_inverse(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    np.divide(1.0, x, out=out, where=x > 0)
    return out


def hodge_star(alpha: Form) -> Form:
    cx, n = alpha.complex, alpha.n
    if alpha.component is not None:
        raise FormError("hodge star of boundary forms is not provided")
    if not alpha.dual:
        k = alpha.degree
        return Form(n - k, alpha.values * hodge_ratio(cx, k), cx, dual=True)
    k = n - alpha.degree
    sign = (-1) ** (k * (n - k))
    return Form(k, sign * alpha.values * _safe_inverse(hodge_ratio(cx, k)), cx)


def volume_form(complex_: SimplicialComplex) -> Form:
    """μ_vol as a primal top form (cell measures)."""
    return Form(complex_.dim, complex_.primal_measures[complex_.dim].copy(), complex_)


def _lookup(complex_: SimplicialComplex, k: int):
    def build():
        simp = complex_.simplices[k]
        base = max(complex_.n_cells(0), 2)
        keys = encode_rows(np.sort(simp, axis=1), base)
        order = np.argsort(keys, kind="stable")
        stored = permutation_parity(simp) if k == complex_.dim else np.ones(len(simp), dtype=np.int8)
        return keys[order], order, stored, base

    return complex_.memo(f"lookup{k}", build)


def _evaluate(alpha: Form, tuples: np.ndarray) -> np.ndarray:
    """Value of a primal cochain on ordered vertex tuples (sign by ordering)."""
    keys, order, stored, base = _lookup(alpha.complex, alpha.degree)
    if tuples.shape[1] == 1:
        return alpha.values[tuples[:, 0]]
    key = encode_rows(np.sort(tuples, axis=1), base)
    idx = order[np.searchsorted(keys, key)]
    return alpha.values[idx] * permutation_parity(tuples) * stored[idx]


def wedge(alpha: Form, beta: Form) -> Form:
    """Barycentric cup product of primal cochains.

    (α∧β)(σ) = 1/(p+q+1)! Σ_τ sign(τ) α(τ₀..τ_p) β(τ_p..τ_{p+q}); on a
    boundary component only the 0-form ∧ (n-1)-form case is provided.
    """
    if alpha.component is not None or beta.component is not None:
        return _boundary_wedge(alpha, beta)
    if alpha.dual or beta.dual:
        raise FormError("wedge is defined on primal cochains; use `pair` for primal-dual pairings")
    if alpha.complex is not beta.complex:
        raise FormError("wedge of forms on different complexes")
    p, q = alpha.degree, beta.degree
    r = p + q
    cx = alpha.complex
    if r > cx.dim:
        raise FormError(f"wedge degree overflow: {p} + {q} > {cx.dim}")
    simp = cx.simplices[r]
    out = np.zeros(len(simp))
    for perm in permutations(range(r + 1)):
        sign = permutation_parity(np.array([perm]))[0]
        cols = simp[:, list(perm)]
        out += sign * _evaluate(alpha, cols[:, : p + 1]) * _evaluate(beta, cols[:, p:])
    return Form(r, out / factorial(r + 1), cx)


def _boundary_wedge(alpha: Form, beta: Form) -> Form:
    if alpha.component != beta.component or alpha.complex is not beta.complex:
        raise FormError("boundary wedge needs forms on the same component")
    n = alpha.n
    if (alpha.degree, beta.degree) == (n - 1, 0):
        alpha, beta = beta, alpha
    if (alpha.degree, beta.degree) != (0, n - 1):
        raise FormError("boundary wedge supports 0-form ∧ (n-1)-form only")
    comp = alpha.complex.component(alpha.component)
    avg = alpha.values[comp.cell_vertices].mean(axis=1)
    return Form(n - 1, avg * beta.values, alpha.complex, component=alpha.component)


def pair(alpha: Form, beta: Form) -> float:
    """∫ α ∧ β for a primal k-form and a dual (n-k)-form (same cells)."""
    if alpha.dual and not beta.dual:
        alpha, beta = beta, alpha
    if alpha.dual or not beta.dual or alpha.degree + beta.degree != alpha.n:
        raise FormError("pair needs a primal k-form and a dual (n-k)-form")
    if alpha.complex is not beta.complex:
        raise FormError("pair of forms on different complexes")
    return float(np.dot(alpha.values, beta.values))


def integrate(alpha: Form) -> float:
    n = alpha.n
    if alpha.component is not None:
        if alpha.degree != n - 1:
            raise FormError("boundary integrals need (n-1)-forms")
    elif alpha.degree != n:
        raise FormError(f"cannot integrate a {alpha.degree}-form over a {n}-complex")
    return float(np.sum(alpha.values))


def trace(omega: Form, component: str, induced: bool = False) -> Form:
    """Restriction of a primal 0- or (n-1)-form to a boundary component.

    (n-1)-forms are evaluated on cells oriented by the component convention,
    or by the domain-induced orientation when `induced` is set.
    """
    if omega.dual or omega.component is not None:
        raise FormError("trace takes primal forms on the domain")
    comp = omega.complex.component(component)
    if omega.degree == 0:
        return Form(0, omega.values[comp.vertices], omega.complex, component=component)
    if omega.degree != omega.n - 1:
        raise FormError("trace is provided for 0- and (n-1)-forms")
    orient = comp.signs if induced else comp.orientation
    return Form(omega.n - 1, omega.values[comp.cells] * orient, omega.complex, component=component)


# musical isomorphisms

def vertex_vectors(v) -> np.ndarray:
    if isinstance(v, TensorValuedForm):
        if v.valence != "vector" or v.degree != 0 or v.components[0].dual:
            raise FormError("expected a vector-valued primal 0-form")
        return v.array()
    return np.asarray(v, dtype=float)


def flat(v, complex_: SimplicialComplex | None = None) -> Form:
    """♭ of vertex vectors: ∫_e v·dl with v linear along each edge."""
    if isinstance(v, TensorValuedForm):
        complex_ = v.complex
    vv = vertex_vectors(v)
    e = complex_.simplices[1]
    mid = 0.5 * (vv[e[:, 0]] + vv[e[:, 1]])
    return Form(1, np.sum(mid * complex_.edge_vectors(), axis=1), complex_)


def flat_field(field: Callable[[np.ndarray], np.ndarray], complex_: SimplicialComplex) -> Form:
    """♭ of an analytic field by Simpson's rule along each edge."""
    e = complex_.simplices[1]
    t = complex_.edge_vectors()
    a = complex_.vertices[e[:, 0]]
    avg = (field(a) + 4.0 * field(a + 0.5 * t) + field(a + t)) / 6.0
    return Form(1, np.sum(avg * t, axis=1), complex_)


def _sharp_matrix(complex_: SimplicialComplex) -> sp.csr_matrix:
    """Per-vertex least squares fit of an affine field to the edge values of
    the vertex patch; vertices whose patch is too small fall back to a
    constant fit over their star."""
    _require_planar(complex_)

    def build():
        n = complex_.dim
        edges = complex_.simplices[1]
        tvec = complex_.edge_vectors()
        tris = complex_.simplices[2]
        faces = complex_.topology.top_faces
        h = float(np.mean(complex_.primal_measures[1]))
        n_v = complex_.n_cells(0)

        patch = [set() for _ in range(n_v)]
        for c in range(len(tris)):
            for v in tris[c]:
                patch[v].update(int(f) for f in faces[c])
        star = [[] for _ in range(n_v)]
        for j, (a, b) in enumerate(edges):
            star[a].append(j)
            star[b].append(j)

        rows, cols, vals = [], [], []
        for a in range(n_v):
            ids = np.array(sorted(patch[a]), dtype=np.int64)
            t = tvec[ids]
            r = (complex_.wrap(complex_.vertices[edges[ids, 0]] - complex_.vertices[a]) + 0.5 * t) / h
            design = np.concatenate([t, np.einsum("mi,mj->mij", t, r).reshape(len(ids), n * n)], axis=1)
            s = np.linalg.svd(design, compute_uv=False)
            if len(ids) >= design.shape[1] and s[-1] > RANK_RTOL * s[0]:
                weights = np.linalg.pinv(design)[:n]
            else:
                ids = np.array(star[a], dtype=np.int64)
                design = tvec[ids]
                s = np.linalg.svd(design, compute_uv=False)
                if len(s) < n or s[-1] <= RANK_RTOL * s[0]:
                    raise FormError(f"rank-deficient vertex star at vertex {a}")
                weights = np.linalg.pinv(design)
            for i in range(n):
                rows.append(np.full(len(ids), a * n + i))
                cols.append(ids)
                vals.append(weights[i])
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n_v * n, len(edges)),
        )

    return complex_.memo("sharp", build)


def barycentric_gradients(complex_: SimplicialComplex) -> np.ndarray:
    """∇λ_i of each top cell, shape (F, n+1, n)."""
    def build():
        rel = complex_.local_coordinates(complex_.dim)[:, 1:, :]
        g = np.transpose(np.linalg.inv(rel), (0, 2, 1))
        return np.concatenate([-g.sum(axis=1, keepdims=True), g], axis=1)

    return complex_.memo("barycentric", build)


def whitney_sharp_matrix(complex_: SimplicialComplex) -> sp.csr_matrix:
    """Whitney interpolant of a primal 1-form at cell barycenters, rows (cell, axis).

    The edge (p, q) contributes (∇λ_q - ∇λ_p)/(n+1); constant fields are
    reproduced exactly.
    """
    _require_planar(complex_)

    def build():
        n = complex_.dim
        cells = complex_.simplices[n]
        faces = complex_.topology.top_faces
        edges = complex_.simplices[1]
        grads = barycentric_gradients(complex_)
        idx = np.arange(len(cells))
        rows, cols, vals = [], [], []
        for m in range(faces.shape[1]):
            e = faces[:, m]
            p = np.argmax(cells == edges[e, 0][:, None], axis=1)
            q = np.argmax(cells == edges[e, 1][:, None], axis=1)
            w = (grads[idx, q] - grads[idx, p]) / (n + 1)
            for a in range(n):
                rows.append(idx * n + a)
                cols.append(e)
                vals.append(w[:, a])
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(len(cells) * n, len(edges)),
        )

    return complex_.memo("whitney", build)


def sharp(alpha: Form) -> TensorValuedForm:
    if alpha.degree != 1 or alpha.dual or alpha.component is not None:
        raise FormError("♯ takes a primal 1-form")
    cx = alpha.complex
    vals = (_sharp_matrix(cx) @ alpha.values).reshape(cx.n_cells(0), cx.dim)
    return vector_field(vals, cx)


def vector_field(values: np.ndarray, complex_: SimplicialComplex) -> TensorValuedForm:
    return TensorValuedForm.from_array("vector", 0, np.asarray(values, dtype=float), complex_)


def star_flat(v, complex_: SimplicialComplex | None = None) -> Form:
    """⋆v♭ as a primal (n-1)-form: flux of v through each edge (right normal)."""
    if isinstance(v, TensorValuedForm):
        complex_ = v.complex
    _require_planar(complex_)
    vv = vertex_vectors(v)
    e = complex_.simplices[1]
    t = complex_.edge_vectors()
    mid = 0.5 * (vv[e[:, 0]] + vv[e[:, 1]])
    return Form(1, mid[:, 0] * t[:, 1] - mid[:, 1] * t[:, 0], complex_)


def edge_density(alpha: Form) -> np.ndarray:
    """Scalar ⋆α of a primal top form, averaged over the cells sharing each edge."""
    if alpha.degree != alpha.n or alpha.dual:
        raise FormError("edge density takes a primal top form")
    cx = alpha.complex
    dens = alpha.values / cx.primal_measures[cx.dim]
    cof = cx.topology.face_cofaces
    first = dens[cof[:, 0]]
    second = np.where(cof[:, 1] >= 0, dens[np.maximum(cof[:, 1], 0)], first)
    return 0.5 * (first + second)


def interior_product(v, alpha: Form) -> Form:
    """ι_v α at the vertices (1-forms) or on the edges (top forms).

    Top forms use ι_vℋ = ⋆ℋ ∧ ⋆v♭. For a 1-form the Hodge formula
    (-1)^{k(n-k)} ⋆(⋆α ∧ v♭) reduces to the metric contraction g(v, ♯α), which
    is evaluated directly as v·♯α with the affine patch ♯; this is exact for
    affine α and constant v. `lie_derivative` builds its Cartan step from
    the same 0-form, so d ι_v α and ι_v dα see one contraction.
    """
    if alpha.dual or alpha.component is not None:
        raise FormError("interior product takes primal forms on the domain")
    cx, k = alpha.complex, alpha.degree
    _require_planar(cx)
    if k == 0:
        raise FormError("interior product of a 0-form")
    vv = vertex_vectors(v)
    if k == cx.dim:
        return Form(k - 1, edge_density(alpha) * star_flat(vv, cx).values, cx)
    return Form(0, np.sum(vv * sharp(alpha).array(), axis=1), cx)


def lie_derivative(v, alpha: Form) -> Form:
    """Cartan: ℒ_v = d ι_v + ι_v d."""
    k, n = alpha.degree, alpha.n
    if k == 0:
        return interior_product(v, exterior_derivative(alpha))
    if k == n:
        return exterior_derivative(interior_product(v, alpha))
    return exterior_derivative(interior_product(v, alpha)) + interior_product(v, exterior_derivative(alpha))
