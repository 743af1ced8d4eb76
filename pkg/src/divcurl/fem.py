"""P1/P0 finite element fields, Galerkin matrices and discrete operators.

Scalars are continuous piecewise-linear (P1, one coefficient per
vertex); vector fields are piecewise-constant (P0, one 2-vector per
triangle).  The gradient of a P1 function is exactly a P0 field, so the
identities between gradients, perp-gradients and the weak div/curl
pairings hold to rounding.  All quadrature below is exact closed form
for these spaces.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import MeshError
from .mesh import Mesh

__all__ = [
    "ScalarField", "VectorField", "BoundaryFunction",
    "assemble_stiffness", "assemble_mass", "assemble_boundary_mass",
    "gradient", "perp_gradient", "l2_inner", "l2_norm",
    "scalar_l2_inner", "scalar_l2_norm", "boundary_l2_norm", "boundary_integral",
    "volume_integral", "load_grad", "load_perp",
    "weak_divergence", "weak_curl", "trace", "conormal_flux",
    "save_field", "load_field",
]


def _check_same_mesh(a, b):
    if a.mesh is not b.mesh:
        raise MeshError("fields live on different meshes", code="MESH_MISMATCH")


@dataclass(frozen=True, eq=False, repr=False)
class ScalarField:
    """P1 scalar function given by one nodal value per vertex."""

    mesh: Mesh
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.coeffs, dtype=float))
        if c.shape != (len(self.mesh.vertices),):
            raise MeshError("coeffs length must equal the vertex count")
        if not np.all(np.isfinite(c)):
            raise MeshError("scalar field values must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __repr__(self):
        return f"ScalarField(n={len(self.coeffs)})"

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros(len(mesh.vertices)))

    @classmethod
    def from_function(cls, mesh, f):
        """Nodal interpolant; ``f(x, y)`` must accept coordinate arrays."""
        return cls(mesh, np.asarray(f(mesh.vertices[:, 0], mesh.vertices[:, 1]),
                                    dtype=float))

    def __add__(self, other):
        _check_same_mesh(self, other)
        return ScalarField(self.mesh, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_mesh(self, other)
        return ScalarField(self.mesh, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return ScalarField(self.mesh, self.coeffs * float(a))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.mesh, -self.coeffs)


@dataclass(frozen=True, eq=False, repr=False)
class VectorField:
    """P0 planar vector field: one 2-vector per triangle."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.shape != (len(self.mesh.triangles), 2):
            raise MeshError("values must have shape (num_triangles, 2)")
        if not np.all(np.isfinite(v)):
            raise MeshError("vector field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __repr__(self):
        return f"VectorField(nt={len(self.values)})"

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros((len(mesh.triangles), 2)))

    @classmethod
    def from_function(cls, mesh, f):
        """Centroid sample; ``f(x, y)`` returns the pair (vx, vy) of arrays."""
        cx, cy = mesh.centroids[:, 0], mesh.centroids[:, 1]
        vx, vy = f(cx, cy)
        return cls(mesh, np.column_stack([np.broadcast_to(vx, cx.shape),
                                          np.broadcast_to(vy, cy.shape)]))

    def __add__(self, other):
        _check_same_mesh(self, other)
        return VectorField(self.mesh, self.values + other.values)

    def __sub__(self, other):
        _check_same_mesh(self, other)
        return VectorField(self.mesh, self.values - other.values)

    def __mul__(self, a):
        return VectorField(self.mesh, self.values * float(a))

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(self.mesh, -self.values)


@dataclass(frozen=True, eq=False, repr=False)
class BoundaryFunction:
    """Trace-space function: one value per boundary vertex.

    Values are stored in the order of ``mesh.boundary_vertices``.
    """

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.shape != (len(self.mesh.boundary_vertices),):
            raise MeshError("values length must equal the boundary vertex count")
        if not np.all(np.isfinite(v)):
            raise MeshError("boundary values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __repr__(self):
        return f"BoundaryFunction(k={len(self.values)})"

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros(len(mesh.boundary_vertices)))

    @classmethod
    def from_function(cls, mesh, f):
        pts = mesh.vertices[mesh.boundary_vertices]
        return cls(mesh, np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float))

    def extended(self):
        """Nodal vector over all vertices, zero at interior vertices."""
        full = np.zeros(len(self.mesh.vertices))
        full[self.mesh.boundary_vertices] = self.values
        return full

    def __add__(self, other):
        _check_same_mesh(self, other)
        return BoundaryFunction(self.mesh, self.values + other.values)

    def __sub__(self, other):
        _check_same_mesh(self, other)
        return BoundaryFunction(self.mesh, self.values - other.values)

    def __mul__(self, a):
        return BoundaryFunction(self.mesh, self.values * float(a))

    __rmul__ = __mul__

    def __neg__(self):
        return BoundaryFunction(self.mesh, -self.values)


# -- assembly ----------------------------------------------------------

_matrix_cache = weakref.WeakKeyDictionary()


def _cache(mesh):
    entry = _matrix_cache.get(mesh)
    if entry is None:
        entry = {}
        _matrix_cache[mesh] = entry
    return entry


def _scatter_symmetric(local, rows_of, n):
    """Assemble per-element symmetric blocks into CSR and symmetrize exactly."""
    nloc = local.shape[1]
    ii = np.repeat(rows_of, nloc, axis=1).ravel()
    jj = np.tile(rows_of, (1, nloc)).ravel()
    mat = sp.coo_matrix((local.ravel(), (ii, jj)), shape=(n, n)).tocsr()
    return (mat + mat.T) * 0.5


def assemble_stiffness(m):
    """Galerkin stiffness K_ij = integral of grad(hat_i) . grad(hat_j).

    Exact for P1 (constant gradients per triangle); symmetric positive
    semi-definite with null space = constants on a connected mesh.
    """
    cache = _cache(m)
    if "K" not in cache:
        g = m.hat_gradients
        local = np.einsum("tid,tjd->tij", g, g) * m.areas[:, None, None]
        cache["K"] = _scatter_symmetric(local, m.triangles, len(m.vertices))
    return cache["K"]


def assemble_mass(m):
    """Volume mass matrix with the exact P1 pattern area/12 (area/6 diagonal)."""
    cache = _cache(m)
    if "M" not in cache:
        pattern = (np.ones((3, 3)) + np.eye(3)) / 12.0
        local = m.areas[:, None, None] * pattern
        cache["M"] = _scatter_symmetric(local, m.triangles, len(m.vertices))
    return cache["M"]


def assemble_boundary_mass(m, subset=None):
    """Boundary mass over a set of boundary edges (all of them by default).

    ``subset`` contains row indices into ``m.boundary_edges``; anything
    not identifying a boundary edge is rejected.  The matrix is n-by-n
    with nonzero entries only among the vertices of the subset edges
    (exact P1 edge pattern length/6, length/3 diagonal).
    """
    if subset is None:
        cache = _cache(m)
        if "B" in cache:
            return cache["B"]
        rows = np.arange(len(m.boundary_edges))
    else:
        rows = np.asarray(sorted(int(r) for r in subset), dtype=np.int64)
        if len(rows) and (rows.min() < 0 or rows.max() >= len(m.boundary_edges)):
            raise MeshError(
                "subset entries must be rows of mesh.boundary_edges "
                f"(got index {int(rows.min()) if rows.min() < 0 else int(rows.max())})",
                code="MESH_INDEX")
    n = len(m.vertices)
    if len(rows) == 0:
        return sp.csr_matrix((n, n))
    lengths = m.boundary_edge_lengths[rows]
    pattern = (np.ones((2, 2)) + np.eye(2)) / 6.0
    local = lengths[:, None, None] * pattern
    mat = _scatter_symmetric(local, m.boundary_edges[rows, :2], n)
    if subset is None:
        _cache(m)["B"] = mat
    return mat


# -- differential operators and inner products ------------------------


def gradient(f):
    """Exact per-triangle gradient of a P1 scalar, as a P0 field."""
    g = np.einsum("ti,tid->td", f.coeffs[f.mesh.triangles], f.mesh.hat_gradients)
    return VectorField(f.mesh, g)


def perp_gradient(f):
    """Gradient rotated by +90 degrees: (g1, g2) -> (g2, -g1)."""
    g = gradient(f).values
    return VectorField(f.mesh, np.column_stack([g[:, 1], -g[:, 0]]))


def l2_inner(v, w):
    """L2 inner product of two P0 fields (exact; fixed triangle order)."""
    _check_same_mesh(v, w)
    per_tri = np.einsum("td,td->t", v.values, w.values)
    return float(np.dot(v.mesh.areas, per_tri))


def l2_norm(v):
    return float(np.sqrt(max(l2_inner(v, v), 0.0)))


def scalar_l2_inner(f, g):
    """L2 inner product of two P1 scalars via the consistent mass matrix."""
    _check_same_mesh(f, g)
    return float(f.coeffs @ (assemble_mass(f.mesh) @ g.coeffs))


def scalar_l2_norm(f):
    return float(np.sqrt(max(scalar_l2_inner(f, f), 0.0)))


def volume_integral(f):
    """Exact integral of a P1 scalar over the domain."""
    return float(np.sum(assemble_mass(f.mesh) @ f.coeffs))


def boundary_l2_norm(eta, subset=None):
    """L2(ds) norm of a boundary function, optionally over an edge subset."""
    b = assemble_boundary_mass(eta.mesh, subset)
    e = eta.extended()
    return float(np.sqrt(max(e @ (b @ e), 0.0)))


def boundary_integral(eta, subset=None):
    """Exact integral of a P1 boundary function, optionally over a subset."""
    b = assemble_boundary_mass(eta.mesh, subset)
    return float(np.sum(b @ eta.extended()))


def load_grad(v):
    """Dual vector d_i = integral of grad(hat_i) . v (exact P0 x P0)."""
    m = v.mesh
    contrib = np.einsum("tid,td->ti", m.hat_gradients, v.values) * m.areas[:, None]
    n = len(m.vertices)
    d = np.zeros(n)
    for i in range(3):
        d += np.bincount(m.triangles[:, i], weights=contrib[:, i], minlength=n)
    return d


def load_perp(v):
    """Dual vector d_i = integral of perp_grad(hat_i) . v."""
    # perp_grad(hat) . v = g2*v1 - g1*v2 with g = grad(hat)
    rotated = VectorField(v.mesh, np.column_stack([-v.values[:, 1], v.values[:, 0]]))
    return load_grad(rotated)


def lift_piecewise_constant(mesh, values, tol=1e-12):
    """L2 projection of per-triangle scalar data onto the P1 space.

    Solves M f = d with d_i = integral(hat_i * data); use this to feed
    piecewise-constant source data to the solvers, which take P1 scalars.
    """
    from .linsolve import Constraint, solve_spd
    values = np.asarray(values, dtype=float)
    if values.shape != (len(mesh.triangles),):
        raise MeshError("values must hold one number per triangle")
    contrib = (mesh.areas / 3.0) * values
    n = len(mesh.vertices)
    dual = np.zeros(n)
    for i in range(3):
        dual += np.bincount(mesh.triangles[:, i], weights=contrib, minlength=n)
    return ScalarField(mesh, solve_spd(assemble_mass(mesh), dual,
                                       Constraint.none(), tol=tol))


def weak_divergence(v, tol=1e-10):
    """L2 Riesz representative of the weak divergence of a P0 field.

    Solves M r = -load_grad(v): r is the P1 function pairing like div v
    against every nodal test function.
    """
    from .linsolve import Constraint, solve_spd
    r = solve_spd(assemble_mass(v.mesh), -load_grad(v), Constraint.none(), tol=tol)
    return ScalarField(v.mesh, r)


def weak_curl(v, tol=1e-10):
    """L2 Riesz representative of the weak curl of a P0 field (M r = load_perp)."""
    from .linsolve import Constraint, solve_spd
    r = solve_spd(assemble_mass(v.mesh), load_perp(v), Constraint.none(), tol=tol)
    return ScalarField(v.mesh, r)


def trace(f):
    """Restriction of a P1 scalar to the boundary vertices."""
    return BoundaryFunction(f.mesh, f.coeffs[f.mesh.boundary_vertices])


_GAUSS4_T = 0.5 + np.array([-0.4305681557970263, -0.16999052179242816,
                            0.16999052179242816, 0.4305681557970263])
_GAUSS4_W = 0.5 * np.array([0.34785484513745385, 0.6521451548625461,
                            0.6521451548625461, 0.34785484513745385])


def project_boundary_function(mesh, f, tol=1e-12):
    """L2(ds) projection of edgewise boundary data onto the P1 trace space.

    ``f(x, y, nu, tau)`` is evaluated at Gauss points of every boundary
    edge with the edge's frame attached, so data that jumps at corners
    (e.g. an exact normal trace) gets a well-defined projection rather
    than an arbitrary vertex value.
    """
    from .linsolve import Constraint, solve_spd
    be = mesh.boundary_edges
    pa = mesh.vertices[be[:, 0]]
    pb = mesh.vertices[be[:, 1]]
    lengths = mesh.boundary_edge_lengths
    frames = mesh.boundary_edge_frames
    dual = np.zeros(len(mesh.vertices))
    for t, w in zip(_GAUSS4_T, _GAUSS4_W):
        pts = (1.0 - t) * pa + t * pb
        vals = np.asarray(f(pts[:, 0], pts[:, 1], frames[:, 0], frames[:, 1]),
                          dtype=float)
        np.add.at(dual, be[:, 0], w * lengths * (1.0 - t) * vals)
        np.add.at(dual, be[:, 1], w * lengths * t * vals)
    bv = mesh.boundary_vertices
    b_sub = assemble_boundary_mass(mesh)[np.ix_(bv, bv)].tocsr()
    g = solve_spd(b_sub, dual[bv], Constraint.none(), tol=tol)
    return BoundaryFunction(mesh, g)


def conormal_flux(f, rho_dual, tol=1e-10):
    """Variational conormal derivative of a Galerkin solution.

    ``f`` solves the discrete problem whose volume load in dual form is
    ``rho_dual``; the returned g satisfies the residual identity

        integral(grad f . grad xi) - <rho_dual, xi> = integral_boundary(g xi ds)

    for every P1 test function xi, i.e. B g = (K f - rho_dual) on the
    boundary rows.
    """
    from .linsolve import Constraint, solve_spd
    m = f.mesh
    resid = assemble_stiffness(m) @ f.coeffs - np.asarray(rho_dual, dtype=float)
    bv = m.boundary_vertices
    b_sub = assemble_boundary_mass(m)[np.ix_(bv, bv)].tocsr()
    g = solve_spd(b_sub, resid[bv], Constraint.none(), tol=tol)
    return BoundaryFunction(m, g)


# -- field file format -------------------------------------------------


def save_field(field, path):
    """Write a field file: ``$scalar N``, ``$vector M`` or ``$boundary K``."""
    with open(path, "w") as fh:
        if isinstance(field, ScalarField):
            fh.write(f"$scalar {len(field.coeffs)}\n")
            for v in field.coeffs:
                fh.write(f"{float(v)!r}\n")
        elif isinstance(field, VectorField):
            fh.write(f"$vector {len(field.values)}\n")
            for vx, vy in field.values:
                fh.write(f"{float(vx)!r} {float(vy)!r}\n")
        elif isinstance(field, BoundaryFunction):
            fh.write(f"$boundary {len(field.values)}\n")
            for idx, v in zip(field.mesh.boundary_vertices, field.values):
                fh.write(f"{idx} {float(v)!r}\n")
        else:
            raise TypeError(f"cannot save {type(field).__name__}")


def load_field(path, mesh):
    """Read a field file written by ``save_field`` and attach it to ``mesh``."""
    with open(path) as fh:
        raw = fh.readlines()
    tokens = []
    for n, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.append((n, body.split()))
    if not tokens:
        raise MeshError("empty field file", code="MESH_FORMAT", line=1)
    n0, head = tokens[0]
    if len(head) != 2 or head[0] not in ("$scalar", "$vector", "$boundary"):
        raise MeshError("expected '$scalar N', '$vector M' or '$boundary K' header",
                        code="MESH_FORMAT", line=n0)
    count = int(head[1])
    body = tokens[1:]
    if len(body) != count:
        raise MeshError(f"expected {count} data lines, found {len(body)}",
                        code="MESH_FORMAT", line=n0)
    kind = head[0]
    if kind == "$scalar":
        if count != len(mesh.vertices):
            raise MeshError("scalar field length does not match the mesh",
                            code="MESH_FORMAT", line=n0)
        return ScalarField(mesh, [float(parts[0]) for _, parts in body])
    if kind == "$vector":
        if count != len(mesh.triangles):
            raise MeshError("vector field length does not match the mesh",
                            code="MESH_FORMAT", line=n0)
        return VectorField(mesh, [[float(parts[0]), float(parts[1])]
                                  for _, parts in body])
    values = np.zeros(len(mesh.boundary_vertices))
    seen = np.zeros(len(mesh.boundary_vertices), dtype=bool)
    for n, parts in body:
        idx = int(parts[0])
        pos = mesh.boundary_vertex_position[idx] if 0 <= idx < len(mesh.vertices) else -1
        if pos < 0:
            raise MeshError(f"vertex {idx} is not a boundary vertex",
                            code="MESH_INDEX", line=n)
        values[pos] = float(parts[1])
        seen[pos] = True
    if not seen.all():
        raise MeshError("boundary function does not cover all boundary vertices",
                        code="MESH_FORMAT", line=n0)
    return BoundaryFunction(mesh, values)
