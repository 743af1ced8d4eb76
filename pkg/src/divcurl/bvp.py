"""Normal, tangential and mixed div-curl boundary value problems.

Each solver builds the field from potentials: zero-trace Poisson
solutions absorb the divergence and vorticity sources, and a harmonic
component (a gradient or perp-gradient of a harmonic potential) matches
the boundary data.  Alongside the field every solver evaluates the
corresponding discrete energy bound with this mesh's own eigenvalues,
so the reported inequality is a theorem of the discretization rather
than an approximation of a continuum constant.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyPartitionPieceError, IncompatibleDataError,
                     InsufficientBasisError, NonConvergenceError)
from .fem import (BoundaryFunction, ScalarField, VectorField,
                  assemble_boundary_mass, assemble_mass, assemble_stiffness,
                  boundary_integral, boundary_l2_norm, conormal_flux, gradient,
                  l2_inner, l2_norm, perp_gradient, scalar_l2_norm,
                  volume_integral)
from .linsolve import Constraint, solve_spd
from .mesh import BoundaryPartition, Mesh
from .spectra import dirichlet_lambda1, m2_gamma, steklov_basis

__all__ = [
    "DivCurlData", "BoundReport", "DivCurlSolution", "LeastEnergyReport",
    "COMPAT_NORMAL", "COMPAT_TANGENTIAL", "COMPAT_NEUMANN",
    "check_compat_normal", "check_compat_tangential",
    "solve_dirichlet_poisson", "solve_neumann_fem", "solve_neumann_steklov",
    "solve_normal", "solve_tangential", "solve_mixed",
    "estimate_C0", "least_energy_check",
]

# Names of the integral identities the data must satisfy; error payloads
# and reports cite these so a failed run says which condition broke.
COMPAT_NORMAL = "div-flux balance: integral_domain(rho) = integral_boundary(eta_nu ds)"
COMPAT_TANGENTIAL = ("curl-circulation balance: integral_domain(omega) = "
                     "integral_boundary(eta_tau ds)")
COMPAT_NEUMANN = "zero net flux: integral_boundary(eta ds) = 0"


@dataclass(frozen=True, eq=False, repr=False)
class DivCurlData:
    """Sources and boundary data of a div-curl problem.

    rho / omega: prescribed divergence and curl (P1 scalars; None = zero).
    eta_nu / eta_tau: prescribed normal / tangential boundary components.
    partition: boundary split for the mixed problem.
    """

    mesh: Mesh
    rho: ScalarField | None = None
    omega: ScalarField | None = None
    eta_nu: BoundaryFunction | None = None
    eta_tau: BoundaryFunction | None = None
    partition: BoundaryPartition | None = None

    def __repr__(self):
        have = [n for n in ("rho", "omega", "eta_nu", "eta_tau", "partition")
                if getattr(self, n) is not None]
        return f"DivCurlData({', '.join(have)})"

    def rho_or_zero(self):
        return self.rho if self.rho is not None else ScalarField.zeros(self.mesh)

    def omega_or_zero(self):
        return self.omega if self.omega is not None else ScalarField.zeros(self.mesh)

    def eta_nu_or_zero(self):
        return (self.eta_nu if self.eta_nu is not None
                else BoundaryFunction.zeros(self.mesh))

    def eta_tau_or_zero(self):
        return (self.eta_tau if self.eta_tau is not None
                else BoundaryFunction.zeros(self.mesh))


@dataclass(frozen=True)
class BoundReport:
    """One evaluated energy inequality ||v|| <= combination of data norms.

    ``terms`` holds the named additive pieces; ``rhs`` is their
    combination (plain sum for the normal/tangential bounds, root of the
    summed squares for the mixed bound) and ``slack = rhs - lhs``.
    """

    kind: str
    lhs: float
    terms: dict
    rhs: float
    slack: float
    satisfied: bool
    notes: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "kind": self.kind,
            "lhs": self.lhs,
            "terms": dict(self.terms),
            "rhs": self.rhs,
            "slack": self.slack,
            "satisfied": self.satisfied,
            "notes": dict(self.notes),
        }


def _make_report(kind, lhs, terms, combine="sum", notes=None):
    terms = {k: float(v) for k, v in terms.items()}
    if combine == "sum":
        rhs = float(sum(terms.values()))
    elif combine == "sqrt-sum":
        rhs = float(np.sqrt(sum(terms.values())))
    else:
        raise ValueError(combine)
    slack = rhs - lhs
    notes = {k: float(v) for k, v in (notes or {}).items()}
    return BoundReport(kind=kind, lhs=float(lhs), terms=terms, rhs=rhs,
                       slack=float(slack), satisfied=bool(slack >= -1e-9 * rhs),
                       notes=notes)


@dataclass(frozen=True, eq=False, repr=False)
class DivCurlSolution:
    """Solver output: the field, its potentials and the bound report."""

    v: VectorField
    report: BoundReport
    phi: ScalarField
    psi: ScalarField
    chi: ScalarField | None = None
    flux: BoundaryFunction | None = None
    compat_residual: float | None = None

    def __repr__(self):
        return (f"DivCurlSolution(kind={self.report.kind!r}, "
                f"|v|={l2_norm(self.v):.6g}, satisfied={self.report.satisfied})")


# -- compatibility checks ----------------------------------------------


def check_compat_normal(rho, eta_nu):
    """Residual of the div-flux balance (exact discrete integrals)."""
    return volume_integral(rho) - boundary_integral(eta_nu)


def check_compat_tangential(omega, eta_tau):
    """Residual of the curl-circulation balance."""
    return volume_integral(omega) - boundary_integral(eta_tau)


def _compat_scale(rho, eta):
    """Tolerance scale |rho|_L1 + |eta|_L1 + floor, via interpolated moduli."""
    m = rho.mesh
    l1_rho = float(np.sum(assemble_mass(m) @ np.abs(rho.coeffs)))
    l1_eta = float(np.sum(assemble_boundary_mass(m) @ np.abs(eta.extended())))
    return l1_rho + l1_eta + 1e-300


# -- scalar building blocks --------------------------------------------


def solve_dirichlet_poisson(rho, tol=1e-10):
    """Zero-trace Galerkin solution of K phi = M rho.

    Satisfies the discrete estimates ||phi|| <= ||rho|| / lambda1 and
    ||grad phi|| <= ||rho|| / sqrt(lambda1) with lambda1 the zero-trace
    eigenvalue of this mesh.
    """
    m = rho.mesh
    phi = solve_spd(assemble_stiffness(m), assemble_mass(m) @ rho.coeffs,
                    Constraint.dirichlet_zero(m.boundary_vertices), tol=tol)
    return ScalarField(m, phi)


def solve_neumann_fem(eta, tol=1e-10, compat_tol=1e-9):
    """Mean-zero solution of the pure-flux problem K chi = B eta.

    The data must have zero total flux: |integral(eta ds)| must not
    exceed compat_tol times the L1 scale of eta.
    """
    m = eta.mesh
    resid = boundary_integral(eta)
    scale = float(np.sum(assemble_boundary_mass(m) @ np.abs(eta.extended()))) + 1e-300
    if abs(resid) > compat_tol * scale:
        raise IncompatibleDataError(
            f"{COMPAT_NEUMANN} violated: residual = {resid:.6e} "
            f"(tolerance {compat_tol * scale:.3e})",
            condition=COMPAT_NEUMANN, residual=resid)
    M = assemble_mass(m)
    b = assemble_boundary_mass(m) @ eta.extended()
    chi = solve_spd(assemble_stiffness(m), b,
                    Constraint.mean_zero(M @ np.ones(M.shape[0])), tol=tol)
    return ScalarField(m, chi)


def solve_neumann_steklov(eta, terms, basis, compat_tol=1e-9):
    """Truncated eigenfunction-series solution of the pure-flux problem.

    chi_M = sum_{j=1..terms} (eta_j / delta_j) s_j with eta_j the
    boundary expansion coefficients of eta; returned mean-zero.
    """
    m = eta.mesh
    terms = int(terms)
    if terms < 0:
        raise ValueError("terms must be >= 0")
    if len(basis) < terms + 1:
        raise InsufficientBasisError(
            f"series with {terms} terms needs {terms + 1} Steklov pairs, "
            f"basis has {len(basis)}")
    resid = boundary_integral(eta)
    scale = float(np.sum(assemble_boundary_mass(m) @ np.abs(eta.extended()))) + 1e-300
    if abs(resid) > compat_tol * scale:
        raise IncompatibleDataError(
            f"{COMPAT_NEUMANN} violated: residual = {resid:.6e}",
            condition=COMPAT_NEUMANN, residual=resid)
    coeffs = np.zeros(len(m.vertices))
    if terms > 0:
        hat = basis.boundary_coefficients(eta)
        for j in range(1, terms + 1):
            coeffs += (hat[j] / basis.eigenvalues[j]) * basis.fields[j].coeffs
    M = assemble_mass(m)
    coeffs -= float(np.sum(M @ coeffs)) / m.area
    return ScalarField(m, coeffs)


# -- spectral constants cache -------------------------------------------

_c0_cache = weakref.WeakKeyDictionary()


def estimate_C0(m, tol=1e-8, seed=0, max_iter=2000):
    """Discrete operator norm of the source-to-boundary-flux map.

    Measures the largest ratio ||flux of the zero-trace Poisson
    solution||_L2(ds) / ||source||_L2 over the P1 source space, by power
    iteration on the composed self-adjoint operator (deterministic seed).
    """
    cached = _c0_cache.get(m)
    if cached is not None and cached[1] <= tol:
        return cached[0]

    import scipy.sparse.linalg as spla

    K = assemble_stiffness(m).tocsr()
    M = assemble_mass(m).tocsc()
    bv = m.boundary_vertices
    iv = m.interior_vertices
    K_ii = spla.splu(K[iv][:, iv].tocsc()) if len(iv) else None
    B_bb = assemble_boundary_mass(m)[np.ix_(bv, bv)].tocsc()
    B_lu = spla.splu(B_bb)
    M_lu = spla.splu(M)
    K_bi = K[bv][:, iv].tocsr()
    K_ib = K[iv][:, bv].tocsr()
    M_full = M.tocsr()

    def apply_R(r):
        # r (full P1 coeffs) -> boundary dual of the flux: (K G_D(M r) - M r)|_b
        y = M_full @ r
        if K_ii is None:
            return -y[bv]
        phi_i = K_ii.solve(y[iv])
        return K_bi @ phi_i - y[bv]

    def apply_Rt(w):
        # transpose of apply_R against a boundary dual
        wb = np.zeros(len(m.vertices))
        wb[bv] = w
        if K_ii is None:
            return -(M_full @ wb)
        full = np.zeros(len(m.vertices))
        full[iv] = K_ii.solve(K_ib @ w)
        return M_full @ full - M_full @ wb

    rng = np.random.default_rng(seed)
    r = rng.standard_normal(len(m.vertices))
    r /= np.sqrt(float(r @ (M_full @ r)))
    value = 0.0
    for _ in range(max_iter):
        w = B_lu.solve(apply_R(r))
        z = apply_Rt(w)
        new_value = float(r @ z)  # = ||flux||^2_B for M-normalized r
        r_next = M_lu.solve(z)
        nrm = np.sqrt(float(r_next @ (M_full @ r_next)))
        if nrm == 0.0:
            break
        r = r_next / nrm
        if value > 0.0 and abs(new_value - value) <= 1e-3 * tol * new_value:
            value = new_value
            break
        value = new_value
    else:
        raise NonConvergenceError(
            f"power iteration for the flux operator norm did not settle in "
            f"{max_iter} sweeps", iterations=max_iter)
    c0 = float(np.sqrt(max(value, 0.0)))
    _c0_cache[m] = (c0, tol)
    return c0


def _constants(m, eig_tol):
    lam1 = dirichlet_lambda1(m, tol=eig_tol)
    basis = steklov_basis(m, 2, tol=eig_tol)
    delta1 = float(basis.eigenvalues[1])
    c0 = estimate_C0(m, tol=min(1e-6, eig_tol * 100))
    return lam1, delta1, c0


# -- the three boundary value problems ----------------------------------


def solve_normal(data, tol=1e-10, compat_tol=1e-9, eig_tol=1e-8,
                 steklov_terms=None):
    """Least-energy solution with the normal component prescribed on all of
    the boundary.

    Construction: phi0 and psi0 are the zero-trace Poisson solutions for
    the divergence and vorticity sources; the variational flux of phi0
    augments the boundary data, and a pure-flux potential chi matches it:
    v = perp_grad(psi0) - grad(phi0) + grad(chi).  The report evaluates

        ||v|| <= (||rho|| + ||omega||)/sqrt(lambda1)
                 + (||eta_nu||_ds + C0 ||rho||)/sqrt(delta1)

    with this mesh's own constants.  ``steklov_terms`` switches the
    pure-flux step to the truncated eigenfunction series (cross-check
    mode).
    """
    m = data.mesh
    rho, omega = data.rho_or_zero(), data.omega_or_zero()
    eta_nu = data.eta_nu_or_zero()
    residual = check_compat_normal(rho, eta_nu)
    scale = _compat_scale(rho, eta_nu)
    if abs(residual) > compat_tol * scale:
        raise IncompatibleDataError(
            f"{COMPAT_NORMAL} violated: residual = {residual:.6e} "
            f"(tolerance {compat_tol * scale:.3e})",
            condition=COMPAT_NORMAL, residual=residual)

    phi0 = solve_dirichlet_poisson(rho, tol=tol)
    psi0 = solve_dirichlet_poisson(omega, tol=tol)
    g = conormal_flux(phi0, assemble_mass(m) @ rho.coeffs, tol=tol)
    eta_total = eta_nu + g
    if steklov_terms is None:
        chi = solve_neumann_fem(eta_total, tol=tol, compat_tol=1.0)
    else:
        basis = steklov_basis(m, steklov_terms + 1, tol=eig_tol)
        chi = solve_neumann_steklov(eta_total, steklov_terms, basis, compat_tol=1.0)
    v = perp_gradient(psi0) - gradient(phi0) + gradient(chi)

    lam1, delta1, c0 = _constants(m, eig_tol)
    norm_rho, norm_omega = scalar_l2_norm(rho), scalar_l2_norm(omega)
    terms = {
        "lambda1_term": (norm_rho + norm_omega) / np.sqrt(lam1),
        "delta1_term": boundary_l2_norm(eta_nu) / np.sqrt(delta1),
        "C0_term": c0 * norm_rho / np.sqrt(delta1),
    }
    report = _make_report(
        "normal", l2_norm(v), terms,
        notes={"lambda1": lam1, "delta1": delta1, "C0": c0,
               "compat_residual": residual})
    return DivCurlSolution(v=v, report=report, phi=phi0, psi=psi0, chi=chi,
                           flux=g, compat_residual=residual)


def solve_tangential(data, tol=1e-10, compat_tol=1e-9, eig_tol=1e-8,
                     steklov_terms=None):
    """Least-energy solution with the tangential component prescribed on
    all of the boundary.

    Mirror of the normal problem: the pure-flux potential now feeds a
    perp-gradient, v = perp_grad(psi0) - grad(phi0) - perp_grad(chi).
    The bound replaces ||rho|| by ||omega|| in the flux term; the report
    also carries the alternative reading that keeps a (zero) eta_nu norm
    there, since only the tangential data enters this construction.
    """
    m = data.mesh
    rho, omega = data.rho_or_zero(), data.omega_or_zero()
    eta_tau = data.eta_tau_or_zero()
    residual = check_compat_tangential(omega, eta_tau)
    scale = _compat_scale(omega, eta_tau)
    if abs(residual) > compat_tol * scale:
        raise IncompatibleDataError(
            f"{COMPAT_TANGENTIAL} violated: residual = {residual:.6e} "
            f"(tolerance {compat_tol * scale:.3e})",
            condition=COMPAT_TANGENTIAL, residual=residual)

    phi0 = solve_dirichlet_poisson(rho, tol=tol)
    psi0 = solve_dirichlet_poisson(omega, tol=tol)
    g = conormal_flux(psi0, assemble_mass(m) @ omega.coeffs, tol=tol)
    eta_total = eta_tau + g
    if steklov_terms is None:
        chi = solve_neumann_fem(eta_total, tol=tol, compat_tol=1.0)
    else:
        basis = steklov_basis(m, steklov_terms + 1, tol=eig_tol)
        chi = solve_neumann_steklov(eta_total, steklov_terms, basis, compat_tol=1.0)
    v = perp_gradient(psi0) - gradient(phi0) - perp_gradient(chi)

    lam1, delta1, c0 = _constants(m, eig_tol)
    norm_rho, norm_omega = scalar_l2_norm(rho), scalar_l2_norm(omega)
    eta_nu_norm = (boundary_l2_norm(data.eta_nu)
                   if data.eta_nu is not None else 0.0)
    terms = {
        "lambda1_term": (norm_rho + norm_omega) / np.sqrt(lam1),
        "delta1_term": boundary_l2_norm(eta_tau) / np.sqrt(delta1),
        "C0_term": c0 * norm_omega / np.sqrt(delta1),
    }
    report = _make_report(
        "tangential", l2_norm(v), terms,
        notes={"lambda1": lam1, "delta1": delta1, "C0": c0,
               "compat_residual": residual,
               "delta1_term_eta_nu_reading": eta_nu_norm / np.sqrt(delta1)})
    return DivCurlSolution(v=v, report=report, phi=phi0, psi=psi0, chi=chi,
                           flux=g, compat_residual=residual)


def solve_mixed(data, tol=1e-10, eig_tol=1e-8):
    """Solution with normal data on gamma_nu and tangential data on gamma_tau.

    No integral compatibility is required.  Each potential solves a
    Poisson problem with natural boundary data on its own piece and zero
    trace on the other (interface vertices go to the Dirichlet side):

        K phi = M rho   - B_{gamma_nu} eta_nu,  phi = 0 on gamma_tau,
        K psi = M omega - B_{gamma_tau} eta_tau, psi = 0 on gamma_nu,

    and v = perp_grad(psi) - grad(phi).  The two pieces are exactly
    L2-orthogonal, and the report combines the per-potential bounds

        ||grad phi||^2 <= M2(gamma_tau) (||rho||^2 + ||eta_nu||^2_{gamma_nu})

    (and its mirror) into ||v||^2 <= sum.
    """
    m = data.mesh
    partition = data.partition
    if partition is None:
        raise EmptyPartitionPieceError(
            "the mixed problem needs a BoundaryPartition (or NU/TAU tags)")
    rho, omega = data.rho_or_zero(), data.omega_or_zero()
    eta_nu, eta_tau = data.eta_nu_or_zero(), data.eta_tau_or_zero()

    K = assemble_stiffness(m)
    M = assemble_mass(m)
    rows_nu = sorted(partition.gamma_nu)
    rows_tau = sorted(partition.gamma_tau)
    B_nu = assemble_boundary_mass(m, rows_nu)
    B_tau = assemble_boundary_mass(m, rows_tau)

    b_phi = M @ rho.coeffs - B_nu @ eta_nu.extended()
    phi = ScalarField(m, solve_spd(
        K, b_phi, Constraint.dirichlet_zero(partition.vertices_of("tau")), tol=tol))
    b_psi = M @ omega.coeffs - B_tau @ eta_tau.extended()
    psi = ScalarField(m, solve_spd(
        K, b_psi, Constraint.dirichlet_zero(partition.vertices_of("nu")), tol=tol))
    v = perp_gradient(psi) - gradient(phi)

    m2_tau = m2_gamma(m, rows_tau, tol=eig_tol)  # space of phi: zero trace on tau
    m2_nu = m2_gamma(m, rows_nu, tol=eig_tol)
    phi_data_sq = scalar_l2_norm(rho) ** 2 + boundary_l2_norm(eta_nu, rows_nu) ** 2
    psi_data_sq = scalar_l2_norm(omega) ** 2 + boundary_l2_norm(eta_tau, rows_tau) ** 2
    terms = {
        "m2_phi_term": m2_tau * phi_data_sq,
        "m2_psi_term": m2_nu * psi_data_sq,
    }
    report = _make_report(
        "mixed", l2_norm(v), terms, combine="sqrt-sum",
        notes={"m2_gamma_tau": m2_tau, "m2_gamma_nu": m2_nu,
               "grad_phi_norm": l2_norm(gradient(phi)),
               "grad_psi_norm": l2_norm(gradient(psi))})
    return DivCurlSolution(v=v, report=report, phi=phi, psi=psi,
                           compat_residual=0.0)


# -- least-energy diagnostics -------------------------------------------


@dataclass(frozen=True)
class LeastEnergyReport:
    """Normalized inner products of a solution against circulation fields."""

    cosines: tuple
    max_abs_cosine: float

    def is_least_energy(self, tol):
        return self.max_abs_cosine <= tol


def least_energy_check(v, circulation_basis):
    """Angle of v against each circulation field.

    A least-energy solution is orthogonal to every harmonic circulation
    field, so ||v + t b||^2 = ||v||^2 + t^2 ||b||^2 grows for any t != 0.
    """
    norm_v = l2_norm(v)
    cosines = []
    for b in circulation_basis:
        denom = norm_v * l2_norm(b)
        cosines.append(l2_inner(v, b) / denom if denom > 0.0 else 0.0)
    max_abs = max((abs(c) for c in cosines), default=0.0)
    return LeastEnergyReport(cosines=tuple(cosines), max_abs_cosine=float(max_abs))
