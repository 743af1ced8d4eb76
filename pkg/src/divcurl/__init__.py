"""Planar div-curl solver and field decomposition toolkit on triangle meshes."""

from .bvp import (BoundReport, DivCurlData, DivCurlSolution, LeastEnergyReport,
                  check_compat_normal, check_compat_tangential, estimate_C0,
                  least_energy_check, solve_dirichlet_poisson, solve_mixed,
                  solve_neumann_fem, solve_neumann_steklov, solve_normal,
                  solve_tangential)
from .decompose import (HarmonicDecomposition, HarmonicityReport, Projection,
                        harmonic_decompose, is_harmonic, poincare_potential,
                        project_C, project_C0, project_G, project_G0)
from .errors import (CirculationDetectedError, DegenerateBError, DivCurlError,
                     EmptyGammaError, EmptyPartitionPieceError,
                     IncompatibleDataError, IncompatibleRHSError,
                     InsufficientBasisError, MeshError, NonConvergenceError,
                     NotSimplyConnectedError, SolverError)
from .fem import (BoundaryFunction, ScalarField, VectorField,
                  assemble_boundary_mass, assemble_mass, assemble_stiffness,
                  boundary_integral, boundary_l2_norm, conormal_flux, gradient,
                  l2_inner, l2_norm, lift_piecewise_constant, load_field,
                  load_grad, load_perp, perp_gradient, project_boundary_function,
                  save_field, scalar_l2_inner, scalar_l2_norm, trace,
                  volume_integral, weak_curl, weak_divergence)
from .linsolve import Constraint, smallest_eigs, solve_spd
from .mesh import (TAG_NONE, TAG_NU, TAG_TAU, BoundaryPartition, Mesh,
                   edge_frame, generate_annulus, generate_disk,
                   generate_rectangle, load_mesh, refine_uniform, save_mesh)
from .spectra import (SteklovBasis, dirichlet_lambda1, m2_gamma, mixed_lambda1,
                      neumann_lambda_m, steklov_basis)

__version__ = "0.1.0"
