"""Numerical lab for the coupled Gelfand system -Delta u = mu e^v, -Delta v = lam e^u on unit balls."""

from .grid import (RadialGrid, apply_laplacian, ball_volume, build_radial_grid,
                   dirichlet_energy, energy_form, integrate, solve_poisson)
from .solver import (BlowUpError, Nonlinearity, SolutionPair, SolverConfig, gelfand,
                     minimal_solution, newton_solve, preconditioned_residual, residual)
from .stability import (EigenPair, IterationStall, is_stable, principal_eigenpair,
                        random_dirichlet_fields, stability_quadratic_form)
from .continuation import (CurvePoint, CurveTrace, ExtremalApproximation, InvalidBracket,
                           extremal_approximation, find_fold, fold_bisect, ray_parameters,
                           sweep_ray, trace_curve)
from .verify import (InequalityReport, Step2Report, compute_step2_report, regularity_diagnostic,
                     verify_a7, verify_identity_a1, verify_lemma2, verify_lemma2_chain,
                     verify_pointwise_young)

__version__ = "0.1.0"
