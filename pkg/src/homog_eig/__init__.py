"""Eigenvalues of p-Laplacian type problems with sign-changing periodic weights.

Modules: ``weights`` (periodic weights), ``discretize`` (grids, energies,
assembly), ``shoot1d`` (1-D shooting for any k and p), ``linspec`` (p = 2
pencils), ``pmin`` (first eigenvalue for any p by descent), ``oscillation``
(oscillatory-integral bounds), ``harness`` (sweeps, rates, verdicts) and
``cli``.
"""
from .errors import *  # noqa: F401,F403
from .weights import PeriodicWeight, TrigTerm, WeightStats, weight_stats  # noqa: F401
from .discretize import (CoefficientField, DiscreteFunction, Grid, build_grid,  # noqa: F401
                         project_weight, phi_energy, weighted_p_mass, assemble_stiffness,
                         assemble_weighted_mass)
from .shoot1d import EigenPair, ShootState, eigenvalue_1d, integrate_shot, spectrum_1d  # noqa: F401
from .linspec import PencilProblem, SpectrumSlice, factor_spd, pencil_spectrum  # noqa: F401
from .pmin import PminOptions, first_eigenvalue_pmin, rayleigh_general  # noqa: F401

__version__ = "0.1.0"
