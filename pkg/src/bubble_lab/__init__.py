"""Desk-scale laboratory for boundary-layer bubble concentration.

Submodules
----------
exponents         critical-hyperbola algebra and regime tags
ground_state      radial shooting solver and tail fits
linearization     kernel of the linearized system, non-degeneracy checks
energy_constants  quadrature of the tail-sensitive energy integrals
domain_green      model domains, Green's function of the ball, weights
projection        projected bubbles, comparison bounds, scaling sweeps
reduced_energy    finite-dimensional energy and its critical points
cli               command-line front end
"""

from .exponents import (
    ExponentPair,
    DualExponents,
    Regime,
    classify_regime,
    concentration_exponent,
    critical_partner,
    pn_threshold,
)
from .ground_state import (
    RadialProfile,
    ShootingConfig,
    solve_ground_state,
)
from .energy_constants import EnergyConstants, compute_constants
from .domain_green import DomainModel, BoundaryPoint, green_ball
from .reduced_energy import ReducedCoefficients, find_configuration

__version__ = "0.1.0"
