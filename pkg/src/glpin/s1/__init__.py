"""Weighted Dirichlet minimisation for circle-valued maps: circle and ring
problems, perforated-domain problems with degree or rigid-trace conditions,
and the renormalized energy of point vortices."""

from .rings import RingSpec, circle_min, mu_ring, calibrate_gap_constant
from .perforated import PerforatedDomain, minimize_I, minimize_J, optimal_centers_search
from .renorm import renormalized_energy

__all__ = [
    "RingSpec", "circle_min", "mu_ring", "calibrate_gap_constant",
    "PerforatedDomain", "minimize_I", "minimize_J", "optimal_centers_search",
    "renormalized_energy",
]
