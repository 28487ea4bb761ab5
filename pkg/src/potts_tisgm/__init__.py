"""Translation-invariant splitting Gibbs measures of the ferromagnetic
q-state Potts model on a Cayley tree: enumeration, counting, critical
temperatures and exhaustive finite-volume verification."""

__version__ = "0.1.0"

from .model import (BoundaryLaw, MeasureDescriptor, PottsParams, t_cr, theta_critical,
                    theta_from_temperature)
from .recursion import (RootSet, phi, psi_at_thetac, recursion_map, scalar_map_fm, solve_phi,
                        solve_quadratic_k2, vector_residual)
from .critical import (CriticalPoint, critical_temperatures, eta, theta_m, theta_m_closed_k2,
                       x_star, xi)
from .enumeration import (RegimeClassification, boundary_law_vector, canonicalize,
                          complement_descriptor, count_tisgm, enumerate_tisgm)

__all__ = [
    "PottsParams", "BoundaryLaw", "MeasureDescriptor", "theta_from_temperature",
    "theta_critical", "t_cr", "RootSet", "recursion_map", "vector_residual", "scalar_map_fm",
    "phi", "solve_phi", "solve_quadratic_k2", "psi_at_thetac", "CriticalPoint", "x_star",
    "theta_m", "theta_m_closed_k2", "critical_temperatures", "xi", "eta",
    "RegimeClassification", "count_tisgm", "enumerate_tisgm", "complement_descriptor",
    "canonicalize", "boundary_law_vector",
]
