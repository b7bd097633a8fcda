"""Three-body Coulomb scattering with complex-scaled Faddeev-Merkuriev equations.

The pipeline runs from particle kinematics through a Lagrange-Laguerre
discretization of the complex-scaled component equations to S-matrices and
partial cross sections for e-H, e-Ps and e+H type systems.
"""
from .kinematics import (PROTON_MASS, ThreeBodySystem, build_system, e_h_system, e_ps_system,
                         positron_h_system)

__version__ = "0.1.0"

__all__ = ["PROTON_MASS", "ThreeBodySystem", "build_system", "e_h_system", "e_ps_system",
           "positron_h_system", "__version__"]
