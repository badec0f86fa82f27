"""poslab: numerical verification of flag cross-ratio positivity, photon
identities, bracket positivity and collar inequalities for the SL(n),
Sp(2n) and SO(p+1,p+k) families."""

from .errors import (CapabilityError, DimensionError, DomainError,
                     NumericError, PoslabError, TransversalityError)
from .groups import GroupSpec, WeightForm

__all__ = [
    "CapabilityError", "DimensionError", "DomainError", "NumericError",
    "PoslabError", "TransversalityError", "GroupSpec", "WeightForm",
]

__version__ = "0.1.0"
