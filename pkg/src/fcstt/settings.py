"""Global numerical settings: tolerances and size limits."""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-12
    propagation: float = 1e-10
    hermitian: float = 1e-12


TOL = Tolerances()

# 10 modes -> Fock dimension 1024
MAX_MODES = 10
MAX_DIM = 2**MAX_MODES
