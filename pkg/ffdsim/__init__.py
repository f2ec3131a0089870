"""
ffdsim simulates the quench dynamics of Floquet circuits whose spectrum is
free-fermionic although no Jordan-Wigner transformation diagonalizes them.

The pipeline builds the commuting transfer matrices A_M(u), reads the
single-particle pseudoenergies off the roots of the scalar polynomial
A_M(u)A_M(-u), and evaluates the edge operator <chi(t)> through site-local
MPO contractions at a cost polynomial in the chain length. For short chains
every step is checked against dense matrices.
"""

from . import config
from . import pauli
from . import circuit
from . import poly
from . import spectrum
from . import mpo
from . import dynamics


Family = pauli.Family


PauliString = pauli.PauliString


OperatorSum = pauli.OperatorSum


ProductState = pauli.ProductState


CircuitSpec = circuit.CircuitSpec


solve_spectrum = spectrum.solve_spectrum


QuenchConfig = dynamics.QuenchConfig


evolve_chi = dynamics.evolve_chi


__all__ = [
    "CircuitSpec",
    "Family",
    "OperatorSum",
    "PauliString",
    "ProductState",
    "QuenchConfig",
    "evolve_chi",
    "solve_spectrum",
]
