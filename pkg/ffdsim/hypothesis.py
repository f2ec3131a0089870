"""
Strategies for the hypothesis property based testing library.

Phases are drawn from [0.2, 1.3] radians, which keeps |cos phi| and
|sin phi| away from zero so that roots stay well separated for short chains.
"""

import hypothesis.strategies as st
import numpy as np

from ffdsim.circuit import CircuitSpec
from ffdsim.pauli import Family, PauliString, ProductState, make_h

phases = st.floats(min_value=0.2, max_value=1.3, allow_nan=False)

families = st.sampled_from(list(Family))

letters = st.sampled_from("IXYZ")


def pauli_strings(M: int) -> st.SearchStrategy[PauliString]:
    return st.tuples(st.text(letters, min_size=M, max_size=M), st.integers(0, 3)).map(
        lambda t: PauliString.from_label(t[0], t[1])
    )


def generators(M: int) -> st.SearchStrategy[PauliString]:
    """h_m for 1 <= m <= M."""
    return st.integers(1, M).map(lambda m: make_h(m, M))


@st.composite
def circuit_specs(draw, family=None, max_periods: int = 3) -> CircuitSpec:
    """Random circuits of any family with 1..max_periods periods."""
    fam = Family(family) if family is not None else draw(families)
    M = fam.period * draw(st.integers(1, max_periods))
    return CircuitSpec(fam, tuple(draw(st.lists(phases, min_size=M, max_size=M))))


@st.composite
def product_states(draw, M: int) -> ProductState:
    angles = draw(st.lists(st.floats(0.0, np.pi), min_size=M, max_size=M))
    rel = draw(st.lists(st.floats(0.0, 2 * np.pi), min_size=M, max_size=M))
    amps = np.array([[np.cos(a / 2), np.exp(1j * r) * np.sin(a / 2)] for a, r in zip(angles, rel)])
    return ProductState(amps)


spectral_parameters = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
