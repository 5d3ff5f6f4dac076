import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from swrrst import FermionOperator, hamiltonian_from_tensors, toy_hamiltonian  # noqa: E402

settings.register_profile("ci", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def random_operator(rng, n, n_terms=6, conserving=False, complex_coeffs=True):
    """Random FermionOperator on n modes as a {(c, a): coeff} mask dict."""
    terms = {}
    for _ in range(n_terms):
        c = int(rng.integers(0, 1 << n))
        if conserving:
            k = bin(c).count("1")
            pool = rng.permutation(n)[:k]
            a = sum(1 << int(p) for p in pool)
        else:
            a = int(rng.integers(0, 1 << n))
        coeff = rng.normal() + (1j * rng.normal() if complex_coeffs else 0)
        terms[(c, a)] = coeff
    return FermionOperator(terms)


@st.composite
def operators(draw, n=4, max_terms=5, conserving=False):
    """Hypothesis strategy for small FermionOperators."""
    count = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(count):
        c = draw(st.integers(0, (1 << n) - 1))
        if conserving:
            perm = draw(st.permutations(range(n)))
            a = sum(1 << p for p in perm[: bin(c).count("1")])
        else:
            a = draw(st.integers(0, (1 << n) - 1))
        re = draw(st.floats(-2, 2, allow_nan=False))
        im = draw(st.floats(-2, 2, allow_nan=False))
        terms[(c, a)] = complex(re, im)
    return FermionOperator(terms)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def toy():
    """n=2, k=1 model with ||W||/gap = 0.1 and paired (degenerate) levels."""
    tensors, part = toy_hamiltonian(2, 1, ratio=0.1, seed=0, constant=0.3)
    return hamiltonian_from_tensors(tensors), part, tensors


@pytest.fixture(scope="session")
def split_toy():
    """Same model with the spin pairs of H0 split, so od denominators are nonzero."""
    tensors, part = toy_hamiltonian(2, 1, ratio=0.1, seed=0, splits=(0.2, 0.5), constant=0.3)
    return hamiltonian_from_tensors(tensors), part, tensors
