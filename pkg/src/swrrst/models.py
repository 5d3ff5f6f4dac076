"""Small random model Hamiltonians with a controlled perturbation strength."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .operators import ManyBodyTensors, hamiltonian_from_tensors
from .partition import OrbitalPartition

__all__ = ["toy_hamiltonian", "orbital_energies"]


def orbital_energies(n: int, k: int, gap: float = 2.0, spacing: float = 0.25) -> np.ndarray:
    """Active levels below ``-gap/2``, external levels above ``+gap/2``."""
    active = -gap / 2 - spacing * np.arange(n - k)[::-1]
    external = gap / 2 + spacing * np.arange(k)
    return np.concatenate([active, external])


def _antisymmetrize(g: np.ndarray) -> np.ndarray:
    v = g - g.transpose(1, 0, 2, 3)
    v = v - v.transpose(0, 1, 3, 2)
    return v + v.transpose(2, 3, 0, 1).conj()


def toy_hamiltonian(
    n: int = 2,
    k: int = 1,
    ratio: float = 0.1,
    seed: int = 0,
    gap: float = 2.0,
    splits: Sequence[float] | None = None,
    constant: float = 0.0,
    complex_valued: bool = False,
) -> tuple[ManyBodyTensors, OrbitalPartition]:
    """Random number-conserving Hamiltonian ``H0 + W`` and its partition.

    ``H0`` is diagonal with the levels of :func:`orbital_energies`; ``W`` has
    random one- and two-body parts scaled so that its coefficient norm is
    ``ratio * gap``.  ``splits[i]`` shifts the two spin-orbitals of spatial
    orbital ``i`` by ``+s`` and ``-s`` inside ``H0``, which breaks the
    isoenergetic degeneracy of the generator denominators while the partition
    keeps the paired energies.
    """
    rng = np.random.default_rng(seed)
    N = 2 * n
    eps = orbital_energies(n, k, gap)
    diag = np.repeat(eps, 2).astype(float)
    if splits is not None:
        for i, s in enumerate(splits):
            diag[2 * i] += s
            diag[2 * i + 1] -= s

    def noise(shape):
        x = rng.normal(size=shape)
        return x + 1j * rng.normal(size=shape) if complex_valued else x

    h1 = noise((N, N))
    h1 = h1 + h1.conj().T
    np.fill_diagonal(h1, 0.0)
    v = _antisymmetrize(noise((N,) * 4))
    w_norm = hamiltonian_from_tensors(ManyBodyTensors(h1, v)).norm()
    scale = ratio * gap / w_norm
    tensors = ManyBodyTensors(np.diag(diag) + scale * h1, scale * v, constant=constant)
    return tensors, OrbitalPartition.from_orbital_energies(n - k, eps)
