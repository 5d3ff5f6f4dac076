"""Reference implementations that share no code with the package.

Ladder matrices are built from Kronecker products of 2x2 blocks, so the
package's bit-twiddling ``to_dense`` and Wick kernel are checked against
plain linear algebra.  Qubit 0 is the least significant bit, which puts it
last in a Kronecker product.
"""

from functools import reduce

import numpy as np

I2 = np.eye(2)
Z = np.diag([1.0, -1.0])
LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
PAULI = {"I": I2.astype(complex), "X": X, "Y": Y, "Z": Z.astype(complex)}


def annihilator(p, n):
    """a_p on n modes with the Jordan-Wigner string on the lower modes."""
    factors = [I2 if q > p else LOWER if q == p else Z for q in reversed(range(n))]
    return reduce(np.kron, factors)


def creator(p, n):
    return annihilator(p, n).T.copy()


def term_matrix(creators, annihilators, n):
    """a+_{c1} ... a+_{cm} a_{am} ... a_{a1} for ascending index lists."""
    mat = np.eye(1 << n)
    for p in creators:
        mat = mat @ creator(p, n)
    for p in reversed(annihilators):
        mat = mat @ annihilator(p, n)
    return mat


def operator_matrix(terms, n):
    """Dense matrix of a {(creator tuple, annihilator tuple): coeff} dict."""
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for (c, a), coeff in terms.items():
        out += coeff * term_matrix(c, a, n)
    return out


def pauli_matrix(letters):
    """Letters printed with qubit 0 rightmost, i.e. Kronecker order."""
    return reduce(np.kron, [PAULI[ch] for ch in letters])


def classify(creators, annihilators, energies, n_active_modes, tol=1e-9):
    """Brute-force sector label from index lists and per-spin-orbital energies."""
    idx = set(creators) | set(annihilators)
    if all(p < n_active_modes for p in idx):
        return "internal"
    if sorted(creators) == sorted(annihilators):
        return "external_diagonal"
    up = sum(energies[p] for p in creators)
    down = sum(energies[p] for p in annihilators)
    if abs(up - down) <= tol * max(1.0, max(abs(e) for e in energies)):
        return "external_isoenergetic"
    return "external_energetically_distinct"


def qpe_distribution(phase, m):
    """Closed-form outcome probabilities for an eigenstate with phase in [0, 1)."""
    M = 1 << m
    y = np.arange(M)
    delta = phase - y / M
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.sin(np.pi * M * delta) ** 2
        den = (M * np.sin(np.pi * delta)) ** 2
        p = np.where(np.abs(np.sin(np.pi * delta)) < 1e-15, 1.0, num / den)
    return p


def sector_ground_energies(mat, n):
    occ = np.array([bin(s).count("1") for s in range(1 << n)])
    return {ne: float(np.linalg.eigvalsh(mat[np.ix_(occ == ne, occ == ne)])[0]) for ne in range(n + 1)}
