"""Active/external partitioning of spin-orbitals and the sector projectors.

Spin-orbitals are addressed by their position in the ordered register
``[A0↑][A0↓][A1↑][A1↓] ... [E0↑][E0↓] ...``: the ``2(n-k)`` active
spin-orbitals come first, and the two spin partners of every spatial orbital
are adjacent, so the isoenergetic partner of position ``p`` is ``p ^ 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import BoundsError, DomainError, ValidationError
from .operators import CaosTerm, FermionOperator, bits

__all__ = [
    "Decomposition",
    "NumberPolynomial",
    "OrbitalPartition",
    "Sector",
    "accidental_isoenergetic",
    "classify_key",
    "classify_term",
    "decompose_hamiltonian",
    "project",
    "sector_census",
    "to_number_polynomial",
]


class Sector(str, enum.Enum):
    INTERNAL = "internal"
    DIAGONAL = "external_diagonal"
    ISOENERGETIC = "external_isoenergetic"
    DISTINCT = "external_energetically_distinct"


#: combined off-diagonal external domain (isoenergetic + energetically distinct)
OD = "od"
EOD = Sector.DISTINCT


@dataclass(frozen=True)
class OrbitalPartition:
    """Orbital partition with per-spin-orbital energies.

    Args:
        n: number of spatial orbitals.
        k: number of external spatial orbitals (the last ``k`` in position order).
        energies: one energy per spin-orbital position (length ``2n``); spin
            partners must share their energy.
        ordering: source spatial-orbital label placed at each position
            (identity by default).  Used when tensors are reordered on load.
        iso_tol: tolerance of the energy-sum test; ``1e-9 * max|e|`` if omitted.
    """

    n: int
    k: int
    energies: tuple[float, ...]
    ordering: tuple[int, ...] = ()
    iso_tol: float | None = None
    _tol: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.k <= self.n:
            raise ValidationError(f"need n >= 1 and 0 <= k <= n, got n={self.n}, k={self.k}")
        energies = tuple(float(e) for e in self.energies)
        if len(energies) != 2 * self.n:
            raise ValidationError(f"expected {2 * self.n} spin-orbital energies, got {len(energies)}")
        object.__setattr__(self, "energies", energies)
        scale = max((abs(e) for e in energies), default=0.0)
        tol = 1e-9 * scale if self.iso_tol is None else float(self.iso_tol)
        object.__setattr__(self, "_tol", tol)
        for p in range(0, 2 * self.n, 2):
            if abs(energies[p] - energies[p + 1]) > tol:
                raise ValidationError(
                    f"spin partners {p} and {p + 1} must share an energy: {energies[p]} != {energies[p + 1]}"
                )
        ordering = tuple(int(i) for i in self.ordering) or tuple(range(self.n))
        if sorted(ordering) != list(range(self.n)):
            raise ValidationError(f"ordering must be a permutation of range({self.n}), got {ordering}")
        object.__setattr__(self, "ordering", ordering)

    @classmethod
    def from_orbital_energies(cls, n_active: int, orbital_energies: Sequence[float], **kw) -> OrbitalPartition:
        """Partition from spatial-orbital energies, the first ``n_active`` being active."""
        n = len(orbital_energies)
        return cls(n, n - n_active, tuple(np.repeat(np.asarray(orbital_energies, float), 2)), **kw)

    @property
    def n_modes(self) -> int:
        return 2 * self.n

    @property
    def n_active_modes(self) -> int:
        return 2 * (self.n - self.k)

    @property
    def active_mask(self) -> int:
        return (1 << self.n_active_modes) - 1

    @property
    def external_mask(self) -> int:
        return ((1 << self.n_modes) - 1) & ~self.active_mask

    @property
    def tolerance(self) -> float:
        return self._tol

    def iso_partner(self, p: int) -> int:
        if not 0 <= p < self.n_modes:
            raise BoundsError(f"spin-orbital {p} outside partition of {self.n_modes}")
        return p ^ 1

    def is_external(self, p: int) -> bool:
        return p >= self.n_active_modes

    def energy_sum(self, mask: int) -> float:
        e = self.energies
        return sum(e[p] for p in bits(mask))

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "energies": list(self.energies), "ordering": list(self.ordering)}


def classify_key(key: tuple[int, int], part: OrbitalPartition) -> Sector:
    c, a = key
    if (c | a) >> part.n_modes:
        raise BoundsError(f"term indices {bits(c | a)} exceed partition of {part.n_modes} spin-orbitals")
    if not ((c | a) & part.external_mask):
        return Sector.INTERNAL
    if c == a:
        return Sector.DIAGONAL
    if abs(part.energy_sum(c) - part.energy_sum(a)) <= part.tolerance:
        return Sector.ISOENERGETIC
    return Sector.DISTINCT


def classify_term(term: CaosTerm, part: OrbitalPartition) -> Sector:
    """Sector label of a canonical term.

    Scalar (identity) terms carry no external index and count as internal.
    """
    return classify_key(term.key, part)


def _sectors_of(sector) -> frozenset:
    if isinstance(sector, str) and sector == OD:
        return frozenset({Sector.ISOENERGETIC, Sector.DISTINCT})
    if isinstance(sector, (set, frozenset, tuple, list)):
        return frozenset().union(*(_sectors_of(s) for s in sector))
    return frozenset({Sector(sector)})


def project(op: FermionOperator, sector, part: OrbitalPartition) -> FermionOperator:
    """Sub-sum of ``op`` whose terms carry the requested label.

    ``sector`` is a :class:`Sector`, the string ``"od"`` (isoenergetic plus
    energetically distinct), or a collection of these.
    """
    wanted = _sectors_of(sector)
    return op.filter(lambda key: classify_key(key, part) in wanted)


class Decomposition(NamedTuple):
    internal: FermionOperator
    diagonal: FermionOperator
    isoenergetic: FermionOperator
    distinct: FermionOperator

    def total(self) -> FermionOperator:
        return self.internal + self.diagonal + self.isoenergetic + self.distinct


def decompose_hamiltonian(op: FermionOperator, part: OrbitalPartition) -> Decomposition:
    buckets: dict[Sector, dict] = {s: {} for s in Sector}
    for key, c in op.terms.items():
        buckets[classify_key(key, part)][key] = c
    return Decomposition(*(FermionOperator(buckets[s]) for s in Sector))


def sector_census(op: FermionOperator, part: OrbitalPartition) -> dict:
    """Term count and coefficient norm per sector."""
    parts = decompose_hamiltonian(op, part)
    return {
        s.value: {"terms": len(piece), "norm": piece.norm()}
        for s, piece in zip(Sector, parts)
    }


def accidental_isoenergetic(op: FermionOperator, part: OrbitalPartition) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Isoenergetic terms whose energy balance is not explained by spin pairing.

    A term is paired when the spatial orbitals of its creators and of its
    annihilators agree as multisets.  Anything else that passes the
    energy-sum test is an accidental degeneracy.
    """
    flagged = []
    for key in op.terms:
        if classify_key(key, part) is not Sector.ISOENERGETIC:
            continue
        c, a = key
        if sorted(p >> 1 for p in bits(c)) != sorted(p >> 1 for p in bits(a)):
            flagged.append((bits(c), bits(a)))
    return sorted(flagged)


@dataclass
class NumberPolynomial:
    """Polynomial in number operators: ``sum_S coeff_S prod_{p in S} n_p``."""

    monomials: dict[frozenset, float] = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return max((len(s) for s in self.monomials), default=0)

    def __len__(self) -> int:
        return len(self.monomials)

    def to_operator(self) -> FermionOperator:
        out = {}
        for s, c in self.monomials.items():
            m = 0
            for p in s:
                m |= 1 << p
            out[(m, m)] = c
        return FermionOperator(out)

    def diagonal(self, n_modes: int) -> np.ndarray:
        """Values of the polynomial on every occupation-number basis state."""
        states = np.arange(1 << n_modes)
        out = np.zeros(1 << n_modes)
        for s, c in self.monomials.items():
            m = 0
            for p in s:
                m |= 1 << p
            out += c * ((states & m) == m)
        return out

    def restrict(self, qubits_mask: int, inside: bool = True) -> NumberPolynomial:
        """Monomials contained in (``inside``) or touching the complement of a mask."""
        keep = {}
        for s, c in self.monomials.items():
            m = 0
            for p in s:
                m |= 1 << p
            if (not (m & ~qubits_mask)) == inside:
                keep[s] = c
        return NumberPolynomial(keep)


def to_number_polynomial(op: FermionOperator, part: OrbitalPartition | None = None, atol: float = 1e-12) -> NumberPolynomial:
    """Rewrite a diagonal operator as a polynomial in number operators.

    Raises:
        DomainError: a term is off-diagonal or has a complex coefficient.
    """
    mono = {}
    for key, c in op.terms.items():
        if key[0] != key[1]:
            raise DomainError(
                f"term c:{list(bits(key[0]))} a:{list(bits(key[1]))} is not diagonal"
            )
        if abs(c.imag) > atol:
            raise DomainError(f"diagonal term {list(bits(key[0]))} has complex coefficient {c}")
        if part is not None and key[0] >> part.n_modes:
            raise BoundsError("term outside partition")
        mono[frozenset(bits(key[0]))] = c.real
    return NumberPolynomial(mono)
