"""Jordan-Wigner encoding, Pauli-level locality census, number-operator rotations.

Qubit ``p`` holds spin-orbital ``p`` (little-endian).  A Pauli string is kept
as a pair of bitmasks ``(x, z)`` and stands for ``i^{|x&z|} X^x Z^z``, so a
qubit with both bits set carries a ``Y``.  Letter strings are printed with
qubit 0 rightmost, matching the bit order of basis-state indices.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .errors import BoundsError, CapacityError, ParseError, ValidationError
from .operators import FermionOperator, bits, settings
from .partition import NumberPolynomial, OrbitalPartition, Sector, classify_key

__all__ = [
    "LocalityReport",
    "PauliOperator",
    "PauliString",
    "RotationSchedule",
    "jw_map",
    "locality_report",
    "schedule_number_exponential",
    "support_width",
]

PRUNE = 1e-12
_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTER.items()}


def _popcount(arr):
    return np.bitwise_count(arr).astype(np.int64)


def _string_product(x1: int, z1: int, x2: int, z2: int) -> tuple[int, int, complex]:
    x, z = x1 ^ x2, z1 ^ z2
    k = (x1 & z1).bit_count() + (x2 & z2).bit_count() - (x & z).bit_count() + 2 * (z1 & x2).bit_count()
    return x, z, 1j ** (k % 4)


@dataclass(frozen=True)
class PauliString:
    """Single Pauli string with a unit phase."""

    x: int
    z: int
    n_qubits: int
    phase: complex = 1.0

    @classmethod
    def from_letters(cls, letters: str, phase: complex = 1.0) -> PauliString:
        x = z = 0
        for q, ch in enumerate(reversed(letters.upper())):
            if ch not in _BITS:
                raise ValidationError(f"bad Pauli letter {ch!r}")
            bx, bz = _BITS[ch]
            x |= bx << q
            z |= bz << q
        return cls(x, z, len(letters), phase)

    @property
    def letters(self) -> str:
        return "".join(
            _LETTER[((self.x >> q) & 1, (self.z >> q) & 1)] for q in reversed(range(self.n_qubits))
        )

    @property
    def support(self) -> tuple[int, ...]:
        return bits(self.x | self.z)

    def __mul__(self, other: PauliString) -> PauliString:
        x, z, ph = _string_product(self.x, self.z, other.x, other.z)
        return PauliString(x, z, max(self.n_qubits, other.n_qubits), self.phase * other.phase * ph)

    def __str__(self) -> str:
        return f"{_fmt(self.phase)} {self.letters}"


def _fmt(w: complex) -> str:
    w = complex(w)
    if w.imag == 0:
        return f"{w.real:.17g}"
    return f"{w.real:.17g}{w.imag:+.17g}j"


class PauliOperator:
    """Weighted sum of Pauli strings keyed by ``(x, z)`` masks."""

    __slots__ = ("terms", "n_qubits")

    def __init__(self, terms: Mapping[tuple[int, int], complex] | None = None, n_qubits: int = 0):
        self.terms = {k: complex(v) for k, v in (terms or {}).items() if abs(v) > PRUNE}
        top = max((x | z for x, z in self.terms), default=0).bit_length()
        self.n_qubits = max(n_qubits, top)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        for (x, z), w in sorted(self.terms.items()):
            yield PauliString(x, z, self.n_qubits), w

    def __add__(self, other: PauliOperator) -> PauliOperator:
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return PauliOperator(out, max(self.n_qubits, other.n_qubits))

    def __mul__(self, other):
        if isinstance(other, PauliOperator):
            out: dict = {}
            for (x1, z1), w1 in self.terms.items():
                for (x2, z2), w2 in other.terms.items():
                    x, z, ph = _string_product(x1, z1, x2, z2)
                    out[(x, z)] = out.get((x, z), 0) + w1 * w2 * ph
            return PauliOperator(out, max(self.n_qubits, other.n_qubits))
        return PauliOperator({k: v * other for k, v in self.terms.items()}, self.n_qubits)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(v) ** 2 for v in self.terms.values())))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return all(abs(v.imag) <= atol for v in self.terms.values())

    def weights_real(self, atol: float = 1e-12) -> dict[tuple[int, int], float]:
        if not self.is_hermitian(atol):
            raise ValidationError("Pauli weights are not real")
        return {k: v.real for k, v in self.terms.items()}

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """``P @ psi`` without building a matrix."""
        states = np.arange(psi.shape[0])
        out = np.zeros_like(psi, dtype=complex)
        for (x, z), w in self.terms.items():
            out[states ^ x] += _string_values(x, z, states) * w * psi
        return out

    def to_dense(self, n_qubits: int | None = None) -> np.ndarray:
        n = self.n_qubits if n_qubits is None else n_qubits
        if n > settings.dense_cap:
            raise CapacityError(f"dense matrix for {n} qubits exceeds cap {settings.dense_cap}")
        if n < self.n_qubits:
            raise BoundsError(f"operator acts on {self.n_qubits} qubits, asked for {n}")
        states = np.arange(1 << n)
        mat = np.zeros((1 << n, 1 << n), dtype=complex)
        for (x, z), w in self.terms.items():
            mat[states ^ x, states] += w * _string_values(x, z, states)
        return mat

    def to_text(self) -> str:
        return "".join(f"{_fmt(w)} {s.letters}\n" for s, w in self)

    @classmethod
    def from_text(cls, text: str) -> PauliOperator:
        out: dict = {}
        n = 0
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("expected 'weight letters'", lineno)
            try:
                w = complex(parts[0])
                s = PauliString.from_letters(parts[1])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            out[(s.x, s.z)] = out.get((s.x, s.z), 0) + w
            n = max(n, s.n_qubits)
        return cls(out, n)

    def __repr__(self) -> str:
        return f"PauliOperator({len(self)} strings on {self.n_qubits} qubits)"


def _string_values(x: int, z: int, states: np.ndarray) -> np.ndarray:
    phase = 1j ** ((x & z).bit_count() % 4)
    return phase * (1.0 - 2.0 * (_popcount(states & z) & 1))


def _ladder(p: int, creator: bool) -> dict:
    low = (1 << p) - 1
    xp = 1 << p
    s = -0.5j if creator else 0.5j
    return {(xp, low): 0.5, (xp, low | xp): s}


@lru_cache(maxsize=65536)
def _jw_term(key: tuple[int, int]) -> tuple:
    c, a = key
    ops = [(p, True) for p in bits(c)] + [(p, False) for p in reversed(bits(a))]
    acc = {(0, 0): 1.0 + 0j}
    for p, cre in ops:
        nxt: dict = {}
        for (x1, z1), w1 in acc.items():
            for (x2, z2), w2 in _ladder(p, cre).items():
                x, z, ph = _string_product(x1, z1, x2, z2)
                nxt[(x, z)] = nxt.get((x, z), 0) + w1 * w2 * ph
        acc = {k: v for k, v in nxt.items() if v != 0}
    return tuple(acc.items())


def jw_map(A: FermionOperator, n_qubits: int | None = None) -> PauliOperator:
    """Jordan-Wigner image with ``a_p† -> (X_p - iY_p)/2 Z_{p-1}...Z_0``."""
    n = A.n_modes if n_qubits is None else n_qubits
    if A.n_modes > n:
        raise BoundsError(f"operator touches spin-orbital {A.n_modes - 1} but only {n} qubits given")
    out: dict = {}
    for key, coeff in A.terms.items():
        for k, w in _jw_term(key):
            out[k] = out.get(k, 0) + coeff * w
    return PauliOperator(out, n)


def support_width(s: PauliString | tuple[int, int], part: OrbitalPartition) -> tuple[int, int, bool]:
    """``(width, max_qubit, touches_external)``; the identity has width 0 and max qubit -1."""
    x, z = (s.x, s.z) if isinstance(s, PauliString) else s
    m = x | z
    if not m:
        return 0, -1, False
    lo = (m & -m).bit_length() - 1
    hi = m.bit_length() - 1
    return hi - lo + 1, hi, bool(m & part.external_mask)


def _unpaired_external_flip(x: int, part: OrbitalPartition) -> bool:
    ext = x & part.external_mask
    return any(not (x >> (q ^ 1)) & 1 for q in bits(ext))


@dataclass
class LocalityReport:
    """Per-sector support histograms and locality violation counts."""

    sectors: dict[str, dict] = field(default_factory=dict)
    examples: dict[str, list[str]] = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return sum(s["violations"] for s in self.sectors.values())

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"sectors": self.sectors, "violations": self.violations, "examples": self.examples}


def _census(P: PauliOperator, part: OrbitalPartition, rule) -> tuple[dict, list[str]]:
    widths: Counter = Counter()
    touches: Counter = Counter()
    bad = []
    for s, _ in P:
        w, _, _ = support_width(s, part)
        widths[w] += 1
        touches[((s.x | s.z) & part.external_mask).bit_count()] += 1
        if rule(s.x, s.z):
            bad.append(s.letters)
    entry = {
        "strings": len(P),
        "width_histogram": {str(k): widths[k] for k in sorted(widths)},
        "external_touch_histogram": {str(k): touches[k] for k in sorted(touches)},
        "violations": len(bad),
    }
    return entry, bad[:5]


def locality_report(op: FermionOperator | PauliOperator, part: OrbitalPartition) -> LocalityReport:
    """Census of the qubit support of an operator's Jordan-Wigner image.

    Given a :class:`FermionOperator`, each sector is mapped separately and
    checked against its own rule: internal strings stay on active qubits,
    external-diagonal strings are ``Z``/``I`` only, isoenergetic strings flip
    external qubits only together with their adjacent partner, and any string
    from the energetically distinct sector is a violation.  A bare
    :class:`PauliOperator` carries no sector labels and is checked only
    against the combined pairing rule.
    """
    rules = {
        Sector.INTERNAL: lambda x, z: bool((x | z) & part.external_mask),
        Sector.DIAGONAL: lambda x, z: bool(x),
        Sector.ISOENERGETIC: lambda x, z: _unpaired_external_flip(x, part),
        Sector.DISTINCT: lambda x, z: True,
    }
    rep = LocalityReport()
    if isinstance(op, PauliOperator):
        entry, bad = _census(op, part, lambda x, z: _unpaired_external_flip(x, part))
        rep.sectors["all"] = entry
        rep.examples["all"] = bad
        return rep
    groups: dict[Sector, dict] = {s: {} for s in Sector}
    for key, c in op.terms.items():
        groups[classify_key(key, part)][key] = c
    for s in Sector:
        P = jw_map(FermionOperator(groups[s]), part.n_modes)
        entry, bad = _census(P, part, rules[s])
        rep.sectors[s.value] = entry
        rep.examples[s.value] = bad
    return rep


@dataclass
class RotationSchedule:
    """Ordered ``Rz``-type rotations realizing ``exp(-it f)`` for a number polynomial.

    Each entry ``(qubits, angle)`` is ``exp(-i angle/2 Z_q1 ... Z_qk)``:
    a plain ``Rz(angle)`` for one qubit, otherwise a CX ladder onto the last
    qubit, ``Rz(angle)`` there, and the ladder undone.  ``global_phase``
    multiplies the whole unitary by ``exp(i global_phase)``.
    """

    entries: list[tuple[tuple[int, ...], float]] = field(default_factory=list)
    global_phase: float = 0.0
    n_qubits: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def gates(self) -> list[tuple]:
        """Flat gate list: ``("cx", control, target)`` and ``("rz", qubit, angle)``."""
        out: list[tuple] = []
        for qs, angle in self.entries:
            ladder = [("cx", qs[i], qs[i + 1]) for i in range(len(qs) - 1)]
            out += ladder + [("rz", qs[-1], angle)] + ladder[::-1]
        return out

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Apply the schedule gate by gate to a state vector (or matrix columns)."""
        psi = np.array(psi, dtype=complex)
        states = np.arange(psi.shape[0])
        for g in self.gates():
            if g[0] == "cx":
                _, c, t = g
                flip = np.where((states >> c) & 1, states ^ (1 << t), states)
                psi = psi[flip]
            else:
                _, q, angle = g
                bit = (states >> q) & 1
                ph = np.exp(-0.5j * angle * (1 - 2 * bit))
                psi = (ph * psi.T).T
        return np.exp(1j * self.global_phase) * psi

    def to_dense(self, n_qubits: int | None = None) -> np.ndarray:
        n = self.n_qubits if n_qubits is None else n_qubits
        if n > settings.dense_cap:
            raise CapacityError(f"dense matrix for {n} qubits exceeds cap {settings.dense_cap}")
        return self.apply(np.eye(1 << n, dtype=complex))

    def to_text(self) -> str:
        lines = [f"phase {self.global_phase:.17g}"]
        lines += [f"rz {','.join(map(str, qs))} {angle:.17g}" for qs, angle in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n_qubits: int = 0) -> RotationSchedule:
        sched = cls(n_qubits=n_qubits)
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if not parts:
                continue
            try:
                if parts[0] == "phase" and len(parts) == 2:
                    sched.global_phase = float(parts[1])
                elif parts[0] == "rz" and len(parts) == 3:
                    qs = tuple(int(q) for q in parts[1].split(","))
                    sched.entries.append((qs, float(parts[2])))
                    sched.n_qubits = max(sched.n_qubits, max(qs) + 1)
                else:
                    raise ValueError(f"unrecognized record {line!r}")
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
        return sched


def schedule_number_exponential(f: NumberPolynomial, t: float, n_qubits: int | None = None) -> RotationSchedule:
    """Exact rotation schedule for ``exp(-it f)``.

    Every monomial ``a n_p1...n_pk`` expands into ``Z`` products via
    ``n_p = (1 - Z_p)/2``; all pieces commute, so the schedule has no
    splitting error.  Monomials above degree two use a CX ladder.
    """
    angles: dict[tuple[int, ...], float] = {}
    phase = 0.0
    for S, alpha in f.monomials.items():
        S = tuple(sorted(S))
        scale = t * alpha / 2 ** len(S)
        phase -= scale
        for r in range(1, len(S) + 1):
            for mask in range(1, 1 << len(S)):
                if mask.bit_count() != r:
                    continue
                T = tuple(S[i] for i in range(len(S)) if mask >> i & 1)
                angles[T] = angles.get(T, 0.0) + 2 * scale * (-1) ** r
    entries = [(T, a) for T, a in sorted(angles.items(), key=lambda kv: (len(kv[0]), kv[0])) if a != 0]
    top = max((max(T) for T, _ in entries), default=-1) + 1
    return RotationSchedule(entries, phase, max(top, n_qubits or 0))
