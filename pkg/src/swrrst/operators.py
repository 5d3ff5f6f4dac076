"""Second-quantized fermionic operators in canonical normal-ordered form.

Every term is stored under a key ``(creators, annihilators)`` of two integer
bit masks over spin-orbitals (bit ``p`` set means spin-orbital ``p``, 0-based).
The key ``(C, A)`` stands for the excitation string

    a†_{c1} a†_{c2} ... a†_{cm} a_{am} ... a_{a2} a_{a1}

with ``c1 < c2 < ...`` and ``a1 < a2 < ...``.  With this ordering a string whose
creator and annihilator sets coincide is a plain product of number operators,
``(0b11, 0b11) == n_0 n_1``, and the permutation sign of any other ordering is
absorbed into the coefficient.

Dense matrices use the occupation-number basis with bit ``p`` of the basis
index giving the occupation of spin-orbital ``p`` and the Jordan-Wigner sign
``(-1)^(number of occupied spin-orbitals below p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import BoundsError, CapacityError, ParseError, ValidationError

__all__ = [
    "CaosTerm",
    "FermionOperator",
    "ManyBodyTensors",
    "Settings",
    "adjoint",
    "bits",
    "commutator",
    "hamiltonian_from_tensors",
    "multiply",
    "normal_order",
    "settings",
    "to_dense",
]


@dataclass
class Settings:
    """Global numerical knobs of the operator algebra."""

    prune_tol: float = 1e-14
    term_cap: int = 10_000_000
    max_string_length: int = 16
    dense_cap: int = 14


settings = Settings()


@lru_cache(maxsize=None)
def bits(mask: int) -> tuple[int, ...]:
    """Ascending tuple of the set bit positions of ``mask``."""
    out = []
    p = 0
    while mask:
        if mask & 1:
            out.append(p)
        mask >>= 1
        p += 1
    return tuple(out)


def _mask(indices: Iterable[int]) -> int:
    m = 0
    for p in indices:
        if p < 0:
            raise BoundsError(f"negative spin-orbital index {p}")
        m |= 1 << p
    return m


def _below(mask: int, p: int) -> int:
    return (mask & ((1 << p) - 1)).bit_count()


@lru_cache(maxsize=1 << 20)
def _product(c1: int, a1: int, c2: int, a2: int) -> tuple[tuple[tuple[int, int], int], ...]:
    """Wick expansion of the product of two canonical strings.

    Returns ``((key, sign), ...)``; one entry per contraction subset of the
    indices shared by the left annihilators and the right creators.
    """
    shared = a1 & c2
    out = []
    sub = shared
    while True:
        x = a1 & ~sub
        y = c2 & ~sub
        if not (c1 & y) and not (x & a2):
            parity = x.bit_count() * y.bit_count()
            for k in bits(sub):
                parity += _below(a1, k) + _below(c2, k)
            for v in bits(y):
                parity += (c1 >> (v + 1)).bit_count()
            for v in bits(a2):
                parity += _below(x, v)
            out.append(((c1 | y, x | a2), -1 if parity & 1 else 1))
        if sub == 0:
            break
        sub = (sub - 1) & shared
    return tuple(out)


@dataclass(frozen=True)
class CaosTerm:
    """One creation/annihilation operator string with its coefficient."""

    creators: tuple[int, ...]
    annihilators: tuple[int, ...]
    coefficient: complex

    @property
    def key(self) -> tuple[int, int]:
        return _mask(self.creators), _mask(self.annihilators)

    @property
    def rank(self) -> int:
        return max(len(self.creators), len(self.annihilators))

    @property
    def is_diagonal(self) -> bool:
        return self.creators == self.annihilators


def _fmt_complex(c: complex) -> str:
    return f"{c.real:.17g}{c.imag:+.17g}j"


class FermionOperator:
    """Finite sum of canonical creation/annihilation strings.

    Instances are treated as immutable: every arithmetic operation returns a
    new operator, and coefficients with magnitude below ``settings.prune_tol``
    are dropped when an operator is built.

    Args:
        terms: mapping from ``(creator_mask, annihilator_mask)`` to coefficient.
    """

    __slots__ = ("_terms",)
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, terms: Mapping[tuple[int, int], complex] | None = None):
        tol = settings.prune_tol
        data: dict[tuple[int, int], complex] = {}
        if terms:
            for key, c in terms.items():
                c = complex(c)
                if abs(c) >= tol:
                    data[(int(key[0]), int(key[1]))] = c
        self._terms = data

    # construction helpers -------------------------------------------------
    @classmethod
    def zero(cls) -> FermionOperator:
        return cls()

    @classmethod
    def identity(cls, coeff: complex = 1.0) -> FermionOperator:
        return cls({(0, 0): coeff})

    @classmethod
    def number(cls, p: int, coeff: complex = 1.0) -> FermionOperator:
        return cls({(1 << p, 1 << p): coeff})

    @classmethod
    def creation(cls, p: int) -> FermionOperator:
        return cls({(1 << p, 0): 1.0})

    @classmethod
    def annihilation(cls, p: int) -> FermionOperator:
        return cls({(0, 1 << p): 1.0})

    @classmethod
    def excitation(
        cls, upper: Sequence[int], lower: Sequence[int], coeff: complex = 1.0
    ) -> FermionOperator:
        """``coeff * E^{upper}_{lower} = coeff * a†_{u1} a†_{u2}.. a_{l2} a_{l1}``.

        Index order is arbitrary; the result is brought to canonical form.
        """
        ops = [(p, True) for p in upper] + [(p, False) for p in reversed(lower)]
        return normal_order(ops, coeff)

    # views ----------------------------------------------------------------
    @property
    def terms(self) -> Mapping[tuple[int, int], complex]:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[CaosTerm]:
        for (c, a), coeff in sorted(self._terms.items(), key=_term_order):
            yield CaosTerm(bits(c), bits(a), coeff)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coefficient(self, key: tuple[int, int]) -> complex:
        return self._terms.get(key, 0j)

    @property
    def max_body_rank(self) -> int:
        return max((max(c.bit_count(), a.bit_count()) for c, a in self._terms), default=0)

    @property
    def n_modes(self) -> int:
        """Smallest spin-orbital count that accommodates every index."""
        m = 0
        for c, a in self._terms:
            m |= c | a
        return m.bit_length()

    def norm(self) -> float:
        """Euclidean norm of the coefficient vector."""
        return math.sqrt(sum(abs(c) ** 2 for c in self._terms.values()))

    def conserves_number(self) -> bool:
        return all(c.bit_count() == a.bit_count() for c, a in self._terms)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return (self - self.adjoint()).norm() <= atol

    def is_anti_hermitian(self, atol: float = 1e-12) -> bool:
        return (self + self.adjoint()).norm() <= atol

    def truncate(self, max_rank: int) -> FermionOperator:
        """Drop terms whose many-body rank exceeds ``max_rank``."""
        return FermionOperator(
            {k: c for k, c in self._terms.items() if max(k[0].bit_count(), k[1].bit_count()) <= max_rank}
        )

    def filter(self, predicate) -> FermionOperator:
        """Keep terms for which ``predicate(key)`` is true."""
        return FermionOperator({k: c for k, c in self._terms.items() if predicate(k)})

    def adjoint(self) -> FermionOperator:
        return FermionOperator({(a, c): coeff.conjugate() for (c, a), coeff in self._terms.items()})

    def isclose(self, other: FermionOperator, atol: float = 1e-12) -> bool:
        return (self - other).norm() <= atol

    # arithmetic -------------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, FermionOperator):
            return NotImplemented
        return self._terms == other._terms

    def __neg__(self) -> FermionOperator:
        return FermionOperator({k: -c for k, c in self._terms.items()})

    def __add__(self, other) -> FermionOperator:
        if isinstance(other, (int, float, complex)):
            other = FermionOperator.identity(other)
        if not isinstance(other, FermionOperator):
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0j) + c
        return FermionOperator(out)

    __radd__ = __add__

    def __sub__(self, other) -> FermionOperator:
        if isinstance(other, (int, float, complex)):
            other = FermionOperator.identity(other)
        if not isinstance(other, FermionOperator):
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0j) - c
        return FermionOperator(out)

    def __rsub__(self, other) -> FermionOperator:
        return (-self) + other

    def __mul__(self, other) -> FermionOperator:
        if isinstance(other, FermionOperator):
            return multiply(self, other)
        if isinstance(other, (int, float, complex, np.number)):
            s = complex(other)
            return FermionOperator({k: s * c for k, c in self._terms.items()})
        return NotImplemented

    def __rmul__(self, other) -> FermionOperator:
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __truediv__(self, other) -> FermionOperator:
        if isinstance(other, (int, float, complex, np.number)):
            return self * (1.0 / complex(other))
        return NotImplemented

    def __repr__(self) -> str:
        if not self._terms:
            return "FermionOperator(0)"
        parts = []
        for t in list(self)[:8]:
            label = " ".join([f"{p}^" for p in t.creators] + [f"{p}" for p in reversed(t.annihilators)])
            parts.append(f"{t.coefficient:.6g} [{label}]")
        more = "" if len(self) <= 8 else f" + ... ({len(self)} terms)"
        return "FermionOperator(" + " + ".join(parts) + more + ")"

    # text serialization ------------------------------------------------------
    def to_text(self) -> str:
        """One term per line: ``coeff  c:p,q  a:r,s`` with 1-based indices."""
        lines = []
        for t in self:
            c = ",".join(str(p + 1) for p in t.creators)
            a = ",".join(str(p + 1) for p in t.annihilators)
            lines.append(f"{_fmt_complex(t.coefficient)}  c:{c}  a:{a}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> FermionOperator:
        out: dict[tuple[int, int], complex] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 3 or not fields[1].startswith("c:") or not fields[2].startswith("a:"):
                raise ParseError(f"expected 'coeff  c:...  a:...', got {raw!r}", lineno)
            try:
                coeff = complex(fields[0])
                cre = [int(s) - 1 for s in fields[1][2:].split(",") if s]
                ann = [int(s) - 1 for s in fields[2][2:].split(",") if s]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            for idx in (cre, ann):
                if any(p < 0 for p in idx) or any(x >= y for x, y in zip(idx, idx[1:])):
                    raise ParseError("indices must be 1-based and strictly ascending", lineno)
            key = (_mask(cre), _mask(ann))
            out[key] = out.get(key, 0j) + coeff
        return cls(out)


def _term_order(item):
    (c, a), _ = item
    return (max(c.bit_count(), a.bit_count()), bits(c), bits(a))


def _accumulate_checked(out: dict, extra: int = 0) -> None:
    if len(out) + extra > settings.term_cap:
        raise CapacityError(
            f"term count {len(out)} exceeds cap {settings.term_cap} during accumulation"
        )


def multiply(a: FermionOperator, b: FermionOperator) -> FermionOperator:
    """Exact canonical product ``a b``."""
    out: dict[tuple[int, int], complex] = {}
    get = out.get
    for (c1, a1), x in a._terms.items():
        for (c2, a2), y in b._terms.items():
            xy = x * y
            for key, s in _product(c1, a1, c2, a2):
                out[key] = get(key, 0j) + s * xy
        _accumulate_checked(out)
    return FermionOperator(out)


def commutator(a: FermionOperator, b: FermionOperator) -> FermionOperator:
    """Canonical ``[a, b] = a b - b a``."""
    out: dict[tuple[int, int], complex] = {}
    get = out.get
    for (c1, a1), x in a._terms.items():
        s1 = c1 | a1
        even1 = not ((c1.bit_count() + a1.bit_count()) & 1)
        for (c2, a2), y in b._terms.items():
            if not (s1 & (c2 | a2)) and even1 and not ((c2.bit_count() + a2.bit_count()) & 1):
                continue
            xy = x * y
            for key, s in _product(c1, a1, c2, a2):
                out[key] = get(key, 0j) + s * xy
            for key, s in _product(c2, a2, c1, a1):
                out[key] = get(key, 0j) - s * xy
        _accumulate_checked(out)
    return FermionOperator(out)


def adjoint(a: FermionOperator) -> FermionOperator:
    return a.adjoint()


def _canonical_key(seq: Sequence[tuple[int, bool]]) -> tuple[tuple[int, int], int]:
    """Key and permutation sign of an already normal-ordered sequence (sign 0 = vanishes)."""
    cre = [p for p, d in seq if d]
    ann = [p for p, d in seq if not d]
    if len(set(cre)) != len(cre) or len(set(ann)) != len(ann):
        return (0, 0), 0
    parity = 0
    for i in range(len(cre)):
        for j in range(i + 1, len(cre)):
            parity += cre[i] > cre[j]
    for i in range(len(ann)):
        for j in range(i + 1, len(ann)):
            parity += ann[i] < ann[j]
    return (_mask(cre), _mask(ann)), -1 if parity & 1 else 1


def normal_order(ops: Sequence[tuple[int, bool]], coeff: complex = 1.0) -> FermionOperator:
    """Normal-ordered expansion of a product of elementary ladder operators.

    Args:
        ops: sequence of ``(index, is_creator)`` read left to right, e.g.
            ``[(0, False), (0, True)]`` is ``a_0 a_0†``.
        coeff: overall prefactor.

    Raises:
        CapacityError: the sequence is longer than ``settings.max_string_length``.
    """
    seq0 = tuple((int(p), bool(d)) for p, d in ops)
    if len(seq0) > settings.max_string_length:
        raise CapacityError(
            f"operator string of length {len(seq0)} exceeds cap {settings.max_string_length}"
        )
    if any(p < 0 for p, _ in seq0):
        raise BoundsError("negative spin-orbital index")
    out: dict[tuple[int, int], complex] = {}
    stack = [(seq0, complex(coeff))]
    while stack:
        seq, c = stack.pop()
        for i in range(len(seq) - 1):
            if not seq[i][1] and seq[i + 1][1]:
                stack.append((seq[:i] + (seq[i + 1], seq[i]) + seq[i + 2 :], -c))
                if seq[i][0] == seq[i + 1][0]:
                    stack.append((seq[:i] + seq[i + 2 :], c))
                break
        else:
            key, sign = _canonical_key(seq)
            if sign:
                out[key] = out.get(key, 0j) + sign * c
    return FermionOperator(out)


def to_dense(op: FermionOperator, n_modes: int) -> np.ndarray:
    """Matrix of ``op`` in the ``2**n_modes`` occupation-number basis.

    Raises:
        CapacityError: ``n_modes`` exceeds ``settings.dense_cap``.
        BoundsError: ``op`` acts on a spin-orbital ``>= n_modes``.
    """
    if n_modes > settings.dense_cap:
        raise CapacityError(f"dense oracle limited to {settings.dense_cap} spin-orbitals, got {n_modes}")
    if op.n_modes > n_modes:
        raise BoundsError(f"operator acts on spin-orbital {op.n_modes - 1}, only {n_modes} available")
    dim = 1 << n_modes
    states = np.arange(dim, dtype=np.int64)
    mat = np.zeros((dim, dim), dtype=complex)
    for (c, a), coeff in op.terms.items():
        s = states.copy()
        sign = np.ones(dim)
        valid = np.ones(dim, dtype=bool)
        # rightmost factor acts first: a_{a1} (smallest) ... then a†_{cm} (largest)
        for p in bits(a):
            valid &= ((s >> p) & 1) == 1
            sign *= 1.0 - 2.0 * (np.bitwise_count(s & ((1 << p) - 1)) & 1)
            s = s & ~(1 << p)
        for p in reversed(bits(c)):
            valid &= ((s >> p) & 1) == 0
            sign *= 1.0 - 2.0 * (np.bitwise_count(s & ((1 << p) - 1)) & 1)
            s = s | (1 << p)
        mat[s[valid], states[valid]] += coeff * sign[valid]
    return mat


@dataclass(frozen=True)
class ManyBodyTensors:
    """Antisymmetrized coefficient tensors of a number-conserving operator.

    ``h[p, q]`` multiplies ``a†_p a_q``; ``v[p, q, r, s]`` multiplies
    ``1/4 a†_p a†_q a_s a_r``; the optional ``w3[p, q, r, s, t, u]`` multiplies
    ``1/36 a†_p a†_q a†_r a_u a_t a_s``.  ``constant`` is a scalar shift
    (e.g. nuclear repulsion).
    """

    h: np.ndarray
    v: np.ndarray | None = None
    w3: np.ndarray | None = None
    constant: float = 0.0

    @property
    def n_modes(self) -> int:
        return int(np.shape(self.h)[0])

    def validate(self, atol: float = 1e-10) -> None:
        n = self.n_modes
        h = np.asarray(self.h)
        if n < 1 or h.shape != (n, n):
            raise ValidationError(f"h must be a square matrix with N >= 1, got shape {h.shape}")
        if not np.allclose(h, h.conj().T, atol=atol):
            p, q = np.unravel_index(np.argmax(abs(h - h.conj().T)), h.shape)
            raise ValidationError(f"h is not Hermitian: h[{p},{q}] != conj(h[{q},{p}])")
        if self.v is not None:
            v = np.asarray(self.v)
            if v.shape != (n,) * 4:
                raise ValidationError(f"v must have shape {(n,) * 4}, got {v.shape}")
            checks = [
                ("antisymmetry in the upper pair (v[p,q,r,s] = -v[q,p,r,s])", v + v.transpose(1, 0, 2, 3)),
                ("antisymmetry in the lower pair (v[p,q,r,s] = -v[p,q,s,r])", v + v.transpose(0, 1, 3, 2)),
                ("Hermiticity (v[p,q,r,s] = conj(v[r,s,p,q]))", v - v.transpose(2, 3, 0, 1).conj()),
            ]
            for name, diff in checks:
                if np.max(abs(diff), initial=0.0) > atol:
                    idx = np.unravel_index(np.argmax(abs(diff)), diff.shape)
                    raise ValidationError(f"v violates {name} at {tuple(int(i) for i in idx)}")
        if self.w3 is not None:
            w = np.asarray(self.w3)
            if w.shape != (n,) * 6:
                raise ValidationError(f"w3 must have shape {(n,) * 6}, got {w.shape}")
            if np.max(abs(w + w.transpose(1, 0, 2, 3, 4, 5)), initial=0.0) > atol or np.max(
                abs(w + w.transpose(0, 1, 2, 4, 3, 5)), initial=0.0
            ) > atol:
                raise ValidationError("w3 violates antisymmetry")
            if np.max(abs(w - w.transpose(3, 4, 5, 0, 1, 2).conj()), initial=0.0) > atol:
                raise ValidationError("w3 violates Hermiticity")


def hamiltonian_from_tensors(t: ManyBodyTensors, atol: float = 1e-10) -> FermionOperator:
    """``H = sum h^p_q a†_p a_q + 1/4 sum v^{pq}_{rs} a†_p a†_q a_s a_r`` (+ 3-body, + constant)."""
    t.validate(atol)
    out: dict[tuple[int, int], complex] = {}
    if t.constant:
        out[(0, 0)] = complex(t.constant)
    h = np.asarray(t.h)
    for p, q in zip(*np.nonzero(h)):
        out[(1 << int(p), 1 << int(q))] = complex(h[p, q])
    if t.v is not None:
        v = np.asarray(t.v)
        for p, q, r, s in zip(*np.nonzero(v)):
            if p < q and r < s:
                key = ((1 << int(p)) | (1 << int(q)), (1 << int(r)) | (1 << int(s)))
                out[key] = complex(v[p, q, r, s])
    if t.w3 is not None:
        w = np.asarray(t.w3)
        for p, q, r, s, u, x in zip(*np.nonzero(w)):
            if p < q < r and s < u < x:
                key = (_mask((int(p), int(q), int(r))), _mask((int(s), int(u), int(x))))
                out[key] = complex(w[p, q, r, s, u, x])
    return FermionOperator(out)
