"""State-vector time evolution, factored Trotter products and simulated QPE.

Everything here is a dense simulator for desk-scale checks.  The Trotter
construction follows the structure of a transformed Hamiltonian whose
external part is diagonal::

    G = G_int + G_mix + G_ext

``G_int`` acts only on active spin-orbitals, ``G_mix`` is diagonal and couples
active and external number operators, ``G_ext`` is diagonal on external
spin-orbitals.  ``G_ext`` commutes with the rest and is applied exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .errors import CapacityError, StructureError, ValidationError
from .operators import FermionOperator, commutator, settings, to_dense
from .partition import OrbitalPartition, Sector, classify_key, to_number_polynomial
from .qubits import PauliOperator, PauliString, RotationSchedule, jw_map, schedule_number_exponential
from .solver import GeneratorB

__all__ = [
    "EvolutionPlan",
    "FockStateVector",
    "GParts",
    "PhaseHistogram",
    "auto_time",
    "exact_evolve",
    "power_evolution",
    "qpe_run",
    "sector_prepare",
    "split_G",
    "trotter_error",
    "trotter_evolve",
]


@dataclass
class FockStateVector:
    """Amplitudes over the ``2^N`` occupation-number basis, optionally tagged with ``n_e``."""

    amplitudes: np.ndarray
    n_modes: int
    n_e: int | None = None

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_modes,):
            raise ValidationError(f"expected {1 << self.n_modes} amplitudes, got {self.amplitudes.shape}")
        if self.n_e is not None and self.leakage(self.n_e) > 1e-10:
            raise ValidationError(f"state has weight outside the {self.n_e}-electron sector")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def leakage(self, n_e: int) -> float:
        """Norm of the component outside the ``n_e``-electron sector."""
        occ = np.bitwise_count(np.arange(1 << self.n_modes))
        return float(np.linalg.norm(self.amplitudes[occ != n_e]))

    def evolved(self, amplitudes: np.ndarray) -> FockStateVector:
        return FockStateVector(amplitudes, self.n_modes, self.n_e)


def _dense(A, n: int) -> np.ndarray:
    if n > settings.dense_cap:
        raise CapacityError(f"{n} modes exceed the dense cap {settings.dense_cap}")
    if isinstance(A, PauliOperator):
        return A.to_dense(n)
    if isinstance(A, GeneratorB):
        A = A.op
    if isinstance(A, FermionOperator):
        return to_dense(A, n)
    return np.asarray(A, dtype=complex)


def exact_evolve(A, t: float, psi: FockStateVector) -> FockStateVector:
    """``exp(-itA) psi`` by dense exponentiation."""
    if t == 0:
        return psi.evolved(psi.amplitudes.copy())
    M = _dense(A, psi.n_modes)
    return psi.evolved(scipy.linalg.expm(-1j * t * M) @ psi.amplitudes)


class GParts(NamedTuple):
    internal: FermionOperator
    mixed: FermionOperator
    external: FermionOperator


def split_G(G: FermionOperator, part: OrbitalPartition) -> GParts:
    """Split ``G`` into internal, mixed-diagonal and external-diagonal parts.

    Raises:
        StructureError: ``G`` has off-diagonal external terms, or one of the
            two commutators with the external part is nonzero.
    """
    internal, mixed, external = {}, {}, {}
    for key, c in G.terms.items():
        sec = classify_key(key, part)
        if sec is Sector.INTERNAL:
            internal[key] = c
        elif sec is Sector.DIAGONAL:
            (external if not key[0] & part.active_mask else mixed)[key] = c
        else:
            raise StructureError(f"G has off-diagonal external term in sector {sec.value}")
    parts = GParts(FermionOperator(internal), FermionOperator(mixed), FermionOperator(external))
    for name, piece in (("internal", parts.internal), ("mixed", parts.mixed)):
        comm = commutator(piece, parts.external)
        if comm.norm() > 1e-12 * max(1.0, piece.norm() * parts.external.norm()):
            raise StructureError(f"{name} part does not commute with the external part")
    return parts


def _apply_string(x: int, z: int, psi: np.ndarray, states: np.ndarray) -> np.ndarray:
    vals = (1j ** ((x & z).bit_count() % 4)) * (1.0 - 2.0 * (np.bitwise_count(states & z) & 1))
    out = np.empty_like(psi)
    out[states ^ x] = (vals * psi.T).T
    return out


@dataclass
class EvolutionPlan:
    """Factored evolution ``e^-B [(X Y X)^{r/2}]^{2^j} e^{-it 2^j G_ext} e^B``.

    With an auxiliary rotation ``C`` (``G`` built from ``e^C H e^-C``) the
    frame change becomes ``e^B e^C`` on the way in and its inverse on the way
    out.

    ``X`` is the ordered product of single-string exponentials of the
    internal part (step ``t/r``), ``Y`` the exact diagonal exponential of the
    mixed part over ``2t/r``.  ``form="plain"`` uses ``(X Y)^r`` with a
    ``t/r`` step in ``Y`` instead.
    """

    parts: GParts
    t: float
    r: int
    n_modes: int
    B: FermionOperator | None = None
    form: str = "symmetrized"
    C: FermionOperator | None = None
    strings: list[tuple[int, int, float]] = field(init=False, repr=False)
    mixed_diag: np.ndarray = field(init=False, repr=False)
    schedule: RotationSchedule = field(init=False, repr=False)

    def __post_init__(self):
        if self.r < 2 or self.r % 2:
            raise ValueError(f"Trotter steps must be even and >= 2, got {self.r}")
        if self.form not in ("symmetrized", "plain"):
            raise ValueError(f"unknown Trotter form {self.form!r}")
        P = jw_map(self.parts.internal, self.n_modes)
        weights = P.weights_real(1e-10)
        def order(kv):
            (x, z), w = kv
            return -abs(w), PauliString(x, z, self.n_modes).letters

        self.strings = [(x, z, w) for (x, z), w in sorted(weights.items(), key=order)]
        self.mixed_diag = to_number_polynomial(self.parts.mixed).diagonal(self.n_modes)
        self.schedule = schedule_number_exponential(to_number_polynomial(self.parts.external), self.t, self.n_modes)
        self._expB = None
        dim = 1 << self.n_modes
        fwd, back = np.eye(dim, dtype=complex), np.eye(dim, dtype=complex)
        for gen in (self.C, self.B):
            if gen is not None and gen:
                Ad = _dense(gen, self.n_modes)
                fwd = scipy.linalg.expm(Ad) @ fwd
                back = back @ scipy.linalg.expm(-Ad)
                self._expB = (fwd, back)

    def _x(self, psi, states):
        dt = self.t / self.r
        for x, z, w in self.strings:
            th = dt * w
            psi = math.cos(th) * psi - 1j * math.sin(th) * _apply_string(x, z, psi, states)
        return psi

    def _y(self, psi, tau):
        return (np.exp(-1j * tau * self.mixed_diag) * psi.T).T

    def _inner(self, psi, states):
        if self.form == "symmetrized":
            for _ in range(self.r // 2):
                psi = self._x(self._y(self._x(psi, states), 2 * self.t / self.r), states)
        else:
            for _ in range(self.r):
                psi = self._y(self._x(psi, states), self.t / self.r)
        return psi

    def apply(self, psi: np.ndarray, j: int = 0) -> np.ndarray:
        """Approximate ``exp(-itH)^{2^j}`` on a vector or on the columns of a matrix."""
        psi = np.array(psi, dtype=complex)
        states = np.arange(1 << self.n_modes)
        if self._expB is not None:
            psi = self._expB[0] @ psi
        for _ in range(1 << j):
            psi = self._inner(psi, states)
        ext = self.schedule if j == 0 else schedule_number_exponential(
            to_number_polynomial(self.parts.external), self.t * (1 << j), self.n_modes
        )
        psi = ext.apply(psi)
        if self._expB is not None:
            psi = self._expB[1] @ psi
        return psi

    def unitary(self, j: int = 0) -> np.ndarray:
        return self.apply(np.eye(1 << self.n_modes, dtype=complex), j)


def trotter_evolve(parts: GParts, t: float, r: int, psi: FockStateVector, form: str = "symmetrized") -> FockStateVector:
    """Trotterized ``exp(-itG) psi`` with the external factor applied exactly."""
    if t == 0:
        EvolutionPlan(parts, 1.0, r, psi.n_modes, form=form)
        return psi.evolved(psi.amplitudes.copy())
    plan = EvolutionPlan(parts, t, r, psi.n_modes, form=form)
    return psi.evolved(plan.apply(psi.amplitudes))


def power_evolution(B, parts: GParts, t: float, j: int, psi: FockStateVector, r: int = 64,
                    form: str = "symmetrized") -> FockStateVector:
    """``exp(-itH)^{2^j} psi`` through ``e^-B (e^{-itG})^{2^j} e^B``."""
    Bop = B.op if isinstance(B, GeneratorB) else B
    plan = EvolutionPlan(parts, t, r, psi.n_modes, B=Bop, form=form)
    return psi.evolved(plan.apply(psi.amplitudes, j))


def trotter_error(parts: GParts, t: float, r: int, n_modes: int, form: str = "symmetrized") -> float:
    """Spectral-norm distance between the Trotter product and ``exp(-itG)``."""
    G = parts.internal + parts.mixed + parts.external
    exact = scipy.linalg.expm(-1j * t * _dense(G, n_modes))
    U = EvolutionPlan(parts, t, r, n_modes, form=form).unitary()
    return float(np.linalg.norm(U - exact, 2))


@dataclass
class PhaseHistogram:
    """Outcome distribution of an ``m``-ancilla phase estimation.

    Outcome ``y`` corresponds to the phase ``y / 2^m``, i.e. to an energy with
    ``t (E - e_ref) / 2 pi = y / 2^m`` modulo one.
    """

    m: int
    probabilities: np.ndarray
    counts: np.ndarray | None = None
    t: float | None = None
    e_ref: float = 0.0

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.m

    def phases(self) -> np.ndarray:
        return np.arange(1 << self.m) * self.resolution

    def energies(self) -> np.ndarray:
        if self.t is None:
            raise ValidationError("histogram has no evolution time attached")
        return self.e_ref + 2 * np.pi * self.phases() / self.t

    def peaks(self, min_prob: float = 0.01) -> list[int]:
        """Circular local maxima with at least ``min_prob`` probability."""
        p = self.probabilities
        return [
            y for y in range(len(p))
            if p[y] >= min_prob and p[y] >= p[y - 1] and p[y] >= p[(y + 1) % len(p)]
        ]

    def to_records(self) -> list[dict]:
        rows = []
        for y, (ph, pr) in enumerate(zip(self.phases(), self.probabilities)):
            row = {"outcome": y, "phase": float(ph), "probability": float(pr)}
            if self.counts is not None:
                row["counts"] = int(self.counts[y])
            if self.t is not None:
                row["energy"] = float(self.energies()[y])
            rows.append(row)
        return rows


def qpe_run(unitary: Callable[[int], np.ndarray] | Sequence[np.ndarray], psi0: FockStateVector, m: int,
            shots: int | None = None, seed: int | None = None, t: float | None = None,
            e_ref: float = 0.0) -> PhaseHistogram:
    """Exact-probability simulation of textbook phase estimation.

    ``unitary(j)`` must return the dense matrix of ``U^{2^j}``.  The ancilla
    register is never stored explicitly: the system state conditioned on
    ancilla value ``x`` is ``U^x psi0``, and the Fourier transform over ``x``
    gives the outcome amplitudes.  With ``shots`` the exact distribution is
    also sampled with a seeded generator.
    """
    if m < 1:
        raise ValueError(f"need at least one ancilla, got m={m}")
    if psi0.n_modes + m > settings.dense_cap + 8:
        raise CapacityError(f"{psi0.n_modes} system plus {m} ancilla qubits exceed the simulator cap")
    mats = [unitary(j) for j in range(m)] if callable(unitary) else list(unitary)
    dim = psi0.amplitudes.shape[0]
    if len(mats) < m or any(np.shape(U) != (dim, dim) for U in mats[:m]):
        raise ValidationError(f"need {m} unitaries of shape ({dim}, {dim})")
    M = 1 << m
    phis = np.empty((M, dim), dtype=complex)
    phis[0] = psi0.amplitudes / psi0.norm()
    for x in range(1, M):
        low = (x & -x).bit_length() - 1
        phis[x] = mats[low] @ phis[x ^ (1 << low)]
    amps = np.fft.ifft(phis, axis=0)
    probs = np.sum(np.abs(amps) ** 2, axis=1)
    counts = None
    if shots is not None:
        rng = np.random.default_rng(seed)
        counts = rng.multinomial(shots, probs / probs.sum())
    return PhaseHistogram(m, probs, counts, t, e_ref)


def sector_prepare(n_e: int, n_modes: int, spec: dict | None = None,
                   energies: Sequence[float] | None = None) -> FockStateVector:
    """State in the ``n_e``-electron sector.

    ``spec`` maps occupied-orbital tuples (or basis indices) to amplitudes.
    Without it, the determinant filling the ``n_e`` lowest ``energies`` is
    returned (lowest indices first on ties).
    """
    if not 0 <= n_e <= n_modes:
        raise ValidationError(f"need 0 <= n_e <= {n_modes}, got {n_e}")
    amps = np.zeros(1 << n_modes, dtype=complex)
    if spec is None:
        e = np.zeros(n_modes) if energies is None else np.asarray(energies, float)
        occ = np.argsort(e, kind="stable")[:n_e]
        amps[sum(1 << int(p) for p in occ)] = 1.0
    else:
        if not spec:
            raise ValidationError("empty sector specification")
        for occ, a in spec.items():
            idx = occ if isinstance(occ, int) else sum(1 << p for p in occ)
            if idx.bit_count() != n_e:
                raise ValidationError(f"basis state {idx:b} does not hold {n_e} electrons")
            amps[idx] += a
        amps /= np.linalg.norm(amps)
    return FockStateVector(amps, n_modes, n_e)


def auto_time(A, n_modes: int, pad: float = 0.1) -> tuple[float, float]:
    """``(t, e_ref)`` with Gershgorin bounds so every phase lands in ``[0, 1)``.

    ``e_ref`` is the lower bound; energies ``E`` map to phases
    ``t (E - e_ref) / 2 pi`` below ``1 / (1 + pad)``.
    """
    M = _dense(A, n_modes)
    radius = np.sum(np.abs(M), axis=1) - np.abs(np.diag(M))
    lo = float(np.min(M.diagonal().real - radius))
    hi = float(np.max(M.diagonal().real + radius))
    span = max(hi - lo, 1e-12)
    return 2 * np.pi / (span * (1 + pad)), lo
