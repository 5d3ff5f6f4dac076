"""Rank-reducing Schrieffer-Wolff transformation of a Fock-space Hamiltonian.

The generator ``B`` is anti-Hermitian and lives on the off-diagonal external
sectors only.  It is fixed by requiring that the chosen sector of

    G = e^B H e^-B = H - [H, B] + 1/2 [[H, B], B] - ...

vanishes, with the series truncated after ``l`` nested commutators.  Amplitude
updates are preconditioned with orbital-energy differences of a diagonal
``H0``, as in Moller-Plesset / coupled-cluster iterations.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, DivergenceError, SingularityError, ValidationError
from .operators import FermionOperator, bits, commutator
from .partition import OD, OrbitalPartition, Sector, _sectors_of, classify_key, project

__all__ = [
    "GeneratorB",
    "GResult",
    "H0Split",
    "NoncommutationCheck",
    "SolveReport",
    "SolverOptions",
    "apply_auxiliary",
    "bch_series",
    "bch_transform",
    "build_G",
    "check_noncommutation",
    "denominator",
    "perturbative_B",
    "residual",
    "solve_swrrst",
    "split_h0_w",
]

log = logging.getLogger(__name__)

DOMAINS = {"eod": Sector.DISTINCT, "od": OD}


def _domain(domain) -> frozenset:
    if isinstance(domain, str) and domain in DOMAINS:
        return _sectors_of(DOMAINS[domain])
    return _sectors_of(domain)


def _domain_name(domain) -> str:
    if isinstance(domain, str) and domain in DOMAINS:
        return domain
    secs = _sectors_of(domain)
    return "od" if Sector.ISOENERGETIC in secs else "eod"


@dataclass
class GeneratorB:
    """Anti-Hermitian generator stored through one amplitude per conjugate pair.

    For every pair of excitations ``(E, E†)`` only the one whose creator mask
    is larger is kept in ``amplitudes``; :attr:`op` materializes
    ``sum b E - conj(b) E†``.
    """

    amplitudes: dict[tuple[int, int], complex] = field(default_factory=dict)
    domain: str = "eod"
    body_rank: int = 2

    @property
    def op(self) -> FermionOperator:
        out = {}
        for (c, a), b in self.amplitudes.items():
            out[(c, a)] = b
            out[(a, c)] = -b.conjugate()
        return FermionOperator(out)

    @property
    def max_body_rank(self) -> int:
        return max((max(c.bit_count(), a.bit_count()) for c, a in self.amplitudes), default=0)

    def norm(self) -> float:
        return self.op.norm()

    def __len__(self) -> int:
        return len(self.amplitudes)

    @classmethod
    def from_operator(cls, op: FermionOperator, domain: str = "eod", body_rank: int | None = None, atol: float = 1e-10) -> GeneratorB:
        if not op.is_anti_hermitian(atol):
            raise ValidationError("generator must be anti-Hermitian")
        amps = {}
        for (c, a), b in op.terms.items():
            if c == a:
                raise ValidationError(f"generator has diagonal term {bits(c)}")
            if c > a:
                amps[(c, a)] = b
        rank = body_rank if body_rank is not None else op.max_body_rank
        return cls(amps, domain, rank)


def _as_op(b) -> FermionOperator:
    return b.op if isinstance(b, GeneratorB) else b


@dataclass
class SolverOptions:
    """Knobs of :func:`solve_swrrst`."""

    l: int = 2
    domain: str = "eod"
    tol: float = 1e-10
    max_iter: int = 100
    body_rank: int = 2
    bch_rank_cap: int | None = 3
    level_shift: float = 0.0
    denominator_floor: float = 1e-8
    acceleration: bool = True
    diis_window: int = 6
    raise_on_failure: bool = True

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SolveReport:
    iterations: int
    residual_norm_history: list[float]
    final_residual: float
    amplitude_norm: float
    l: int
    converged: bool
    min_denominator: float
    domain: str
    n_amplitudes: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class H0Split(NamedTuple):
    H0: FermionOperator
    W: FermionOperator
    epsilon: np.ndarray


class GResult(NamedTuple):
    """Transformed Hamiltonian plus what was cut away to form it."""

    G: FermionOperator
    discarded: FermionOperator
    discarded_norm: float
    series_rank: int
    truncated_norm: float = 0.0


class NoncommutationCheck(NamedTuple):
    noncommuting: bool | None
    norm: float
    threshold: float


def bch_transform(H: FermionOperator, B, l: int, rank_cap: int | None = None) -> FermionOperator:
    """``H + sum_{i<=l} 1/i! ad_B^i(H)`` with ``ad_B(X) = [B, X]``.

    This is ``e^B H e^-B`` truncated after ``l`` nested commutators.  When
    ``rank_cap`` is given, every intermediate commutator is truncated to that
    many-body rank.
    """
    if l < 1:
        raise ValueError(f"commutator rank must be >= 1, got {l}")
    b = _as_op(B)
    total = H if rank_cap is None else H.truncate(rank_cap)
    term = total
    for i in range(1, l + 1):
        if not term or not b:
            break
        term = commutator(b, term) / i
        if rank_cap is not None:
            term = term.truncate(rank_cap)
        total = total + term
    return total


def bch_series(H: FermionOperator, B, tol: float = 1e-12, max_rank: int = 60) -> tuple[FermionOperator, int]:
    """``e^B H e^-B`` summed until the increment norm drops below ``tol``.

    Returns the operator and the number of commutators used.

    Raises:
        CapacityError: the increments still exceed ``tol`` after ``max_rank``.
    """
    b = _as_op(B)
    total = H
    term = H
    for i in range(1, max_rank + 1):
        if not b:
            return total, 0
        term = commutator(b, term) / i
        total = total + term
        if term.norm() < tol:
            return total, i
    raise CapacityError(f"commutator series did not decay below {tol} within {max_rank} ranks")


def denominator(key: tuple[int, int], epsilon: Sequence[float]) -> float:
    """``sum eps(creators) - sum eps(annihilators)``, the eigenvalue of ``[H0, .]``."""
    c, a = key
    return float(sum(epsilon[p] for p in bits(c)) - sum(epsilon[p] for p in bits(a)))


def split_h0_w(H: FermionOperator, part: OrbitalPartition | None = None, epsilon: Sequence[float] | None = None) -> H0Split:
    """Split ``H = H0 + W`` with diagonal ``H0 = c + sum eps_p n_p``.

    The scalar ``c`` of ``H`` goes into ``H0`` so that ``W`` holds only the
    couplings.

    By default ``eps_p`` is the diagonal one-body coefficient of ``H``; pass
    ``epsilon`` to use other (e.g. degeneracy-breaking) energies.
    """
    n = part.n_modes if part is not None else H.n_modes
    if epsilon is None:
        eps = np.array([H.coefficient((1 << p, 1 << p)).real for p in range(n)])
    else:
        eps = np.asarray(epsilon, dtype=float)
        if eps.shape != (n,):
            raise ValidationError(f"epsilon must have length {n}, got {eps.shape}")
    H0 = FermionOperator({(1 << p, 1 << p): eps[p] for p in range(n)} | {(0, 0): H.coefficient((0, 0))})
    return H0Split(H0, H - H0, eps)


def residual(H: FermionOperator, B, l: int, part: OrbitalPartition, domain=None,
             body_rank: int | None = None, rank_cap: int | None = None) -> FermionOperator:
    """Domain projection of the ``l``-truncated transform; zero at a solution.

    ``domain`` and ``body_rank`` default to those of a :class:`GeneratorB`.
    With ``body_rank`` the projection is restricted further to terms of at most
    that rank, which keeps the number of equations equal to the number of
    amplitudes of a rank-limited generator.
    """
    if domain is None:
        domain = B.domain if isinstance(B, GeneratorB) else "eod"
    if body_rank is None and isinstance(B, GeneratorB):
        body_rank = B.body_rank
    if rank_cap is not None and body_rank is not None:
        rank_cap = max(rank_cap, body_rank)
    wanted = _domain(domain)
    Hbar = bch_transform(H, B, l, rank_cap)
    R = Hbar.filter(lambda key: classify_key(key, part) in wanted)
    if body_rank is not None:
        R = R.truncate(body_rank)
    return R


class _Diis:
    """Least-squares extrapolation over a window of (amplitudes, step) pairs."""

    def __init__(self, window: int):
        self.window = window
        self.keys: dict[tuple[int, int], int] = {}
        self.amps: list[dict] = []
        self.steps: list[dict] = []

    def _vec(self, d: dict) -> np.ndarray:
        v = np.zeros(len(self.keys), dtype=complex)
        for k, x in d.items():
            v[self.keys[k]] = x
        return np.concatenate([v.real, v.imag])

    def push(self, amps: dict, step: dict) -> dict:
        for k in list(amps) + list(step):
            self.keys.setdefault(k, len(self.keys))
        self.amps.append(amps)
        self.steps.append(step)
        if len(self.amps) > self.window:
            self.amps.pop(0)
            self.steps.pop(0)
        m = len(self.amps)
        if m < 2:
            return amps
        errs = np.array([self._vec(s) for s in self.steps])
        mat = np.zeros((m + 1, m + 1))
        mat[:m, :m] = errs @ errs.T
        mat[:m, m] = mat[m, :m] = -1.0
        scale = np.max(np.abs(np.diag(mat[:m, :m])))
        if scale <= 0:
            return amps
        mat[:m, :m] /= scale
        rhs = np.zeros(m + 1)
        rhs[m] = -1.0
        coef = np.linalg.lstsq(mat, rhs, rcond=None)[0][:m]
        out: dict = {}
        for c, a in zip(coef, self.amps):
            for k, x in a.items():
                out[k] = out.get(k, 0j) + c * x
        return out


def solve_swrrst(
    H: FermionOperator,
    part: OrbitalPartition,
    l: int | None = None,
    domain: str | None = None,
    options: SolverOptions | None = None,
    epsilon: Sequence[float] | None = None,
) -> tuple[GeneratorB, SolveReport]:
    """Solve the SW-RRST(l) amplitude equations by preconditioned iteration.

    Each sweep evaluates the residual ``R`` (domain projection of the
    ``l``-truncated transform, restricted to ``options.body_rank``) and updates
    every amplitude by ``r_mu / D_mu`` with ``D_mu`` the orbital-energy
    difference of the excitation; optionally the new amplitudes are
    extrapolated from the recent history (DIIS).

    Args:
        H: Hermitian Hamiltonian.
        part: orbital partition used to classify excitations.
        l: commutator rank; overrides ``options.l``.
        domain: ``"eod"`` or ``"od"``; overrides ``options.domain``.
        options: solver settings.
        epsilon: orbital energies of ``H0`` for the denominators (default:
            diagonal one-body coefficients of ``H``).

    Raises:
        SingularityError: a residual component has ``|D| < denominator_floor``
            and no level shift is configured.
        DivergenceError: no convergence within ``max_iter`` sweeps (unless
            ``raise_on_failure`` is off, in which case the last iterate is
            returned with ``converged=False``).
    """
    opts = SolverOptions(**(options.to_dict() if options else {}))
    if l is not None:
        opts.l = l
    if domain is not None:
        opts.domain = domain
    if opts.domain not in DOMAINS:
        raise ValueError(f"domain must be 'eod' or 'od', got {opts.domain!r}")
    eps = split_h0_w(H, part, epsilon).epsilon
    wanted = _domain(opts.domain)

    amps: dict[tuple[int, int], complex] = {}
    diis = _Diis(opts.diis_window) if opts.acceleration else None
    history: list[float] = []
    min_den = math.inf
    iterations = 0
    while True:
        gen = GeneratorB(amps, opts.domain, opts.body_rank)
        bop = gen.op
        if not bop.is_anti_hermitian(1e-10 * max(1.0, bop.norm())):
            raise DivergenceError("generator lost anti-Hermiticity")
        R = residual(H, bop, opts.l, part, wanted, opts.body_rank, opts.bch_rank_cap)
        rnorm = R.norm()
        history.append(rnorm)
        log.debug("sweep %d residual %.3e", iterations, rnorm)
        report = SolveReport(
            iterations, history, rnorm, bop.norm(), opts.l, rnorm <= opts.tol,
            min_den, opts.domain, len(amps),
        )
        if rnorm <= opts.tol:
            return gen, report
        if not math.isfinite(rnorm) or rnorm > 1e8 * max(1.0, history[0]):
            raise DivergenceError(f"residual blew up to {rnorm:.3e} at sweep {iterations}", report)
        if iterations >= opts.max_iter:
            if not opts.raise_on_failure:
                return gen, report
            raise DivergenceError(
                f"no convergence in {opts.max_iter} sweeps (residual {rnorm:.3e} > {opts.tol:.1e})", report
            )
        step = {}
        for key, r in R.terms.items():
            if key[0] < key[1]:
                continue
            if classify_key(key, part) not in wanted:
                continue
            d = denominator(key, eps)
            if abs(d) < opts.denominator_floor:
                if opts.level_shift <= 0:
                    raise SingularityError(
                        f"vanishing denominator {d:.3e} for excitation "
                        f"c:{list(bits(key[0]))} a:{list(bits(key[1]))}",
                        term=(bits(key[0]), bits(key[1])), denominator=abs(d),
                    )
                d = d + opts.level_shift if d >= 0 else d - opts.level_shift
            min_den = min(min_den, abs(d))
            step[key] = r / d
        new = dict(amps)
        for k, x in step.items():
            new[k] = new.get(k, 0j) + x
        if diis is not None:
            new = diis.push(new, step)
        amps = {k: x for k, x in new.items() if x != 0}
        iterations += 1


def build_G(H: FermionOperator, B, part: OrbitalPartition, domain: str | None = None,
            tol: float = 1e-12, max_rank: int = 60, max_body_rank: int | None = None) -> GResult:
    """Transformed Hamiltonian with the generator's domain removed.

    ``e^B H e^-B`` is summed until the commutator increments fall below
    ``tol``; the projection onto the domain (``eod`` or ``od``) is then
    discarded and its norm reported, since it bounds the spectral distortion of
    an inexact generator.  ``max_body_rank`` optionally truncates ``G``
    further and reports the truncated norm separately.
    """
    if domain is None:
        domain = B.domain if isinstance(B, GeneratorB) else "eod"
    full, rank = bch_series(H, B, tol, max_rank)
    wanted = _domain(domain)
    discarded = full.filter(lambda key: classify_key(key, part) in wanted)
    G = full - discarded
    truncated = 0.0
    if max_body_rank is not None:
        kept = G.truncate(max_body_rank)
        truncated = (G - kept).norm()
        G = kept
    return GResult(G, discarded, discarded.norm(), rank, truncated)


def check_noncommutation(H: FermionOperator, B, part: OrbitalPartition | None = None) -> NoncommutationCheck:
    """Norm of ``[B, H]``; a nontrivial solution can never commute with ``H``.

    The flag is ``None`` when the check does not apply (``B = 0`` or, given a
    partition, ``H`` has no energetically distinct external part).
    """
    b = _as_op(B)
    norm = commutator(b, H).norm()
    threshold = 1e-8 * H.norm() * b.norm()
    if not b or (part is not None and not project(H, Sector.DISTINCT, part)):
        return NoncommutationCheck(None, norm, threshold)
    return NoncommutationCheck(norm > threshold, norm, threshold)


def apply_auxiliary(H: FermionOperator, C: FermionOperator, rank: int | None = None, tol: float = 1e-12) -> FermionOperator:
    """``e^C H e^-C`` for a user-supplied anti-Hermitian ``C``.

    With ``rank=None`` the series is summed to convergence.
    """
    C = _as_op(C)
    if not C.is_anti_hermitian(1e-10 * max(1.0, C.norm())):
        raise ValidationError("auxiliary generator C must be anti-Hermitian")
    if rank is None:
        return bch_series(H, C, tol)[0]
    return bch_transform(H, C, rank)


def _first_order(W: FermionOperator, part, wanted, eps) -> dict:
    amps = {}
    for key, w in W.terms.items():
        if key[0] <= key[1] or classify_key(key, part) not in wanted:
            continue
        d = denominator(key, eps)
        if abs(d) < 1e-12:
            raise SingularityError(
                f"zero denominator for c:{list(bits(key[0]))} a:{list(bits(key[1]))}",
                term=(bits(key[0]), bits(key[1])), denominator=abs(d),
            )
        amps[key] = w / d
    return amps


def perturbative_B(H: FermionOperator, part: OrbitalPartition, order: int = 1, domain: str = "eod",
                   epsilon: Sequence[float] | None = None) -> list[GeneratorB]:
    """Order-by-order generator ``[B0, B1, ..., B_order]`` for ``H = H0 + W``.

    ``B0`` vanishes because ``H0`` is diagonal.  ``B1`` solves
    ``P(W - [H0, B1]) = 0`` and carries the one- and two-body structure of
    ``W``.  ``B2`` solves
    ``P(-[H0, B2] + 1/2 [[H0, B1], B1] - [W, B1]) = 0``; its ``[W, B1]``
    source produces three-body excitations.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    split = split_h0_w(H, part, epsilon)
    wanted = _domain(domain)
    out = [GeneratorB({}, domain, 0)]
    if order == 0:
        return out
    b1 = GeneratorB(_first_order(split.W, part, wanted, split.epsilon), domain)
    b1.body_rank = b1.max_body_rank
    out.append(b1)
    if order == 1:
        return out
    B1 = b1.op
    source = 0.5 * commutator(commutator(split.H0, B1), B1) - commutator(split.W, B1)
    b2 = GeneratorB(_first_order(source, part, wanted, split.epsilon), domain)
    b2.body_rank = b2.max_body_rank
    out.append(b2)
    return out
