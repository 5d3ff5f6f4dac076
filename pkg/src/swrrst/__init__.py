"""Rank-reducing Schrieffer-Wolff transformations of fermionic Hamiltonians.

The package builds second-quantized Hamiltonians, splits them into sectors
relative to an active/external orbital partition, solves for an
anti-Hermitian generator that removes the energetically distinct external
couplings, maps the result to qubits and simulates its time evolution and
phase estimation on a dense state vector.
"""

__version__ = "0.1.0"

from .errors import (
    BoundsError,
    CapacityError,
    ConfigError,
    DivergenceError,
    DomainError,
    NumericalError,
    ParseError,
    SingularityError,
    StructureError,
    SwrrstError,
    ValidationError,
)
from .operators import (
    CaosTerm,
    FermionOperator,
    ManyBodyTensors,
    adjoint,
    commutator,
    hamiltonian_from_tensors,
    multiply,
    normal_order,
    to_dense,
)
from .partition import (
    OD,
    Decomposition,
    NumberPolynomial,
    OrbitalPartition,
    Sector,
    classify_term,
    decompose_hamiltonian,
    project,
    sector_census,
    to_number_polynomial,
)
from .solver import (
    GeneratorB,
    H0Split,
    SolveReport,
    SolverOptions,
    apply_auxiliary,
    bch_transform,
    build_G,
    check_noncommutation,
    perturbative_B,
    residual,
    solve_swrrst,
    split_h0_w,
)
from .qubits import (
    PauliOperator,
    PauliString,
    RotationSchedule,
    jw_map,
    locality_report,
    schedule_number_exponential,
    support_width,
)
from .dynamics import (
    EvolutionPlan,
    FockStateVector,
    PhaseHistogram,
    exact_evolve,
    power_evolution,
    qpe_run,
    sector_prepare,
    split_G,
    trotter_evolve,
)
from .io import load_integrals
from .models import toy_hamiltonian
from .config import RunConfig
from .pipeline import ResultBundle, emit_report, run_pipeline
