import numpy as np
import pytest
import scipy.linalg
from hypothesis import given

from conftest import operators, random_operator
from oracles import pauli_matrix
from swrrst import (
    FermionOperator,
    NumberPolynomial,
    ParseError,
    PauliOperator,
    PauliString,
    RotationSchedule,
    build_G,
    jw_map,
    locality_report,
    schedule_number_exponential,
    solve_swrrst,
    support_width,
    to_dense,
)
from swrrst.errors import BoundsError


def as_letters(P):
    return {s.letters: w for s, w in P}


def test_number_operator_maps_to_half_one_minus_z():
    assert as_letters(jw_map(FermionOperator.number(1), 3)) == {"III": 0.5, "IZI": -0.5}


def test_number_product_expansion():
    op = FermionOperator.number(0) * FermionOperator.number(2)
    assert as_letters(jw_map(op, 3)) == {"III": 0.25, "IIZ": -0.25, "ZII": -0.25, "ZIZ": 0.25}


def test_adjacent_hop_is_raising_lowering_pair():
    # a+_1 a_0 acts on |q1 q0> = |01> -> |10>: Q+ on qubit 1, Q- on qubit 0, no Z string
    P = jw_map(FermionOperator.excitation([1], [0]), 2)
    q_plus = np.array([[0, 0], [1, 0]])
    q_minus = q_plus.T
    assert np.allclose(P.to_dense(), np.kron(q_plus, q_minus))
    assert as_letters(P) == {"XX": 0.25, "XY": 0.25j, "YX": -0.25j, "YY": 0.25}


def test_string_product_phases():
    X, Y, Z = (PauliString.from_letters(c) for c in "XYZ")
    assert (X * Y).letters == "Z" and (X * Y).phase == 1j
    assert (Y * X).phase == -1j
    assert (Z * Z).letters == "I" and (Z * Z).phase == 1


@given(operators(n=4, max_terms=5))
def test_jw_matches_fermion_matrix(a):
    assert np.allclose(jw_map(a, 4).to_dense(), to_dense(a, 4), atol=1e-12)


def test_jw_round_trip_up_to_eight_modes(rng):
    for n in (5, 8):
        op = random_operator(rng, n, 5)
        assert np.allclose(jw_map(op, n).to_dense(), to_dense(op, n), atol=1e-12)


def test_dense_matches_kronecker_letters(rng):
    P = jw_map(random_operator(rng, 3, 6), 3)
    ref = sum(w * pauli_matrix(s.letters) for s, w in P)
    assert np.allclose(P.to_dense(), ref)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    assert np.allclose(P.apply(psi), ref @ psi)


def test_hermitian_operator_has_real_weights(toy):
    H, _, _ = toy
    P = jw_map(H)
    assert P.is_hermitian()
    assert all(isinstance(w, float) for w in P.weights_real().values())
    assert not jw_map(FermionOperator.excitation([1], [0])).is_hermitian()


def test_pauli_text_round_trip(toy):
    P = jw_map(toy[0])
    Q = PauliOperator.from_text(P.to_text())
    assert Q.terms == P.terms and Q.n_qubits == P.n_qubits
    with pytest.raises(ParseError, match="line 2"):
        PauliOperator.from_text("1.0 XZ\n0.5 XQ\n")


def test_jw_bounds():
    with pytest.raises(BoundsError):
        jw_map(FermionOperator.number(4), 3)


def test_support_width_examples(toy):
    part = toy[1]
    assert support_width(PauliString.from_letters("IIII"), part) == (0, -1, False)
    assert support_width(PauliString.from_letters("IIZI"), part) == (1, 1, False)
    assert support_width(PauliString.from_letters("XIZI"), part) == (3, 3, True)
    assert support_width((0b0100, 0), part) == (1, 2, True)


def test_converged_generator_gives_local_transformed_hamiltonian(toy):
    H, part, _ = toy
    B, _ = solve_swrrst(H, part)
    G = build_G(H, B, part).G
    rep = locality_report(G, part)
    assert rep.ok and rep.sectors["external_energetically_distinct"]["strings"] == 0
    assert rep.sectors["external_diagonal"]["strings"] > 0
    assert set(rep.to_dict()) == {"sectors", "violations", "examples"}


def test_raw_hamiltonian_reports_violations(toy):
    H, part, _ = toy
    rep = locality_report(H, part)
    assert rep.sectors["external_energetically_distinct"]["violations"] > 0
    assert rep.examples["external_energetically_distinct"]
    # a bare Pauli operator is checked with the pairing rule only
    assert locality_report(jw_map(FermionOperator.excitation([2], [0])), part).violations == 4


def test_paired_flip_passes_pairing_rule(toy):
    part = toy[1]
    pair = FermionOperator.excitation([2, 3], [0, 1]) + FermionOperator.excitation([0, 1], [2, 3])
    assert locality_report(jw_map(pair, 4), part).ok


def test_single_number_schedule():
    f = NumberPolynomial({frozenset({1}): 0.8})
    sched = schedule_number_exponential(f, 0.5, 2)
    assert sched.entries == [((1,), pytest.approx(-0.4))]
    assert sched.global_phase == pytest.approx(-0.2)
    assert np.allclose(sched.to_dense(), np.diag(np.exp(-0.5j * 0.8 * np.array([0, 0, 1, 1]))))


def test_empty_polynomial_gives_identity():
    sched = schedule_number_exponential(NumberPolynomial({}), 1.3, 3)
    assert len(sched) == 0 and sched.global_phase == 0
    assert np.allclose(sched.to_dense(), np.eye(8))


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_schedule_matches_dense_exponential(rng, degree):
    n = 5
    monos = {}
    for _ in range(4):
        S = frozenset(int(p) for p in rng.choice(n, size=degree, replace=False))
        monos[S] = float(rng.normal())
    f = NumberPolynomial(monos)
    sched = schedule_number_exponential(f, 0.7, n)
    ref = scipy.linalg.expm(-0.7j * to_dense(f.to_operator(), n))
    assert np.abs(sched.to_dense() - ref).max() < 1e-12
    if degree == 3:
        assert any(g[0] == "cx" for g in sched.gates())


def test_schedule_text_round_trip():
    f = NumberPolynomial({frozenset({0, 2}): 0.3, frozenset({1}): -1.1})
    sched = schedule_number_exponential(f, 2.0, 3)
    back = RotationSchedule.from_text(sched.to_text(), 3)
    assert back.entries == sched.entries and back.global_phase == sched.global_phase
    with pytest.raises(ParseError, match="line 1"):
        RotationSchedule.from_text("rx 0 1.0\n")
