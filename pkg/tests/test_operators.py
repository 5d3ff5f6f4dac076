import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import operators, random_operator
from oracles import annihilator, creator, operator_matrix, term_matrix
from swrrst import (
    BoundsError,
    CapacityError,
    FermionOperator,
    ManyBodyTensors,
    ParseError,
    ValidationError,
    adjoint,
    commutator,
    hamiltonian_from_tensors,
    multiply,
    normal_order,
    to_dense,
)
from swrrst.operators import bits, settings


def as_index_dict(op):
    return {(bits(c), bits(a)): v for (c, a), v in op.terms.items()}


def test_to_dense_matches_kronecker_oracle(rng):
    for _ in range(20):
        op = random_operator(rng, 5, 8)
        assert np.allclose(to_dense(op, 5), operator_matrix(as_index_dict(op), 5), atol=1e-12)


def test_single_mode_number_is_diag_0_1():
    assert np.array_equal(to_dense(FermionOperator.number(0), 1), np.diag([0, 1]))


def test_hop_on_two_modes_has_single_entry():
    # a+_0 a_1 moves the particle from mode 1 to mode 0: |10> -> |01>, no sign
    mat = to_dense(FermionOperator({(0b01, 0b10): 1.0}), 2)
    expected = np.zeros((4, 4))
    expected[0b01, 0b10] = 1.0
    assert np.array_equal(mat, expected)


@pytest.mark.parametrize("n", range(1, 7))
def test_canonical_anticommutation_exhaustive(n):
    eye = np.eye(1 << n)
    for p in range(n):
        ap = to_dense(FermionOperator.annihilation(p), n)
        for q in range(n):
            aq_dag = to_dense(FermionOperator.creation(q), n)
            assert np.allclose(ap @ aq_dag + aq_dag @ ap, (p == q) * eye, atol=1e-12)
            aq = to_dense(FermionOperator.annihilation(q), n)
            assert np.allclose(ap @ aq + aq @ ap, 0, atol=1e-12)


def test_ladder_matrices_agree_with_oracle():
    for p in range(4):
        assert np.array_equal(to_dense(FermionOperator.annihilation(p), 4), annihilator(p, 4))
        assert np.array_equal(to_dense(FermionOperator.creation(p), 4), creator(p, 4))


def test_normal_order_examples():
    one = normal_order([(0, False), (0, True)])
    assert one == FermionOperator.identity() - FermionOperator.number(0)

    flipped = normal_order([(1, True), (0, True)])
    assert flipped == FermionOperator({(0b11, 0): -1.0})

    four = normal_order([(0, False), (1, False), (1, True), (0, True)])
    expected = (FermionOperator.identity() - FermionOperator.number(0) - FermionOperator.number(1)
                + FermionOperator({(0b11, 0b11): 1.0}))
    assert four == expected
    raw = annihilator(0, 2) @ annihilator(1, 2) @ creator(1, 2) @ creator(0, 2)
    assert np.allclose(to_dense(four, 2), raw)


def test_normal_order_repeated_creator_vanishes():
    assert not normal_order([(2, True), (2, True)])


def test_normal_order_length_cap():
    with pytest.raises(CapacityError):
        normal_order([(0, True), (0, False)] * 9)


@given(st.lists(st.tuples(st.integers(0, 3), st.booleans()), max_size=7))
def test_normal_order_matches_matrix_product(ops):
    mat = np.eye(16)
    for p, cre in ops:
        mat = mat @ (creator(p, 4) if cre else annihilator(p, 4))
    assert np.allclose(to_dense(normal_order(ops), 4), mat, atol=1e-12)


def test_dense_homomorphism_random(rng):
    for _ in range(100):
        n = int(rng.integers(2, 7))
        a, b = random_operator(rng, n, 5), random_operator(rng, n, 5)
        da, db = to_dense(a, n), to_dense(b, n)
        s = complex(rng.normal(), rng.normal())
        assert np.allclose(to_dense(a + b, n), da + db, atol=1e-10)
        assert np.allclose(to_dense(s * a, n), s * da, atol=1e-10)
        assert np.allclose(to_dense(multiply(a, b), n), da @ db, atol=1e-10)
        assert np.allclose(to_dense(commutator(a, b), n), da @ db - db @ da, atol=1e-10)
        assert np.allclose(to_dense(adjoint(a), n), da.conj().T, atol=1e-10)


def test_identity_and_idempotent_number():
    b = FermionOperator({(0b101, 0b011): 0.5j})
    assert FermionOperator.identity() * b == b
    n1 = FermionOperator.number(1)
    assert n1 * n1 == n1


def test_number_ladder_commutator():
    assert commutator(FermionOperator.number(2), FermionOperator.creation(2)) == FermionOperator.creation(2)


def test_h0_commutator_gives_energy_difference():
    eps = [0.3, -1.1, 0.7]
    H0 = sum((FermionOperator.number(p, e) for p, e in enumerate(eps)), FermionOperator.zero())
    B = FermionOperator.excitation([2], [1], 0.25)
    assert commutator(H0, B).isclose((eps[2] - eps[1]) * B, 1e-15)


@given(operators())
def test_self_commutator_is_empty(a):
    assert not commutator(a, a)


@given(operators(), operators())
def test_commutator_antisymmetric(a, b):
    assert commutator(a, b).isclose(-commutator(b, a), 1e-12)


@given(operators(n=4, max_terms=3), operators(n=4, max_terms=3), operators(n=4, max_terms=3))
def test_jacobi_identity(a, b, c):
    total = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b))
    assert total.norm() < 1e-10 * max(1.0, a.norm() * b.norm() * c.norm())


@given(operators())
def test_adjoint_involution(a):
    assert adjoint(adjoint(a)) == a


def test_adjoint_examples():
    assert adjoint(FermionOperator.excitation([0], [1])) == FermionOperator.excitation([1], [0])
    assert adjoint(FermionOperator.number(0, 1j)) == FermionOperator.number(0, -1j)


@given(operators(n=5, conserving=True))
def test_number_conserving_is_block_diagonal(a):
    mat = to_dense(a, 5)
    occ = np.array([bin(s).count("1") for s in range(32)])
    assert np.all(mat[occ[:, None] != occ[None, :]] == 0)


def test_pruning_drops_tiny_coefficients():
    op = FermionOperator({(1, 1): 1.0, (2, 2): 0.5 * settings.prune_tol})
    assert len(op) == 1


def test_text_round_trip(rng):
    op = random_operator(rng, 6, 10)
    text = op.to_text()
    assert FermionOperator.from_text(text) == op
    assert "c:" in text.splitlines()[0]


def test_text_parse_error_names_line():
    with pytest.raises(ParseError, match="line 2"):
        FermionOperator.from_text("1.0  c:1  a:1\n1.0  c:2,1  a:\n")


def test_hamiltonian_single_mode():
    H = hamiltonian_from_tensors(ManyBodyTensors(np.array([[0.7]])))
    assert H == FermionOperator.number(0, 0.7)


def test_hamiltonian_two_body_pair():
    g = 0.4
    v = np.zeros((2, 2, 2, 2))
    v[0, 1, 0, 1] = v[1, 0, 1, 0] = g
    v[0, 1, 1, 0] = v[1, 0, 0, 1] = -g
    H = hamiltonian_from_tensors(ManyBodyTensors(np.zeros((2, 2)), v))
    # 1/4 of four entries, each normal ordered onto a+_0 a+_1 a_1 a_0
    assert H == FermionOperator({(0b11, 0b11): g})
    assert np.allclose(to_dense(H, 2), g * term_matrix((0, 1), (0, 1), 2))


def test_hamiltonian_matches_quarter_sum(rng):
    from swrrst.models import toy_hamiltonian

    t, _ = toy_hamiltonian(2, 1, seed=5, complex_valued=True)
    n = t.n_modes
    ref = np.zeros((1 << n, 1 << n), dtype=complex)
    for p in range(n):
        for q in range(n):
            ref += t.h[p, q] * creator(p, n) @ annihilator(q, n)
            for r in range(n):
                for s in range(n):
                    ref += 0.25 * t.v[p, q, r, s] * creator(p, n) @ creator(q, n) @ annihilator(s, n) @ annihilator(r, n)
    H = hamiltonian_from_tensors(t)
    assert np.allclose(to_dense(H, n), ref, atol=1e-12)
    assert H.is_hermitian() and adjoint(H) == H
    assert np.allclose(to_dense(H, n), to_dense(H, n).conj().T, atol=1e-12)


def test_hamiltonian_rejects_broken_symmetry():
    v = np.zeros((2, 2, 2, 2))
    v[0, 1, 0, 1] = 1.0
    with pytest.raises(ValidationError, match="antisymmetry"):
        hamiltonian_from_tensors(ManyBodyTensors(np.zeros((2, 2)), v))
    with pytest.raises(ValidationError, match="Hermitian"):
        hamiltonian_from_tensors(ManyBodyTensors(np.array([[0, 1.0], [0, 0]])))


def test_to_dense_bounds_and_cap():
    with pytest.raises(BoundsError):
        to_dense(FermionOperator.number(3), 2)
    with pytest.raises(CapacityError):
        to_dense(FermionOperator.number(0), settings.dense_cap + 1)


def test_term_views():
    op = FermionOperator({(0b011, 0b101): 2.0, (0, 0): 1.0})
    terms = list(op)
    assert terms[0].creators == () and terms[0].rank == 0
    big = [t for t in terms if t.rank == 2][0]
    assert big.creators == (0, 1) and big.annihilators == (0, 2) and not big.is_diagonal
    assert op.max_body_rank == 2 and op.n_modes == 3
    assert op.truncate(1) == FermionOperator.identity()
