"""The factorization engine: Euler angles, the canonical two-spin form,
the last-spin split, demultiplexing, gate trees, and the full recursion."""

import cmath
import math

import numpy as np
import pytest
import scipy.linalg

from kakpulse import (
    BlockPair,
    CartanElement,
    CartanFamily,
    CartanNode,
    CouplingEvolution,
    DimensionError,
    EulerNode,
    GlobalPhase,
    LocalRotation,
    LocalWordNode,
    PauliString,
    PhaseNode,
    SequenceNode,
    TwoSpinNode,
    ValidationError,
    compile_unitary,
    decompose,
    demultiplex,
    diagonal_to_block_coordinates,
    evaluate,
    expm_skew,
    flatten,
    gate_list_unitary,
    haar_unitary,
    interaction_class,
    interaction_unitary,
    local_rotation_matrix,
    residual_budget,
    split_last_qubit,
    tree_from_json_dict,
    tree_to_json_dict,
    two_spin_factors,
)
from kakpulse.kak import euler_xzx, su2_rotation

X2 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
Y2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
Z2 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

CNOT = np.eye(4, dtype=complex)[[0, 1, 3, 2]]

# The entangled frame in which local pairs become real orthogonal; written
# out by hand so the invariance check below does not lean on the library.
MAGIC = np.array([
    [1, 0, 0, 1j],
    [0, 1j, 1, 0],
    [0, 1j, -1, 0],
    [1, 0, 0, -1j],
], dtype=complex) / math.sqrt(2)


def pauli_dense(word):
    table = {"1": np.eye(2, dtype=complex), "X": X2, "Y": Y2, "Z": Z2}
    out = np.ones((1, 1), dtype=complex)
    for c in word:
        out = np.kron(out, table[c])
    return out / 2.0


def magic_spectrum(u):
    """Sorted eigenphases of (M^H u M)^T (M^H u M): a local-dressing
    invariant of two-spin unitaries with unit determinant."""
    m = MAGIC.conj().T @ u @ MAGIC
    return np.sort(np.angle(np.linalg.eigvals(m.T @ m)))


# ---------------------------------------------------------------------------
# Single spin


def test_su2_rotation_matches_expm():
    for axis, sigma in (("x", X2), ("y", Y2), ("z", Z2)):
        for angle in (0.0, 0.7, -2.1, math.pi):
            want = scipy.linalg.expm(-0.5j * angle * sigma)
            assert np.allclose(su2_rotation(axis, angle), want, atol=1e-14)


class TestEulerXZX:
    def test_haar_samples_reconstruct(self):
        rng = np.random.default_rng(100)
        for _ in range(300):
            u = haar_unitary(2, rng, special=True)
            alpha, beta, gamma = euler_xzx(u)
            recon = su2_rotation("x", alpha) @ su2_rotation("z", beta) \
                @ su2_rotation("x", gamma)
            assert np.max(np.abs(recon - u)) < 1e-12

    def test_angle_ranges(self):
        rng = np.random.default_rng(101)
        for _ in range(300):
            alpha, beta, gamma = euler_xzx(haar_unitary(2, rng, special=True))
            assert 0 <= alpha < 2 * math.pi
            assert 0 <= gamma < 2 * math.pi
            assert 0 <= beta <= math.pi or 2 * math.pi <= beta <= 3 * math.pi

    def test_pure_x_rotation(self):
        alpha, beta, gamma = euler_xzx(su2_rotation("x", 0.7))
        assert beta == 0.0
        assert (alpha + gamma) % (2 * math.pi) == pytest.approx(0.7)

    def test_pure_z_rotation(self):
        assert euler_xzx(su2_rotation("z", 1.1)) == \
            pytest.approx((0.0, 1.1, 0.0))

    def test_minus_identity(self):
        alpha, beta, gamma = euler_xzx(-np.eye(2, dtype=complex))
        recon = su2_rotation("x", alpha) @ su2_rotation("z", beta) \
            @ su2_rotation("x", gamma)
        assert np.allclose(recon, -np.eye(2), atol=1e-14)

    def test_rejects_non_special(self):
        with pytest.raises(ValidationError):
            euler_xzx(haar_unitary(2, 3))  # det is a random phase

    def test_rejects_wrong_shape(self):
        with pytest.raises(DimensionError):
            euler_xzx(haar_unitary(4, 3))


# ---------------------------------------------------------------------------
# Two spins


def test_interaction_unitary_matches_expm():
    rng = np.random.default_rng(7)
    for _ in range(20):
        ax, ay, az = rng.uniform(-math.pi, math.pi, size=3)
        h = (ax * np.kron(X2, X2) + ay * np.kron(Y2, Y2)
             + az * np.kron(Z2, Z2)) / 4
        want = scipy.linalg.expm(-1j * h)
        assert np.allclose(interaction_unitary((ax, ay, az)), want, atol=1e-13)


class TestTwoSpinFactors:
    def test_haar_samples(self):
        rng = np.random.default_rng(200)
        for _ in range(500):
            u = haar_unitary(4, rng)
            f = two_spin_factors(u)
            assert np.max(np.abs(f.reconstruct() - u)) < 1e-10
            assert f.residual < 1e-10

    def test_canonical_chamber(self):
        rng = np.random.default_rng(201)
        for _ in range(300):
            a1, a2, a3 = two_spin_factors(haar_unitary(4, rng)).alphas
            assert math.pi + 1e-12 >= a1 >= a2 >= abs(a3) - 1e-12
            if a1 >= math.pi - 1e-12:
                assert a3 >= -1e-12

    def test_locals_are_special(self):
        f = two_spin_factors(haar_unitary(4, 17))
        for q in (f.l1, f.l2, f.r1, f.r2):
            assert abs(np.linalg.det(q) - 1) < 1e-9
            assert np.allclose(q @ q.conj().T, np.eye(2), atol=1e-9)

    def test_interaction_point_is_a_fixed_point(self):
        u = interaction_unitary((0.3, 0.2, 0.1))
        f = two_spin_factors(u)
        assert np.allclose(f.alphas, (0.3, 0.2, 0.1), atol=1e-10)

    def test_dressing_invariance(self):
        rng = np.random.default_rng(202)
        for _ in range(50):
            u = haar_unitary(4, rng)
            base = np.asarray(two_spin_factors(u).alphas)
            dressed = np.kron(haar_unitary(2, rng, special=True),
                              haar_unitary(2, rng, special=True)) @ u @ \
                np.kron(haar_unitary(2, rng, special=True),
                        haar_unitary(2, rng, special=True))
            got = np.asarray(two_spin_factors(dressed).alphas)
            assert np.max(np.abs(got - base)) < 1e-9

    def test_cnot_interaction_content(self):
        assert np.allclose(interaction_class(CNOT), (math.pi, 0.0, 0.0),
                           atol=1e-9)

    def test_cnot_against_magic_spectrum(self):
        """Locally-invariant cross-check that CNOT really sits at (pi,0,0):
        its magic-frame spectrum must match the bare interaction's."""
        got = magic_spectrum(CNOT * cmath.exp(-1j * math.pi / 4))
        want = magic_spectrum(interaction_unitary((math.pi, 0.0, 0.0)))
        assert np.allclose(got, want, atol=1e-10)

    def test_identity_input(self):
        f = two_spin_factors(np.eye(4, dtype=complex))
        assert np.allclose(f.alphas, 0.0, atol=1e-12)
        assert np.max(np.abs(f.reconstruct() - np.eye(4))) < 1e-10

    def test_rejects_wrong_size(self):
        with pytest.raises(ValidationError):
            two_spin_factors(haar_unitary(8, 1))


# ---------------------------------------------------------------------------
# The last-spin split


class TestSplitLastQubit:
    def test_reconstruction(self):
        for n, seed in ((3, 0), (3, 1), (4, 2)):
            u = haar_unitary(2 ** n, seed, special=True)
            k1, y, k2 = split_last_qubit(u)
            recon = k1.realize() @ expm_skew(y.hamiltonian()) @ k2.realize()
            assert np.max(np.abs(recon - u)) < 1e-9

    def test_middle_lives_on_the_trailing_x_family(self):
        u = haar_unitary(8, 3, special=True)
        _, y, _ = split_last_qubit(u)
        assert y.family is CartanFamily.OUTER_X
        assert all(s.letters[-1] == "X" for s in y.coeffs)

    def test_block_factors_are_special(self):
        u = haar_unitary(8, 4, special=True)
        k1, _, k2 = split_last_qubit(u)
        for pair in (k1, k2):
            assert abs(np.linalg.det(pair.u0) - 1) < 1e-8
            assert abs(np.linalg.det(pair.u1) - 1) < 1e-8

    def test_pure_family_evolution_spectrum(self):
        """Feeding exp(-iH) for H over the commuting family must return a
        middle with the same spectrum as H (the sides only re-gauge it)."""
        h = 0.3 * pauli_dense("11X") + 0.5 * pauli_dense("XXX")
        _, y, _ = split_last_qubit(expm_skew(h))
        got = np.sort(np.linalg.eigvalsh(y.hamiltonian()))
        want = np.sort(np.linalg.eigvalsh(h))
        assert np.max(np.abs(got - want)) < 1e-9

    def test_single_string_evolution(self):
        _, y, _ = split_last_qubit(expm_skew(0.4 * pauli_dense("XXX")))
        eigs = np.abs(np.linalg.eigvalsh(y.hamiltonian()))
        assert np.allclose(eigs, 0.2, atol=1e-9)

    def test_rejects_two_spins(self):
        with pytest.raises(ValidationError):
            split_last_qubit(haar_unitary(4, 0, special=True))

    def test_rejects_non_special(self):
        u = haar_unitary(8, 5)  # determinant is a random phase
        with pytest.raises(ValidationError):
            split_last_qubit(u)


class TestDemultiplex:
    @staticmethod
    def make_pair(n, seed, phase):
        half = 2 ** (n - 1)
        return BlockPair(n=n,
                         u0=haar_unitary(half, seed, special=True),
                         u1=haar_unitary(half, seed + 1, special=True),
                         phase=phase)

    def test_realize_layout(self):
        pair = self.make_pair(3, 10, 0.0)
        got = pair.realize()
        # spin 3 selects the sector: |0> on the last spin -> u0
        want = np.zeros((8, 8), dtype=complex)
        for i in range(4):
            for j in range(4):
                want[2 * i, 2 * j] = pair.u0[i, j]
                want[2 * i + 1, 2 * j + 1] = pair.u1[i, j]
        assert np.allclose(got, want, atol=1e-14)

    def test_factorization_identity(self):
        for n, seed, phase in ((2, 20, 0.0), (3, 30, 0.37), (4, 40, -1.1)):
            pair = self.make_pair(n, seed, phase)
            v, z, w, phi = demultiplex(pair)
            recon = np.kron(v, np.eye(2)) @ expm_skew(z.hamiltonian()) \
                @ np.kron(w, np.eye(2)) \
                @ local_rotation_matrix(n, n, "z", pair.phase - 2 * phi)
            assert np.max(np.abs(recon - pair.realize())) < 1e-9

    def test_diagonal_layer_family(self):
        pair = self.make_pair(3, 50, 0.2)
        _, z, _, _ = demultiplex(pair)
        assert z.family is CartanFamily.DIAGONAL
        lone = "1" * (z.n - 1) + "Z"
        for s in z.coeffs:
            assert set(s.letters) <= {"1", "Z"}
            assert s.letters != lone  # the mean is detrended into phi

    def test_equal_blocks_need_no_layer(self):
        u0 = haar_unitary(4, 60, special=True)
        v, z, w, phi = demultiplex(BlockPair(n=3, u0=u0, u1=u0, phase=0.0))
        assert z.coeffs == {}
        assert phi == pytest.approx(0.0, abs=1e-12)
        assert np.max(np.abs(v @ w - u0)) < 1e-10


def test_diagonal_to_block_coordinates():
    pair = TestDemultiplex.make_pair(3, 70, 0.5)
    _, z, _, _ = demultiplex(pair)
    out = diagonal_to_block_coordinates(z)
    assert out.family is CartanFamily.BLOCK_Z
    # a unitary change of coordinates: spectrum and magnitudes survive
    assert np.allclose(np.sort(np.linalg.eigvalsh(out.hamiltonian())),
                       np.sort(np.linalg.eigvalsh(z.hamiltonian())), atol=1e-12)
    assert sorted(abs(c) for c in out.coeffs.values()) == \
        pytest.approx(sorted(abs(c) for c in z.coeffs.values()))


def test_diagonal_to_block_coordinates_validation():
    elem = CartanElement(n=3, family=CartanFamily.BLOCK_Z,
                         coeffs={PauliString("ZZZ"): 0.1})
    with pytest.raises(ValidationError):
        diagonal_to_block_coordinates(elem)
    small = CartanElement(n=2, family=CartanFamily.DIAGONAL,
                          coeffs={PauliString("ZZ"): 0.1})
    with pytest.raises(ValidationError):
        diagonal_to_block_coordinates(small)


# ---------------------------------------------------------------------------
# Gate trees


def test_sequence_children_multiply_in_matrix_order():
    a = EulerNode(qubit=1, alpha=0.3, beta=0.0, gamma=0.0)
    b = EulerNode(qubit=1, alpha=0.0, beta=1.2, gamma=0.0)
    got = evaluate(SequenceNode((a, b)), 1)
    want = su2_rotation("x", 0.3) @ su2_rotation("z", 1.2)
    assert np.allclose(got, want, atol=1e-14)


def test_evaluate_embeds_locals():
    node = EulerNode(qubit=2, alpha=0.4, beta=0.9, gamma=-0.2)
    got = evaluate(node, 3)
    want = np.kron(np.kron(np.eye(2), node.matrix2()), np.eye(2))
    assert np.allclose(got, want, atol=1e-14)


def test_evaluate_phase_and_local_word():
    tree = SequenceNode((
        PhaseNode(0.6),
        LocalWordNode((LocalRotation(1, "x", 0.5), LocalRotation(2, "z", -0.3))),
    ))
    want = cmath.exp(0.6j) * np.kron(su2_rotation("x", 0.5),
                                     su2_rotation("z", -0.3))
    assert np.allclose(evaluate(tree, 2), want, atol=1e-14)


def test_evaluate_cartan_node_pads_trailing_spins():
    elem = CartanElement(n=2, family=CartanFamily.BLOCK_Z,
                         coeffs={PauliString("ZZ"): 0.8})
    got = evaluate(CartanNode(elem), 3)
    want = scipy.linalg.expm(-1j * np.kron(0.8 * pauli_dense("ZZ"), np.eye(2)))
    assert np.allclose(got, want, atol=1e-13)


def test_evaluate_two_spin_node():
    f = two_spin_factors(haar_unitary(4, 77))
    tree = decompose(haar_unitary(4, 77))
    assert isinstance(tree, TwoSpinNode)
    got = evaluate(tree, 3)  # embedded at the left edge of a longer chain
    want = np.kron(f.reconstruct(), np.eye(2))
    assert np.max(np.abs(got - want)) < 1e-10


def test_evaluate_rejects_out_of_range_nodes():
    with pytest.raises(DimensionError):
        evaluate(EulerNode(qubit=4, alpha=0.1, beta=0.0, gamma=0.0), 3)


# ---------------------------------------------------------------------------
# The full recursion


class TestDecompose:
    def test_single_spin(self):
        u = haar_unitary(2, 0)  # non-special: needs a phase leaf
        tree = decompose(u)
        assert isinstance(tree, SequenceNode)
        assert isinstance(tree.children[0], PhaseNode)
        assert np.max(np.abs(evaluate(tree, 1) - u)) < 1e-12

    def test_single_spin_special(self):
        u = haar_unitary(2, 1, special=True)
        tree = decompose(u)
        assert isinstance(tree, EulerNode)
        assert np.max(np.abs(evaluate(tree, 1) - u)) < 1e-12

    def test_two_spins(self):
        u = haar_unitary(4, 2)
        tree = decompose(u)
        assert isinstance(tree, TwoSpinNode)
        assert np.max(np.abs(evaluate(tree, 2) - u)) < residual_budget(2)

    def test_three_and_four_spins(self):
        for n, seed in ((3, 3), (3, 4), (4, 5)):
            u = haar_unitary(2 ** n, seed)
            tree = decompose(u)
            resid = np.max(np.abs(evaluate(tree, n) - u))
            assert resid < residual_budget(n)

    def test_deterministic(self):
        u = haar_unitary(8, 6)
        assert decompose(u) == decompose(u)

    def test_identity_lowered_without_couplings(self):
        # exact on two spins; larger chains keep a few gauge-frame couplings
        gates = compile_unitary(np.eye(4, dtype=complex))
        assert sum(isinstance(g, CouplingEvolution) for g in gates) == 0
        assert np.max(np.abs(gate_list_unitary(gates, 2) - np.eye(4))) < 1e-10

    def test_rejects_non_unitary(self):
        with pytest.raises(ValidationError):
            decompose(np.ones((4, 4), dtype=complex))


def test_tree_json_round_trip():
    for n, seed in ((1, 0), (2, 1), (3, 2)):
        tree = decompose(haar_unitary(2 ** n, seed))
        assert tree_from_json_dict(tree_to_json_dict(tree)) == tree


def test_tree_json_rejects_malformed():
    with pytest.raises(ValidationError):
        tree_from_json_dict({"node": "bogus"})
    with pytest.raises(ValidationError):
        tree_from_json_dict({"node": "euler", "q": 1, "alpha": "wat",
                             "beta": 0.0, "gamma": 0.0})
    with pytest.raises(ValidationError):
        tree_from_json_dict({"node": "two_spin", "left": 1, "phase": 0.0,
                             "alphas": [0.1, 0.2], "after": [], "before": []})


# ---------------------------------------------------------------------------
# Lowering


def test_flatten_matches_evaluate():
    for n, seed in ((2, 10), (3, 11), (3, 12)):
        tree = decompose(haar_unitary(2 ** n, seed))
        got = gate_list_unitary(flatten(tree), n)
        assert np.max(np.abs(got - evaluate(tree, n))) < 1e-8


def test_flatten_cartan_node():
    elem = CartanElement(
        n=3, family=CartanFamily.OUTER_X,
        coeffs={PauliString("11X"): 0.4, PauliString("YYX"): -0.7})
    gates = flatten(CartanNode(elem))
    got = gate_list_unitary(gates, 3)
    assert np.max(np.abs(got - expm_skew(elem.hamiltonian()))) < 1e-10


def test_framed_couplings_realize_the_interaction():
    """The classic conjugation pattern: y-frames turn ZZ into XX, x-frames
    into YY, so three framed coupling blocks give the full interaction."""
    a1, a2, a3 = 0.7, 0.4, -0.2
    ky = [LocalRotation(1, "y", math.pi / 2), LocalRotation(2, "y", math.pi / 2)]
    kxi = [LocalRotation(1, "x", -math.pi / 2), LocalRotation(2, "x", -math.pi / 2)]
    matrix_order = (
        ky + [CouplingEvolution(1, a1)] + [g.inverse() for g in ky]
        + kxi + [CouplingEvolution(1, a2)] + [g.inverse() for g in kxi]
        + [CouplingEvolution(1, a3)]
    )
    got = gate_list_unitary(list(reversed(matrix_order)), 2)
    assert np.max(np.abs(got - interaction_unitary((a1, a2, a3)))) < 1e-12


def test_compile_unitary_end_to_end():
    u = haar_unitary(8, 99, special=True)
    gates = compile_unitary(u)
    assert np.max(np.abs(gate_list_unitary(gates, 3) - u)) < 1e-8
    for g in gates:
        assert isinstance(g, (LocalRotation, CouplingEvolution, GlobalPhase))
        if isinstance(g, CouplingEvolution):
            assert 1 <= g.left <= 2
