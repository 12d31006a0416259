import numpy as np
import pytest

from conftest import dense_sum, embed_on_subset, random_sum
from mfpart.entangler import (
    EntanglerSpec,
    KQubitOp,
    apply_unitary,
    build_clifford_unentangler,
    build_unentangler,
    commutator_norm,
    factorability_check,
    find_commuting_ops,
    op_spectrum,
)
from mfpart.meanfield import compute_l, decompose_by_qubit, verify_mf
from mfpart.pauli import PauliSum, PauliWord


def word(n, axes):
    return PauliWord.from_axes(n, axes)


def sum_on(n, *terms):
    return PauliSum.from_terms(n, [(word(n, axes), c) for c, axes in terms])


def pair_model(d):
    """Diagonal-plus-two-flips form on qubits 0 and 1."""
    return sum_on(
        2,
        (d[0], {}),
        (d[1], {0: "Z"}),
        (d[2], {1: "Z"}),
        (d[3], {0: "Z", 1: "Z"}),
        (d[4], {0: "X", 1: "X"}),
        (d[5], {0: "Y", 1: "Y"}),
    )


def haar_unitary(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def test_kqubitop_validation():
    z01 = word(2, {0: "Z", 1: "Z"})
    with pytest.raises(ValueError):
        KQubitOp(2, (), {z01: 1.0})
    with pytest.raises(ValueError):
        KQubitOp(2, (1, 0), {z01: 1.0})
    with pytest.raises(ValueError):
        KQubitOp(2, (0,), {z01: 1.0})  # word leaves the subset
    with pytest.raises(ValueError):
        KQubitOp(2, (0, 1), {PauliWord.identity(2): 1.0})
    with pytest.raises(ValueError):
        KQubitOp(2, (0, 1), {z01: 1e-15})


def test_kqubitop_dense_is_little_endian():
    op = KQubitOp(3, (0, 2), {word(3, {0: "Z"}): 1.0})
    assert np.allclose(op.dense(), np.diag([1.0, -1.0, 1.0, -1.0]))
    op2 = KQubitOp(3, (0, 2), {word(3, {2: "Z"}): 1.0})
    assert np.allclose(op2.dense(), np.diag([1.0, 1.0, -1.0, -1.0]))


def test_dominant_word():
    z01 = word(2, {0: "Z", 1: "Z"})
    x0 = word(2, {0: "X"})
    assert KQubitOp(2, (0, 1), {z01: -0.5}).dominant_word() == z01
    assert KQubitOp(2, (0, 1), {z01: 1.0, x0: 1e-12}).dominant_word() == z01
    assert KQubitOp(2, (0, 1), {z01: 1.0, x0: 0.5}).dominant_word() is None


def test_op_spectrum_ordering_and_degeneracy():
    op = KQubitOp(2, (0, 1), {word(2, {0: "Z", 1: "Z"}): 2.0})
    report = op_spectrum(op)
    assert np.allclose(report.eigenvalues, [2.0, 2.0, -2.0, -2.0])
    groups = report.degenerate_groups()
    assert [g.stop - g.start for g in groups] == [2, 2]
    # eigenvectors come back orthonormal
    v = report.eigenvectors
    assert np.allclose(v.conj().T @ v, np.eye(4), atol=1e-10)


def test_find_commuting_ops_recovers_symmetry():
    # a third qubit couples to the pair diagonally, which pins the
    # commutant down to the single shared symmetry word
    rng = np.random.default_rng(5)
    d = rng.uniform(0.3, 1.4, size=6) * rng.choice([-1, 1], size=6)
    h = sum_on(
        3,
        (d[0], {}),
        (d[1], {0: "Z"}),
        (d[2], {1: "Z"}),
        (d[3], {0: "Z", 1: "Z"}),
        (d[4], {0: "X", 1: "X"}),
        (d[5], {0: "Y", 1: "Y"}),
        (0.9, {0: "Z", 2: "Z"}),
        (0.4, {1: "Z", 2: "Z"}),
    )
    ops = find_commuting_ops(h, (0, 1))
    assert len(ops) == 1
    target = word(3, {0: "Z", 1: "Z"})
    assert ops[0].dominant_word() == target
    assert np.isclose(ops[0].coefficients[target], 1.0)
    assert commutator_norm(h, ops[0]) < 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_nullspace_matches_dense_oracle(seed):
    """Returned ops commute, and their count equals the dense kernel size."""
    rng = np.random.default_rng(600 + seed)
    h = random_sum(rng, 3, 8)
    ops = find_commuting_ops(h, (0, 2))
    dh = dense_sum(h)
    rows = []
    for op in ops:
        full = embed_on_subset(op.dense(), (0, 2), 3)
        assert np.linalg.norm(dh @ full - full @ dh) < 1e-8
    # oracle: stack dense commutators of all 15 candidate words
    basis = []
    for w15, _ in sum_on(3, *[(1.0, axes) for axes in _subset_axes()]).sorted_terms():
        basis.append(w15)
    mats = []
    for w in basis:
        full = dense_sum(PauliSum.from_terms(3, [(w, 1.0)]))
        mats.append((dh @ full - full @ dh).reshape(-1))
    a = np.array(mats).T
    rank = np.linalg.matrix_rank(np.vstack([a.real, a.imag]), tol=1e-8)
    assert len(ops) == len(basis) - rank


def _subset_axes():
    axes_list = []
    for a0 in ("I", "X", "Y", "Z"):
        for a2 in ("I", "X", "Y", "Z"):
            if a0 == a2 == "I":
                continue
            axes = {}
            if a0 != "I":
                axes[0] = a0
            if a2 != "I":
                axes[2] = a2
            axes_list.append(axes)
    return axes_list


def test_single_qubit_nullspace_contains_z_direction():
    h = sum_on(2, (1.0, {0: "Z"}), (0.5, {0: "Z", 1: "X"}))
    ops = find_commuting_ops(h, (0,))
    blochs = [op.coefficients.get(word(2, {0: "Z"}), 0.0) for op in ops]
    assert any(abs(b) > 0.9 for b in blochs)


def test_find_commuting_ops_rejects_large_subsets():
    h = sum_on(3, (1.0, {0: "Z"}))
    with pytest.raises(ValueError):
        find_commuting_ops(h, (0, 1, 2))


def test_factorability_requires_commuting_op():
    h = sum_on(2, (1.0, {0: "X"}))
    op = KQubitOp(2, (0, 1), {word(2, {0: "Z"}): 1.0})
    with pytest.raises(ValueError):
        factorability_check(h, op)


def test_factorability_degenerate_ok_when_support_inside_subset():
    h = pair_model([0.4, 0.9, -0.3, 0.7, 1.1, -0.6])
    op = KQubitOp(2, (0, 1), {word(2, {0: "Z", 1: "Z"}): 1.0})
    verdict = factorability_check(h, op)
    assert verdict.ok
    assert verdict.status == "degenerate_ok"


def test_factorability_nondegenerate_ok():
    h = sum_on(
        3,
        (0.8, {0: "Z"}),
        (0.5, {1: "Z"}),
        (-0.4, {0: "Z", 1: "Z"}),
        (0.3, {2: "Z"}),
        (0.2, {0: "Z", 2: "X"}),
    )
    op = KQubitOp(
        3,
        (0, 1),
        {word(3, {0: "Z"}): 1.0, word(3, {1: "Z"}): 0.3, word(3, {0: "Z", 1: "Z"}): 0.1},
    )
    verdict = factorability_check(h, op)
    assert verdict.ok
    assert verdict.status == "nondegenerate_ok"


def test_factorability_fails_on_incompatible_blocks():
    # z0*z1 commutes, but its +1 eigenspace mixes a flip block with a
    # rest-dependent diagonal block, so no shared product basis exists
    h = sum_on(3, (1.0, {0: "X", 1: "X"}), (0.8, {0: "Z", 2: "Z"}))
    op = KQubitOp(3, (0, 1), {word(3, {0: "Z", 1: "Z"}): 1.0})
    verdict = factorability_check(h, op)
    assert not verdict.ok
    assert verdict.status == "fails"
    assert verdict.eigenspace is not None
    assert verdict.residual > 1e-9


def test_build_unentangler_nondegenerate_case():
    # commuting op with four distinct eigenvalues and an entangled
    # eigenbasis; the transform must still leave both qubits factorable
    h = sum_on(
        3,
        (0.7, {0: "X", 1: "X"}),
        (0.7, {0: "Y", 1: "Y"}),
        (0.3, {0: "Z"}),
        (0.3, {1: "Z"}),
        (0.5, {0: "Z", 1: "Z"}),
        (0.4, {0: "X", 1: "X", 2: "Z"}),
        (0.4, {0: "Y", 1: "Y", 2: "Z"}),
    )
    op = KQubitOp(
        3,
        (0, 1),
        {
            word(3, {0: "Z", 1: "Z"}): 1.0,
            word(3, {0: "X", 1: "X"}): 0.5,
            word(3, {0: "Y", 1: "Y"}): 0.5,
            word(3, {0: "Z"}): 0.2,
            word(3, {1: "Z"}): 0.2,
        },
    )
    verdict = factorability_check(h, op)
    assert verdict.status == "nondegenerate_ok"
    spec = build_unentangler(h, op)
    transformed = apply_unitary(h, spec)
    for q in spec.subset:
        assert compute_l(decompose_by_qubit(transformed, q)).l >= 2


def test_build_unentangler_degenerate_case():
    h = pair_model([0.4, 0.9, -0.3, 0.7, 1.1, -0.6])
    op = KQubitOp(2, (0, 1), {word(2, {0: "Z", 1: "Z"}): 1.0})
    spec = build_unentangler(h, op)
    transformed = apply_unitary(h, spec)
    assert verify_mf(transformed) is not None
    # deterministic construction
    again = build_unentangler(h, op)
    assert np.array_equal(spec.unitary, again.unitary)


def test_build_unentangler_rejects_failing_verdict():
    h = sum_on(3, (1.0, {0: "X", 1: "X"}), (0.8, {0: "Z", 2: "Z"}))
    op = KQubitOp(3, (0, 1), {word(3, {0: "Z", 1: "Z"}): 1.0})
    with pytest.raises(ValueError):
        build_unentangler(h, op)


def test_clifford_unentangler_matrix_form():
    op = KQubitOp(2, (0, 1), {word(2, {0: "Z", 1: "Z"}): 1.0})
    spec = build_clifford_unentangler(op)
    theta = 3.0 * np.pi / 4.0
    generator = np.kron(
        np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([[1.0, 0.0], [0.0, -1.0]])
    )
    expected = np.cos(theta) * np.eye(4) - 1j * np.sin(theta) * generator
    assert np.allclose(spec.unitary, expected)


def test_clifford_unentangler_makes_pair_model_verifiable():
    rng = np.random.default_rng(8)
    h = pair_model(rng.uniform(0.3, 1.4, size=6) * rng.choice([-1, 1], size=6))
    op = KQubitOp(2, (0, 1), {word(2, {0: "Z", 1: "Z"}): 1.0})
    spec = build_clifford_unentangler(op)
    transformed = apply_unitary(h, spec)
    allowed = {
        word(2, axes)
        for axes in ({}, {0: "Z"}, {0: "Y"}, {1: "Y"}, {0: "Y", 1: "Y"}, {0: "Z", 1: "Y"})
    }
    assert set(transformed.terms) <= allowed
    assert verify_mf(transformed) is not None


def test_clifford_unentangler_needs_single_word():
    mixed = KQubitOp(
        2, (0, 1), {word(2, {0: "Z", 1: "Z"}): 1.0, word(2, {0: "X"}): 0.5}
    )
    with pytest.raises(ValueError):
        build_clifford_unentangler(mixed)


def test_entangler_spec_validates_unitarity():
    origin = KQubitOp(2, (0, 1), {word(2, {0: "Z"}): 1.0})
    with pytest.raises(ValueError):
        EntanglerSpec((0, 1), np.eye(3), origin)
    with pytest.raises(ValueError):
        EntanglerSpec((0, 1), 2.0 * np.eye(4), origin)


def test_apply_unitary_identity_is_noop():
    rng = np.random.default_rng(12)
    h = random_sum(rng, 3, 6)
    origin = KQubitOp(3, (0, 1), {word(3, {0: "Z"}): 1.0})
    spec = EntanglerSpec((0, 1), np.eye(4, dtype=complex), origin)
    assert apply_unitary(h, spec).allclose(h)


@pytest.mark.parametrize("seed", range(6))
def test_apply_unitary_matches_dense_conjugation(seed):
    rng = np.random.default_rng(900 + seed)
    h = random_sum(rng, 4, 10)
    subset = (1, 3)
    u = haar_unitary(rng, 4)
    origin = KQubitOp(4, subset, {word(4, {1: "Z"}): 1.0})
    spec = EntanglerSpec(subset, u, origin)
    conjugated = apply_unitary(h, spec)
    u_full = embed_on_subset(u, subset, 4)
    expected = u_full.conj().T @ dense_sum(h) @ u_full
    assert np.allclose(dense_sum(conjugated), expected, atol=1e-10)
    # spectrum is preserved
    assert np.allclose(
        np.linalg.eigvalsh(dense_sum(conjugated)), np.linalg.eigvalsh(dense_sum(h))
    )


def test_apply_unitary_checks_subset_range():
    h = sum_on(2, (1.0, {0: "Z"}))
    origin = KQubitOp(2, (0, 1), {word(2, {0: "Z"}): 1.0})
    spec = EntanglerSpec((1, 5), np.eye(4, dtype=complex), origin)
    with pytest.raises(ValueError):
        apply_unitary(h, spec)
