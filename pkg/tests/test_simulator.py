import numpy as np
import pytest

from conftest import dense_sum, embed_on_subset, random_amplitudes, random_sum
from mfpart.partition import MFFragment, PartitionPlan, greedy_partition
from mfpart.pauli import PauliSum, PauliWord
from mfpart.meanfield import verify_mf
from mfpart.simulator import (
    DENSE_QUBIT_CAP,
    StateVector,
    apply_matrix_to_subset,
    branch_distribution,
    covariance,
    eigensolve,
    estimate_energy,
    expectation,
    measure_fragment,
    shifted_square_expectation,
    to_dense,
    variance,
)


def sum_on(n_qubits, *terms):
    return PauliSum.from_terms(
        n_qubits, [(PauliWord.from_axes(n_qubits, axes), c) for c, axes in terms]
    )


def haar_unitary(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def feedforward_example():
    """Two-qubit sum whose chain measures qubit 0 then a tilted qubit 1."""
    return sum_on(2, (1.0, {1: "X"}), (1.0, {0: "Z", 1: "Y"}))


def test_state_vector_validation():
    with pytest.raises(ValueError, match="norm"):
        StateVector(1, np.array([1.0, 1.0]))
    with pytest.raises(ValueError, match="amplitudes"):
        StateVector(2, np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="cap"):
        StateVector(25, np.array([1.0]))
    psi = StateVector.computational(3, index=5)
    assert psi.amplitudes[5] == 1.0
    psi = StateVector.normalized(1, [3.0, 4.0])
    assert np.allclose(psi.amplitudes, [0.6, 0.8])


@pytest.mark.parametrize("seed", range(5))
def test_to_dense_matches_kron_oracle(seed):
    rng = np.random.default_rng(600 + seed)
    h = random_sum(rng, 4, 10)
    assert np.allclose(to_dense(h), dense_sum(h), atol=1e-12)


def test_to_dense_rejects_large_registers():
    h = sum_on(DENSE_QUBIT_CAP + 1, (1.0, {0: "Z"}))
    with pytest.raises(ValueError, match="dense cap"):
        to_dense(h)


@pytest.mark.parametrize("seed", range(6))
def test_moments_match_dense_oracle(seed):
    rng = np.random.default_rng(700 + seed)
    n = int(rng.integers(2, 5))
    h = random_sum(rng, n, 8)
    psi = StateVector(n, random_amplitudes(rng, n))
    dense = dense_sum(h)
    vec = psi.amplitudes
    mean = np.vdot(vec, dense @ vec).real
    assert expectation(h, psi) == pytest.approx(mean, abs=1e-10)
    second = np.vdot(dense @ vec, dense @ vec).real
    assert variance(h, psi) == pytest.approx(second - mean**2, abs=1e-10)
    omega = float(rng.normal())
    shifted = dense @ vec - omega * vec
    assert shifted_square_expectation(h, omega, psi) == pytest.approx(
        np.vdot(shifted, shifted).real, abs=1e-10
    )


@pytest.mark.parametrize("seed", range(6))
def test_variance_splits_into_covariances(seed):
    rng = np.random.default_rng(800 + seed)
    n = int(rng.integers(2, 5))
    h = random_sum(rng, n, 10)
    words = list(h.terms)
    cut = int(rng.integers(1, len(words)))
    a = PauliSum.from_terms(n, [(w, h.terms[w]) for w in words[:cut]])
    b = h - a
    psi = StateVector(n, random_amplitudes(rng, n))
    lhs = variance(h, psi)
    rhs = variance(a, psi) + variance(b, psi) + 2.0 * covariance(a, b, psi)
    assert lhs == pytest.approx(rhs, abs=1e-10)
    assert covariance(a, b, psi) == pytest.approx(covariance(b, a, psi), abs=1e-12)


def test_eigensolve_single_qubit():
    energy, psi = eigensolve(sum_on(1, (1.0, {0: "Z"})))
    assert energy == pytest.approx(-1.0)
    assert np.allclose(psi.amplitudes, [0.0, 1.0])


def test_eigensolve_feedforward_example():
    h = feedforward_example()
    energy, psi = eigensolve(h)
    evals = np.linalg.eigvalsh(dense_sum(h))
    root = np.sqrt(2.0)
    assert np.allclose(evals, [-root, -root, root, root], atol=1e-12)
    assert energy == pytest.approx(-root)
    residual = dense_sum(h) @ psi.amplitudes - energy * psi.amplitudes
    assert np.linalg.norm(residual) < 1e-9
    pivot = psi.amplitudes[np.argmax(np.abs(psi.amplitudes))]
    assert pivot.imag == pytest.approx(0.0, abs=1e-12)
    assert pivot.real > 0


@pytest.mark.parametrize("subset", [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2)])
def test_apply_matrix_to_subset_matches_embedding(subset):
    rng = np.random.default_rng(hash(subset) % (1 << 32))
    n = 3
    u = haar_unitary(rng, 1 << len(subset))
    psi = StateVector(n, random_amplitudes(rng, n))
    moved = apply_matrix_to_subset(psi, u, subset)
    expected = embed_on_subset(u, subset, n) @ psi.amplitudes
    assert np.allclose(moved.amplitudes, expected, atol=1e-12)


def single_fragment(h):
    cert = verify_mf(h)
    assert cert is not None
    return MFFragment(hamiltonian=h, certificate=cert)


def test_measure_fragment_diagonal_chain_is_deterministic():
    frag = single_fragment(sum_on(2, (1.0, {0: "Z"}), (1.0, {0: "Z", 1: "Z"})))
    psi = StateVector.computational(2, index=0)
    for seed in range(4):
        value, outcomes = measure_fragment(frag, psi, seed)
        assert outcomes == (1, 1)
        assert value == pytest.approx(2.0)


def test_measure_fragment_eigenstate_sampling_is_constant():
    h = feedforward_example()
    frag = single_fragment(h)
    energy, psi = eigensolve(h)
    for seed in range(10):
        value, _ = measure_fragment(frag, psi, seed)
        assert value == pytest.approx(energy, abs=1e-9)


def test_measure_fragment_register_mismatch():
    frag = single_fragment(sum_on(2, (1.0, {0: "Z"})))
    with pytest.raises(ValueError, match="register"):
        measure_fragment(frag, StateVector.computational(3), 0)


def test_branch_distribution_single_qubit_born_rule():
    frag = single_fragment(sum_on(1, (1.0, {0: "Z"})))
    psi = StateVector.normalized(1, [np.sqrt(0.3), np.sqrt(0.7)])
    order, probs, values = branch_distribution(frag, psi)
    table = dict(zip(order, zip(probs, values)))
    assert table[(1,)][0] == pytest.approx(0.3, abs=1e-12)
    assert table[(1,)][1] == pytest.approx(1.0)
    assert table[(-1,)][0] == pytest.approx(0.7, abs=1e-12)
    assert table[(-1,)][1] == pytest.approx(-1.0)


@pytest.mark.parametrize("seed", range(5))
def test_branch_distribution_reproduces_expectation(seed):
    rng = np.random.default_rng(900 + seed)
    h = random_sum(rng, 4, 10)
    plan = greedy_partition(h, level="mf2")
    psi = StateVector(4, random_amplitudes(rng, 4))
    total = 0.0
    for frag in plan.fragments:
        _, probs, values = branch_distribution(frag, psi)
        assert probs.sum() == pytest.approx(1.0, abs=1e-10)
        total += float(probs @ values)
    assert total == pytest.approx(expectation(h, psi), abs=1e-9)


def test_branch_distribution_respects_cap():
    frag = single_fragment(sum_on(2, (1.0, {0: "Z"}), (0.5, {1: "Z"})))
    psi = StateVector.computational(2)
    with pytest.raises(ValueError, match="cap"):
        branch_distribution(frag, psi, max_branches=2)


def test_estimate_energy_totals_and_determinism():
    rng = np.random.default_rng(42)
    h = random_sum(rng, 4, 12)
    plan = greedy_partition(h)
    psi = StateVector(4, random_amplitudes(rng, 4))
    report = estimate_energy(plan, psi, shots=256, seed=7)
    assert report.shots == 256 and report.seed == 7
    assert report.energy_estimate == pytest.approx(
        sum(f.sample_mean for f in report.fragments), abs=1e-12
    )
    assert report.analytic_expectation == pytest.approx(
        expectation(h, psi), abs=1e-9
    )
    again = estimate_energy(plan, psi, shots=256, seed=7)
    assert report == again
    threaded = estimate_energy(plan, psi, shots=256, seed=7, workers=3)
    assert report == threaded
    other = estimate_energy(plan, psi, shots=256, seed=8)
    assert other != report


def test_estimate_energy_covers_per_shot_path():
    n = 13
    h = PauliSum.from_terms(
        n, [(PauliWord.from_axes(n, {q: "Z"}), 1.0) for q in range(n)]
    )
    plan = greedy_partition(h)
    assert plan.n_fragments == 1
    assert plan.fragments[0].certificate.n_branches > 4096
    psi = StateVector.computational(n, index=0)
    report = estimate_energy(plan, psi, shots=5, seed=3)
    assert report.energy_estimate == pytest.approx(float(n))
    assert report.summed_variance == pytest.approx(0.0, abs=1e-12)


def test_estimate_energy_validation():
    h = sum_on(2, (1.0, {0: "Z"}))
    plan = greedy_partition(h)
    psi = StateVector.computational(2)
    with pytest.raises(ValueError, match="shots"):
        estimate_energy(plan, psi, shots=0, seed=1)
    empty = PartitionPlan(source=h, fragments=(), level="mf1")
    with pytest.raises(ValueError, match="fragments"):
        estimate_energy(empty, psi, shots=10, seed=1)
