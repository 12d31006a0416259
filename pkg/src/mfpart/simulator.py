"""Dense statevector backend: moments, diagonalization, feedforward sampling.

Amplitude indexing is little-endian: basis index i assigns qubit k the
bit (i >> k) & 1, so the dense form of a word is the Kronecker product
taken from the highest qubit down.

Sampling follows a fragment's certificate step by step: each qubit is
measured in the branch's stored basis with Born probabilities and the
state is collapsed, so the returned sample is exactly the certificate's
terminal value for the realized outcome sequence.  An exact eigenvalue
is drawn each shot, which is why the analytic per-fragment moments are
plain operator moments of the certified sum.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .partition import MFFragment, PartitionPlan
from .pauli import AXES, PauliSum, PauliWord, SingleQubitOp

__all__ = [
    "DENSE_QUBIT_CAP",
    "STATE_QUBIT_CAP",
    "StateVector",
    "to_dense",
    "expectation",
    "variance",
    "covariance",
    "shifted_square_expectation",
    "eigensolve",
    "apply_matrix_to_subset",
    "measure_fragment",
    "branch_distribution",
    "estimate_energy",
    "EstimatorReport",
    "FragmentEstimate",
]

DENSE_QUBIT_CAP = 12
STATE_QUBIT_CAP = 24

#: Fragments with at most this many outcome branches are sampled through
#: an exact branch distribution; larger ones fall back to per-shot collapse.
_CDF_BRANCH_LIMIT = 4096

_AXIS_MATRIX = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits > STATE_QUBIT_CAP:
            raise ValueError(f"{self.n_qubits} qubits exceeds the state cap of {STATE_QUBIT_CAP}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got {amps.shape}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm} is not 1")

    @classmethod
    def computational(cls, n_qubits: int, index: int = 0) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def normalized(cls, n_qubits: int, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(n_qubits, amps / np.linalg.norm(amps))


def _apply_word_raw(word: PauliWord, amps: np.ndarray) -> np.ndarray:
    """word |psi> via bit arithmetic; exact fourth-root-of-unity phases."""
    n = word.n_qubits
    idx = np.arange(1 << n, dtype=np.int64)
    n_y = (word.x_mask & word.z_mask).bit_count()
    phase = (1j) ** (n_y % 4)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & word.z_mask) & 1)
    out = np.empty_like(amps)
    out[idx ^ word.x_mask] = amps * (phase * signs)
    return out


def _apply_sum_raw(h: PauliSum, amps: np.ndarray) -> np.ndarray:
    # Canonical term order keeps the floating-point result independent of
    # how the sum was assembled.
    out = np.zeros_like(amps)
    for word, coeff in h.sorted_terms():
        if word.is_identity:
            out += coeff * amps
        else:
            out += coeff * _apply_word_raw(word, amps)
    return out


def to_dense(h: PauliSum, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
    """Kronecker-product matrix of the sum; exact but exponential."""
    if h.n_qubits > cap:
        raise ValueError(f"{h.n_qubits} qubits exceeds the dense cap of {cap}")
    dim = 1 << h.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for word, coeff in h.sorted_terms():
        m = np.array([[1.0 + 0.0j]])
        for k in range(h.n_qubits - 1, -1, -1):
            m = np.kron(m, _AXIS_MATRIX[word.axis(k)])
        out += coeff * m
    return out


def _check_match(h: PauliSum, psi: StateVector):
    if h.n_qubits != psi.n_qubits:
        raise ValueError(
            f"operator on {h.n_qubits} qubits, state on {psi.n_qubits}"
        )


def expectation(h: PauliSum, psi: StateVector) -> float:
    _check_match(h, psi)
    return float(np.vdot(psi.amplitudes, _apply_sum_raw(h, psi.amplitudes)).real)


def variance(h: PauliSum, psi: StateVector) -> float:
    _check_match(h, psi)
    hpsi = _apply_sum_raw(h, psi.amplitudes)
    mean = float(np.vdot(psi.amplitudes, hpsi).real)
    return float(np.vdot(hpsi, hpsi).real - mean * mean)


def covariance(a: PauliSum, b: PauliSum, psi: StateVector) -> float:
    """Symmetrized covariance Re<AB> - <A><B>.

    The real part makes cov(a, b) = cov(b, a), so the exact decomposition
    var(a + b) = var(a) + var(b) + cov(a, b) + cov(b, a) holds.
    """
    _check_match(a, psi)
    _check_match(b, psi)
    apsi = _apply_sum_raw(a, psi.amplitudes)
    bpsi = _apply_sum_raw(b, psi.amplitudes)
    mean_a = float(np.vdot(psi.amplitudes, apsi).real)
    mean_b = float(np.vdot(psi.amplitudes, bpsi).real)
    return float(np.vdot(apsi, bpsi).real - mean_a * mean_b)


def shifted_square_expectation(h: PauliSum, omega: float, psi: StateVector) -> float:
    """<(H - omega)^2>, the variance-like cost of a trial shift."""
    _check_match(h, psi)
    residual = _apply_sum_raw(h, psi.amplitudes) - omega * psi.amplitudes
    return float(np.vdot(residual, residual).real)


def eigensolve(h: PauliSum, cap: int = DENSE_QUBIT_CAP) -> tuple[float, StateVector]:
    """Ground eigenvalue and eigenvector by dense diagonalization."""
    dense = to_dense(h, cap)
    evals, evecs = np.linalg.eigh(dense)
    vec = evecs[:, 0]
    pivot = int(np.argmax(np.abs(vec)))
    if abs(vec[pivot]) > 1e-15:
        vec = vec * (abs(vec[pivot]) / vec[pivot])
    return float(evals[0]), StateVector(h.n_qubits, vec)


def _apply_matrix_raw(
    amps: np.ndarray, matrix: np.ndarray, subset: tuple[int, ...], n_qubits: int
) -> np.ndarray:
    """Apply a 2^k matrix to the subset qubits (subset[0] = low bit)."""
    k = len(subset)
    tensor = amps.reshape((2,) * n_qubits)
    # Axis of qubit q in the reshaped tensor is n-1-q; order the moved
    # axes so that C-order flattening makes subset[0] the fastest bit.
    src = [n_qubits - 1 - q for q in reversed(subset)]
    tensor = np.moveaxis(tensor, src, range(k))
    head = tensor.reshape(1 << k, -1)
    head = matrix @ head
    tensor = head.reshape((2,) * n_qubits)
    tensor = np.moveaxis(tensor, range(k), src)
    return tensor.reshape(-1)


def apply_matrix_to_subset(
    psi: StateVector, matrix: np.ndarray, subset: tuple[int, ...]
) -> StateVector:
    out = _apply_matrix_raw(psi.amplitudes, matrix, tuple(subset), psi.n_qubits)
    return StateVector(psi.n_qubits, out)


def _bloch_apply(op: SingleQubitOp, amps: np.ndarray, n_qubits: int) -> np.ndarray:
    unit = op.unit()
    out = np.zeros_like(amps)
    for axis, weight in zip(AXES, unit.bloch):
        if abs(weight) > 0.0:
            word = PauliWord.from_axes(n_qubits, {op.qubit: axis})
            out += weight * _apply_word_raw(word, amps)
    return out


def _prepare_fragment_state(frag: MFFragment, psi: StateVector) -> np.ndarray:
    amps = psi.amplitudes.copy()
    if frag.entangler is not None:
        spec = frag.entangler
        amps = _apply_matrix_raw(amps, spec.unitary.conj().T, spec.subset, psi.n_qubits)
    return amps


def measure_fragment(
    frag: MFFragment, psi: StateVector, rng_seed
) -> tuple[float, tuple[int, ...]]:
    """One feedforward shot: sequential collapse along the certificate.

    Returns the energy sample (the terminal value of the realized branch)
    and the outcome sequence itself.
    """
    cert = frag.certificate
    if cert.n_qubits != psi.n_qubits:
        raise ValueError("certificate register size does not match the state")
    rng = np.random.default_rng(rng_seed)
    amps = _prepare_fragment_state(frag, psi)
    outcomes: tuple[int, ...] = ()
    for step in cert.steps:
        op = step.ops[outcomes]
        rotated = _bloch_apply(op, amps, psi.n_qubits)
        plus = 0.5 * (amps + rotated)
        p_plus = min(max(float(np.vdot(plus, plus).real), 0.0), 1.0)
        if rng.random() < p_plus:
            outcome, branch, p = 1, plus, p_plus
        else:
            outcome, branch, p = -1, 0.5 * (amps - rotated), 1.0 - p_plus
        amps = branch / np.sqrt(max(p, 1e-300))
        outcomes = outcomes + (outcome,)
    return float(cert.terminal_values[outcomes]), outcomes


def branch_distribution(
    frag: MFFragment, psi: StateVector, max_branches: int = 1 << 16
) -> tuple[list[tuple[int, ...]], np.ndarray, np.ndarray]:
    """Exact outcome-branch probabilities and terminal values.

    Enumerates all 2^m branches of the certificate (m chain steps), in
    the certificate's own branch order.
    """
    cert = frag.certificate
    if cert.n_qubits != psi.n_qubits:
        raise ValueError("certificate register size does not match the state")
    if cert.n_branches > max_branches:
        raise ValueError(f"{cert.n_branches} branches exceed the cap of {max_branches}")
    start = _prepare_fragment_state(frag, psi)
    leaves: dict[tuple[int, ...], float] = {}

    def walk(prefix: tuple[int, ...], amps: np.ndarray, prob: float):
        depth = len(prefix)
        if depth == len(cert.steps):
            leaves[prefix] = prob
            return
        op = cert.steps[depth].ops[prefix]
        rotated = _bloch_apply(op, amps, psi.n_qubits)
        for outcome in (1, -1):
            branch = 0.5 * (amps + outcome * rotated)
            p = float(np.vdot(branch, branch).real)
            if p <= 1e-15:
                continue
            walk(prefix + (outcome,), branch / np.sqrt(p), prob * p)

    walk((), start, 1.0)
    order = list(iter(cert.terminal_values))
    probs = np.array([leaves.get(o, 0.0) for o in order])
    values = np.array([cert.terminal_values[o] for o in order])
    return order, probs, values


@dataclass(frozen=True)
class FragmentEstimate:
    index: int
    shots: int
    sample_mean: float
    sample_variance: float
    analytic_expectation: float
    analytic_variance: float


@dataclass(frozen=True)
class EstimatorReport:
    """Per-fragment sampling statistics next to their analytic counterparts.

    ``summed_variance`` adds per-fragment variances only; cross-fragment
    covariances are deliberately left out, mirroring how independent
    per-fragment estimators behave in practice.
    """

    shots: int
    seed: int
    fragments: tuple[FragmentEstimate, ...]
    energy_estimate: float
    summed_variance: float
    analytic_expectation: float
    analytic_summed_variance: float


def _estimate_fragment(
    frag: MFFragment, fi: int, psi: StateVector, shots: int, seed: int
) -> FragmentEstimate:
    amps = _prepare_fragment_state(frag, psi)
    eff = frag.effective_hamiltonian()
    eff_state = StateVector(psi.n_qubits, amps)
    exact_mean = expectation(eff, eff_state)
    exact_var = variance(eff, eff_state)

    if frag.certificate.n_branches <= _CDF_BRANCH_LIMIT:
        _, probs, values = branch_distribution(frag, psi, max_branches=_CDF_BRANCH_LIMIT)
        cdf = np.cumsum(probs)
        cdf[-1] = max(cdf[-1], 1.0)
        uniforms = np.random.default_rng([seed, fi]).random(shots)
        samples = values[np.searchsorted(cdf, uniforms, side="right")]
    else:
        samples = np.empty(shots)
        for s in range(shots):
            samples[s], _ = measure_fragment(frag, psi, [seed, fi, s])

    return FragmentEstimate(
        index=fi,
        shots=shots,
        sample_mean=float(samples.mean()),
        sample_variance=float(samples.var()),
        analytic_expectation=exact_mean,
        analytic_variance=exact_var,
    )


def estimate_energy(
    plan: PartitionPlan,
    psi: StateVector,
    shots: int,
    seed: int,
    workers: int | None = None,
) -> EstimatorReport:
    """Sample every fragment independently and total the estimates.

    Shot i of fragment f consumes the i-th value of a stream keyed by
    (seed, f), a pure function of (seed, fragment, shot); reports are
    therefore bit-identical for any ``workers`` setting.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if not plan.fragments:
        raise ValueError("plan has no fragments")
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            estimates = list(
                pool.map(
                    lambda fi: _estimate_fragment(plan.fragments[fi], fi, psi, shots, seed),
                    range(len(plan.fragments)),
                )
            )
    else:
        estimates = [
            _estimate_fragment(frag, fi, psi, shots, seed)
            for fi, frag in enumerate(plan.fragments)
        ]
    return EstimatorReport(
        shots=shots,
        seed=seed,
        fragments=tuple(estimates),
        energy_estimate=float(sum(e.sample_mean for e in estimates)),
        summed_variance=float(sum(e.sample_variance for e in estimates)),
        analytic_expectation=float(sum(e.analytic_expectation for e in estimates)),
        analytic_summed_variance=float(sum(e.analytic_variance for e in estimates)),
    )
