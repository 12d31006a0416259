"""Subset symmetries and the unitaries that disentangle them.

When a fragment gets stuck with no factorable qubit, a k-qubit operator
commuting with it can still rescue single-qubit measurability: rotating
into a basis adapted to that operator localizes the commuting structure
onto individual qubits.  This module finds such operators (nullspace of
the commutator constraint over all non-identity subset words), decides
whether the rotation can work (the degenerate-block factorability test),
and builds two kinds of unitary:

* :func:`build_unentangler`, the eigenbasis form.  Columns are a common
  eigenbasis of the operator and of the reduced blocks inside degenerate
  eigenspaces; conjugation makes every subset qubit carry only Z factors.
* :func:`build_clifford_unentangler`, for symmetries that are a single
  Pauli word.  A quarter-turn-family rotation maps the word onto one
  qubit's axis, preserving Pauli-word structure branch by branch, which
  the eigenbasis form cannot do when different measurement branches need
  different diagonalizing bases.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .meanfield import _sign_fix, compute_l, decompose_by_qubit
from .pauli import AXES, PauliSum, PauliWord, multiply_words

__all__ = [
    "MAX_SUBSET_SIZE",
    "KQubitOp",
    "SpectrumReport",
    "EntanglerSpec",
    "FactorabilityVerdict",
    "find_commuting_ops",
    "factorability_check",
    "build_unentangler",
    "build_clifford_unentangler",
    "apply_unitary",
]

MAX_SUBSET_SIZE = 2

_NULLSPACE_TOL_SCALE = 1e-8
_BLOCK_TOL = 1e-9

_AXIS_MATRIX = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _subset_words(n_qubits: int, subset: tuple[int, ...]) -> list[PauliWord]:
    """All 4^k - 1 non-identity words supported on the subset."""
    words = []
    for axes in itertools.product("IXYZ", repeat=len(subset)):
        if all(a == "I" for a in axes):
            continue
        assignment = {q: a for q, a in zip(subset, axes) if a != "I"}
        words.append(PauliWord.from_axes(n_qubits, assignment))
    return words


def _dense_on_subset(word: PauliWord, subset: tuple[int, ...]) -> np.ndarray:
    """Dense matrix of the word's subset factor; subset[0] is the low bit."""
    out = np.array([[1.0 + 0.0j]])
    for q in subset:
        out = np.kron(_AXIS_MATRIX[word.axis(q)], out)
    return out


@dataclass(frozen=True)
class KQubitOp:
    """Hermitian operator on a small qubit subset, as real word coefficients."""

    n_qubits: int
    subset: tuple[int, ...]
    coefficients: Mapping[PauliWord, float]

    def __post_init__(self):
        if not self.subset or list(self.subset) != sorted(set(self.subset)):
            raise ValueError("subset must be non-empty, strictly increasing")
        if any(not 0 <= q < self.n_qubits for q in self.subset):
            raise ValueError("subset qubit out of range")
        allowed = set(self.subset)
        for word in self.coefficients:
            if word.is_identity or not set(word.support()) <= allowed:
                raise ValueError(f"word {word.label()} not supported on the subset")
        if not any(abs(c) > 1e-12 for c in self.coefficients.values()):
            raise ValueError("operator has no coefficient above tolerance")

    def as_sum(self) -> PauliSum:
        return PauliSum.from_terms(self.n_qubits, self.coefficients.items(), prune=None)

    def dense(self) -> np.ndarray:
        dim = 1 << len(self.subset)
        out = np.zeros((dim, dim), dtype=complex)
        for word, coeff in self.coefficients.items():
            out += coeff * _dense_on_subset(word, self.subset)
        return out

    def dominant_word(self, rel_tol: float = 1e-8) -> PauliWord | None:
        """The single word this operator consists of, or None if it mixes."""
        ranked = sorted(self.coefficients.items(), key=lambda kv: -abs(kv[1]))
        top_word, top = ranked[0]
        if any(abs(c) > rel_tol * abs(top) for _, c in ranked[1:]):
            return None
        return top_word


@dataclass(frozen=True)
class SpectrumReport:
    """Eigendecomposition of a subset operator, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        gram = self.eigenvectors.conj().T @ self.eigenvectors
        if not np.allclose(gram, np.eye(len(self.eigenvalues)), atol=1e-10):
            raise ValueError("eigenvectors not orthonormal")

    def degenerate_groups(self, tol: float | None = None) -> list[slice]:
        """Index ranges of equal eigenvalues, in stored (descending) order."""
        ev = self.eigenvalues
        if tol is None:
            tol = 1e-8 * max(1.0, float(np.max(np.abs(ev))) if len(ev) else 1.0)
        groups: list[slice] = []
        start = 0
        for i in range(1, len(ev) + 1):
            if i == len(ev) or abs(ev[i] - ev[start]) > tol:
                groups.append(slice(start, i))
                start = i
        return groups


def op_spectrum(o: KQubitOp) -> SpectrumReport:
    evals, evecs = np.linalg.eigh(o.dense())
    order = np.argsort(evals)[::-1]
    return SpectrumReport(eigenvalues=evals[order], eigenvectors=evecs[:, order])


@dataclass(frozen=True)
class EntanglerSpec:
    """A subset unitary together with the commuting operator that produced it.

    Only unitarity is enforced here.  Specs built by
    :func:`build_unentangler` additionally conjugate their origin to an
    operator diagonal in the computational basis; Clifford specs from
    :func:`build_clifford_unentangler` instead map it to a single-qubit
    word.
    """

    subset: tuple[int, ...]
    unitary: np.ndarray
    origin: KQubitOp

    def __post_init__(self):
        dim = 1 << len(self.subset)
        u = self.unitary
        if u.shape != (dim, dim):
            raise ValueError(f"unitary shape {u.shape} does not match subset")
        if not np.allclose(u.conj().T @ u, np.eye(dim), atol=1e-10):
            raise ValueError("matrix is not unitary")


@dataclass(frozen=True)
class FactorabilityVerdict:
    """Outcome of the degenerate-eigenspace block analysis."""

    status: str  # nondegenerate_ok | degenerate_ok | fails
    eigenspace: int | None = None
    residual: float | None = None

    @property
    def ok(self) -> bool:
        return self.status != "fails"


def _commutator_terms(h: PauliSum, o: PauliSum) -> dict[PauliWord, complex]:
    """[h, o] as complex word coefficients (anti-Hermitian, so imaginary)."""
    acc: dict[PauliWord, complex] = {}
    for wu, cu in h.terms.items():
        for wo, co in o.terms.items():
            overlap_x = (wu.x_mask & wo.z_mask).bit_count()
            overlap_z = (wu.z_mask & wo.x_mask).bit_count()
            if (overlap_x + overlap_z) % 2 == 0:
                continue
            phase, prod = multiply_words(wu, wo)
            acc[prod] = acc.get(prod, 0.0) + 2.0 * cu * co * phase
    return {w: c for w, c in acc.items() if abs(c) > 1e-14}


def commutator_norm(h: PauliSum, o: PauliSum | KQubitOp) -> float:
    """Coefficient two-norm of the commutator [h, o]."""
    if isinstance(o, KQubitOp):
        o = o.as_sum()
    return float(np.sqrt(sum(abs(c) ** 2 for c in _commutator_terms(h, o).values())))


def find_commuting_ops(h: PauliSum, subset: tuple[int, ...]) -> list[KQubitOp]:
    """Basis of subset operators commuting with h.

    Builds the linear map from word coefficients to commutator
    coefficients and returns sign-fixed unit vectors spanning its
    nullspace (singular values at or below 1e-8 relative to the largest).
    """
    subset = tuple(subset)
    if len(subset) > MAX_SUBSET_SIZE:
        raise ValueError(f"subset of {len(subset)} qubits exceeds the maximum of {MAX_SUBSET_SIZE}")
    if list(subset) != sorted(set(subset)) or any(not 0 <= q < h.n_qubits for q in subset):
        raise ValueError("subset must be strictly increasing and within range")

    words = _subset_words(h.n_qubits, subset)
    rows: dict[PauliWord, int] = {}
    columns: list[dict[int, complex]] = []
    for w in words:
        col: dict[int, complex] = {}
        for wu, cu in h.terms.items():
            anti = ((wu.x_mask & w.z_mask).bit_count() + (wu.z_mask & w.x_mask).bit_count()) % 2
            if not anti:
                continue
            phase, prod = multiply_words(wu, w)
            idx = rows.setdefault(prod, len(rows))
            col[idx] = col.get(idx, 0.0) + 2.0 * cu * phase
        columns.append(col)

    if rows:
        m = np.zeros((len(rows), len(words)), dtype=complex)
        for j, col in enumerate(columns):
            for i, v in col.items():
                m[i, j] = v
        stacked = np.vstack([m.real, m.imag])
        _, sing, vt = np.linalg.svd(stacked)
        tol = _NULLSPACE_TOL_SCALE * max(1.0, float(sing[0]) if len(sing) else 0.0)
        rank = int(np.sum(sing > tol))
        null_vectors = [vt[r] for r in range(rank, len(words))]
    else:
        null_vectors = [np.eye(len(words))[r] for r in range(len(words))]

    ops = []
    for vec in null_vectors:
        vec = _sign_fix(vec)
        coeffs = {w: float(c) for w, c in zip(words, vec) if abs(c) > 1e-12}
        ops.append(KQubitOp(h.n_qubits, subset, coeffs))
    return ops


def _rest_blocks(h: PauliSum, subset: tuple[int, ...]) -> dict[PauliWord, np.ndarray]:
    """Group h by its factor outside the subset: h = sum_r r (x) blocks[r]."""
    blocks: dict[PauliWord, np.ndarray] = {}
    dim = 1 << len(subset)
    for word, coeff in h.terms.items():
        rest = word
        for q in subset:
            rest = rest.drop_qubit(q)
        if rest not in blocks:
            blocks[rest] = np.zeros((dim, dim), dtype=complex)
        blocks[rest] += coeff * _dense_on_subset(word, subset)
    return blocks


def factorability_check(h: PauliSum, o: KQubitOp) -> FactorabilityVerdict:
    """Can conjugation into o's (refined) eigenbasis give product eigenstates?

    Within each degenerate eigenspace of o, the matrix of h-blocks between
    eigenvectors must either be already diagonal or factor as a constant
    numeric matrix times one common outside-the-subset operator; only then
    does a single basis rotation serve every block.  Nondegenerate spectra
    and sums supported entirely on the subset pass unconditionally.
    """
    if commutator_norm(h, o.as_sum()) > _BLOCK_TOL * max(1.0, h.norm() * o.as_sum().norm()):
        raise ValueError("operator does not commute with the Hamiltonian")

    report = op_spectrum(o)
    groups = report.degenerate_groups()
    if all(g.stop - g.start == 1 for g in groups):
        return FactorabilityVerdict(status="nondegenerate_ok")
    if set(h.support()) <= set(o.subset):
        return FactorabilityVerdict(status="degenerate_ok")

    blocks = _rest_blocks(h, o.subset)
    rest_words = sorted(blocks, key=lambda w: w.sort_key())
    for gi, g in enumerate(groups):
        d = g.stop - g.start
        if d == 1:
            continue
        basis = report.eigenvectors[:, g]
        entries = np.stack(
            [(basis.conj().T @ blocks[r] @ basis).reshape(-1) for r in rest_words],
            axis=1,
        )  # shape (d*d, n_rest_words)
        off_mask = ~np.eye(d, dtype=bool).reshape(-1)
        off_norm = float(np.linalg.norm(entries[off_mask]))
        if off_norm <= _BLOCK_TOL:
            continue
        sing = np.linalg.svd(entries, compute_uv=False)
        if len(sing) < 2 or sing[1] <= _BLOCK_TOL * max(sing[0], 1.0):
            continue
        return FactorabilityVerdict(status="fails", eigenspace=gi, residual=float(sing[1]))
    return FactorabilityVerdict(status="degenerate_ok")


def _computational_label(column: np.ndarray) -> int:
    mags = np.abs(column)
    best = float(np.max(mags))
    return int(np.flatnonzero(mags >= best - 1e-12)[0])


def _phase_fix(column: np.ndarray) -> np.ndarray:
    pivot = column[_computational_label(column)]
    if abs(pivot) < 1e-15:
        return column
    return column * (abs(pivot) / pivot)


def build_unentangler(h: PauliSum, o: KQubitOp) -> EntanglerSpec:
    """Eigenbasis-form unitary: U columns diagonalize o and its blocks.

    Conjugating h by the result leaves only Z factors on the subset, so
    each subset qubit factors out (l = 2 or absent).  Columns are ordered
    by descending eigenvalue of o, then by each vector's dominant
    computational label; degenerate eigenspaces are refined against the
    largest reduced block of h before ordering.
    """
    verdict = factorability_check(h, o)
    if not verdict.ok:
        raise ValueError(
            f"not factorable: eigenspace {verdict.eigenspace} has off-diagonal "
            f"residual {verdict.residual:g}"
        )

    report = op_spectrum(o)
    blocks = _rest_blocks(h, o.subset)
    rest_words = sorted(blocks, key=lambda w: w.sort_key())
    columns: list[np.ndarray] = []
    for g in report.degenerate_groups():
        basis = report.eigenvectors[:, g]
        d = g.stop - g.start
        if d > 1:
            per_word = [basis.conj().T @ blocks[r] @ basis for r in rest_words]
            off = [np.linalg.norm(b - np.diag(np.diag(b))) for b in per_word]
            if max(off) > _BLOCK_TOL:
                rep = per_word[int(np.argmax([np.linalg.norm(b) for b in per_word]))]
                _, w = np.linalg.eigh(rep)
                basis = basis @ w
        cols = [_phase_fix(basis[:, i]) for i in range(d)]
        cols.sort(key=_computational_label)
        columns.extend(cols)
    unitary = np.column_stack(columns)
    spec = EntanglerSpec(subset=o.subset, unitary=unitary, origin=o)

    transformed = apply_unitary(h, spec)
    for q in o.subset:
        if compute_l(decompose_by_qubit(transformed, q)).l < 2:
            raise RuntimeError(f"transform left qubit {q} non-factorable")
    return spec


def build_clifford_unentangler(o: KQubitOp, h: PauliSum | None = None) -> EntanglerSpec:
    """Word-symmetry rotation: maps a single-word operator onto one qubit.

    The generator is the origin word with its factor on the highest
    support qubit swapped to a different axis; a three-quarter turn about
    it sends the origin to a single-qubit word while keeping every Pauli
    word a Pauli word.  Useful when the commuting operator is a word but
    outcome branches would need different eigenbasis rotations.
    """
    word = o.dominant_word()
    if word is None:
        raise ValueError("Clifford construction needs a single-word operator")
    target = max(word.support())
    axis = word.axis(target)
    swap = "X" if axis != "X" else "Y"
    generator = word.drop_qubit(target).with_axis(target, swap)
    dense_g = _dense_on_subset(generator, o.subset)
    dim = dense_g.shape[0]
    theta = 3.0 * np.pi / 4.0
    unitary = np.cos(theta) * np.eye(dim) - 1j * np.sin(theta) * dense_g
    return EntanglerSpec(subset=o.subset, unitary=unitary, origin=o)


def apply_unitary(h: PauliSum, spec: EntanglerSpec) -> PauliSum:
    """Conjugate h by the spec's unitary and re-expand in the word basis.

    Each distinct subset factor is conjugated once and resolved into
    subset words by trace inner products; coefficients stay real because
    the conjugated factors are Hermitian.  Results are pruned at 1e-10.
    """
    subset = spec.subset
    if any(not 0 <= q < h.n_qubits for q in subset):
        raise ValueError("spec subset outside the Hamiltonian register")
    u = spec.unitary
    dim = 1 << len(subset)
    basis = [PauliWord.identity(h.n_qubits)] + _subset_words(h.n_qubits, subset)
    dense_basis = [_dense_on_subset(w, subset) for w in basis]

    expansion_cache: dict[tuple[tuple[int, str], ...], list[float]] = {}
    terms: list[tuple[PauliWord, float]] = []
    for word, coeff in h.terms.items():
        key = tuple((q, word.axis(q)) for q in subset)
        if key not in expansion_cache:
            m = u.conj().T @ _dense_on_subset(word, subset) @ u
            expansion_cache[key] = [
                float((np.trace(b @ m)).real) / dim for b in dense_basis
            ]
        weights = expansion_cache[key]
        rest = word
        for q in subset:
            rest = rest.drop_qubit(q)
        for bw, w_coeff in zip(basis, weights):
            if abs(w_coeff) < 1e-14:
                continue
            merged = rest
            for q in bw.support():
                merged = merged.with_axis(q, bw.axis(q))
            terms.append((merged, coeff * w_coeff))
    return PauliSum.from_terms(h.n_qubits, terms, prune=1e-10)
