"""Mean-field analysis of Pauli sums through per-qubit complement Gram matrices.

A sum H is mean-field measurable when it can be read out one qubit at a
time: there is an ordering of its support in which each qubit carries a
single-qubit operator commuting with the current (outcome-dependent)
reduced Hamiltonian, so a projective measurement of that operator
collapses the register without disturbing the remaining statistics.

The central quantity is the per-qubit kernel dimension ``l``:

* write H = h_x X_k + h_y Y_k + h_z Z_k + h_e with the h's free of qubit k;
* stack the three coefficient vectors over the union of their words into
  an M-by-3 matrix A and form the 3-by-3 Gram matrix S = A^T A;
* ``l`` is the number of Gram eigenvalues at or below the kernel tolerance.

``l = 2`` means the three complement operators are collinear, so qubit k
factors out exactly; ``l = 1`` means they span a plane and H splits into
two factorable parts; ``l = 0`` leaves only the three-way axis split.
A qubit outside the support reports ``l = 3``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .pauli import AXES, COEFF_PRUNE, PauliSum, PauliWord, SingleQubitOp

__all__ = [
    "GRAM_TOL_SCALE",
    "ComplementDecomposition",
    "GramData",
    "decompose_by_qubit",
    "compute_l",
    "factor_l2",
    "factor_l1",
    "reduce_qubit",
    "single_op_commutator_norm",
    "UniformBranchOps",
    "ProductTerminalMap",
    "ReductionStep",
    "MFCertificate",
    "verify_mf",
]

#: Gram kernel tolerance is GRAM_TOL_SCALE * max(1, trace(S)).
GRAM_TOL_SCALE = 1e-8

#: Live-branch cap for the exhaustive chain search in verify_mf.
MAX_BRANCHES = 1 << 16

_AXIS_BLOCH = {
    "X": (1.0, 0.0, 0.0),
    "Y": (0.0, 1.0, 0.0),
    "Z": (0.0, 0.0, 1.0),
}


@dataclass(frozen=True)
class ComplementDecomposition:
    """H = h_x X_k + h_y Y_k + h_z Z_k + h_e with all parts free of qubit k."""

    qubit: int
    h_x: PauliSum
    h_y: PauliSum
    h_z: PauliSum
    h_e: PauliSum

    def axis_parts(self) -> tuple[PauliSum, PauliSum, PauliSum]:
        return (self.h_x, self.h_y, self.h_z)


@dataclass(frozen=True)
class GramData:
    """Gram analysis of one qubit's complement operators.

    Eigenvalues are sorted descending; eigenvector columns match that
    order and are sign-fixed so the largest-magnitude component is
    positive.  ``l`` counts eigenvalues at or below ``kernel_tol``.
    """

    qubit: int
    basis: tuple[PauliWord, ...]
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    l: int
    kernel_tol: float


def decompose_by_qubit(h: PauliSum, qubit: int) -> ComplementDecomposition:
    """Split a sum by the factor carried on one qubit."""
    if not 0 <= qubit < h.n_qubits:
        raise ValueError(f"qubit {qubit} outside register of {h.n_qubits}")
    parts: dict[str, list[tuple[PauliWord, float]]] = {a: [] for a in AXES}
    rest: list[tuple[PauliWord, float]] = []
    for word, coeff in h.terms.items():
        axis = word.axis(qubit)
        if axis == "I":
            rest.append((word, coeff))
        else:
            parts[axis].append((word.drop_qubit(qubit), coeff))
    n = h.n_qubits
    return ComplementDecomposition(
        qubit=qubit,
        h_x=PauliSum.from_terms(n, parts["X"], prune=None),
        h_y=PauliSum.from_terms(n, parts["Y"], prune=None),
        h_z=PauliSum.from_terms(n, parts["Z"], prune=None),
        h_e=PauliSum.from_terms(n, rest, prune=None),
    )


def _sign_fix(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v


def compute_l(dec: ComplementDecomposition, tol_scale: float = GRAM_TOL_SCALE) -> GramData:
    """Gram matrix, spectrum and kernel dimension for one qubit."""
    basis_words = sorted(
        {w for part in dec.axis_parts() for w in part.terms},
        key=lambda w: w.sort_key(),
    )
    index = {w: i for i, w in enumerate(basis_words)}
    a = np.zeros((len(basis_words), 3))
    for col, part in enumerate(dec.axis_parts()):
        for word, coeff in part.terms.items():
            a[index[word], col] = coeff
    gram = a.T @ a
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    for col in range(3):
        evecs[:, col] = _sign_fix(evecs[:, col])
    tol = tol_scale * max(1.0, float(np.trace(gram)))
    l = int(np.sum(evals <= tol))
    return GramData(
        qubit=dec.qubit,
        basis=tuple(basis_words),
        matrix=gram,
        eigenvalues=evals,
        eigenvectors=evecs,
        l=l,
        kernel_tol=tol,
    )


def _combine(dec: ComplementDecomposition, weights: np.ndarray, n: int) -> PauliSum:
    """The complement sum matching a Bloch direction: sum_s w_s * h_s."""
    acc = PauliSum.zero(n)
    for weight, part in zip(weights, dec.axis_parts()):
        if abs(weight) > 0.0:
            acc = acc + part.scale(float(weight))
    return acc


def factor_l2(
    h: PauliSum, gram: GramData
) -> tuple[SingleQubitOp, PauliSum, PauliSum]:
    """Exact factorization H = complement * op + h_e at an l = 2 qubit.

    The op's Bloch vector is the single non-kernel Gram eigenvector, so
    [H, op] = 0: the squared commutator norm equals four times the sum of
    the kernel eigenvalues, which the l = 2 verdict bounds by the kernel
    tolerance.
    """
    if gram.l != 2:
        raise ValueError(f"qubit {gram.qubit} has l={gram.l}, need l=2")
    dec = decompose_by_qubit(h, gram.qubit)
    v = gram.eigenvectors[:, 0]
    op = SingleQubitOp(gram.qubit, (float(v[0]), float(v[1]), float(v[2])))
    complement = _combine(dec, v, h.n_qubits)
    return op, complement, dec.h_e


def factor_l1(
    h: PauliSum, gram: GramData
) -> tuple[SingleQubitOp, PauliSum, SingleQubitOp, PauliSum, PauliSum]:
    """Two-way split H = c1 * op1 + c2 * op2 + h_e at an l = 1 qubit.

    op1 belongs to the larger non-kernel eigenvalue.  Both parts are
    individually factorable at this qubit.
    """
    if gram.l != 1:
        raise ValueError(f"qubit {gram.qubit} has l={gram.l}, need l=1")
    dec = decompose_by_qubit(h, gram.qubit)
    out: list[tuple[SingleQubitOp, PauliSum]] = []
    for col in range(2):
        v = gram.eigenvectors[:, col]
        op = SingleQubitOp(gram.qubit, (float(v[0]), float(v[1]), float(v[2])))
        out.append((op, _combine(dec, v, h.n_qubits)))
    (op1, c1), (op2, c2) = out
    return op1, c1, op2, c2, dec.h_e


def reduce_qubit(h: PauliSum, op: SingleQubitOp, outcome: int) -> PauliSum:
    """Expectation of H in the ``outcome`` eigenstate of a single-qubit op.

    Each word's factor on the op's qubit is replaced by ``outcome`` times
    the matching component of the unit Bloch vector; the result no longer
    touches that qubit.  The op's identity shift and overall scale do not
    affect its eigenstates and are ignored.
    """
    if outcome not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    return _reduce_by_weights(h, op.qubit, _reduction_weights(op), outcome)


def _reduction_weights(op: SingleQubitOp) -> tuple[float, float, float, float]:
    """Unit Bloch components keyed by the axis bit pattern x + 2z."""
    bx, by, bz = op.unit().bloch
    return (0.0, bx, bz, by)


def _reduce_by_weights(
    h: PauliSum,
    k: int,
    weights: tuple[float, float, float, float],
    outcome: int,
) -> PauliSum:
    acc: dict[PauliWord, float] = {}
    for word, coeff in h.terms.items():
        sel = ((word.x_mask >> k) & 1) + 2 * ((word.z_mask >> k) & 1)
        if sel == 0:
            acc[word] = acc.get(word, 0.0) + coeff
        else:
            dropped = word.drop_qubit(k)
            acc[dropped] = acc.get(dropped, 0.0) + coeff * outcome * weights[sel]
    return PauliSum(
        h.n_qubits, {w: c for w, c in acc.items() if abs(c) > COEFF_PRUNE}
    )


def single_op_commutator_norm(h: PauliSum, op: SingleQubitOp) -> float:
    """Coefficient-vector norm of [H, op] for a single-qubit op."""
    dec = decompose_by_qubit(h, op.qubit)
    parts = dict(zip(AXES, dec.axis_parts()))
    cross: dict[str, PauliSum] = {}
    # [h_s * s_k, t_k] = 2i eps(s, t, r) * h_s * r_k for each axis pair.
    eps = {
        ("X", "Y"): ("Z", 1.0), ("Y", "X"): ("Z", -1.0),
        ("Y", "Z"): ("X", 1.0), ("Z", "Y"): ("X", -1.0),
        ("Z", "X"): ("Y", 1.0), ("X", "Z"): ("Y", -1.0),
    }
    weights = dict(zip(AXES, op.bloch))
    for s in AXES:
        for t in AXES:
            if s == t:
                continue
            r, sign = eps[(s, t)]
            contrib = parts[s].scale(2.0 * sign * weights[t])
            cross[r] = cross.get(r, PauliSum.zero(h.n_qubits)) + contrib
    total = 0.0
    for part in cross.values():
        total += part.norm() ** 2
    return total ** 0.5


class UniformBranchOps(Mapping):
    """Branch-op mapping that returns the same operator for every prefix."""

    def __init__(self, depth: int, op: SingleQubitOp):
        self._depth = depth
        self._op = op

    def __getitem__(self, prefix: tuple[int, ...]) -> SingleQubitOp:
        if len(prefix) != self._depth or any(s not in (1, -1) for s in prefix):
            raise KeyError(prefix)
        return self._op

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(itertools.product((1, -1), repeat=self._depth))

    def __len__(self) -> int:
        return 1 << self._depth

    @property
    def op(self) -> SingleQubitOp:
        return self._op

    @property
    def depth(self) -> int:
        return self._depth


class ProductTerminalMap(Mapping):
    """Terminal values of an axis-pure chain, computed on demand.

    Every word of an axis-pure sum evaluates on an outcome assignment to
    the product of the outcomes on its support, so storing the word data
    is enough; nothing exponential is materialized until iterated.
    """

    def __init__(self, n_steps: int, terms: tuple[tuple[tuple[int, ...], float], ...]):
        self._n_steps = n_steps
        self._terms = terms

    def __getitem__(self, outcomes: tuple[int, ...]) -> float:
        if len(outcomes) != self._n_steps or any(s not in (1, -1) for s in outcomes):
            raise KeyError(outcomes)
        total = 0.0
        for positions, coeff in self._terms:
            value = coeff
            for p in positions:
                value *= outcomes[p]
            total += value
        return total

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(itertools.product((1, -1), repeat=self._n_steps))

    def __len__(self) -> int:
        return 1 << self._n_steps

    @property
    def terms(self) -> tuple[tuple[tuple[int, ...], float], ...]:
        return self._terms

    @property
    def n_steps(self) -> int:
        return self._n_steps


@dataclass(frozen=True)
class ReductionStep:
    """One chain step: the qubit measured and the op for each outcome prefix.

    The stored op commutes with the branch's reduced Hamiltonian; the
    construction check is the Gram kernel bound, which is equivalent to a
    direct commutator-norm bound (see :func:`factor_l2`).
    """

    qubit: int
    ops: Mapping[tuple[int, ...], SingleQubitOp]


@dataclass(frozen=True)
class MFCertificate:
    """Witness that a sum is mean-field measurable.

    ``steps`` covers every support qubit in a fixed order shared by all
    outcome branches; ``terminal_values`` maps each full outcome sequence
    to the scalar the chain terminates in.
    """

    n_qubits: int
    steps: tuple[ReductionStep, ...]
    terminal_values: Mapping[tuple[int, ...], float]

    @property
    def qubit_order(self) -> tuple[int, ...]:
        return tuple(step.qubit for step in self.steps)

    @property
    def n_branches(self) -> int:
        return 1 << len(self.steps)


def _axis_profile(h: PauliSum) -> dict[int, set[str]] | None:
    """Axis set per support qubit, or None if any qubit mixes axes."""
    axes: dict[int, set[str]] = {}
    for word in h.terms:
        for k in word.support():
            seen = axes.setdefault(k, set())
            seen.add(word.axis(k))
            if len(seen) > 1:
                return None
    return axes


def _pure_axis_certificate(h: PauliSum, axes: dict[int, set[str]]) -> MFCertificate:
    order = sorted(axes)
    position = {k: i for i, k in enumerate(order)}
    steps = tuple(
        ReductionStep(
            qubit=k,
            ops=UniformBranchOps(i, SingleQubitOp(k, _AXIS_BLOCH[next(iter(axes[k]))])),
        )
        for i, k in enumerate(order)
    )
    terms = tuple(
        (tuple(position[k] for k in word.support()), coeff)
        for word, coeff in h.sorted_terms()
    )
    return MFCertificate(
        n_qubits=h.n_qubits,
        steps=steps,
        terminal_values=ProductTerminalMap(len(order), terms),
    )


# The chain search keeps every outcome branch as a plain mask-keyed dict
# {(x_mask, z_mask): coeff}; words are only materialized at the
# certificate boundary.  Gram column per axis bit pattern x + 2z:
# X -> 0, Z -> 2, Y -> 1.
_COLUMN_BY_BITS = (-1, 0, 2, 1)


def _branch_gram(
    branch: dict[tuple[int, int], float],
    qubit: int,
    tol_scale: float,
) -> tuple[int, tuple[float, float, float] | None]:
    """Kernel dimension and leading Gram eigenvector for one branch qubit.

    Mirrors :func:`compute_l` without any intermediate sums: complement
    vectors are bucketed in one pass, and a qubit carried on a single
    axis takes a closed-form shortcut whose leading eigenvector is an
    exact axis vector.  The vector is None when ``l < 2``.
    """
    vectors: dict[tuple[int, int], list[float]] = {}
    seen = 0
    keep = ~(1 << qubit)
    for (x, z), coeff in branch.items():
        sel = ((x >> qubit) & 1) + 2 * ((z >> qubit) & 1)
        if sel == 0:
            continue
        col = _COLUMN_BY_BITS[sel]
        seen |= 1 << col
        dropped = (x & keep, z & keep)
        row = vectors.get(dropped)
        if row is None:
            row = [0.0, 0.0, 0.0]
            vectors[dropped] = row
        row[col] += coeff

    if seen == 0:
        return 3, None
    order = sorted(vectors, key=lambda key: (key[0] | key[1], key[0], key[1]))
    if seen & (seen - 1) == 0:
        # One axis present; the Gram spectrum is (sum of squares, 0, 0).
        col = seen.bit_length() - 1
        lam = sum(vectors[key][col] ** 2 for key in order)
        if lam <= tol_scale * max(1.0, lam):
            return 3, None
        top = [0.0, 0.0, 0.0]
        top[col] = 1.0
        return 2, (top[0], top[1], top[2])
    a = np.array([vectors[key] for key in order])
    gram = a.T @ a
    evals, evecs = np.linalg.eigh(gram)
    idx = np.argsort(evals)[::-1]
    tol = tol_scale * max(1.0, float(np.trace(gram)))
    l = int(np.sum(evals[idx] <= tol))
    if l < 2:
        return l, None
    top = _sign_fix(evecs[:, idx[0]])
    return l, (float(top[0]), float(top[1]), float(top[2]))


def _reduce_branch(
    branch: dict[tuple[int, int], float],
    k: int,
    weights: tuple[float, float, float, float],
    outcome: int,
) -> dict[tuple[int, int], float]:
    keep = ~(1 << k)
    acc: dict[tuple[int, int], float] = {}
    for key, coeff in branch.items():
        x, z = key
        sel = ((x >> k) & 1) + 2 * ((z >> k) & 1)
        if sel == 0:
            acc[key] = acc.get(key, 0.0) + coeff
        else:
            dropped = (x & keep, z & keep)
            acc[dropped] = acc.get(dropped, 0.0) + coeff * outcome * weights[sel]
    return {key: c for key, c in acc.items() if abs(c) > COEFF_PRUNE}


def verify_mf(
    h: PauliSum,
    tol_scale: float = GRAM_TOL_SCALE,
    max_branches: int = MAX_BRANCHES,
) -> MFCertificate | None:
    """Search for a full reduction chain, exploring every outcome branch.

    At each step the lowest-indexed remaining support qubit that is
    factorable (l = 2) or absent (l = 3) in every live branch is measured;
    both outcomes of every branch are then reduced and the search recurses.
    Absent qubits get a Z placeholder op whose outcome cannot change the
    terminal value.  Returns None when no step qubit qualifies, or when
    the live branch count would exceed ``max_branches``.
    """
    support = h.support()
    if not support:
        return MFCertificate(
            n_qubits=h.n_qubits,
            steps=(),
            terminal_values={(): h.constant_part()},
        )

    axes = _axis_profile(h)
    if axes is not None:
        return _pure_axis_certificate(h, axes)

    branches: dict[tuple[int, ...], dict[tuple[int, int], float]] = {
        (): {(w.x_mask, w.z_mask): c for w, c in h.terms.items()}
    }
    remaining = list(support)
    steps: list[ReductionStep] = []
    while remaining:
        chosen: tuple[int, dict[tuple[int, ...], SingleQubitOp]] | None = None
        for k in remaining:
            ops: dict[tuple[int, ...], SingleQubitOp] = {}
            for prefix, bh in branches.items():
                l, top = _branch_gram(bh, k, tol_scale)
                if l == 3:
                    ops[prefix] = SingleQubitOp(k, (0.0, 0.0, 1.0))
                elif l == 2:
                    ops[prefix] = SingleQubitOp(k, top)
                else:
                    break
            else:
                chosen = (k, ops)
                break
        if chosen is None:
            return None
        if 2 * len(branches) > max_branches:
            return None
        k, ops = chosen
        remaining.remove(k)
        steps.append(ReductionStep(qubit=k, ops=ops))
        next_branches: dict[tuple[int, ...], dict[tuple[int, int], float]] = {}
        for prefix, bh in branches.items():
            weights = _reduction_weights(ops[prefix])
            for outcome in (1, -1):
                next_branches[prefix + (outcome,)] = _reduce_branch(bh, k, weights, outcome)
        branches = next_branches

    terminal: dict[tuple[int, ...], float] = {}
    for prefix, bh in branches.items():
        if any(x | z for x, z in bh):
            raise AssertionError("reduction chain left a non-scalar branch")
        terminal[prefix] = bh.get((0, 0), 0.0)
    return MFCertificate(n_qubits=h.n_qubits, steps=tuple(steps), terminal_values=terminal)
