"""Greedy partitioning of Pauli sums into mean-field-measurable fragments.

The recursion keeps a sub-Hamiltonian whole as long as a reduction chain
certifies it (kernel dimension never drops under reduction, so a sum
whose support qubits all sit at l >= 2 always certifies).  When
verification fails there must be a qubit with l <= 1; the sum is split
there: an l = 1 qubit yields the two planar factors with the residual
attached to the dominant one, an l = 0 qubit yields the three axis
slices.  At the two-qubit level a stuck sum first gets a chance to be
rescued by a commuting pair operator and an unentangling rotation; the
attempt is accepted only if the rotated sum passes verification, so the
fragment count can only improve.

Fragment counts never exceed the qubit-wise-commuting baseline: if the
recursion produces more fragments than greedy QWC grouping, the QWC
groups themselves (each one axis-pure, hence certifiable) are returned
instead.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .entangler import (
    MAX_SUBSET_SIZE,
    EntanglerSpec,
    apply_unitary,
    build_clifford_unentangler,
    build_unentangler,
    factorability_check,
    find_commuting_ops,
)
from .meanfield import (
    GRAM_TOL_SCALE,
    MAX_BRANCHES,
    MFCertificate,
    SingleQubitOp,
    compute_l,
    decompose_by_qubit,
    factor_l1,
    reduce_qubit,
    verify_mf,
)
from .pauli import AXES, PauliSum
from .qwc import qwc_partition

__all__ = [
    "MFFragment",
    "PartitionPlan",
    "greedy_partition",
    "validate_plan",
]


@dataclass(frozen=True)
class MFFragment:
    """A summand measurable in one feedforward pass.

    With an entangler present the certificate describes the conjugated
    sum U†HU; ``hamiltonian`` always stores the untransformed summand so
    fragments add up to the source directly.
    """

    hamiltonian: PauliSum
    certificate: MFCertificate
    entangler: EntanglerSpec | None = None

    def effective_hamiltonian(self) -> PauliSum:
        """The sum the certificate actually certifies."""
        if self.entangler is None:
            return self.hamiltonian
        return apply_unitary(self.hamiltonian, self.entangler)


@dataclass(frozen=True)
class PartitionPlan:
    source: PauliSum
    fragments: tuple[MFFragment, ...]
    level: str

    @property
    def n_fragments(self) -> int:
        return len(self.fragments)


def _attach_op(complement: PauliSum, op: SingleQubitOp) -> PauliSum:
    """Product complement * op for a complement free of the op's qubit."""
    acc = PauliSum.zero(complement.n_qubits)
    for axis, weight in zip(AXES, op.bloch):
        if abs(weight) > 0.0:
            acc = acc + complement.attach(op.qubit, axis, weight)
    return acc


def _reduction_probe(s: PauliSum, tol_scale: float) -> PauliSum:
    """Chase the +1 chain through every factorable qubit.

    The result is where a measurement pass first gets stuck; its support
    names the qubits a pair symmetry would have to rescue.
    """
    current = s
    while True:
        support = current.support()
        target = None
        for k in support:
            gram = compute_l(decompose_by_qubit(current, k), tol_scale)
            if gram.l == 2:
                v = gram.eigenvectors[:, 0]
                target = SingleQubitOp(k, (float(v[0]), float(v[1]), float(v[2])))
                break
        if target is None:
            return current
        current = reduce_qubit(current, target, 1)


def _try_entangler(
    s: PauliSum, tol_scale: float, max_branches: int
) -> tuple[EntanglerSpec, MFCertificate] | None:
    probe = _reduction_probe(s, tol_scale)
    stuck = probe.support()
    if len(stuck) < 2:
        return None
    for pair in itertools.combinations(stuck, 2):
        for op in find_commuting_ops(s, pair):
            specs: list[EntanglerSpec] = []
            word = op.dominant_word()
            if word is not None and word.support():
                specs.append(build_clifford_unentangler(op))
            try:
                if factorability_check(s, op).ok:
                    specs.append(build_unentangler(s, op))
            except (ValueError, RuntimeError):
                pass
            for spec in specs:
                cert = verify_mf(apply_unitary(s, spec), tol_scale, max_branches)
                if cert is not None:
                    return spec, cert
    return None


def _qwc_fragments(s: PauliSum, tol_scale: float) -> list[MFFragment]:
    fragments = []
    for group in qwc_partition(s).groups:
        cert = verify_mf(group, tol_scale)
        if cert is None:
            raise AssertionError("a qubit-wise commuting group failed verification")
        fragments.append(MFFragment(hamiltonian=group, certificate=cert))
    return fragments


def _recurse(
    s: PauliSum, level: str, tol_scale: float, max_branches: int, allow_entangler: bool
) -> list[MFFragment]:
    cert = verify_mf(s, tol_scale, max_branches)
    if cert is not None:
        return [MFFragment(hamiltonian=s, certificate=cert)]

    if level == "mf2" and allow_entangler:
        found = _try_entangler(s, tol_scale, max_branches)
        if found is not None:
            spec, tcert = found
            return [MFFragment(hamiltonian=s, certificate=tcert, entangler=spec)]

    grams = {
        k: compute_l(decompose_by_qubit(s, k), tol_scale) for k in s.support()
    }
    candidates = [k for k, g in grams.items() if g.l <= 1]
    if not candidates:
        # Only reachable when verification hit the branch cap: every qubit
        # is factorable, so QWC groups are a safe way to shrink the problem.
        return _qwc_fragments(s, tol_scale)
    k = min(candidates, key=lambda q: (-grams[q].l, q))

    parts: list[PauliSum]
    if grams[k].l == 1:
        _, _, o2, c2, _ = factor_l1(s, grams[k])
        prime_part = _attach_op(c2, o2)
        parts = [prime_part, s - prime_part]
    else:
        dec = decompose_by_qubit(s, k)
        part_x = dec.h_x.attach(k, "X", 1.0)
        part_y = dec.h_y.attach(k, "Y", 1.0)
        parts = [part_x, part_y, s - part_x - part_y]

    out: list[MFFragment] = []
    for part in parts:
        if part.is_zero:
            continue
        out.extend(_recurse(part, level, tol_scale, max_branches, allow_entangler))
    return out


def greedy_partition(
    h: PauliSum,
    level: str = "mf1",
    tol_scale: float = GRAM_TOL_SCALE,
    max_branches: int = MAX_BRANCHES,
    max_entangler_qubits: int = MAX_SUBSET_SIZE,
) -> PartitionPlan:
    """Partition h so every fragment carries a measurement certificate.

    ``level`` selects how hard to fight before splitting: "mf1" uses only
    single-qubit reductions, "mf2" additionally tries two-qubit commuting
    operators with unentangling rotations.  ``max_entangler_qubits`` of 0
    disables the rotations even at mf2.
    """
    if level not in ("mf1", "mf2"):
        raise ValueError(f"unknown level {level!r}")
    if h.is_zero:
        raise ValueError("cannot partition an empty Hamiltonian")
    allow_entangler = max_entangler_qubits >= 2
    fragments = _recurse(h, level, tol_scale, max_branches, allow_entangler)
    baseline = qwc_partition(h)
    if len(fragments) > baseline.n_groups:
        fragments = _qwc_fragments(h, tol_scale)
    return PartitionPlan(source=h, fragments=tuple(fragments), level=level)


def validate_plan(
    plan: PartitionPlan, atol: float = 1e-10, branch_limit: int = 256
) -> list[str]:
    """Check reconstruction and certificates; returns problem descriptions.

    Certificate checks walk each outcome branch (up to ``branch_limit``
    per fragment) and confirm the reductions land on the stored terminal
    value.
    """
    problems: list[str] = []
    total = PauliSum.zero(plan.source.n_qubits)
    for frag in plan.fragments:
        total = total + frag.hamiltonian
    if not total.allclose(plan.source, atol=atol):
        problems.append("fragments do not sum to the source Hamiltonian")

    for fi, frag in enumerate(plan.fragments):
        effective = frag.effective_hamiltonian()
        cert = frag.certificate
        if cert.n_qubits != plan.source.n_qubits:
            problems.append(f"fragment {fi}: certificate register size mismatch")
            continue
        if not set(effective.support()) <= set(cert.qubit_order):
            problems.append(f"fragment {fi}: certificate does not cover the support")
            continue
        for outcomes in itertools.islice(iter(cert.terminal_values), branch_limit):
            reduced = effective
            for si, (step, outcome) in enumerate(zip(cert.steps, outcomes)):
                op = step.ops[outcomes[:si]]
                reduced = reduce_qubit(reduced, op, outcome)
            if reduced.support():
                problems.append(f"fragment {fi}: branch {outcomes} left a non-scalar")
                break
            if abs(reduced.constant_part() - cert.terminal_values[outcomes]) > 1e-9:
                problems.append(f"fragment {fi}: branch {outcomes} terminal mismatch")
                break
    return problems
