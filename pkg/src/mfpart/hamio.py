"""Text formats: Hamiltonian term lists, statevectors, and plan JSON.

Hamiltonian files are line-oriented: an optional ``qubits: N`` header,
then one term per line as ``<coefficient> [<axis><index>]...`` with axes
X/Y/Z and zero-based qubit indices (``1.5 X0 Z2``).  A bare coefficient
is an identity term and ``#`` starts a comment.  State files hold one
``<re> <im>`` amplitude pair per line, index little-endian in qubit 0.

Plans are serialized to JSON with fixed key order so diffs stay
readable; floats pass through ``repr`` and round-trip exactly.
"""

from __future__ import annotations

import json
import math
import re
import warnings

import numpy as np

from .entangler import EntanglerSpec, KQubitOp
from .meanfield import (
    MFCertificate,
    ProductTerminalMap,
    ReductionStep,
    UniformBranchOps,
)
from .partition import MFFragment, PartitionPlan
from .pauli import PauliSum, PauliWord, SingleQubitOp
from .simulator import StateVector

__all__ = [
    "parse_hamiltonian",
    "serialize_hamiltonian",
    "parse_state",
    "serialize_state",
    "serialize_plan",
    "parse_plan",
]

_HEADER_RE = re.compile(r"qubits\s*:\s*(\d+)$")
_FACTOR_RE = re.compile(r"([XYZxyz])(\d+)$")


def _strip(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def parse_hamiltonian(text: str) -> PauliSum:
    """Parse a Hamiltonian term list; errors carry 1-based line numbers."""
    declared: int | None = None
    parsed: list[tuple[int, float, dict[int, str]]] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        header = _HEADER_RE.match(line)
        if header:
            if declared is not None:
                raise ValueError(f"line {ln}: duplicate qubits header")
            if parsed:
                raise ValueError(f"line {ln}: qubits header must precede terms")
            declared = int(header.group(1))
            continue
        tokens = line.split()
        try:
            coeff = float(tokens[0])
        except ValueError:
            raise ValueError(f"line {ln}: malformed coefficient {tokens[0]!r}") from None
        if not math.isfinite(coeff):
            raise ValueError(f"line {ln}: coefficient {tokens[0]!r} is not finite")
        axes: dict[int, str] = {}
        for tok in tokens[1:]:
            factor = _FACTOR_RE.match(tok)
            if factor is None:
                raise ValueError(f"line {ln}: malformed factor {tok!r}")
            qubit = int(factor.group(2))
            if qubit in axes:
                raise ValueError(f"line {ln}: qubit {qubit} repeated in one term")
            axes[qubit] = factor.group(1).upper()
        parsed.append((ln, coeff, axes))
    if not parsed:
        raise ValueError("no terms found")
    highest = max((q for _, _, axes in parsed for q in axes), default=-1)
    if declared is not None:
        for ln, _, axes in parsed:
            if axes and max(axes) >= declared:
                raise ValueError(
                    f"line {ln}: qubit {max(axes)} outside declared range of {declared}"
                )
        n_qubits = declared
    else:
        n_qubits = highest + 1 if highest >= 0 else 1
    return PauliSum.from_terms(
        n_qubits,
        ((PauliWord.from_axes(n_qubits, axes), coeff) for _, coeff, axes in parsed),
        prune=None,
    )


def serialize_hamiltonian(h: PauliSum) -> str:
    lines = [f"qubits: {h.n_qubits}"]
    for word, coeff in h.sorted_terms():
        if word.is_identity:
            lines.append(repr(coeff))
        else:
            lines.append(f"{coeff!r} {word.label()}")
    return "\n".join(lines) + "\n"


def parse_state(text: str) -> StateVector:
    rows: list[complex] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {ln}: expected '<re> <im>', got {line!r}")
        try:
            rows.append(complex(float(parts[0]), float(parts[1])))
        except ValueError:
            raise ValueError(f"line {ln}: malformed amplitude {line!r}") from None
    if not rows:
        raise ValueError("no amplitudes found")
    n_qubits = (len(rows) - 1).bit_length()
    if len(rows) != 1 << n_qubits:
        raise ValueError(f"{len(rows)} amplitudes is not a power of two")
    amps = np.array(rows, dtype=complex)
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"state norm {norm} is too far from 1")
    if abs(norm - 1.0) > 1e-10:
        warnings.warn(f"renormalizing state with norm {norm}", stacklevel=2)
        amps = amps / norm
    return StateVector(n_qubits, amps)


def serialize_state(psi: StateVector) -> str:
    return "\n".join(
        f"{float(a.real)!r} {float(a.imag)!r}" for a in psi.amplitudes
    ) + "\n"


def _prefix_key(prefix: tuple[int, ...]) -> str:
    return "".join("+" if s == 1 else "-" for s in prefix)


def _prefix_from_key(key: str) -> tuple[int, ...]:
    return tuple(1 if c == "+" else -1 for c in key)


def _terms_payload(h: PauliSum) -> list[dict]:
    return [
        {"word": word.label(), "coeff": float(coeff)} for word, coeff in h.sorted_terms()
    ]


def _sum_from_payload(n_qubits: int, payload: list[dict]) -> PauliSum:
    return PauliSum.from_terms(
        n_qubits,
        ((_word_from_label(n_qubits, row["word"]), row["coeff"]) for row in payload),
        prune=None,
    )


def _word_from_label(n_qubits: int, label: str) -> PauliWord:
    if label == "I":
        return PauliWord.identity(n_qubits)
    axes = {}
    for tok in label.split():
        factor = _FACTOR_RE.match(tok)
        if factor is None:
            raise ValueError(f"malformed word label {label!r}")
        axes[int(factor.group(2))] = factor.group(1).upper()
    return PauliWord.from_axes(n_qubits, axes)


def _step_payload(step: ReductionStep) -> dict:
    if isinstance(step.ops, UniformBranchOps):
        return {"qubit": step.qubit, "uniform_op": list(step.ops.op.bloch)}
    return {
        "qubit": step.qubit,
        "ops": {
            _prefix_key(prefix): list(step.ops[prefix].bloch) for prefix in step.ops
        },
    }


def _certificate_payload(cert: MFCertificate) -> dict:
    payload = {
        "n_qubits": cert.n_qubits,
        "qubit_order": list(cert.qubit_order),
        "steps": [_step_payload(step) for step in cert.steps],
    }
    tv = cert.terminal_values
    if isinstance(tv, ProductTerminalMap):
        payload["terminal_products"] = [
            {"positions": list(positions), "coeff": coeff} for positions, coeff in tv.terms
        ]
    else:
        payload["terminal_values"] = {_prefix_key(o): float(tv[o]) for o in tv}
    return payload


def _certificate_from_payload(payload: dict) -> MFCertificate:
    steps = []
    for depth, row in enumerate(payload["steps"]):
        if "uniform_op" in row:
            op = SingleQubitOp(row["qubit"], tuple(row["uniform_op"]))
            ops = UniformBranchOps(depth, op)
        else:
            ops = {
                _prefix_from_key(key): SingleQubitOp(row["qubit"], tuple(bloch))
                for key, bloch in row["ops"].items()
            }
        steps.append(ReductionStep(row["qubit"], ops))
    if "terminal_products" in payload:
        terminal = ProductTerminalMap(
            len(steps),
            tuple(
                (tuple(row["positions"]), row["coeff"])
                for row in payload["terminal_products"]
            ),
        )
    else:
        terminal = {
            _prefix_from_key(key): value
            for key, value in payload["terminal_values"].items()
        }
    return MFCertificate(payload["n_qubits"], tuple(steps), terminal)


def _entangler_payload(spec: EntanglerSpec) -> dict:
    return {
        "subset": list(spec.subset),
        "unitary_re": spec.unitary.real.tolist(),
        "unitary_im": spec.unitary.imag.tolist(),
        "origin": {
            "n_qubits": spec.origin.n_qubits,
            "subset": list(spec.origin.subset),
            "coefficients": {
                word.label(): float(coeff)
                for word, coeff in sorted(
                    spec.origin.coefficients.items(), key=lambda kv: kv[0].sort_key()
                )
            },
        },
    }


def _entangler_from_payload(payload: dict) -> EntanglerSpec:
    unitary = np.array(payload["unitary_re"]) + 1j * np.array(payload["unitary_im"])
    origin_data = payload["origin"]
    n = origin_data["n_qubits"]
    origin = KQubitOp(
        n,
        tuple(origin_data["subset"]),
        {
            _word_from_label(n, label): coeff
            for label, coeff in origin_data["coefficients"].items()
        },
    )
    return EntanglerSpec(tuple(payload["subset"]), unitary, origin)


def serialize_plan(plan: PartitionPlan) -> str:
    doc = {
        "format": "mf-partition-plan",
        "version": 1,
        "level": plan.level,
        "n_qubits": plan.source.n_qubits,
        "n_fragments": plan.n_fragments,
        "source_terms": _terms_payload(plan.source),
        "fragments": [
            {
                "terms": _terms_payload(frag.hamiltonian),
                "certificate": _certificate_payload(frag.certificate),
                "entangler": (
                    None if frag.entangler is None else _entangler_payload(frag.entangler)
                ),
            }
            for frag in plan.fragments
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_plan(text: str) -> PartitionPlan:
    doc = json.loads(text)
    if doc.get("format") != "mf-partition-plan":
        raise ValueError("not a partition-plan document")
    n = doc["n_qubits"]
    fragments = tuple(
        MFFragment(
            hamiltonian=_sum_from_payload(n, row["terms"]),
            certificate=_certificate_from_payload(row["certificate"]),
            entangler=(
                None if row["entangler"] is None else _entangler_from_payload(row["entangler"])
            ),
        )
        for row in doc["fragments"]
    )
    return PartitionPlan(
        source=_sum_from_payload(n, doc["source_terms"]),
        fragments=fragments,
        level=doc["level"],
    )
