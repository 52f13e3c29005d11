"""Structural and exhaustive single-fault checks behind ``cecsim verify``."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from .circuits import CecCircuit, CycleOptions, build_cycle
from .codes import CodeName, CodeSpec, LogicalClass, check_incidence
from .errors import ValidationError
from .estimator import run_one_cycle
from .noise import FaultPath, single_fault_paths
from .pauli_frame import FrameState, GateKind, Pauli, PauliString, apply_gate, run_gates

logger = logging.getLogger(__name__)

# Noiseless BF extraction for no error and a single X on q0, q1, q2.
BF_SYNDROME_TABLE: Dict[Optional[int], Tuple[int, int, int]] = {
    None: (0, 0, 0),
    0: (1, 0, 1),
    1: (1, 1, 0),
    2: (0, 1, 1),
}
EXTRACTION_COUNTS = {CodeName.BF: 6, CodeName.BS: 36, CodeName.STEANE: 56}

# Extraction site fault hitting only the ancilla: I on data, X on ancilla.
_ANCILLA_FLIP = int(Pauli.X) << 2


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    failures: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "failures": list(self.failures),
        }


@dataclass
class VerificationReport:
    code: str
    checks: List[CheckResult] = field(default_factory=list)
    incidence: Dict[str, Any] = field(default_factory=dict)
    circuit: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "code": self.code,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "incidence": self.incidence,
            "circuit": self.circuit,
        }


def verify_code(
    code: CodeSpec, options: Optional[CycleOptions] = None
) -> VerificationReport:
    """Run every suite for one code; never raises on a failed check."""
    circuit = build_cycle(code, options)
    report = VerificationReport(code.name.value)
    report.circuit = {
        "layout": circuit.options.layout,
        "polarity_gates_noisy": circuit.options.polarity_gates_noisy,
        "q": circuit.q,
        "t": circuit.t,
        "g": circuit.g,
    }
    suites: List[Callable[[CodeSpec, CecCircuit], CheckResult]] = [
        _check_extraction_count,
        _check_extraction_parity,
        _check_no_back_action,
        _check_noiseless_completeness,
        _check_ancilla_flip_safety,
        _check_single_fault_survival,
    ]
    if code.name is CodeName.BF:
        suites.insert(0, _check_bf_syndromes)

    try:
        incidence = check_incidence(code)
        report.incidence = incidence.to_dict()
        report.checks.append(CheckResult("incidence", True, _incidence_detail(report.incidence)))
    except ValidationError as exc:
        report.incidence = exc.report
        report.checks.append(CheckResult("incidence", False, str(exc)))

    for suite in suites:
        result = suite(code, circuit)
        level = logging.INFO if result.passed else logging.ERROR
        logger.log(
            level,
            "verify %s/%s: %s %s",
            code.name.value,
            result.name,
            "ok" if result.passed else "FAILED",
            result.detail,
        )
        report.checks.append(result)
    return report


def require_pass(report: VerificationReport) -> VerificationReport:
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise ValidationError(
            f"{report.code}: failed checks {', '.join(failed)}", report.to_dict()
        )
    return report


def extraction_syndrome(circuit: CecCircuit, frame: PauliString) -> Tuple[int, ...]:
    """Ancilla bits after the noiseless bit-flip extraction on ``frame``."""
    state = FrameState.fresh(frame, circuit.n_ancilla)
    for gate in circuit.gates:
        if gate.kind is not GateKind.EXTRACT_Z:
            continue
        state = apply_gate(state, gate)
    return state.ancillas.as_tuple()[: len(circuit.code.z_checks)]


def _check_bf_syndromes(code: CodeSpec, circuit: CecCircuit) -> CheckResult:
    failures = []
    for qubit, expected in BF_SYNDROME_TABLE.items():
        frame = (
            PauliString.identity(code.n_data)
            if qubit is None
            else PauliString.single(code.n_data, qubit, Pauli.X)
        )
        got = extraction_syndrome(circuit, frame)
        if got != expected:
            failures.append(f"X on {qubit}: expected {expected}, got {got}")
    return CheckResult("bf_syndrome_table", not failures, "4 columns", tuple(failures))


def _check_extraction_count(code: CodeSpec, circuit: CecCircuit) -> CheckResult:
    expected = EXTRACTION_COUNTS[code.name]
    got = circuit.extraction_count()
    return CheckResult(
        "extraction_count",
        got == expected,
        f"{got} extraction gates (expected {expected})",
    )


def _check_extraction_parity(code: CodeSpec, circuit: CecCircuit) -> CheckResult:
    """A single X lights 0 or 2^(k-1) of the 2^k - 1 redundant checks."""
    n_generators = (len(code.z_checks) + 1).bit_length() - 1
    allowed = {0, 1 << (n_generators - 1)}
    failures = []
    for qubit in range(code.n_data):
        bits = extraction_syndrome(circuit, PauliString.single(code.n_data, qubit, Pauli.X))
        if sum(bits) not in allowed:
            failures.append(f"X on {qubit}: {sum(bits)} ancillas set")
    return CheckResult(
        "extraction_parity", not failures, f"ancilla counts in {sorted(allowed)}", tuple(failures)
    )


def _check_no_back_action(code: CodeSpec, circuit: CecCircuit) -> CheckResult:
    failures = []
    for frame in _single_qubit_frames(code, x_only=False):
        state = FrameState.fresh(frame, circuit.n_ancilla)
        for gate in circuit.gates:
            if gate.kind.is_extraction:
                state = apply_gate(state, gate)
        if state.data != frame:
            failures.append(f"{frame} became {state.data}")
    return CheckResult("no_back_action", not failures, "extraction leaves data alone", tuple(failures))


def _check_noiseless_completeness(code: CodeSpec, circuit: CecCircuit) -> CheckResult:
    failures = []
    x_only = not code.protects_phase
    for frame in _single_qubit_frames(code, x_only=x_only):
        result = run_one_cycle(code, circuit, frame, FaultPath())
        if result is not LogicalClass.CORRECT:
            failures.append(f"{frame} -> {result.tag}")
    return CheckResult(
        "noiseless_completeness", not failures, "single-qubit errors corrected", tuple(failures)
    )


def _check_ancilla_flip_safety(code: CodeSpec, circuit: CecCircuit) -> CheckResult:
    failures = []
    identity = PauliString.identity(code.n_data)
    for index, gate in enumerate(circuit.gates):
        if not gate.kind.is_extraction:
            continue
        state = FrameState.fresh(identity, circuit.n_ancilla)
        final = run_gates(state, circuit.gates, circuit.t, gate_faults={index: [(0, _ANCILLA_FLIP)]})
        if not final.data.is_identity:
            failures.append(f"flip after gate {index} left {final.data}")
    return CheckResult(
        "ancilla_flip_safety", not failures, "wrong syndrome bits never touch data", tuple(failures)
    )


def _check_single_fault_survival(code: CodeSpec, circuit: CecCircuit) -> CheckResult:
    """Any one fault, then a clean cycle, ends in Correct."""
    x_only = not code.protects_phase
    identity = PauliString.identity(code.n_data)
    failures = []
    total = 0
    for path in single_fault_paths(circuit, x_only=x_only):
        total += 1
        memory, gates = path.compile(circuit)
        state = run_gates(
            FrameState.fresh(identity, circuit.n_ancilla), circuit.gates, circuit.t, memory, gates
        )
        result = run_one_cycle(code, circuit, state.data, FaultPath())
        if result is not LogicalClass.CORRECT:
            failures.append(f"{path} -> {result.tag}")
    return CheckResult(
        "single_fault_survival",
        not failures,
        f"{total - len(failures)}/{total} paths recover",
        tuple(failures[:20]),
    )


def _single_qubit_frames(code: CodeSpec, x_only: bool) -> List[PauliString]:
    paulis = (Pauli.X,) if x_only else (Pauli.X, Pauli.Z, Pauli.Y)
    return [
        PauliString.single(code.n_data, qubit, pauli)
        for qubit in range(code.n_data)
        for pauli in paulis
    ]


def _incidence_detail(incidence: Dict[str, Any]) -> str:
    return (
        f"weights {sorted(set(incidence['weights']))}, "
        f"degrees {sorted(set(incidence['degrees']))}, "
        f"overlaps {sorted({o[2] for o in incidence['overlaps']})}"
    )

