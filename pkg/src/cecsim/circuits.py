"""Construction and scheduling of one measurement-free correction cycle."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Iterator, List, Optional, Sequence, Set, Tuple

from .codes import CodeSpec, CorrectionGroup
from .errors import UsageError
from .pauli_frame import Gate, GateKind, PauliString

logger = logging.getLogger(__name__)

LAYOUTS = ("asap", "drawn")


@dataclass(frozen=True)
class CycleOptions:
    """How a cycle is laid out.

    ``asap`` packs gates greedily and emits polarity X gates only when they can
    fault. ``drawn`` gives each data qubit one fan-out extraction step and
    brackets every zero-pattern correction with polarity layers, which take
    time steps whether or not they fault.
    """

    polarity_gates_noisy: bool = False
    layout: str = "asap"

    def __post_init__(self) -> None:
        if self.layout not in LAYOUTS:
            raise UsageError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")


@dataclass(frozen=True)
class GateSite:
    """One control-target pair of a gate that can fault."""

    gate_index: int
    pair_index: int
    paulis: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class CecCircuit:
    code: CodeSpec
    gates: Tuple[Gate, ...]
    n_ancilla: int
    q: int
    t: int
    gate_sites: Tuple[GateSite, ...]
    options: CycleOptions = CycleOptions()

    @property
    def g(self) -> int:
        return len(self.gate_sites)

    @property
    def n_mem_sites(self) -> int:
        return self.q * self.t

    def mem_site(self, index: int) -> Tuple[int, int]:
        """(qubit, layer) of a flat memory-site index."""
        layer, qubit = divmod(index, self.q)
        return qubit, layer

    def layers(self) -> List[List[Gate]]:
        grouped: List[List[Gate]] = [[] for _ in range(self.t)]
        for gate in self.gates:
            grouped[gate.layer].append(gate)
        return grouped

    def extraction_count(self) -> int:
        return sum(1 for gate in self.gates if gate.kind.is_extraction)


def build_cycle(code: CodeSpec, options: Optional[CycleOptions] = None) -> CecCircuit:
    """Extraction, correction and reset for each protected error type, back to back."""
    options = options or CycleOptions()
    halves = [
        (code.z_checks, GateKind.EXTRACT_Z, code.x_corrections, GateKind.CORRECT_X)
    ]
    if code.x_checks:
        halves.append(
            (code.x_checks, GateKind.EXTRACT_X, code.z_corrections, GateKind.CORRECT_Z)
        )

    if options.layout == "drawn":
        scheduled, n_layers = _drawn_layers(halves, code.n_data)
    else:
        gates: List[Gate] = []
        for checks, extract_kind, groups, correct_kind in halves:
            for data, ancilla in _interleave(_extraction_pairs(checks)):
                gates.append(Gate(extract_kind, data=data, ancilla=ancilla))
            for group in groups:
                gates.extend(_correction_gates(group, correct_kind, options))
            gates.extend(Gate.reset(a) for a in range(len(checks)))
        scheduled, n_layers = schedule(gates)

    n_ancilla = max(len(code.z_checks), len(code.x_checks))
    circuit = CecCircuit(
        code=code,
        gates=scheduled,
        n_ancilla=n_ancilla,
        q=code.n_data + n_ancilla,
        t=n_layers,
        gate_sites=tuple(_sites(scheduled, options)),
        options=options,
    )
    logger.info(
        "Built %s cycle (%s): q=%d t=%d g=%d",
        code.name.value,
        options.layout,
        circuit.q,
        circuit.t,
        circuit.g,
    )
    return circuit


def schedule(gates: Sequence[Gate]) -> Tuple[Tuple[Gate, ...], int]:
    """Greedy earliest-layer assignment in construction order.

    Each data qubit and ancilla is used in order. Corrections start only after
    every extraction since the last reset and run one per layer. Consecutive
    resets share a fresh layer after everything scheduled so far.
    """
    data_free: Dict[int, int] = {}
    ancilla_free: Dict[int, int] = {}
    horizon = 0
    extraction_end = 0
    correction_end = 0
    reset_layer: Optional[int] = None
    scheduled: List[Gate] = []

    for gate in gates:
        if gate.kind is GateKind.RESET:
            if reset_layer is None:
                reset_layer = horizon
            layer = reset_layer
            extraction_end = correction_end = layer + 1
        else:
            reset_layer = None
            layer = max(
                [data_free.get(d, 0) for d in gate.data_qubits()]
                + [ancilla_free.get(a, 0) for a in gate.ancilla_qubits()]
                + [0]
            )
            if gate.kind.is_correction or gate.kind is GateKind.POLARITY_X:
                layer = max(layer, extraction_end)
            if gate.kind.is_correction:
                layer = max(layer, correction_end)
                correction_end = layer + 1
        for d in gate.data_qubits():
            data_free[d] = layer + 1
        for a in gate.ancilla_qubits():
            ancilla_free[a] = layer + 1
        if gate.kind.is_extraction:
            extraction_end = max(extraction_end, layer + 1)
        horizon = max(horizon, layer + 1)
        scheduled.append(replace(gate, layer=layer))

    scheduled.sort(key=lambda g: g.layer)
    return tuple(scheduled), horizon


def count_sites(circuit: CecCircuit) -> Tuple[int, int, int]:
    return circuit.q, circuit.t, circuit.g


def circuit_to_dict(circuit: CecCircuit) -> Dict[str, Any]:
    layers = []
    for index, gates in enumerate(circuit.layers()):
        layers.append({"index": index, "gates": [_gate_to_dict(g) for g in gates]})
    return {
        "code": circuit.code.name.value,
        "q": circuit.q,
        "t": circuit.t,
        "g": circuit.g,
        "options": asdict(circuit.options),
        "layers": layers,
    }


def _extraction_pairs(checks: Sequence[PauliString]) -> List[Tuple[int, int]]:
    pairs: List[Tuple[int, int]] = []
    for ancilla, check in enumerate(checks):
        pairs.extend((data, ancilla) for data in check.support())
    return pairs


def _interleave(pairs: Sequence[Tuple[int, int]]) -> Iterator[Tuple[int, int]]:
    """Reorder (data, ancilla) pairs into rounds of disjoint pairs so the
    scheduler can pack them densely."""
    remaining = list(pairs)
    while remaining:
        used_data: Set[int] = set()
        used_ancilla: Set[int] = set()
        deferred: List[Tuple[int, int]] = []
        for data, ancilla in remaining:
            if data in used_data or ancilla in used_ancilla:
                deferred.append((data, ancilla))
                continue
            used_data.add(data)
            used_ancilla.add(ancilla)
            yield data, ancilla
        remaining = deferred


def _drawn_layers(
    halves: Sequence[Tuple[Sequence[PauliString], GateKind, Sequence[CorrectionGroup], GateKind]],
    n_data: int,
) -> Tuple[Tuple[Gate, ...], int]:
    """Fixed layers: per half, one fan-out step per data qubit, each
    correction with its polarity steps, then a shared reset step."""
    steps: List[List[Gate]] = []
    for checks, extract_kind, groups, correct_kind in halves:
        supports = [set(check.support()) for check in checks]
        for data in range(n_data):
            fan_out = [
                Gate(extract_kind, data=data, ancilla=ancilla)
                for ancilla, support in enumerate(supports)
                if data in support
            ]
            if fan_out:
                steps.append(fan_out)
        for group in groups:
            gate = _correction_gate(group, correct_kind)
            flips = _polarity_flips(group)
            steps.extend([flips, [gate], list(flips)] if flips else [[gate]])
        steps.append([Gate.reset(a) for a in range(len(checks))])
    gates = tuple(replace(g, layer=layer) for layer, step in enumerate(steps) for g in step)
    return gates, len(steps)


def _correction_gate(group: CorrectionGroup, kind: GateKind) -> Gate:
    return Gate(kind, controls=group.controls, pattern=group.pattern, target=group.target)


def _polarity_flips(group: CorrectionGroup) -> List[Gate]:
    return [
        Gate.polarity_x(control)
        for control, bit in zip(group.controls, group.pattern)
        if bit == 0
    ]


def _correction_gates(
    group: CorrectionGroup, kind: GateKind, options: CycleOptions
) -> List[Gate]:
    gate = _correction_gate(group, kind)
    if not options.polarity_gates_noisy:
        return [gate]
    flips = _polarity_flips(group)
    return [*flips, gate, *flips]


def _sites(gates: Sequence[Gate], options: CycleOptions) -> Iterator[GateSite]:
    for index, gate in enumerate(gates):
        if gate.kind is GateKind.POLARITY_X and not options.polarity_gates_noisy:
            continue
        for pair in range(gate.n_sites):
            yield GateSite(index, pair, gate.site_paulis)


def _gate_to_dict(gate: Gate) -> Dict[str, Any]:
    return {
        "kind": gate.kind.value,
        "data": gate.data,
        "ancilla": gate.ancilla,
        "controls": list(gate.controls),
        "pattern": list(gate.pattern),
        "target": gate.target,
        "layer": gate.layer,
    }
