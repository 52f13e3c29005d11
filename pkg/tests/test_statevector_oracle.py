"""Frame propagation against a 6-qubit state-vector simulation of the BF cycle.

Data starts in (|000> + |111>)/sqrt(2). Ancillas are computational registers,
so a fault factor acting on an ancilla only contributes its X part.
"""

import itertools
import math
from typing import Iterator

import numpy as np
import pytest

from cecsim.circuits import CecCircuit
from cecsim.noise import FaultPath, enumerate_fault_paths
from cecsim.pauli_frame import FrameState, GateKind, PauliString, run_gates

N_DATA = 3
N_QUBITS = 6
INDICES = np.arange(1 << N_QUBITS)


def bit(qubit: int) -> np.ndarray:
    return (INDICES >> qubit) & 1


def apply_x(psi: np.ndarray, qubit: int) -> np.ndarray:
    return psi[INDICES ^ (1 << qubit)]


def apply_z(psi: np.ndarray, qubit: int) -> np.ndarray:
    return psi * np.where(bit(qubit) == 1, -1.0, 1.0)


def apply_pauli(psi: np.ndarray, qubit: int, pauli: int, classical: bool) -> np.ndarray:
    if pauli & 2 and not classical:
        psi = apply_z(psi, qubit)
    if pauli & 1:
        psi = apply_x(psi, qubit)
    return psi


def apply_cnot(psi: np.ndarray, control: int, target: int) -> np.ndarray:
    return psi[INDICES ^ (bit(control) << target)]


def apply_controlled_pauli(
    psi: np.ndarray, controls, pattern, target: int, phase: bool
) -> np.ndarray:
    match = np.ones_like(INDICES)
    for control, value in zip(controls, pattern):
        match &= bit(N_DATA + control) == value
    if phase:
        return psi * np.where((match == 1) & (bit(target) == 1), -1.0, 1.0)
    return psi[INDICES ^ (match << target)]


def apply_reset(psi: np.ndarray, qubit: int) -> np.ndarray:
    ones = INDICES[bit(qubit) == 1]
    out = psi.copy()
    out[ones ^ (1 << qubit)] += psi[ones]
    out[ones] = 0.0
    return out


def simulate(circuit: CecCircuit, path: FaultPath) -> np.ndarray:
    psi = np.zeros(1 << N_QUBITS, dtype=complex)
    psi[0] = psi[0b111] = 1.0 / math.sqrt(2.0)

    memory = {}
    for fault in path.mem_faults:
        memory.setdefault(fault.layer, []).append(fault)
    after_gate = {}
    for fault in path.gate_faults:
        site = circuit.gate_sites[fault.site]
        after_gate.setdefault(site.gate_index, []).append((site.pair_index, fault.pauli))

    def inject_memory(layer: int, state: np.ndarray) -> np.ndarray:
        for fault in memory.get(layer, ()):
            state = apply_pauli(state, fault.qubit, fault.pauli, fault.qubit >= N_DATA)
        return state

    layer = 0
    for index, gate in enumerate(circuit.gates):
        while layer <= gate.layer:
            psi = inject_memory(layer, psi)
            layer += 1
        if gate.kind is GateKind.EXTRACT_Z:
            psi = apply_cnot(psi, gate.data, N_DATA + gate.ancilla)
        elif gate.kind in (GateKind.CORRECT_X, GateKind.CORRECT_Z):
            psi = apply_controlled_pauli(
                psi,
                gate.controls,
                gate.pattern,
                gate.target,
                phase=gate.kind is GateKind.CORRECT_Z,
            )
        elif gate.kind is GateKind.RESET:
            psi = apply_reset(psi, N_DATA + gate.ancilla)
        for pair, pauli in after_gate.get(index, ()):
            if gate.kind.is_extraction:
                data, ancilla = gate.data, gate.ancilla
                data_pauli, ancilla_pauli = pauli & 3, pauli >> 2
            else:
                ancilla, data = gate.controls[pair], gate.target
                ancilla_pauli, data_pauli = pauli & 3, pauli >> 2
            psi = apply_pauli(psi, data, data_pauli, classical=False)
            psi = apply_pauli(psi, N_DATA + ancilla, ancilla_pauli, classical=True)
    while layer < circuit.t:
        psi = inject_memory(layer, psi)
        layer += 1
    return psi


def assert_agrees(circuit: CecCircuit, path: FaultPath) -> None:
    memory, gates = path.compile(circuit)
    start = FrameState.fresh(PauliString.identity(N_DATA), circuit.n_ancilla)
    final = run_gates(start, circuit.gates, circuit.t, memory, gates)
    psi = simulate(circuit, path)

    ancillas = final.ancillas.bits << N_DATA
    here = final.data.x_bits | ancillas
    there = (final.data.x_bits ^ 0b111) | ancillas
    sign = (-1.0) ** bin(final.data.z_bits).count("1")
    assert abs(psi[here]) == pytest.approx(1.0 / math.sqrt(2.0)), path
    assert psi[there] == pytest.approx(sign * psi[here]), path
    rest = np.delete(psi, [here, there])
    assert np.abs(rest).max() == pytest.approx(0.0, abs=1e-12), path


def paths_up_to(circuit: CecCircuit, total: int) -> Iterator[FaultPath]:
    for i, j in itertools.product(range(total + 1), repeat=2):
        if i + j <= total:
            for path, _ in enumerate_fault_paths(circuit, i, j):
                yield path


def test_oracle_reproduces_encoded_state(bf_circuit) -> None:
    psi = simulate(bf_circuit, FaultPath())
    assert psi[0] == pytest.approx(1.0 / math.sqrt(2.0))
    assert psi[0b111] == pytest.approx(1.0 / math.sqrt(2.0))


def test_frames_match_state_vector_single_faults(bf_circuit) -> None:
    count = 0
    for path in paths_up_to(bf_circuit, 1):
        assert_agrees(bf_circuit, path)
        count += 1
    assert count == 1 + 108 + 225


@pytest.mark.slow
def test_frames_match_state_vector_double_faults(bf_circuit) -> None:
    for path in paths_up_to(bf_circuit, 2):
        assert_agrees(bf_circuit, path)
