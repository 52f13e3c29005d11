"""Tests for cycle construction and scheduling."""

from collections import Counter

import pytest

from cecsim.circuits import CycleOptions, build_cycle, circuit_to_dict, count_sites
from cecsim.codes import get_code
from cecsim.errors import UsageError
from cecsim.pauli_frame import GateKind


@pytest.mark.parametrize(
    "name,q,g",
    [("bf", 6, 15), ("bs", 12, 54), ("steane", 14, 112)],
)
def test_site_counts(name: str, q: int, g: int) -> None:
    circuit = build_cycle(get_code(name))
    assert circuit.q == q
    assert circuit.g == g
    assert circuit.n_mem_sites == q * circuit.t


def test_bf_layers(bf_circuit) -> None:
    assert count_sites(bf_circuit) == (6, 6, 15)
    layers = bf_circuit.layers()
    first = [(g.data, g.ancilla) for g in layers[0]]
    second = [(g.data, g.ancilla) for g in layers[1]]
    assert first == [(0, 0), (1, 1), (2, 2)]
    assert second == [(1, 0), (2, 1), (0, 2)]
    for index in (2, 3, 4):
        assert [g.kind for g in layers[index]] == [GateKind.CORRECT_X]
    assert [g.kind for g in layers[5]] == [GateKind.RESET] * 3


def test_extraction_counts(bf_circuit, bs_circuit, steane_circuit) -> None:
    assert bf_circuit.extraction_count() == 6
    assert bs_circuit.extraction_count() == 36
    assert steane_circuit.extraction_count() == 56


@pytest.mark.parametrize("name,g", [("bf", 21), ("bs", 66), ("steane", 112)])
def test_polarity_gates_add_sites(name: str, g: int) -> None:
    circuit = build_cycle(get_code(name), CycleOptions(polarity_gates_noisy=True))
    assert circuit.g == g


def test_polarity_gates_bracket_corrections(bf_polarity_circuit) -> None:
    gates = bf_polarity_circuit.gates
    assert sum(g.kind is GateKind.POLARITY_X for g in gates) == 6
    for correction in (g for g in gates if g.kind is GateKind.CORRECT_X):
        (zero_control,) = [
            c for c, bit in zip(correction.controls, correction.pattern) if bit == 0
        ]
        flips = sorted(
            g.layer
            for g in gates
            if g.kind is GateKind.POLARITY_X and g.ancilla == zero_control
        )
        assert len(flips) == 2
        assert flips[0] < correction.layer < flips[1]


@pytest.mark.parametrize("name", ["bf", "bs", "steane"])
def test_no_qubit_used_twice_per_layer(name: str) -> None:
    circuit = build_cycle(get_code(name), CycleOptions(polarity_gates_noisy=True))
    for layer in circuit.layers():
        data = Counter(q for g in layer for q in g.data_qubits())
        ancillas = Counter(a for g in layer for a in g.ancilla_qubits())
        assert all(n == 1 for n in data.values())
        assert all(n == 1 for n in ancillas.values())


@pytest.mark.parametrize("name", ["bf", "bs", "steane"])
def test_gates_sorted_by_layer(name: str) -> None:
    circuit = build_cycle(get_code(name))
    layers = [g.layer for g in circuit.gates]
    assert layers == sorted(layers)
    assert layers[-1] == circuit.t - 1
    assert circuit.gates[-1].kind is GateKind.RESET


def test_corrections_follow_extraction(bs_circuit) -> None:
    last_extract_z = max(
        g.layer for g in bs_circuit.gates if g.kind is GateKind.EXTRACT_Z
    )
    first_correct_x = min(
        g.layer for g in bs_circuit.gates if g.kind is GateKind.CORRECT_X
    )
    assert first_correct_x > last_extract_z


def test_gate_sites_point_at_gates(steane_circuit) -> None:
    for site in steane_circuit.gate_sites:
        gate = steane_circuit.gates[site.gate_index]
        assert 0 <= site.pair_index < gate.n_sites
        assert len(site.paulis) == 15


def test_mem_site(bf_circuit) -> None:
    assert bf_circuit.mem_site(0) == (0, 0)
    assert bf_circuit.mem_site(7) == (1, 1)
    assert bf_circuit.mem_site(35) == (5, 5)


def test_circuit_to_dict(bf_circuit) -> None:
    payload = circuit_to_dict(bf_circuit)
    assert set(payload) == {"code", "q", "t", "g", "options", "layers"}
    assert payload["options"] == {"polarity_gates_noisy": False, "layout": "asap"}
    assert payload["code"] == "bf"
    assert len(payload["layers"]) == 6
    first = payload["layers"][0]["gates"][0]
    assert first["kind"] == "ExtractZ"
    assert first["layer"] == 0


def test_circuit_carries_its_options(bf_polarity_circuit) -> None:
    assert bf_polarity_circuit.options == CycleOptions(polarity_gates_noisy=True)
    assert build_cycle(get_code("bs")).options == CycleOptions()


def test_unknown_layout_rejected() -> None:
    with pytest.raises(UsageError, match="layout"):
        CycleOptions(layout="dense")


@pytest.mark.parametrize(
    "name,t,g,noisy_g",
    [("bf", 13, 15, 21), ("bs", 38, 54, 66), ("steane", 30, 112, 112)],
)
def test_drawn_layout_dimensions(name: str, t: int, g: int, noisy_g: int) -> None:
    code = get_code(name)
    quiet = build_cycle(code, CycleOptions(layout="drawn"))
    noisy = build_cycle(code, CycleOptions(polarity_gates_noisy=True, layout="drawn"))
    assert (quiet.t, quiet.g) == (t, g)
    assert (noisy.t, noisy.g) == (t, noisy_g)
    assert quiet.extraction_count() == build_cycle(code).extraction_count()


def test_drawn_polarity_gates_take_layers_but_no_sites() -> None:
    circuit = build_cycle(get_code("bf"), CycleOptions(layout="drawn"))
    polarity = [i for i, g in enumerate(circuit.gates) if g.kind is GateKind.POLARITY_X]
    assert len(polarity) == 6
    assert not {site.gate_index for site in circuit.gate_sites} & set(polarity)
    kinds = [[g.kind for g in layer] for layer in circuit.layers()]
    assert kinds[3:6] == [
        [GateKind.POLARITY_X],
        [GateKind.CORRECT_X],
        [GateKind.POLARITY_X],
    ]


def test_drawn_extraction_fans_out_per_data_qubit() -> None:
    circuit = build_cycle(get_code("steane"), CycleOptions(layout="drawn"))
    layers = circuit.layers()
    for data in range(7):
        gates = layers[data]
        assert {g.kind for g in gates} == {GateKind.EXTRACT_Z}
        assert {g.data for g in gates} == {data}
        assert len({g.ancilla for g in gates}) == len(gates) == 4
    assert [g.kind for g in layers[14]] == [GateKind.RESET] * 7
    assert {g.kind for g in layers[15]} == {GateKind.EXTRACT_X}
