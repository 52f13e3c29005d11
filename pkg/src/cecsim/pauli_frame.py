"""Pauli algebra and Pauli-frame propagation through one correction cycle.

Data qubits carry a phase-free Pauli frame in symplectic form. Ancillas only
ever hold classical syndrome bits, so they are tracked as a bitmask and any
Z component of a fault that lands on them is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import UsageError


class Pauli(IntEnum):
    """Single-qubit Pauli encoded as (z << 1) | x."""

    I = 0
    X = 1
    Z = 2
    Y = 3

    @property
    def label(self) -> str:
        return self.name


# Two-qubit Pauli codes are first | (second << 2); 1..15 are the nontrivial ones.
TWO_QUBIT_PAULIS: Tuple[int, ...] = tuple(range(1, 16))
SINGLE_QUBIT_PAULIS: Tuple[int, ...] = (Pauli.X, Pauli.Z, Pauli.Y)


def parity(value: int) -> int:
    return bin(value).count("1") & 1


def popcount(value: int) -> int:
    return bin(value).count("1")


def two_qubit_label(code: int) -> str:
    """Render a two-qubit Pauli code as e.g. 'XZ' (first factor first)."""
    return Pauli(code & 3).label + Pauli(code >> 2).label


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator without phase; bit i of each mask is qubit i."""

    n: int
    x_bits: int = 0
    z_bits: int = 0

    def __post_init__(self) -> None:
        if self.n < 0:
            raise UsageError(f"qubit count must be non-negative, got {self.n}")
        limit = 1 << self.n
        if not 0 <= self.x_bits < limit or not 0 <= self.z_bits < limit:
            raise UsageError(f"Pauli masks exceed {self.n} qubits")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def single(cls, n: int, qubit: int, pauli: Pauli) -> "PauliString":
        _check_index(qubit, n, "qubit")
        return cls(n, (pauli & 1) << qubit, (pauli >> 1) << qubit)

    @classmethod
    def from_support(
        cls, n: int, qubits: Iterable[int], pauli: Pauli
    ) -> "PauliString":
        mask = 0
        for qubit in qubits:
            _check_index(qubit, n, "qubit")
            mask |= 1 << qubit
        return cls(
            n, mask if pauli & 1 else 0, mask if pauli & 2 else 0
        )

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse 'XIZY'-style labels; character i acts on qubit i."""
        x_bits = z_bits = 0
        for qubit, char in enumerate(label.upper()):
            try:
                pauli = Pauli[char]
            except KeyError as exc:
                raise UsageError(f"invalid Pauli label {label!r}") from exc
            x_bits |= (pauli & 1) << qubit
            z_bits |= (pauli >> 1) << qubit
        return cls(len(label), x_bits, z_bits)

    @property
    def is_identity(self) -> bool:
        return self.x_bits == 0 and self.z_bits == 0

    def pauli_at(self, qubit: int) -> Pauli:
        _check_index(qubit, self.n, "qubit")
        return Pauli(((self.x_bits >> qubit) & 1) | (((self.z_bits >> qubit) & 1) << 1))

    def weight(self) -> int:
        return popcount(self.x_bits | self.z_bits)

    def support(self) -> Tuple[int, ...]:
        mask = self.x_bits | self.z_bits
        return tuple(q for q in range(self.n) if (mask >> q) & 1)

    def x_part(self) -> "PauliString":
        return PauliString(self.n, self.x_bits, 0)

    def z_part(self) -> "PauliString":
        return PauliString(self.n, 0, self.z_bits)

    def label(self) -> str:
        return "".join(self.pauli_at(q).label for q in range(self.n))

    def commutes_with(self, other: "PauliString") -> bool:
        _check_same_size(self, other)
        return parity((self.x_bits & other.z_bits) ^ (self.z_bits & other.x_bits)) == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        return self.label()


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Phase-free product of two Pauli strings."""
    _check_same_size(a, b)
    return PauliString(a.n, a.x_bits ^ b.x_bits, a.z_bits ^ b.z_bits)


def anticommutes_with_z(frame: PauliString, qubit: int) -> bool:
    """True iff the frame has X or Y on the qubit."""
    _check_index(qubit, frame.n, "qubit")
    return bool((frame.x_bits >> qubit) & 1)


def anticommutes_with_x(frame: PauliString, qubit: int) -> bool:
    """True iff the frame has Z or Y on the qubit."""
    _check_index(qubit, frame.n, "qubit")
    return bool((frame.z_bits >> qubit) & 1)


@dataclass(frozen=True)
class Gf2Span:
    """Span of bit vectors over GF(2), kept in echelon form."""

    basis: Tuple[int, ...] = ()

    @classmethod
    def from_vectors(cls, vectors: Iterable[int]) -> "Gf2Span":
        basis: List[int] = []
        for vector in vectors:
            reduced = _reduce(basis, vector)
            if reduced:
                basis.append(reduced)
                basis.sort(reverse=True)
        return cls(tuple(basis))

    def reduce(self, vector: int) -> int:
        return _reduce(self.basis, vector)

    def contains(self, vector: int) -> bool:
        return self.reduce(vector) == 0

    @property
    def dimension(self) -> int:
        return len(self.basis)


def _reduce(basis: Sequence[int], vector: int) -> int:
    for row in basis:
        vector = min(vector, vector ^ row)
    return vector


@dataclass(frozen=True)
class AncillaRegister:
    """Classical ancilla bits; bit i belongs to ancilla i."""

    n: int
    bits: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.bits < (1 << self.n):
            raise UsageError(f"ancilla bits exceed {self.n} ancillas")

    def bit(self, index: int) -> int:
        _check_index(index, self.n, "ancilla")
        return (self.bits >> index) & 1

    def as_tuple(self) -> Tuple[int, ...]:
        return tuple((self.bits >> i) & 1 for i in range(self.n))

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "AncillaRegister":
        mask = 0
        for index, bit in enumerate(bits):
            if bit not in (0, 1):
                raise UsageError(f"ancilla bit must be 0 or 1, got {bit}")
            mask |= bit << index
        return cls(len(bits), mask)


@dataclass(frozen=True)
class FrameState:
    """Residual data error plus classical ancilla contents."""

    data: PauliString
    ancillas: AncillaRegister

    @classmethod
    def fresh(cls, data: PauliString, n_ancilla: int) -> "FrameState":
        return cls(data, AncillaRegister(n_ancilla))


class GateKind(Enum):
    """Gate kinds appearing in a correction cycle."""

    EXTRACT_Z = "ExtractZ"
    EXTRACT_X = "ExtractX"
    CORRECT_X = "CorrectX"
    CORRECT_Z = "CorrectZ"
    RESET = "Reset"
    POLARITY_X = "PolarityX"

    @property
    def is_extraction(self) -> bool:
        return self in (GateKind.EXTRACT_Z, GateKind.EXTRACT_X)

    @property
    def is_correction(self) -> bool:
        return self in (GateKind.CORRECT_X, GateKind.CORRECT_Z)


@dataclass(frozen=True)
class Gate:
    """One scheduled gate. Data and ancilla indices live in separate spaces."""

    kind: GateKind
    data: Optional[int] = None
    ancilla: Optional[int] = None
    controls: Tuple[int, ...] = ()
    pattern: Tuple[int, ...] = ()
    target: Optional[int] = None
    layer: int = -1

    def __post_init__(self) -> None:
        if self.kind.is_extraction:
            if self.data is None or self.ancilla is None:
                raise UsageError(f"{self.kind.value} needs a data qubit and an ancilla")
        elif self.kind.is_correction:
            if self.target is None or not self.controls:
                raise UsageError(f"{self.kind.value} needs controls and a target")
            if len(set(self.controls)) != len(self.controls):
                raise UsageError(f"duplicate controls in {self.controls}")
            if len(self.pattern) != len(self.controls) or any(
                bit not in (0, 1) for bit in self.pattern
            ):
                raise UsageError(f"pattern {self.pattern} does not match controls")
        elif self.ancilla is None:
            raise UsageError(f"{self.kind.value} needs an ancilla")

    @classmethod
    def extract_z(cls, data: int, ancilla: int) -> "Gate":
        return cls(GateKind.EXTRACT_Z, data=data, ancilla=ancilla)

    @classmethod
    def extract_x(cls, data: int, ancilla: int) -> "Gate":
        return cls(GateKind.EXTRACT_X, data=data, ancilla=ancilla)

    @classmethod
    def correct_x(
        cls, controls: Sequence[int], pattern: Sequence[int], target: int
    ) -> "Gate":
        return cls(
            GateKind.CORRECT_X,
            controls=tuple(controls),
            pattern=tuple(pattern),
            target=target,
        )

    @classmethod
    def correct_z(
        cls, controls: Sequence[int], pattern: Sequence[int], target: int
    ) -> "Gate":
        return cls(
            GateKind.CORRECT_Z,
            controls=tuple(controls),
            pattern=tuple(pattern),
            target=target,
        )

    @classmethod
    def reset(cls, ancilla: int) -> "Gate":
        return cls(GateKind.RESET, ancilla=ancilla)

    @classmethod
    def polarity_x(cls, ancilla: int) -> "Gate":
        return cls(GateKind.POLARITY_X, ancilla=ancilla)

    @cached_property
    def control_mask(self) -> int:
        mask = 0
        for control in self.controls:
            mask |= 1 << control
        return mask

    @cached_property
    def pattern_mask(self) -> int:
        mask = 0
        for control, bit in zip(self.controls, self.pattern):
            mask |= bit << control
        return mask

    @property
    def n_sites(self) -> int:
        """Number of gate-error sites this gate contributes."""
        if self.kind.is_correction:
            return len(self.controls)
        if self.kind is GateKind.RESET:
            return 0
        return 1

    @property
    def site_paulis(self) -> Tuple[int, ...]:
        """Fault alphabet of each of this gate's sites."""
        if self.kind is GateKind.POLARITY_X:
            return SINGLE_QUBIT_PAULIS
        return TWO_QUBIT_PAULIS

    def data_qubits(self) -> Tuple[int, ...]:
        if self.kind.is_extraction:
            return (self.data,)  # type: ignore[return-value]
        if self.kind.is_correction:
            return (self.target,)  # type: ignore[return-value]
        return ()

    def ancilla_qubits(self) -> Tuple[int, ...]:
        if self.kind.is_correction:
            return self.controls
        return (self.ancilla,)  # type: ignore[return-value]


@dataclass(frozen=True)
class GateFault:
    """Faults on the sites of one gate as (pair index, Pauli code) entries."""

    pairs: Tuple[Tuple[int, int], ...] = field(default_factory=tuple)

    @classmethod
    def single(cls, pauli: int, pair: int = 0) -> "GateFault":
        return cls(((pair, pauli),))


def apply_gate(
    state: FrameState, gate: Gate, fault: Optional[GateFault] = None
) -> FrameState:
    """Propagate the frame through one gate, then inject the gate's fault."""
    _check_gate(state, gate)
    x_bits, z_bits, anc = _propagate(
        state.data.x_bits, state.data.z_bits, state.ancillas.bits, gate
    )
    if fault is not None:
        for pair, pauli in fault.pairs:
            if not 0 <= pair < gate.n_sites:
                raise UsageError(f"{gate.kind.value} has no site {pair}")
            if pauli not in gate.site_paulis:
                raise UsageError(f"Pauli code {pauli} invalid for {gate.kind.value}")
            x_bits, z_bits, anc = _inject_gate_fault(x_bits, z_bits, anc, gate, pair, pauli)
    return FrameState(
        PauliString(state.data.n, x_bits, z_bits),
        AncillaRegister(state.ancillas.n, anc),
    )


def run_gates(
    state: FrameState,
    gates: Sequence[Gate],
    n_layers: int,
    memory_faults: Optional[Mapping[int, Sequence[Tuple[int, int]]]] = None,
    gate_faults: Optional[Mapping[int, Sequence[Tuple[int, int]]]] = None,
) -> FrameState:
    """Run a layer-ordered gate list with faults.

    ``memory_faults`` maps a layer to (qubit, Pauli) entries injected when the
    layer starts; qubits below ``state.data.n`` are data, the rest ancillas.
    ``gate_faults`` maps a gate index to (pair index, Pauli code) entries
    injected right after that gate. Gates are trusted to be in range.
    """
    memory = memory_faults or {}
    after_gate = gate_faults or {}
    n_data = state.data.n
    x_bits, z_bits, anc = state.data.x_bits, state.data.z_bits, state.ancillas.bits
    next_layer = 0
    for index, gate in enumerate(gates):
        while next_layer <= gate.layer:
            for qubit, pauli in memory.get(next_layer, ()):
                x_bits, z_bits, anc = _inject_memory(x_bits, z_bits, anc, n_data, qubit, pauli)
            next_layer += 1
        x_bits, z_bits, anc = _propagate(x_bits, z_bits, anc, gate)
        for pair, pauli in after_gate.get(index, ()):
            x_bits, z_bits, anc = _inject_gate_fault(x_bits, z_bits, anc, gate, pair, pauli)
    while next_layer < n_layers:
        for qubit, pauli in memory.get(next_layer, ()):
            x_bits, z_bits, anc = _inject_memory(x_bits, z_bits, anc, n_data, qubit, pauli)
        next_layer += 1
    return FrameState(
        PauliString(n_data, x_bits, z_bits), AncillaRegister(state.ancillas.n, anc)
    )


def _propagate(x_bits: int, z_bits: int, anc: int, gate: Gate) -> Tuple[int, int, int]:
    kind = gate.kind
    if kind is GateKind.EXTRACT_Z:
        if (x_bits >> gate.data) & 1:  # type: ignore[operator]
            anc ^= 1 << gate.ancilla  # type: ignore[operator]
    elif kind is GateKind.EXTRACT_X:
        if (z_bits >> gate.data) & 1:  # type: ignore[operator]
            anc ^= 1 << gate.ancilla  # type: ignore[operator]
    elif kind is GateKind.CORRECT_X:
        if anc & gate.control_mask == gate.pattern_mask:
            x_bits ^= 1 << gate.target  # type: ignore[operator]
    elif kind is GateKind.CORRECT_Z:
        if anc & gate.control_mask == gate.pattern_mask:
            z_bits ^= 1 << gate.target  # type: ignore[operator]
    elif kind is GateKind.RESET:
        anc &= ~(1 << gate.ancilla)  # type: ignore[operator]
    # PolarityX is absorbed into the correction patterns.
    return x_bits, z_bits, anc


def _inject_gate_fault(
    x_bits: int, z_bits: int, anc: int, gate: Gate, pair: int, pauli: int
) -> Tuple[int, int, int]:
    kind = gate.kind
    if kind.is_extraction:
        data, data_pauli = gate.data, pauli & 3
        ancilla, ancilla_pauli = gate.ancilla, pauli >> 2
    elif kind.is_correction:
        ancilla, ancilla_pauli = gate.controls[pair], pauli & 3
        data, data_pauli = gate.target, pauli >> 2
    else:
        ancilla, ancilla_pauli = gate.ancilla, pauli
        data, data_pauli = 0, 0
    x_bits ^= (data_pauli & 1) << data  # type: ignore[operator]
    z_bits ^= (data_pauli >> 1) << data  # type: ignore[operator]
    anc ^= (ancilla_pauli & 1) << ancilla  # type: ignore[operator]
    return x_bits, z_bits, anc


def _inject_memory(
    x_bits: int, z_bits: int, anc: int, n_data: int, qubit: int, pauli: int
) -> Tuple[int, int, int]:
    if qubit < n_data:
        x_bits ^= (pauli & 1) << qubit
        z_bits ^= (pauli >> 1) << qubit
    else:
        anc ^= (pauli & 1) << (qubit - n_data)
    return x_bits, z_bits, anc


def _check_gate(state: FrameState, gate: Gate) -> None:
    for qubit in gate.data_qubits():
        _check_index(qubit, state.data.n, "data qubit")
    for ancilla in gate.ancilla_qubits():
        _check_index(ancilla, state.ancillas.n, "ancilla")


def _check_index(index: int, size: int, what: str) -> None:
    if not 0 <= index < size:
        raise UsageError(f"{what} index {index} out of range [0, {size})")


def _check_same_size(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        raise UsageError(f"Pauli strings act on {a.n} and {b.n} qubits")
