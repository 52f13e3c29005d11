"""The three codes and classification of residual frames into logical classes."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Sequence, Tuple

from rapidfuzz import fuzz, process

from .errors import UsageError, ValidationError
from .pauli_frame import Gf2Span, Pauli, PauliString, parity, popcount

logger = logging.getLogger(__name__)


class CodeName(Enum):
    BF = "bf"
    BS = "bs"
    STEANE = "steane"


class LogicalClass(IntEnum):
    """Logical classes; the integer value is the transfer-matrix index."""

    CORRECT = 0
    X_ERR = 1
    Z_ERR = 2
    Y_ERR = 3
    FAILED = 4

    @property
    def tag(self) -> str:
        return _CLASS_TAGS[self]


_CLASS_TAGS = {
    LogicalClass.CORRECT: "Correct",
    LogicalClass.X_ERR: "XErr",
    LogicalClass.Z_ERR: "ZErr",
    LogicalClass.Y_ERR: "YErr",
    LogicalClass.FAILED: "Failed",
}


class CorrectionStyle(Enum):
    """How C_kNOT controls are chosen for a code."""

    EXACT = "exact"  # all checks as controls, pattern = the full syndrome
    SUPPORT = "support"  # only the checks that fire, all-ones pattern


@dataclass(frozen=True)
class Syndrome:
    z_bits: Tuple[int, ...]
    x_bits: Tuple[int, ...]


@dataclass(frozen=True)
class CorrectionGroup:
    """One C_kNOT: flip ``target`` iff the ancillas on ``controls`` read ``pattern``."""

    controls: Tuple[int, ...]
    pattern: Tuple[int, ...]
    target: int


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """Static description of a code. Immutable once built."""

    name: CodeName
    n_data: int
    z_checks: Tuple[PauliString, ...]
    x_checks: Tuple[PauliString, ...]
    gauge_gens: Tuple[PauliString, ...]
    logical_x: PauliString
    logical_z: PauliString
    decode_x: Mapping[Tuple[int, ...], int]
    decode_z: Mapping[Tuple[int, ...], int]
    x_corrections: Tuple[CorrectionGroup, ...]
    z_corrections: Tuple[CorrectionGroup, ...]
    correction_style: CorrectionStyle
    x_span: Gf2Span
    z_span: Gf2Span

    @property
    def protects_phase(self) -> bool:
        return bool(self.x_checks)

    @property
    def live_classes(self) -> Tuple[LogicalClass, ...]:
        """Classes that ``classify`` can return short of failure."""
        if self.protects_phase:
            return (
                LogicalClass.CORRECT,
                LogicalClass.X_ERR,
                LogicalClass.Z_ERR,
                LogicalClass.Y_ERR,
            )
        return (LogicalClass.CORRECT, LogicalClass.X_ERR)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name.value,
            "n_data": self.n_data,
            "z_checks": [p.label() for p in self.z_checks],
            "x_checks": [p.label() for p in self.x_checks],
            "gauge_gens": [p.label() for p in self.gauge_gens],
            "logical_x": self.logical_x.label(),
            "logical_z": self.logical_z.label(),
            "decode_x": _table_to_dict(self.n_data, self.decode_x, Pauli.X),
            "decode_z": _table_to_dict(self.n_data, self.decode_z, Pauli.Z),
            "correction_groups": {
                "x": [_group_to_dict(g) for g in self.x_corrections],
                "z": [_group_to_dict(g) for g in self.z_corrections],
            },
        }


def syndrome(code: CodeSpec, frame: PauliString) -> Syndrome:
    """Check values of a frame: bit i is 1 iff the frame anticommutes with check i."""
    _check_frame(code, frame)
    return Syndrome(
        z_bits=_syndrome_bits(frame.x_bits, code.z_checks, use_z=True),
        x_bits=_syndrome_bits(frame.z_bits, code.x_checks, use_z=False),
    )


def minimal_correction(code: CodeSpec, s: Syndrome) -> PauliString:
    """Decoder-table correction for a syndrome; identity for unknown syndromes."""
    if len(s.z_bits) != len(code.z_checks) or len(s.x_bits) != len(code.x_checks):
        raise UsageError("syndrome dimensions do not match the code")
    return PauliString(
        code.n_data, code.decode_x.get(s.z_bits, 0), code.decode_z.get(s.x_bits, 0)
    )


def classify(code: CodeSpec, frame: PauliString) -> LogicalClass:
    """Bin a residual data frame into one of the five logical classes."""
    _check_frame(code, frame)
    x_status = _part_status(
        frame.x_bits, _masks(code.z_checks, use_z=True), code.decode_x, code.x_span
    )
    z_status = _part_status(
        frame.z_bits, _masks(code.x_checks, use_z=False), code.decode_z, code.z_span
    )
    if _FAILED in (x_status, z_status):
        return LogicalClass.FAILED
    if x_status == _CORRECTED and z_status == _CORRECTED:
        return LogicalClass.Y_ERR
    if x_status == _CORRECTED:
        return LogicalClass.X_ERR
    if z_status == _CORRECTED:
        return LogicalClass.Z_ERR
    return LogicalClass.CORRECT


def is_stabilizer_equivalent(code: CodeSpec, a: PauliString, b: PauliString) -> bool:
    """True iff a and b differ by an element of the check/gauge group."""
    product = a * b
    _check_frame(code, product)
    return code.x_span.contains(product.x_bits) and code.z_span.contains(
        product.z_bits
    )


@dataclass(frozen=True)
class IncidenceReport:
    code: str
    weights: Tuple[int, ...]
    degrees: Tuple[int, ...]
    overlaps: Tuple[Tuple[int, int, int], ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "code": self.code,
            "weights": list(self.weights),
            "degrees": list(self.degrees),
            "overlaps": [list(o) for o in self.overlaps],
        }


def check_incidence(code: CodeSpec) -> IncidenceReport:
    """Weights, qubit degrees and pairwise overlaps of the Z-type checks.

    For the Steane code every weight and degree must be 4 and every overlap 2;
    a violation raises ``ValidationError`` carrying the report.
    """
    supports = [_mask(check, use_z=True) for check in code.z_checks]
    weights = tuple(popcount(s) for s in supports)
    degrees = tuple(
        sum((s >> q) & 1 for s in supports) for q in range(code.n_data)
    )
    overlaps = tuple(
        (a, b, popcount(supports[a] & supports[b]))
        for a, b in itertools.combinations(range(len(supports)), 2)
    )
    report = IncidenceReport(code.name.value, weights, degrees, overlaps)
    if code.name is CodeName.STEANE:
        if (
            set(weights) != {4}
            or set(degrees) != {4}
            or {o[2] for o in overlaps} != {2}
        ):
            raise ValidationError("Steane incidence structure violated", report.to_dict())
    return report


def extended_checks(generators: Sequence[PauliString]) -> Tuple[PauliString, ...]:
    """All nontrivial products of the generators: the generators first, then
    pairwise products in index order, then triples and so on."""
    products: List[PauliString] = []
    for size in range(1, len(generators) + 1):
        for combo in itertools.combinations(generators, size):
            product = combo[0]
            for other in combo[1:]:
                product = product * other
            products.append(product)
    return tuple(products)


@lru_cache(maxsize=None)
def get_code(name: str) -> CodeSpec:
    """Look up a code by name ('bf', 'bs' or 'steane')."""
    key = name.strip().lower()
    builders = {
        CodeName.BF.value: _bit_flip,
        CodeName.BS.value: _bacon_shor,
        CodeName.STEANE.value: _steane,
    }
    if key not in builders:
        suggestion = process.extractOne(
            key, list(builders), scorer=fuzz.WRatio, score_cutoff=60
        )
        hint = f"; did you mean {suggestion[0]!r}?" if suggestion else ""
        raise UsageError(f"unknown code {name!r}{hint}")
    code = builders[key]()
    logger.debug("Built code %s with %d data qubits", key, code.n_data)
    return code


def _bit_flip() -> CodeSpec:
    n = 3
    generators = [
        PauliString.from_support(n, (0, 1), Pauli.Z),
        PauliString.from_support(n, (1, 2), Pauli.Z),
    ]
    return _assemble(
        CodeName.BF,
        n,
        z_checks=extended_checks(generators),
        x_checks=(),
        gauge_gens=(),
        style=CorrectionStyle.EXACT,
    )


def _bacon_shor() -> CodeSpec:
    n = 9

    def rows(*indices: int) -> List[int]:
        return [3 * r + c for r in indices for c in range(3)]

    def cols(*indices: int) -> List[int]:
        return [3 * r + c for r in range(3) for c in indices]

    z_checks = extended_checks(
        [
            PauliString.from_support(n, rows(0, 1), Pauli.Z),
            PauliString.from_support(n, rows(1, 2), Pauli.Z),
        ]
    )
    x_checks = extended_checks(
        [
            PauliString.from_support(n, cols(0, 1), Pauli.X),
            PauliString.from_support(n, cols(1, 2), Pauli.X),
        ]
    )
    gauge: List[PauliString] = []
    for r in range(3):
        for a, b in itertools.combinations(range(3), 2):
            gauge.append(PauliString.from_support(n, (3 * r + a, 3 * r + b), Pauli.X))
    for c in range(3):
        for a, b in itertools.combinations(range(3), 2):
            gauge.append(PauliString.from_support(n, (3 * a + c, 3 * b + c), Pauli.Z))
    return _assemble(
        CodeName.BS,
        n,
        z_checks=z_checks,
        x_checks=x_checks,
        gauge_gens=tuple(gauge),
        style=CorrectionStyle.EXACT,
    )


def _steane() -> CodeSpec:
    n = 7
    supports = [(0, 1, 2, 6), (0, 1, 3, 5), (0, 2, 3, 4)]
    z_checks = extended_checks(
        [PauliString.from_support(n, s, Pauli.Z) for s in supports]
    )
    x_checks = extended_checks(
        [PauliString.from_support(n, s, Pauli.X) for s in supports]
    )
    return _assemble(
        CodeName.STEANE,
        n,
        z_checks=z_checks,
        x_checks=x_checks,
        gauge_gens=(),
        style=CorrectionStyle.SUPPORT,
    )


def _assemble(
    name: CodeName,
    n: int,
    *,
    z_checks: Tuple[PauliString, ...],
    x_checks: Tuple[PauliString, ...],
    gauge_gens: Tuple[PauliString, ...],
    style: CorrectionStyle,
) -> CodeSpec:
    z_masks = _masks(z_checks, use_z=True)
    x_masks = _masks(x_checks, use_z=False)
    decode_x = _decoder_table(n, z_masks)
    decode_z = _decoder_table(n, x_masks)
    x_span = Gf2Span.from_vectors(
        [p.x_bits for p in (*x_checks, *gauge_gens) if p.x_bits]
    )
    z_span = Gf2Span.from_vectors(
        [p.z_bits for p in (*z_checks, *gauge_gens) if p.z_bits]
    )
    return CodeSpec(
        name=name,
        n_data=n,
        z_checks=z_checks,
        x_checks=x_checks,
        gauge_gens=gauge_gens,
        logical_x=PauliString.from_support(n, range(n), Pauli.X),
        logical_z=PauliString.from_support(n, range(n), Pauli.Z),
        decode_x=decode_x,
        decode_z=decode_z,
        x_corrections=_correction_groups(n, z_masks, decode_x, style),
        z_corrections=_correction_groups(n, x_masks, decode_z, style),
        correction_style=style,
        x_span=x_span,
        z_span=z_span,
    )


def _decoder_table(
    n: int, check_masks: Sequence[int], max_weight: int = 2
) -> Dict[Tuple[int, ...], int]:
    """Minimal-weight error for each reachable syndrome, lowest qubits first."""
    table: Dict[Tuple[int, ...], int] = {}
    for weight in range(max_weight + 1):
        for qubits in itertools.combinations(range(n), weight):
            error = 0
            for qubit in qubits:
                error |= 1 << qubit
            table.setdefault(_bits(error, check_masks), error)
    return table


def _correction_groups(
    n: int,
    check_masks: Sequence[int],
    table: Mapping[Tuple[int, ...], int],
    style: CorrectionStyle,
) -> Tuple[CorrectionGroup, ...]:
    if not check_masks:
        return ()
    groups: Dict[int, CorrectionGroup] = {}
    for qubit in range(n):
        bits = _bits(1 << qubit, check_masks)
        target = table[bits].bit_length() - 1
        if target in groups:
            continue
        if style is CorrectionStyle.EXACT:
            controls = tuple(range(len(check_masks)))
            pattern = bits
        else:
            controls = tuple(i for i, bit in enumerate(bits) if bit)
            pattern = tuple(1 for _ in controls)
        groups[target] = CorrectionGroup(controls, pattern, target)
    return tuple(groups[t] for t in sorted(groups))


_CLEAN, _CORRECTED, _FAILED = "clean", "corrected", "failed"


def _part_status(
    bits: int,
    check_masks: Sequence[int],
    table: Mapping[Tuple[int, ...], int],
    span: Gf2Span,
) -> str:
    if span.contains(bits):
        return _CLEAN
    correction = table.get(_bits(bits, check_masks), 0)
    if span.contains(bits ^ correction):
        return _CORRECTED
    return _FAILED


def _bits(error: int, check_masks: Sequence[int]) -> Tuple[int, ...]:
    return tuple(parity(error & mask) for mask in check_masks)


def _syndrome_bits(
    error: int, checks: Sequence[PauliString], use_z: bool
) -> Tuple[int, ...]:
    return _bits(error, _masks(checks, use_z))


def _masks(checks: Sequence[PauliString], use_z: bool) -> Tuple[int, ...]:
    return tuple(_mask(check, use_z) for check in checks)


def _mask(check: PauliString, use_z: bool) -> int:
    return check.z_bits if use_z else check.x_bits


def _check_frame(code: CodeSpec, frame: PauliString) -> None:
    if frame.n != code.n_data:
        raise UsageError(
            f"frame acts on {frame.n} qubits, {code.name.value} has {code.n_data}"
        )


def _table_to_dict(
    n: int, table: Mapping[Tuple[int, ...], int], pauli: Pauli
) -> Dict[str, str]:
    return {
        "".join(str(b) for b in key): PauliString(
            n, mask if pauli is Pauli.X else 0, mask if pauli is Pauli.Z else 0
        ).label()
        for key, mask in sorted(table.items())
    }


def _group_to_dict(group: CorrectionGroup) -> Dict[str, Any]:
    return {
        "controls": list(group.controls),
        "pattern": list(group.pattern),
        "target": group.target,
    }
