"""Two-parameter error model, fault-path weights and fault-path sampling."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from .circuits import CecCircuit
from .errors import UsageError
from .pauli_frame import SINGLE_QUBIT_PAULIS, Pauli

logger = logging.getLogger(__name__)

SiteDims = Tuple[int, int, int]


class MemMode(Enum):
    ZERO = "zero"
    FIXED = "fixed"
    TIED = "tied"


@dataclass(frozen=True)
class ErrorModel:
    """Gate and memory error rates; TIED reuses the gate rate for memory."""

    p_gate: float
    mem_mode: MemMode = MemMode.ZERO
    mem_value: float = 0.0

    def __post_init__(self) -> None:
        for name, value in (("p_gate", self.p_gate), ("p_mem", self.mem_value)):
            if not 0.0 <= value < 1.0:
                raise UsageError(f"{name} must lie in [0, 1), got {value}")

    @property
    def p_mem(self) -> float:
        if self.mem_mode is MemMode.TIED:
            return self.p_gate
        if self.mem_mode is MemMode.FIXED:
            return self.mem_value
        return 0.0

    def at(self, p_gate: float) -> "ErrorModel":
        return replace(self, p_gate=p_gate)


@dataclass(frozen=True)
class MemoryFault:
    qubit: int
    layer: int
    pauli: int


@dataclass(frozen=True)
class GateSiteFault:
    site: int
    pauli: int


@dataclass(frozen=True)
class FaultPath:
    """Faults of one cycle: distinct memory sites and distinct gate sites."""

    mem_faults: Tuple[MemoryFault, ...] = field(default_factory=tuple)
    gate_faults: Tuple[GateSiteFault, ...] = field(default_factory=tuple)

    @property
    def counts(self) -> Tuple[int, int]:
        return len(self.mem_faults), len(self.gate_faults)

    @property
    def is_empty(self) -> bool:
        return not self.mem_faults and not self.gate_faults

    def compile(
        self, circuit: CecCircuit
    ) -> Tuple[Dict[int, List[Tuple[int, int]]], Dict[int, List[Tuple[int, int]]]]:
        """Faults keyed the way ``pauli_frame.run_gates`` consumes them."""
        by_layer: Dict[int, List[Tuple[int, int]]] = {}
        for fault in self.mem_faults:
            by_layer.setdefault(fault.layer, []).append((fault.qubit, fault.pauli))
        by_gate: Dict[int, List[Tuple[int, int]]] = {}
        for fault in self.gate_faults:
            site = circuit.gate_sites[fault.site]
            by_gate.setdefault(site.gate_index, []).append((site.pair_index, fault.pauli))
        return by_layer, by_gate


def log_path_weight(dims: SiteDims, model: ErrorModel, i: int, j: int) -> float:
    """log P(i, j): probability of exactly i memory and j gate faults."""
    q, t, g = dims
    n_mem = q * t
    if not 0 <= i <= n_mem or not 0 <= j <= g:
        raise UsageError(f"fault counts ({i}, {j}) outside [0, {n_mem}] x [0, {g}]")
    return _log_binomial_term(n_mem, i, model.p_mem) + _log_binomial_term(
        g, j, model.p_gate
    )


def log_weight_table(dims: SiteDims, model: ErrorModel) -> np.ndarray:
    """log P(i, j) for every i <= qt and j <= g, indexed [i, j]."""
    q, t, g = dims
    return np.add.outer(
        _log_binomial_terms(q * t, model.p_mem), _log_binomial_terms(g, model.p_gate)
    )


def truncation_order(
    dims: SiteDims,
    model: ErrorModel,
    epsilon: float,
    max_order: Optional[int] = None,
) -> int:
    """Smallest W with the mass of all i + j > W below epsilon * P(0, 0).

    The order is at least 1 whenever any site can fault.
    """
    if not 0.0 < epsilon < 1.0:
        raise UsageError(f"epsilon must lie in (0, 1), got {epsilon}")
    q, t, g = dims
    n_mem = q * t
    can_fault = (n_mem > 0 and model.p_mem > 0) or (g > 0 and model.p_gate > 0)
    if not can_fault:
        return 0
    weights = np.exp(log_weight_table(dims, model))
    orders = np.add.outer(np.arange(n_mem + 1), np.arange(g + 1))
    mass = np.bincount(orders.ravel(), weights=weights.ravel(), minlength=n_mem + g + 1)
    # Summed from the smallest terms upward.
    tail = np.append(np.cumsum(mass[::-1])[::-1], 0.0)
    bound = epsilon * weights[0, 0]
    order = next(
        (w for w in range(len(mass)) if tail[w + 1] < bound), len(mass) - 1
    )
    order = max(order, 1)
    if max_order is not None and order > max_order:
        logger.warning(
            "Truncation order %d capped at %d; excluded mass %.3g",
            order,
            max_order,
            tail[max_order + 1],
        )
        order = max_order
    return order


def truncation_set(
    dims: SiteDims,
    model: ErrorModel,
    epsilon: float,
    max_order: Optional[int] = None,
) -> List[Tuple[int, int]]:
    """All (i, j) with i + j up to the truncation order and nonzero weight."""
    q, t, g = dims
    n_mem = q * t
    order = truncation_order(dims, model, epsilon, max_order)
    cells: List[Tuple[int, int]] = []
    for total in range(order + 1):
        for i in range(min(total, n_mem) + 1):
            j = total - i
            if j > g:
                continue
            if (i and model.p_mem == 0.0) or (j and model.p_gate == 0.0):
                continue
            cells.append((i, j))
    return cells


def sample_fault_path(
    circuit: CecCircuit, i: int, j: int, rng: np.random.Generator
) -> FaultPath:
    """Uniform placement of i memory and j gate faults on distinct sites."""
    n_mem, g = circuit.n_mem_sites, circuit.g
    if not 0 <= i <= n_mem or not 0 <= j <= g:
        raise UsageError(
            f"cannot place {i} memory / {j} gate faults on {n_mem} / {g} sites"
        )
    mem_faults: Tuple[MemoryFault, ...] = ()
    if i:
        sites = np.sort(rng.choice(n_mem, size=i, replace=False))
        paulis = rng.integers(1, 4, size=i)
        mem_faults = tuple(
            MemoryFault(*circuit.mem_site(int(s)), int(p)) for s, p in zip(sites, paulis)
        )
    gate_faults: Tuple[GateSiteFault, ...] = ()
    if j:
        sites = np.sort(rng.choice(g, size=j, replace=False))
        draws = rng.random(j)
        faults = []
        for site, draw in zip(sites, draws):
            alphabet = circuit.gate_sites[int(site)].paulis
            faults.append(GateSiteFault(int(site), alphabet[int(draw * len(alphabet))]))
        gate_faults = tuple(faults)
    return FaultPath(mem_faults, gate_faults)


def sample_independent_faults(
    circuit: CecCircuit, model: ErrorModel, rng: np.random.Generator
) -> FaultPath:
    """Every site faults independently with its own rate."""
    i = int(rng.binomial(circuit.n_mem_sites, model.p_mem)) if model.p_mem else 0
    j = int(rng.binomial(circuit.g, model.p_gate)) if model.p_gate else 0
    return sample_fault_path(circuit, i, j, rng)


def path_count(circuit: CecCircuit, i: int, j: int) -> int:
    """Number of distinct fault paths with i memory and j gate faults."""
    n_mem, g = circuit.n_mem_sites, circuit.g
    if not 0 <= i <= n_mem or not 0 <= j <= g:
        return 0
    # Elementary symmetric polynomial of the per-site alphabet sizes.
    by_size = [1] + [0] * j
    for site in circuit.gate_sites:
        size = len(site.paulis)
        for k in range(j, 0, -1):
            by_size[k] += by_size[k - 1] * size
    return math.comb(n_mem, i) * len(SINGLE_QUBIT_PAULIS) ** i * by_size[j]


def enumerate_fault_paths(
    circuit: CecCircuit, i: int, j: int
) -> Iterator[Tuple[FaultPath, float]]:
    """Every fault path with counts (i, j) and its conditional probability."""
    n_mem, g = circuit.n_mem_sites, circuit.g
    if not 0 <= i <= n_mem or not 0 <= j <= g:
        raise UsageError(
            f"cannot place {i} memory / {j} gate faults on {n_mem} / {g} sites"
        )
    placements = math.comb(n_mem, i) * len(SINGLE_QUBIT_PAULIS) ** i * math.comb(g, j)
    for mem_sites in itertools.combinations(range(n_mem), i):
        for mem_paulis in itertools.product(SINGLE_QUBIT_PAULIS, repeat=i):
            mem_faults = tuple(
                MemoryFault(*circuit.mem_site(site), int(pauli))
                for site, pauli in zip(mem_sites, mem_paulis)
            )
            for gate_sites in itertools.combinations(range(g), j):
                alphabets = [circuit.gate_sites[site].paulis for site in gate_sites]
                weight = 1.0 / (placements * math.prod(len(a) for a in alphabets))
                for paulis in itertools.product(*alphabets):
                    gate_faults = tuple(
                        GateSiteFault(site, int(pauli))
                        for site, pauli in zip(gate_sites, paulis)
                    )
                    yield FaultPath(mem_faults, gate_faults), weight


def single_fault_paths(circuit: CecCircuit, x_only: bool = False) -> Iterator[FaultPath]:
    """All one-fault paths; ``x_only`` keeps faults whose factors are I or X."""
    mem_paulis = (Pauli.X,) if x_only else SINGLE_QUBIT_PAULIS
    for site in range(circuit.n_mem_sites):
        for pauli in mem_paulis:
            yield FaultPath(mem_faults=(MemoryFault(*circuit.mem_site(site), int(pauli)),))
    for index, site in enumerate(circuit.gate_sites):
        for pauli in site.paulis:
            if x_only and not _is_x_type(pauli):
                continue
            yield FaultPath(gate_faults=(GateSiteFault(index, int(pauli)),))


def _is_x_type(pauli: int) -> bool:
    return all(factor in (Pauli.I, Pauli.X) for factor in (pauli & 3, pauli >> 2))


def correction_gate_failure(k: int, p_gate: float) -> float:
    """Chance that at least one of a C_kNOT's k sites faults."""
    return -math.expm1(k * math.log1p(-p_gate))


def _log_binomial_term(n: int, k: int, p: float) -> float:
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    return float(
        gammaln(n + 1)
        - gammaln(k + 1)
        - gammaln(n - k + 1)
        + xlogy(k, p)
        + xlog1py(n - k, -p)
    )


def _log_binomial_terms(n: int, p: float) -> np.ndarray:
    k = np.arange(n + 1)
    if p == 0.0:
        terms = np.full(n + 1, -np.inf)
        terms[0] = 0.0
        return terms
    return (
        gammaln(n + 1)
        - gammaln(k + 1)
        - gammaln(n - k + 1)
        + xlogy(k, p)
        + xlog1py(n - k, -p)
    )
