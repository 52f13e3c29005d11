"""Tests for transition fractions, transfer matrices and logical rates."""

import math

import numpy as np
import pytest

from cecsim.circuits import build_cycle
from cecsim.codes import LogicalClass, get_code
from cecsim.errors import BudgetExceededError, NumericalError, UsageError
from cecsim.estimator import (
    NON_FAILED,
    TransferEstimator,
    TransferMatrix,
    build_transfer,
    class_representatives,
    direct_monte_carlo_rate,
    enumerate_alpha,
    estimate_alpha,
    finite_horizon_rate,
    fit_geometric,
    logical_rate,
    logical_rate_stderr,
    phase_blind_for,
    row_estimates,
    run_one_cycle,
)
from cecsim.noise import (
    ErrorModel,
    FaultPath,
    GateSiteFault,
    MemMode,
    MemoryFault,
    path_count,
)
from cecsim.pauli_frame import Pauli, PauliString
from cecsim.rng import stream

FAILED = LogicalClass.FAILED


def leaky_identity(p: float) -> np.ndarray:
    entries = np.eye(5) * (1.0 - p)
    entries[:, FAILED] += p
    entries[FAILED] = [0, 0, 0, 0, 1]
    return entries


def random_transfer(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    entries = np.zeros((5, 5))
    entries[:4] = rng.dirichlet(np.ones(5), size=4)
    entries[FAILED, FAILED] = 1.0
    return entries


def test_class_representatives(bs_code) -> None:
    assert len(class_representatives(bs_code, LogicalClass.CORRECT)) == 1
    assert len(class_representatives(bs_code, LogicalClass.X_ERR)) == 9
    assert len(class_representatives(bs_code, LogicalClass.Z_ERR)) == 9
    assert len(class_representatives(bs_code, LogicalClass.Y_ERR)) == 81
    with pytest.raises(UsageError):
        class_representatives(bs_code, FAILED)


def test_phase_blind_only_for_bit_flip(bf_code, steane_code) -> None:
    assert phase_blind_for(bf_code)
    assert not phase_blind_for(bf_code, "fail")
    assert not phase_blind_for(steane_code)


def test_clean_cycle_corrects_single_errors(bf_code, bf_circuit) -> None:
    identity = PauliString.identity(3)
    assert run_one_cycle(bf_code, bf_circuit, identity, FaultPath()) is LogicalClass.CORRECT
    for representative in class_representatives(bf_code, LogicalClass.X_ERR):
        result = run_one_cycle(bf_code, bf_circuit, representative, FaultPath())
        assert result is LogicalClass.CORRECT


def test_data_fault_after_first_extraction_survives_one_cycle(bf_code, bf_circuit) -> None:
    # site 0 is ExtractZ(data 0, ancilla 0) in layer 0
    gate = bf_circuit.gates[bf_circuit.gate_sites[0].gate_index]
    assert (gate.data, gate.ancilla, gate.layer) == (0, 0, 0)
    identity = PauliString.identity(3)
    path = FaultPath(gate_faults=(GateSiteFault(0, int(Pauli.X)),))
    assert run_one_cycle(bf_code, bf_circuit, identity, path) is LogicalClass.X_ERR
    residual = PauliString.single(3, 0, Pauli.X)
    assert run_one_cycle(bf_code, bf_circuit, residual, FaultPath()) is LogicalClass.CORRECT


def test_correlated_data_and_ancilla_fault_is_corrected(bf_code, bf_circuit) -> None:
    xx = int(Pauli.X) | (int(Pauli.X) << 2)
    path = FaultPath(gate_faults=(GateSiteFault(0, xx),))
    result = run_one_cycle(bf_code, bf_circuit, PauliString.identity(3), path)
    assert result is LogicalClass.CORRECT


def test_ancilla_flip_before_corrections_is_harmless(bf_code, bf_circuit) -> None:
    # qubit 3 is ancilla 0; layer 2 holds the first correction
    path = FaultPath(mem_faults=(MemoryFault(qubit=3, layer=2, pauli=int(Pauli.X)),))
    result = run_one_cycle(bf_code, bf_circuit, PauliString.identity(3), path)
    assert result is LogicalClass.CORRECT


def test_phase_blind_drops_z_frames(bf_code, bf_circuit) -> None:
    path = FaultPath(mem_faults=(MemoryFault(qubit=0, layer=0, pauli=int(Pauli.Z)),))
    identity = PauliString.identity(3)
    assert run_one_cycle(bf_code, bf_circuit, identity, path) is FAILED
    assert (
        run_one_cycle(bf_code, bf_circuit, identity, path, phase_blind=True)
        is LogicalClass.CORRECT
    )


def test_noiseless_alpha_rows(steane_code, steane_circuit) -> None:
    for source in NON_FAILED:
        row = enumerate_alpha(steane_code, steane_circuit, source, 0, 0)
        np.testing.assert_allclose(row_estimates(row), [1.0, 0.0, 0.0, 0.0, 0.0])
        assert all(cell.exact for cell in row)
        assert [cell.target for cell in row] == list(LogicalClass)


def test_bit_flip_single_fault_never_fails_when_phase_blind(bf_code, bf_circuit) -> None:
    blind = enumerate_alpha(bf_code, bf_circuit, LogicalClass.CORRECT, 0, 1, phase_blind=True)
    assert blind[FAILED].estimate == 0.0
    assert sum(row_estimates(blind)) == pytest.approx(1.0)
    strict = enumerate_alpha(bf_code, bf_circuit, LogicalClass.CORRECT, 0, 1)
    assert strict[FAILED].estimate > 0.0


@pytest.mark.parametrize("name", ["bs", "steane"])
def test_single_gate_fault_never_fails(name: str, request: pytest.FixtureRequest) -> None:
    code = request.getfixturevalue(f"{name}_code")
    circuit = request.getfixturevalue(f"{name}_circuit")
    row = enumerate_alpha(code, circuit, LogicalClass.CORRECT, 0, 1)
    assert row[FAILED].estimate == 0.0
    assert row[LogicalClass.CORRECT].estimate > 0.0


def test_enumeration_budget(bf_code, bf_circuit) -> None:
    with pytest.raises(BudgetExceededError) as excinfo:
        enumerate_alpha(bf_code, bf_circuit, LogicalClass.CORRECT, 0, 2, budget=100)
    assert excinfo.value.combinations == 23625
    assert excinfo.value.budget == 100


def test_alpha_rejects_failed_source(bf_code, bf_circuit) -> None:
    with pytest.raises(UsageError):
        enumerate_alpha(bf_code, bf_circuit, FAILED, 0, 0)
    with pytest.raises(UsageError):
        estimate_alpha(bf_code, bf_circuit, LogicalClass.CORRECT, 0, 1, 0, stream(0, 1))


def test_sampled_alpha_matches_enumeration(bf_code, bf_circuit) -> None:
    exact = row_estimates(enumerate_alpha(bf_code, bf_circuit, LogicalClass.X_ERR, 0, 1))
    n = 4000
    sampled = estimate_alpha(
        bf_code, bf_circuit, LogicalClass.X_ERR, 0, 1, n, stream(5, 1)
    )
    for cell, expected in zip(sampled, exact):
        sigma = math.sqrt(expected * (1.0 - expected) / n)
        assert abs(cell.estimate - expected) <= 4 * sigma + 1e-12
        assert not cell.exact
        assert cell.n_samples == n


def test_noiseless_transfer(bf_code, bf_circuit) -> None:
    transfer = build_transfer(bf_code, bf_circuit, ErrorModel(0.0), 1e-6, 100)
    assert transfer.entries[LogicalClass.CORRECT].tolist() == [1.0, 0.0, 0.0, 0.0, 0.0]
    assert transfer.order == 0
    assert transfer.residual_mass == 0.0
    assert logical_rate(transfer) == 0.0
    assert logical_rate_stderr(transfer) == 0.0


def test_transfer_rows_are_stochastic(bf_code, bf_circuit) -> None:
    model = ErrorModel(1e-3)
    transfer = build_transfer(
        bf_code, bf_circuit, model, 1e-6, 300, seed=4, exact_limit=1000
    )
    np.testing.assert_allclose(transfer.row_sums(), np.ones(5), atol=1e-9)
    assert transfer.entries[FAILED].tolist() == [0.0, 0.0, 0.0, 0.0, 1.0]
    assert transfer.live == (LogicalClass.CORRECT, LogicalClass.X_ERR)
    # ZErr and YErr are unreachable when phase errors are ignored
    assert transfer.entries[LogicalClass.Z_ERR, LogicalClass.Z_ERR] == 1.0
    assert transfer.exact_cells > 0 and transfer.sampled_cells > 0
    assert 0.0 < logical_rate(transfer) < 1e-3


def test_transfer_is_reproducible(bs_code, bs_circuit) -> None:
    model = ErrorModel(1e-3, MemMode.FIXED, 1e-5)
    a = build_transfer(bs_code, bs_circuit, model, 1e-3, 50, seed=8, max_order=1)
    b = build_transfer(bs_code, bs_circuit, model, 1e-3, 50, seed=8, max_order=1)
    np.testing.assert_array_equal(a.entries, b.entries)
    np.testing.assert_array_equal(a.stderr, b.stderr)


def test_build_transfer_rejects_foreign_circuit(bf_code, steane_circuit) -> None:
    with pytest.raises(UsageError):
        build_transfer(bf_code, steane_circuit, ErrorModel(0.0), 1e-6, 10)


def test_estimator_cache_reuses_cells(bf_circuit) -> None:
    estimator = TransferEstimator(bf_circuit, n_samples=100, exact_limit=1000)
    model = ErrorModel(1e-3)
    estimator.transfer(model, 1e-6)
    computed = len(estimator.cache)
    assert estimator.cache.hits == 0
    estimator.transfer(model, 1e-6)
    assert len(estimator.cache) == computed
    assert estimator.cache.hits == computed


def test_transfer_matrix_validation() -> None:
    with pytest.raises(UsageError):
        TransferMatrix.from_array(np.eye(4))
    bad = np.eye(5)
    bad[FAILED, 0] = 0.5
    with pytest.raises(UsageError):
        TransferMatrix.from_array(bad)
    payload = TransferMatrix.from_array(np.eye(5)).to_dict()
    assert payload["live"] == ["Correct", "XErr", "ZErr", "YErr"]


def test_logical_rate_identity() -> None:
    assert logical_rate(np.eye(5)) == 0.0


@pytest.mark.parametrize("p", [1e-6, 1e-3, 0.2])
def test_logical_rate_leaky_identity(p: float) -> None:
    assert logical_rate(leaky_identity(p)) == pytest.approx(p, rel=1e-9)
    assert finite_horizon_rate(leaky_identity(p)) == pytest.approx(p, rel=1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_logical_rate_matches_spectral_radius(seed: int) -> None:
    entries = random_transfer(seed)
    expected = 1.0 - max(abs(np.linalg.eigvals(entries[:4, :4])))
    assert logical_rate(entries) == pytest.approx(expected, rel=1e-8)


def test_logical_rate_invariant_under_relabelling() -> None:
    entries = random_transfer(7)
    order = [0, 3, 1, 2, 4]
    permuted = entries[np.ix_(order, order)]
    assert logical_rate(permuted) == pytest.approx(logical_rate(entries), rel=1e-9)


def test_logical_rate_ignores_unreachable_classes() -> None:
    entries = leaky_identity(1e-3)
    entries[LogicalClass.Y_ERR] = [0, 0, 0, 0.5, 0.5]
    assert logical_rate(entries) == pytest.approx(1e-3, rel=1e-9)


def test_logical_rate_nonconvergence() -> None:
    with pytest.raises(NumericalError) as excinfo:
        logical_rate(random_transfer(3), max_iter=1)
    assert excinfo.value.diagnostics["iterations"] == 1


def test_logical_rate_rejects_bad_shape() -> None:
    with pytest.raises(UsageError):
        logical_rate(np.eye(3))


def test_finite_horizon_rate_noiseless() -> None:
    rate = finite_horizon_rate(np.eye(5))
    assert rate == 0.0
    assert math.copysign(1.0, rate) == 1.0
    with pytest.raises(UsageError):
        finite_horizon_rate(np.eye(5), horizon=0)


def test_finite_horizon_rate_immediate_failure() -> None:
    entries = np.zeros((5, 5))
    entries[:, FAILED] = 1.0
    assert finite_horizon_rate(entries) == 1.0


def test_fit_geometric_recovers_rate() -> None:
    rng = np.random.default_rng(12)
    p, max_cycles = 0.01, 10_000
    times = rng.geometric(p, size=2000)
    failures = int(np.sum(times <= max_cycles))
    cycles = int(np.minimum(times, max_cycles).sum())
    estimate = fit_geometric(failures, cycles, 2000)
    assert abs(estimate.rate - p) <= 4 * estimate.stderr
    assert estimate.ci_low < estimate.rate < estimate.ci_high
    assert not estimate.upper_bound_only


def test_fit_geometric_without_failures() -> None:
    estimate = fit_geometric(0, 600, 3)
    assert estimate.upper_bound_only
    assert estimate.rate == 0.0
    assert estimate.ci_high == pytest.approx(0.005)
    with pytest.raises(UsageError):
        fit_geometric(5, 0)


def test_direct_monte_carlo_noiseless(bf_code, bf_circuit) -> None:
    estimate = direct_monte_carlo_rate(bf_code, bf_circuit, ErrorModel(0.0), 3, 50)
    assert estimate.failures == 0
    assert estimate.cycles == 150
    assert estimate.ci_high == pytest.approx(0.02)
    assert estimate.to_dict()["ci"] == [0.0, estimate.ci_high]


@pytest.mark.slow
def test_direct_monte_carlo_agrees_with_transfer(bf_code, bf_circuit) -> None:
    model = ErrorModel(1e-2)
    transfer = build_transfer(
        bf_code, bf_circuit, model, 1e-6, 4000, seed=1, exact_limit=200_000
    )
    direct = direct_monte_carlo_rate(bf_code, bf_circuit, model, 2000, 100_000, seed=1)
    assert direct.failures == 2000
    assert logical_rate(transfer) == pytest.approx(direct.rate, rel=0.10)


@pytest.mark.slow
def test_direct_monte_carlo_agrees_with_transfer_for_bacon_shor(bs_code, bs_circuit) -> None:
    model = ErrorModel(3e-3)
    transfer = build_transfer(
        bs_code, bs_circuit, model, 1e-6, 10_000, seed=1, exact_limit=200_000
    )
    direct = direct_monte_carlo_rate(bs_code, bs_circuit, model, 2000, 100_000, seed=1)
    assert direct.failures == 2000
    assert logical_rate(transfer) == pytest.approx(direct.rate, rel=0.10)


@pytest.mark.slow
def test_worker_count_does_not_change_results(bs_circuit) -> None:
    model = ErrorModel(2e-3)
    serial = TransferEstimator(bs_circuit, n_samples=200, seed=3, exact_limit=500)
    pooled = TransferEstimator(bs_circuit, n_samples=200, seed=3, exact_limit=500, workers=2)
    a = serial.transfer(model, 1e-4, max_order=3)
    b = pooled.transfer(model, 1e-4, max_order=3)
    np.testing.assert_array_equal(a.entries, b.entries)


def test_alpha_comes_from_the_given_circuit(bf_code, bf_polarity_circuit) -> None:
    estimator = TransferEstimator(bf_polarity_circuit, exact_limit=1000)
    cell = (LogicalClass.CORRECT, 0, 1)
    row = estimator.rows([cell])[cell]
    assert row[0].exact
    assert row[0].n_samples == path_count(bf_polarity_circuit, 0, 1) == 15 * 15 + 6 * 3
    expected = enumerate_alpha(
        bf_code, bf_polarity_circuit, LogicalClass.CORRECT, 0, 1, phase_blind=True
    )
    np.testing.assert_allclose(row_estimates(row), row_estimates(expected))


def test_build_transfer_uses_the_given_circuit(bf_code, bf_polarity_circuit) -> None:
    model = ErrorModel(1e-2)
    built = build_transfer(bf_code, bf_polarity_circuit, model, 1e-3, 200, seed=2, max_order=2)
    estimator = TransferEstimator(bf_polarity_circuit, n_samples=200, seed=2)
    np.testing.assert_array_equal(
        built.entries, estimator.transfer(model, 1e-3, max_order=2).entries
    )
    plain = build_transfer(
        bf_code, build_cycle(bf_code), model, 1e-3, 200, seed=2, max_order=2
    )
    assert not np.allclose(built.entries, plain.entries)


def test_pessimistic_sends_excluded_mass_to_failed() -> None:
    entries = leaky_identity(1e-3)
    entries[LogicalClass.CORRECT, LogicalClass.CORRECT] -= 0.01
    entries[LogicalClass.CORRECT, LogicalClass.X_ERR] += 0.01
    transfer = TransferMatrix(
        entries, residual_mass=0.05, live=(LogicalClass.CORRECT, LogicalClass.X_ERR)
    )
    bound = transfer.pessimistic()
    np.testing.assert_allclose(bound.row_sums(), np.ones(5))
    assert bound.entries[LogicalClass.CORRECT, FAILED] == pytest.approx(0.051)
    assert bound.entries[LogicalClass.X_ERR, FAILED] == pytest.approx(0.051)
    assert bound.entries[LogicalClass.Z_ERR, FAILED] == pytest.approx(1e-3)
    assert logical_rate(transfer) < logical_rate(bound)
    assert transfer.entries[LogicalClass.CORRECT, FAILED] == pytest.approx(1e-3)


def test_pessimistic_is_identity_without_residual() -> None:
    transfer = TransferMatrix.from_array(leaky_identity(1e-3))
    assert transfer.pessimistic() is transfer


def test_capped_truncation_is_bounded_from_above(bf_code, bf_circuit) -> None:
    model = ErrorModel(0.1, MemMode.TIED)
    transfer = build_transfer(
        bf_code, bf_circuit, model, 1e-6, 100, max_order=1, exact_limit=1000
    )
    assert transfer.order == 1
    assert transfer.residual_mass > 0.9
    assert logical_rate(transfer) < 0.1 < logical_rate(transfer.pessimistic())


@pytest.mark.slow
@pytest.mark.parametrize("name", ["bf", "bs", "steane"])
def test_sampled_alpha_matches_enumeration_at_low_order(name: str) -> None:
    code = get_code(name)
    circuit = build_cycle(code)
    blind = phase_blind_for(code)
    sources = (LogicalClass.CORRECT, LogicalClass.X_ERR) if blind else code.live_classes
    n = 2000
    checked = agreed = 0
    for source in sources:
        for i, j in ((0, 0), (1, 0), (0, 1)):
            exact = row_estimates(
                enumerate_alpha(code, circuit, source, i, j, phase_blind=blind)
            )
            for seed in range(5):
                sampled = estimate_alpha(
                    code, circuit, source, i, j, n, stream(seed, 1, int(source), i, j),
                    phase_blind=blind,
                )
                for cell, expected in zip(sampled, exact):
                    sigma = math.sqrt(expected * (1.0 - expected) / n)
                    checked += 1
                    agreed += abs(cell.estimate - expected) <= 3 * sigma + 1e-12
    assert agreed >= 0.99 * checked
