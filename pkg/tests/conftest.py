"""Shared pytest fixtures."""

from pathlib import Path

import pytest

from cecsim.circuits import CecCircuit, CycleOptions, build_cycle
from cecsim.codes import CodeSpec, get_code


@pytest.fixture
def bf_code() -> CodeSpec:
    return get_code("bf")


@pytest.fixture
def bs_code() -> CodeSpec:
    return get_code("bs")


@pytest.fixture
def steane_code() -> CodeSpec:
    return get_code("steane")


@pytest.fixture(scope="session")
def bf_circuit() -> CecCircuit:
    return build_cycle(get_code("bf"))


@pytest.fixture(scope="session")
def bs_circuit() -> CecCircuit:
    return build_cycle(get_code("bs"))


@pytest.fixture(scope="session")
def steane_circuit() -> CecCircuit:
    return build_cycle(get_code("steane"))


@pytest.fixture
def bf_polarity_circuit(bf_code: CodeSpec) -> CecCircuit:
    return build_cycle(bf_code, CycleOptions(polarity_gates_noisy=True))


@pytest.fixture
def isolated_home(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    home = tmp_path / "home"
    home.mkdir()
    monkeypatch.setenv("HOME", str(home))
    for name in ("CECSIM_LOG_LEVEL", "CECSIM_LOG_FILE", "CECSIM_WORKERS"):
        monkeypatch.delenv(name, raising=False)
    return home
