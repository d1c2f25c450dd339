import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_state(rng, dim):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


H_HOP = 0.002
OMEGA0 = H_HOP / 4


@pytest.fixture(scope="session")
def fig2_run():
    """3+1 ion NN-XX gate at the tabulated-frequency detunings, sampled every ~3/nu_1."""
    from holstein_sim.ions import IonChain
    from holstein_sim.protocol import pair_drives, simulate_ising_gate

    chain = IonChain.build(4, OMEGA0, nu_override={2: 1.731})
    drives = pair_drives(chain, H_HOP / 2, 333.0, detunings=[1.0187, 1.71196])
    times = np.linspace(0, 1000, 334)
    return simulate_ising_gate(chain, drives, 3, times, (-1, 1, -1, 1), H_HOP / 2)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
